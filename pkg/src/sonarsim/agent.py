"""Per-task call loop and workload scheduling.

Each task runs at one scheduled tick: route, execute, stop on success,
otherwise re-route with the history updated by the feedforward recording
of the previous turn. No exception escapes a task; adapter and executor
faults become failed turns with a reason code.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .routing import Router, RoutingDecision
from .servers import ExecutionResult, QueryTask, SimulatedExecutor

DEFAULT_MAX_TURNS = 3


@dataclass(frozen=True)
class TaskTurn:
    decision: RoutingDecision | None
    result: ExecutionResult
    error: str | None = None


@dataclass(frozen=True)
class TaskTranscript:
    task_id: str
    scheduled_tick: int
    turns: tuple[TaskTurn, ...]
    final_success: bool
    total_wall_time_ms: float


def run_task(
    task: QueryTask,
    router: Router,
    executor: SimulatedExecutor,
    t: int,
    max_turns: int = DEFAULT_MAX_TURNS,
) -> TaskTranscript:
    """Run the call loop for one task at tick ``t``."""
    if max_turns < 1:
        raise ValueError(f"max_turns must be >= 1, got {max_turns}")
    started = time.perf_counter()
    turns: list[TaskTurn] = []
    success = False
    for turn_number in range(1, max_turns + 1):
        try:
            decision = router.route(task.query, t)
        except Exception as exc:  # noqa: BLE001 - routing faults become failed turns
            turns.append(
                TaskTurn(
                    decision=None,
                    result=ExecutionResult(
                        success=False,
                        observed_latency_ms=0.0,
                        failed_by_outage=False,
                        turn=turn_number,
                        error=f"routing_error: {exc}",
                    ),
                    error=f"routing_error: {exc}",
                )
            )
            continue
        try:
            result = executor.execute(
                decision.selected_server,
                decision.selected_tool,
                task.required_capability,
                t,
                turn=turn_number,
            )
        except Exception as exc:  # noqa: BLE001 - execution faults become failed turns
            result = ExecutionResult(
                success=False,
                observed_latency_ms=0.0,
                failed_by_outage=False,
                turn=turn_number,
                error=f"execution_error: {exc}",
            )
        turns.append(TaskTurn(decision=decision, result=result, error=result.error))
        if result.success:
            success = True
            break
    return TaskTranscript(
        task_id=task.task_id,
        scheduled_tick=t,
        turns=tuple(turns),
        final_success=success,
        total_wall_time_ms=(time.perf_counter() - started) * 1000.0,
    )


def uniform_schedule(n_tasks: int, n_ticks: int) -> list[int]:
    """Spread tasks evenly across the horizon."""
    if n_tasks < 1:
        raise ValueError("need at least one task")
    if n_ticks < 1:
        raise ValueError("need at least one tick")
    return [(i * n_ticks) // n_tasks for i in range(n_tasks)]


def run_workload(
    tasks: Sequence[QueryTask],
    schedule: Sequence[int],
    router: Router,
    executor: SimulatedExecutor,
    max_turns: int = DEFAULT_MAX_TURNS,
) -> list[TaskTranscript]:
    """Run every task at its scheduled tick.

    Execution happens in schedule order (ties by task_id) so feedforward
    history updates are deterministic; transcripts return in task order.
    """
    if len(tasks) != len(schedule):
        raise ValueError(f"schedule length {len(schedule)} != task count {len(tasks)}")
    n_ticks = router.env.n_ticks
    for task, tick in zip(tasks, schedule):
        if not (0 <= tick < n_ticks):
            raise ValueError(
                f"schedule tick {tick} for task {task.task_id!r} outside horizon [0, {n_ticks})"
            )
    order = sorted(range(len(tasks)), key=lambda i: (schedule[i], tasks[i].task_id))
    transcripts: dict[int, TaskTranscript] = {}
    for i in order:
        transcripts[i] = run_task(tasks[i], router, executor, schedule[i], max_turns=max_turns)
    return [transcripts[i] for i in range(len(tasks))]


def transcript_to_obj(transcript: TaskTranscript) -> dict:
    """Flatten one transcript into a JSON-ready dict with stable field order."""
    return {
        "task_id": transcript.task_id,
        "scheduled_tick": transcript.scheduled_tick,
        "final_success": transcript.final_success,
        "total_wall_time_ms": round(transcript.total_wall_time_ms, 4),
        "turns": [
            {
                "turn": turn.result.turn,
                "server_id": turn.decision.selected_server if turn.decision else None,
                "tool_id": turn.decision.selected_tool if turn.decision else None,
                "success": turn.result.success,
                "observed_latency_ms": round(turn.result.observed_latency_ms, 4),
                "failed_by_outage": turn.result.failed_by_outage,
                "error": turn.error,
            }
            for turn in transcript.turns
        ],
    }


def write_transcripts(transcripts: Sequence[TaskTranscript], path: str | Path) -> None:
    """JSON-Lines export, one transcript per line."""
    lines = [json.dumps(transcript_to_obj(t)) for t in transcripts]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
