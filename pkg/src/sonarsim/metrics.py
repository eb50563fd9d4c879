"""Aggregate evaluation metrics and report serialization.

Metrics over a batch of task transcripts:

* SSR — fraction of tasks whose first-turn server matches the task's
  required capability (selection metrics are first-turn by definition;
  retries do not change them).
* EE  — mean expertise of the first-turn selected servers.
* AL  — mean observed execution latency over all executed turns of
  capability-matched tasks.
* SL  — mean selection wall time over every routing decision.
* FR  — fraction of executed turns of capability-matched tasks whose
  observed latency reached the outage threshold (1000 ms).

Reports serialize with sorted keys and 4-decimal floats so two runs with
the same seed produce identical bytes; wall-time values live in their own
trailing ``wall_time`` section because they are the one non-reproducible
part of a run.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .agent import TaskTranscript
from .servers import QueryTask, ServerRecord

OUTAGE_LATENCY_MS = 1000.0

REPORT_FORMATS = ("json", "csv")

PER_TASK_FIELDS = (
    "task_id",
    "first_server",
    "first_tool",
    "capability_matched",
    "turns",
    "final_success",
    "mean_latency_ms",
    "outage_turns",
)


@dataclass(frozen=True)
class MetricsReport:
    ssr: float
    ee: float
    al_ms: float
    sl_ms: float
    fr: float
    task_count: int
    per_task: tuple[dict, ...]


def evaluate(
    transcripts: Sequence[TaskTranscript],
    pool: Sequence[ServerRecord],
    tasks: Sequence[QueryTask],
) -> MetricsReport:
    """Fold transcripts into the five aggregate metrics.

    Pure: transcript order only affects per_task ordering, which is
    re-sorted by task_id.
    """
    if not transcripts:
        raise ValueError("cannot evaluate an empty transcript list")
    servers = {s.server_id: s for s in pool}
    task_by_id = {t.task_id: t for t in tasks}
    matched_tasks = 0
    expertise_total = 0.0
    matched_latencies: list[float] = []
    matched_outage_turns = 0
    selection_times: list[float] = []
    per_task: list[dict] = []
    for transcript in transcripts:
        task = task_by_id.get(transcript.task_id)
        if task is None:
            raise ValueError(f"transcript references unknown task {transcript.task_id!r}")
        first = transcript.turns[0]
        first_server = first.decision.selected_server if first.decision else None
        if first_server is not None and first_server not in servers:
            raise ValueError(f"transcript references unknown server {first_server!r}")
        matched = (
            first_server is not None
            and servers[first_server].capability == task.required_capability
        )
        executed = [turn for turn in transcript.turns if turn.error is None]
        outage_turns = sum(
            1 for turn in executed if turn.result.observed_latency_ms >= OUTAGE_LATENCY_MS
        )
        latencies = [turn.result.observed_latency_ms for turn in executed]
        if matched:
            matched_tasks += 1
            expertise_total += servers[first_server].expertise
            matched_latencies.extend(latencies)
            matched_outage_turns += outage_turns
        selection_times.extend(
            turn.decision.selection_wall_time_ms
            for turn in transcript.turns
            if turn.decision is not None
        )
        per_task.append(
            {
                "task_id": transcript.task_id,
                "first_server": first_server,
                "first_tool": first.decision.selected_tool if first.decision else None,
                "capability_matched": matched,
                "turns": len(transcript.turns),
                "final_success": transcript.final_success,
                "mean_latency_ms": sum(latencies) / len(latencies) if latencies else 0.0,
                "outage_turns": outage_turns,
            }
        )
    n_tasks = len(transcripts)
    return MetricsReport(
        ssr=matched_tasks / n_tasks,
        ee=expertise_total / n_tasks,
        al_ms=sum(matched_latencies) / len(matched_latencies) if matched_latencies else 0.0,
        sl_ms=sum(selection_times) / len(selection_times) if selection_times else 0.0,
        fr=matched_outage_turns / len(matched_latencies) if matched_latencies else 0.0,
        task_count=n_tasks,
        per_task=tuple(sorted(per_task, key=lambda r: r["task_id"])),
    )


def _r4(value: float) -> float:
    return round(value, 4)


def report_payload(report: MetricsReport, config_echo: dict | None = None) -> dict:
    """JSON-ready payload; ``wall_time`` sorts last so the deterministic part
    of the serialized file is a contiguous prefix."""
    return {
        "config_echo": config_echo or {},
        "metrics": {
            "ssr": _r4(report.ssr),
            "ssr_pct": _r4(report.ssr * 100.0),
            "ee": _r4(report.ee),
            "ee_pct": _r4(report.ee * 100.0),
            "al_ms": _r4(report.al_ms),
            "fr": _r4(report.fr),
            "fr_pct": _r4(report.fr * 100.0),
            "task_count": report.task_count,
        },
        "per_task": [
            {**record, "mean_latency_ms": _r4(record["mean_latency_ms"])}
            for record in report.per_task
        ],
        "wall_time": {"sl_ms": _r4(report.sl_ms)},
    }


def render_report_json(report: MetricsReport, config_echo: dict | None = None) -> str:
    return json.dumps(report_payload(report, config_echo), sort_keys=True, indent=2) + "\n"


def render_report_csv(report: MetricsReport, config_echo: dict | None = None) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["metric", "value", "percent"])
    writer.writerow(["ssr", f"{report.ssr:.4f}", f"{report.ssr * 100:.4f}"])
    writer.writerow(["ee", f"{report.ee:.4f}", f"{report.ee * 100:.4f}"])
    writer.writerow(["al_ms", f"{report.al_ms:.4f}", ""])
    writer.writerow(["fr", f"{report.fr:.4f}", f"{report.fr * 100:.4f}"])
    writer.writerow(["task_count", str(report.task_count), ""])
    writer.writerow([])
    writer.writerow(PER_TASK_FIELDS)
    for record in report.per_task:
        writer.writerow(
            [
                record["task_id"],
                record["first_server"] or "",
                record["first_tool"] or "",
                str(record["capability_matched"]).lower(),
                record["turns"],
                str(record["final_success"]).lower(),
                f"{record['mean_latency_ms']:.4f}",
                record["outage_turns"],
            ]
        )
    writer.writerow([])
    writer.writerow(["wall_time_metric", "value"])
    writer.writerow(["sl_ms", f"{report.sl_ms:.4f}"])
    return buffer.getvalue()


def write_report(
    report: MetricsReport,
    path: str | Path,
    fmt: str = "json",
    config_echo: dict | None = None,
) -> Path:
    """Serialize a report; identical reports produce byte-identical files."""
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; choose from {REPORT_FORMATS}")
    out = Path(path)
    if fmt == "json":
        out.write_text(render_report_json(report, config_echo), encoding="utf-8")
    else:
        out.write_text(render_report_csv(report, config_echo), encoding="utf-8")
    return out


def deterministic_view(report_bytes: bytes) -> bytes:
    """The byte prefix of a serialized report before its wall-time section."""
    for marker in (b'"wall_time"', b"wall_time_metric"):
        index = report_bytes.find(marker)
        if index != -1:
            return report_bytes[:index]
    return report_bytes
