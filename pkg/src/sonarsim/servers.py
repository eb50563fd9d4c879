"""Virtual tool servers: records, dataset files, mock clusters, simulated execution.

File formats:

* Server pool: UTF-8 JSON array of objects
  ``{server_id, name, description, capability, expertise, tools: [{tool_id, name, description}]}``.
* Query tasks: JSON-Lines, one object per line
  ``{task_id, query, required_capability, ground_truth?}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .config import ConfigError
from .latency import LatencyEnvironment
from .rng import RandomStream, derive_seed

OUTAGE_LATENCY_MS = 1000.0


@dataclass(frozen=True)
class ToolRecord:
    tool_id: str
    name: str
    description: str


@dataclass(frozen=True)
class ServerRecord:
    server_id: str
    name: str
    description: str
    capability: str
    expertise: float
    tools: tuple[ToolRecord, ...]


@dataclass(frozen=True)
class QueryTask:
    task_id: str
    query: str
    required_capability: str
    ground_truth: str | None = None


@dataclass(frozen=True)
class ExecutionResult:
    """Outcome of one simulated tool call."""

    success: bool
    observed_latency_ms: float
    failed_by_outage: bool
    turn: int = 1
    error: str | None = None


def validate_pool(pool: list[ServerRecord]) -> None:
    if not pool:
        raise ConfigError("server pool is empty", "servers")
    seen: set[str] = set()
    for i, server in enumerate(pool):
        path = f"servers[{i}]"
        if server.server_id in seen:
            raise ConfigError(f"duplicate server_id {server.server_id!r}", path)
        seen.add(server.server_id)
        if not server.description:
            raise ConfigError("description non-empty", f"{path}.description")
        if not (0.0 <= server.expertise <= 1.0):
            raise ConfigError(f"expertise {server.expertise} out of range [0, 1]", f"{path}.expertise")
        if not server.tools:
            raise ConfigError("tools non-empty", f"{path}.tools")
        tool_ids = [t.tool_id for t in server.tools]
        if len(tool_ids) != len(set(tool_ids)):
            raise ConfigError("duplicate tool_id within server", f"{path}.tools")
        for j, tool in enumerate(server.tools):
            if not tool.description:
                raise ConfigError("description non-empty", f"{path}.tools[{j}].description")


def _str_field(obj: dict, key: str, path: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise ConfigError(f"missing or empty string {key!r}", path)
    return value


def pool_from_obj(data: object) -> list[ServerRecord]:
    if not isinstance(data, list):
        raise ConfigError("server pool file must hold a JSON array", "servers")
    pool: list[ServerRecord] = []
    for i, raw in enumerate(data):
        path = f"servers[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError("expected a server object", path)
        raw_tools = raw.get("tools")
        if not isinstance(raw_tools, list) or not raw_tools:
            raise ConfigError("tools non-empty", f"{path}.tools")
        tools = tuple(
            ToolRecord(
                tool_id=_str_field(t, "tool_id", f"{path}.tools[{j}]"),
                name=_str_field(t, "name", f"{path}.tools[{j}]"),
                description=_str_field(t, "description", f"{path}.tools[{j}]"),
            )
            for j, t in enumerate(raw_tools)
        )
        expertise = raw.get("expertise")
        if isinstance(expertise, bool) or not isinstance(expertise, (int, float)):
            raise ConfigError("expertise must be a number", f"{path}.expertise")
        pool.append(
            ServerRecord(
                server_id=_str_field(raw, "server_id", path),
                name=_str_field(raw, "name", path),
                description=_str_field(raw, "description", path),
                capability=_str_field(raw, "capability", path),
                expertise=float(expertise),
                tools=tools,
            )
        )
    validate_pool(pool)
    return pool


def load_pool(path: str | Path) -> list[ServerRecord]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"server pool file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from None
    return pool_from_obj(data)


def pool_to_obj(pool: list[ServerRecord]) -> list[dict]:
    return [
        {
            "server_id": s.server_id,
            "name": s.name,
            "description": s.description,
            "capability": s.capability,
            "expertise": round(s.expertise, 6),
            "tools": [
                {"tool_id": t.tool_id, "name": t.name, "description": t.description}
                for t in s.tools
            ],
        }
        for s in pool
    ]


def write_pool(pool: list[ServerRecord], path: str | Path) -> None:
    Path(path).write_text(json.dumps(pool_to_obj(pool), indent=2) + "\n", encoding="utf-8")


def load_tasks(path: str | Path) -> list[QueryTask]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"query file not found: {p}")
    tasks: list[QueryTask] = []
    seen: set[str] = set()
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        where = f"tasks:{lineno}"
        try:
            raw = json.loads(line)
        except ValueError as exc:
            raise ConfigError(f"invalid JSON line: {exc}", where) from None
        if not isinstance(raw, dict):
            raise ConfigError("expected a task object", where)
        task = QueryTask(
            task_id=_str_field(raw, "task_id", where),
            query=_str_field(raw, "query", where),
            required_capability=_str_field(raw, "required_capability", where),
            ground_truth=raw.get("ground_truth"),
        )
        if task.task_id in seen:
            raise ConfigError(f"duplicate task_id {task.task_id!r}", where)
        seen.add(task.task_id)
        tasks.append(task)
    if not tasks:
        raise ConfigError(f"query file {p} holds no tasks")
    return tasks


def write_tasks(tasks: list[QueryTask], path: str | Path) -> None:
    lines = []
    for t in tasks:
        obj = {"task_id": t.task_id, "query": t.query, "required_capability": t.required_capability}
        if t.ground_truth is not None:
            obj["ground_truth"] = t.ground_truth
        lines.append(json.dumps(obj))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# Synonym table for the paraphrase stub. Deterministic and intentionally
# small; it diversifies wording without a live model.
_SYNONYMS: dict[str, tuple[str, ...]] = {
    "provides": ("offers", "exposes", "delivers", "supplies"),
    "service": ("endpoint", "backend", "provider", "gateway"),
    "server": ("host", "node", "instance", "deployment"),
    "fast": ("quick", "responsive", "snappy", "low-overhead"),
    "returns": ("yields", "emits", "produces", "hands back"),
    "queries": ("requests", "lookups", "calls", "searches"),
    "data": ("records", "results", "content", "payloads"),
}


def paraphrase(text: str, variant: int, stream: RandomStream) -> str:
    """Deterministic paraphrase stub: synonym swaps plus a clause rotation."""
    words = text.split()
    swapped = []
    for word in words:
        bare = word.lower().strip(".,;:")
        options = _SYNONYMS.get(bare)
        if options and stream.chance(0.8):
            choice = options[(variant + stream.int_below(len(options))) % len(options)]
            if word[0].isupper():
                choice = choice.capitalize()
            swapped.append(word.replace(bare, choice) if bare in word else choice)
        else:
            swapped.append(word)
    rotation = (variant + 1) % max(1, len(swapped))
    rotated = swapped[rotation:] + swapped[:rotation]
    body = " ".join(rotated).rstrip(".")
    return f"{body} (variant {variant + 1})."


def mock_cluster(
    template: ServerRecord,
    n: int,
    description_variants: list[str],
    seed: int,
) -> list[ServerRecord]:
    """Clone ``n`` functionally identical servers with diversified descriptions.

    Variants beyond the provided list fall back to the deterministic
    paraphrase stub. Clones share the template's capability, expertise,
    and tool set.
    """
    if n < 1:
        raise ValueError(f"cluster size must be >= 1, got {n}")
    stream = RandomStream(derive_seed(seed, "mock_cluster", template.server_id))
    clones = []
    for i in range(n):
        if i < len(description_variants):
            description = description_variants[i]
        else:
            description = paraphrase(template.description, i, stream)
        clones.append(
            replace(
                template,
                server_id=f"{template.server_id}_{i + 1:02d}",
                name=f"{template.name} {i + 1:02d}",
                description=description,
            )
        )
    return clones


def simulate_execution(
    server: ServerRecord,
    tool: ToolRecord,
    required_capability: str,
    t: int,
    env: LatencyEnvironment,
    turn: int = 1,
    success_stream: RandomStream | None = None,
) -> ExecutionResult:
    """Execute one simulated tool call and feed the latency back into history.

    Success is capability-match and online by default. When
    ``success_stream`` is given, a Bernoulli(expertise) draw additionally
    gates success (ablation mode).
    """
    if all(t_.tool_id != tool.tool_id for t_ in server.tools):
        raise ValueError(f"tool {tool.tool_id!r} is not hosted by server {server.server_id!r}")
    series = env.series_for(server.server_id)
    observed = series.sample_at(t)
    failed_by_outage = observed >= OUTAGE_LATENCY_MS
    success = (server.capability == required_capability) and not failed_by_outage
    if success and success_stream is not None:
        success = success_stream.chance(server.expertise)
    series.record_observation(t, observed)
    return ExecutionResult(
        success=success,
        observed_latency_ms=observed,
        failed_by_outage=failed_by_outage,
        turn=turn,
    )


class SimulatedExecutor:
    """Resolves ids against a pool and runs ``simulate_execution``."""

    def __init__(
        self,
        pool: list[ServerRecord],
        env: LatencyEnvironment,
        stochastic_success: bool = False,
        seed: int = 0,
    ):
        self._servers = {s.server_id: s for s in pool}
        self._env = env
        self._success_stream = (
            RandomStream(derive_seed(seed, "executor")) if stochastic_success else None
        )

    def execute(
        self, server_id: str, tool_id: str, required_capability: str, t: int, turn: int = 1
    ) -> ExecutionResult:
        server = self._servers.get(server_id)
        if server is None:
            raise ValueError(f"unknown server {server_id!r}")
        tool = next((t_ for t_ in server.tools if t_.tool_id == tool_id), None)
        if tool is None:
            raise ValueError(f"tool {tool_id!r} is not hosted by server {server_id!r}")
        return simulate_execution(
            server,
            tool,
            required_capability,
            t,
            self._env,
            turn=turn,
            success_stream=self._success_stream,
        )
