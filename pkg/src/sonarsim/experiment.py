"""End-to-end experiment orchestration: pool + environment + workload + metrics.

An experiment resolves from an optional JSON config file plus overrides
(CLI flags win on conflict), runs the full pipeline deterministically from
its seed, and produces a ``MetricsReport`` with an embedded config echo so
no run is ambiguous after the fact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .agent import TaskTranscript, run_workload, uniform_schedule
from .config import ConfigError, ScenarioConfig, load_scenario
from .latency import LatencyEnvironment
from .metrics import MetricsReport, evaluate
from .netscore import ScoringParams
from .routing import RoutingParams, Router, make_router
from .semantic import ChatCompletionTransformer, QueryTransformer, RuleStubTransformer
from .servers import QueryTask, ServerRecord, SimulatedExecutor, load_pool, load_tasks
from .rng import derive_seed

DEFAULT_SEED = 42
DEFAULT_MAX_TURNS = 3

TRANSFORMER_KINDS = ("stub", "external")

# config-file keys mirrored one-to-one by CLI flags
_FILE_KEYS = {
    "scenario",
    "pool",
    "queries",
    "seed",
    "max_turns",
    "out",
    "format",
    "routing",
    "network_scoring",
    "transformer",
    "stochastic_success",
}

_ROUTING_KEYS = {"algorithm", "alpha", "beta", "filter_servers", "filter_tools"}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario_path: str
    pool_path: str
    query_path: str
    routing: RoutingParams
    scoring: ScoringParams
    seed: int = DEFAULT_SEED
    max_turns: int = DEFAULT_MAX_TURNS
    output_path: str = "report.json"
    output_format: str = "json"
    transformer: str = "stub"
    stochastic_success: bool = False


@dataclass(frozen=True)
class ExperimentRun:
    report: MetricsReport
    config_echo: dict
    env: LatencyEnvironment
    transcripts: tuple[TaskTranscript, ...]
    pool: tuple[ServerRecord, ...]
    tasks: tuple[QueryTask, ...]


def load_config_file(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"experiment config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("experiment config must be a JSON object")
    for key in data:
        if key not in _FILE_KEYS:
            raise ConfigError(f"unknown key {key!r}", "experiment config")
    return data


def resolve_config(file_cfg: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge a config-file dict with flag overrides; overrides win."""
    file_cfg = dict(file_cfg or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    routing_cfg = dict(file_cfg.get("routing") or {})
    for key in routing_cfg:
        if key not in _ROUTING_KEYS:
            raise ConfigError(f"unknown key {key!r}", "routing")
    for key in _ROUTING_KEYS:
        if key in overrides:
            routing_cfg[key] = overrides.pop(key)
    alpha = routing_cfg.get("alpha")
    beta = routing_cfg.get("beta")
    if alpha is None and beta is None:
        alpha, beta = 0.5, 0.5
    elif alpha is None:
        alpha = 1.0 - float(beta)
    elif beta is None:
        beta = 1.0 - float(alpha)
    routing = RoutingParams(
        alpha=float(alpha),
        beta=float(beta),
        server_filter=int(routing_cfg.get("filter_servers", 5)),
        tool_filter=int(routing_cfg.get("filter_tools", 10)),
        algorithm=str(routing_cfg.get("algorithm", "sonar")),
    )
    scoring = ScoringParams.from_dict(file_cfg.get("network_scoring") or {})

    def pick(key: str, default=None):
        return overrides.get(key, file_cfg.get(key, default))

    scenario_path = pick("scenario")
    pool_path = pick("pool")
    query_path = pick("queries")
    for label, value in (("scenario", scenario_path), ("pool", pool_path), ("queries", query_path)):
        if not value:
            raise ConfigError(f"missing required input: --{label} (or config key {label!r})")
    transformer = str(pick("transformer", "stub"))
    if transformer not in TRANSFORMER_KINDS:
        raise ConfigError(f"unknown transformer {transformer!r}; choose from {TRANSFORMER_KINDS}")
    return ExperimentConfig(
        scenario_path=str(scenario_path),
        pool_path=str(pool_path),
        query_path=str(query_path),
        routing=routing,
        scoring=scoring,
        seed=int(pick("seed", DEFAULT_SEED)),
        max_turns=int(pick("max_turns", DEFAULT_MAX_TURNS)),
        output_path=str(pick("out", "report.json")),
        output_format=str(pick("format", "json")),
        transformer=transformer,
        stochastic_success=bool(pick("stochastic_success", False)),
    )


def build_transformer(cfg: ExperimentConfig) -> QueryTransformer:
    stub = RuleStubTransformer()
    if cfg.transformer == "external":
        return ChatCompletionTransformer(fallback=stub)
    return stub


def config_echo(cfg: ExperimentConfig) -> dict:
    return {
        "scenario": cfg.scenario_path,
        "pool": cfg.pool_path,
        "queries": cfg.query_path,
        "seed": cfg.seed,
        "max_turns": cfg.max_turns,
        "algorithm": cfg.routing.algorithm,
        "alpha": cfg.routing.alpha,
        "beta": cfg.routing.beta,
        "filter_servers": cfg.routing.server_filter,
        "filter_tools": cfg.routing.tool_filter,
        "transformer": cfg.transformer,
        "stochastic_success": cfg.stochastic_success,
        "network_scoring": {
            "ewma_lambda": cfg.scoring.ewma_lambda,
            "window": cfg.scoring.window,
            "ideal_low_ms": cfg.scoring.ideal_low_ms,
            "ideal_high_ms": cfg.scoring.ideal_high_ms,
            "decay_tau_ms": cfg.scoring.decay_tau_ms,
            "outage_threshold_ms": cfg.scoring.outage_threshold_ms,
            "offline_threshold_ms": cfg.scoring.offline_threshold_ms,
            "weights": list(cfg.scoring.weights),
            "cv_ref": cfg.scoring.cv_ref,
        },
    }


def _validate_inputs(
    cfg: ExperimentConfig,
    scenario: ScenarioConfig,
    pool: Sequence[ServerRecord],
) -> None:
    missing = [s.server_id for s in pool if s.server_id not in scenario.profiles]
    if missing:
        raise ConfigError(
            "scenario has no latency profile for servers: " + ", ".join(sorted(missing))
        )
    if cfg.routing.server_filter > len(pool):
        raise ConfigError(
            f"filter_servers {cfg.routing.server_filter} exceeds pool size {len(pool)}"
        )


def run_experiment(cfg: ExperimentConfig) -> ExperimentRun:
    """Execute the full workflow and evaluate it."""
    scenario = load_scenario(cfg.scenario_path)
    pool = load_pool(cfg.pool_path)
    tasks = load_tasks(cfg.query_path)
    _validate_inputs(cfg, scenario, pool)
    env = LatencyEnvironment.from_scenario(scenario, cfg.seed)
    router = make_router(pool, env, cfg.routing, cfg.scoring, build_transformer(cfg))
    executor = SimulatedExecutor(
        pool, env, stochastic_success=cfg.stochastic_success, seed=derive_seed(cfg.seed, "executor")
    )
    schedule = uniform_schedule(len(tasks), env.n_ticks)
    transcripts = run_workload(tasks, schedule, router, executor, max_turns=cfg.max_turns)
    report = evaluate(transcripts, pool, tasks)
    return ExperimentRun(
        report=report,
        config_echo=config_echo(cfg),
        env=env,
        transcripts=tuple(transcripts),
        pool=tuple(pool),
        tasks=tuple(tasks),
    )


SWEEP_FIELDS = ("alpha", "beta", "filter_servers", "filter_tools", "ssr", "ee", "al_ms", "sl_ms", "fr")


def run_sweep(
    cfg: ExperimentConfig,
    alphas: Sequence[float],
    filters: Sequence[tuple[int, int]],
) -> list[dict]:
    """Cartesian product of (alpha, S, T) cells sharing one environment seed.

    Every cell regenerates its own environment from the shared seed, so no
    feedforward state leaks between cells.
    """
    if not alphas:
        raise ConfigError("sweep needs at least one alpha value")
    if not filters:
        filters = [(cfg.routing.server_filter, cfg.routing.tool_filter)]
    rows = []
    for alpha in alphas:
        for s_filter, t_filter in filters:
            cell_cfg = replace(
                cfg,
                routing=replace(
                    cfg.routing,
                    alpha=float(alpha),
                    beta=1.0 - float(alpha),
                    server_filter=int(s_filter),
                    tool_filter=int(t_filter),
                ),
            )
            run = run_experiment(cell_cfg)
            rows.append(
                {
                    "alpha": float(alpha),
                    "beta": 1.0 - float(alpha),
                    "filter_servers": int(s_filter),
                    "filter_tools": int(t_filter),
                    "ssr": run.report.ssr,
                    "ee": run.report.ee,
                    "al_ms": run.report.al_ms,
                    "sl_ms": run.report.sl_ms,
                    "fr": run.report.fr,
                }
            )
    return rows


def render_sweep_csv(rows: Sequence[dict]) -> str:
    lines = [",".join(SWEEP_FIELDS)]
    for row in rows:
        lines.append(
            ",".join(
                (
                    f"{row[field]:.4f}"
                    if isinstance(row[field], float)
                    else str(row[field])
                )
                for field in SWEEP_FIELDS
            )
        )
    return "\n".join(lines) + "\n"


def render_sweep_json(rows: Sequence[dict]) -> str:
    rounded = [
        {k: (round(v, 4) if isinstance(v, float) else v) for k, v in row.items()} for row in rows
    ]
    return json.dumps(rounded, sort_keys=True, indent=2) + "\n"


def write_sweep(rows: Sequence[dict], path: str | Path, fmt: str = "csv") -> Path:
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown sweep format {fmt!r}; choose csv or json")
    out = Path(path)
    out.write_text(
        render_sweep_csv(rows) if fmt == "csv" else render_sweep_json(rows), encoding="utf-8"
    )
    return out
