"""Command-line entry point.

Commands: ``gen-scenario``, ``gen-dataset``, ``run``, ``sweep``.
Exit codes: 0 success, 2 configuration/validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .agent import write_transcripts
from .config import ConfigError
from .datagen import SCENARIO_KINDS, build_pool, build_scenario, synthesize_tasks
from .experiment import (
    load_config_file,
    resolve_config,
    run_experiment,
    run_sweep,
    write_sweep,
)
from .metrics import REPORT_FORMATS, write_report
from .servers import write_pool, write_tasks

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _refuse_overwrite(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise ConfigError(f"output path {path} exists; pass --force to overwrite")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config file (JSON); flags win on conflict")
    parser.add_argument("--scenario", help="scenario file path")
    parser.add_argument("--pool", help="server pool file path")
    parser.add_argument("--queries", help="query tasks file path (JSON-Lines)")
    parser.add_argument(
        "--algorithm", choices=("sonar", "rag", "prag", "rerank_rag"), help="routing algorithm"
    )
    parser.add_argument("--alpha", type=float, help="semantic weight (beta defaults to 1 - alpha)")
    parser.add_argument("--beta", type=float, help="network weight")
    parser.add_argument("--filter-servers", type=int, help="server filter size S")
    parser.add_argument("--filter-tools", type=int, help="tool filter size T")
    parser.add_argument("--seed", type=int, help="environment seed")
    parser.add_argument("--max-turns", type=int, help="retry budget per task")
    parser.add_argument("--out", help="report output path")
    parser.add_argument(
        "--stochastic-success",
        action="store_true",
        default=None,
        help="gate success by a Bernoulli(expertise) draw (ablation mode)",
    )
    parser.add_argument("--figures", action="store_true", help="render charts next to the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sonarsim",
        description=(
            "Network-aware tool routing simulator: generate latency scenarios and "
            "server datasets, run routing experiments, sweep parameters."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    gen_scenario = commands.add_parser("gen-scenario", help="write a scenario file")
    gen_scenario.add_argument("kind", choices=SCENARIO_KINDS)
    gen_scenario.add_argument("--out", required=True)
    gen_scenario.add_argument("--seed", type=int, default=0)
    gen_scenario.add_argument("--capable", type=int, default=5, help="websearch server count")
    gen_scenario.add_argument("--distractors", type=int, default=10, help="distractor server count")
    gen_scenario.add_argument("--force", action="store_true")

    gen_dataset = commands.add_parser("gen-dataset", help="write a server pool (and tasks)")
    gen_dataset.add_argument("--capable", type=int, default=5)
    gen_dataset.add_argument("--distractors", type=int, default=10)
    gen_dataset.add_argument("--out", required=True, help="server pool output path")
    gen_dataset.add_argument("--queries-out", help="also write a synthetic task file here")
    gen_dataset.add_argument("--tasks", type=int, default=290, help="synthetic task count")
    gen_dataset.add_argument("--seed", type=int, default=0)
    gen_dataset.add_argument("--force", action="store_true")

    run = commands.add_parser("run", help="run one experiment end to end")
    _add_run_flags(run)
    run.add_argument("--format", choices=REPORT_FORMATS, help="report format (default json)")
    run.add_argument("--export-series", metavar="DIR", help="write per-server latency CSVs")
    run.add_argument("--transcripts", help="write per-task transcripts (JSON-Lines)")

    sweep = commands.add_parser("sweep", help="run an (alpha, S, T) grid")
    _add_run_flags(sweep)
    sweep.add_argument("--format", choices=("csv", "json"), help="matrix format (default csv)")
    sweep.add_argument("--alphas", required=True, help="comma list, e.g. 0.8,0.5,0.4")
    sweep.add_argument("--filters", help="colon pairs, e.g. 5:10,6:12")
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict:
    return {
        "scenario": args.scenario,
        "pool": args.pool,
        "queries": args.queries,
        "algorithm": args.algorithm,
        "alpha": args.alpha,
        "beta": args.beta,
        "filter_servers": args.filter_servers,
        "filter_tools": args.filter_tools,
        "seed": args.seed,
        "max_turns": args.max_turns,
        "out": args.out,
        "format": args.format,
        "stochastic_success": args.stochastic_success,
    }


def cmd_gen_scenario(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _refuse_overwrite(out, args.force)
    document = build_scenario(args.kind, args.capable, args.distractors, args.seed)
    out.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {args.kind} scenario with {args.capable + args.distractors} profiles to {out}")
    return EXIT_OK


def cmd_gen_dataset(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _refuse_overwrite(out, args.force)
    pool = build_pool(args.capable, args.distractors, args.seed)
    write_pool(pool, out)
    print(f"wrote {len(pool)} servers to {out}")
    if args.queries_out:
        queries_out = Path(args.queries_out)
        _refuse_overwrite(queries_out, args.force)
        tasks = synthesize_tasks(args.tasks, args.seed)
        write_tasks(tasks, queries_out)
        print(f"wrote {len(tasks)} tasks to {queries_out}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    file_cfg = load_config_file(args.config) if args.config else None
    cfg = resolve_config(file_cfg, _overrides_from_args(args))
    run = run_experiment(cfg)
    out = write_report(run.report, cfg.output_path, cfg.output_format, run.config_echo)
    if args.transcripts:
        write_transcripts(run.transcripts, args.transcripts)
    if args.export_series:
        run.env.export_csv(args.export_series)
    if args.figures:
        from .figures import render_latency_series, render_metrics_summary

        stem = out.with_suffix("")
        render_latency_series(run.env, f"{stem}_latency.png")
        render_metrics_summary(
            run.report, f"{stem}_metrics.png", title=f"{cfg.routing.algorithm} run"
        )
    m = run.report
    print(
        f"{cfg.routing.algorithm}: ssr={m.ssr:.4f} ee={m.ee:.4f} al_ms={m.al_ms:.4f} "
        f"sl_ms={m.sl_ms:.4f} fr={m.fr:.4f} tasks={m.task_count}"
    )
    print(f"report written to {out}")
    return EXIT_OK


def _parse_alphas(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"bad --alphas value {text!r}; expected comma-separated numbers")


def _parse_filters(text: str | None) -> list[tuple[int, int]]:
    if not text:
        return []
    pairs = []
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            s_str, t_str = part.split(":")
            pairs.append((int(s_str), int(t_str)))
        except ValueError:
            raise ConfigError(f"bad --filters entry {part!r}; expected S:T")
    return pairs


def cmd_sweep(args: argparse.Namespace) -> int:
    file_cfg = load_config_file(args.config) if args.config else None
    overrides = _overrides_from_args(args)
    fmt = overrides.pop("format", None) or "csv"
    overrides["format"] = "json"  # per-cell reports are not written; format applies to the matrix
    cfg = resolve_config(file_cfg, overrides)
    alphas = _parse_alphas(args.alphas)
    if not alphas:
        raise ConfigError("sweep needs at least one alpha value")
    filters = _parse_filters(args.filters)
    rows = run_sweep(cfg, alphas, filters)
    out_path = cfg.output_path if cfg.output_path != "report.json" else "sweep.csv"
    out = write_sweep(rows, out_path, fmt)
    if args.figures:
        from .figures import render_sweep_chart

        render_sweep_chart(rows, f"{Path(out).with_suffix('')}_sweep.png")
    for row in rows:
        print(
            f"alpha={row['alpha']:.2f} S={row['filter_servers']} T={row['filter_tools']} "
            f"ssr={row['ssr']:.4f} ee={row['ee']:.4f} al_ms={row['al_ms']:.4f} fr={row['fr']:.4f}"
        )
    print(f"sweep matrix written to {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen-scenario": cmd_gen_scenario,
        "gen-dataset": cmd_gen_dataset,
        "run": cmd_run,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main_entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()
