"""Matplotlib figure rendering for reports, series, and sweeps.

Figures are written next to the delimited outputs when requested via the
CLI ``--figures`` flag; nothing here is imported by the scoring or metric
code paths.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .latency import LatencyEnvironment
from .metrics import MetricsReport


def render_latency_series(
    env: LatencyEnvironment,
    out_path: str | Path,
    server_ids: Sequence[str] | None = None,
    max_servers: int = 8,
) -> Path:
    """Line chart of per-server latency over the horizon."""
    ids = list(server_ids) if server_ids else list(env.server_ids)[:max_servers]
    fig, ax = plt.subplots(figsize=(10, 4.5))
    for server_id in ids:
        series = env.series_for(server_id)
        values = [series.sample_at(t) for t in range(len(series))]
        ax.plot(range(len(series)), values, linewidth=0.9, label=server_id)
    ax.set_xlabel("tick index")
    ax.set_ylabel("latency (ms)")
    ax.set_title("Simulated latency per server")
    ax.legend(loc="upper right", fontsize=7, ncol=2)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_metrics_summary(report: MetricsReport, out_path: str | Path, title: str = "") -> Path:
    """Two-panel bar chart: ratio metrics and latency metrics."""
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.8))
    ratios = {"SSR": report.ssr, "EE": report.ee, "FR": report.fr}
    left.bar(list(ratios), list(ratios.values()), color=["#2a7", "#27a", "#a33"])
    left.set_ylim(0, 1.05)
    left.set_title("ratio metrics")
    for i, value in enumerate(ratios.values()):
        left.text(i, value + 0.02, f"{value:.3f}", ha="center", fontsize=8)
    latencies = {"AL (ms)": report.al_ms, "SL (ms)": report.sl_ms}
    right.bar(list(latencies), list(latencies.values()), color=["#666", "#bbb"])
    right.set_title("latency metrics")
    for i, value in enumerate(latencies.values()):
        right.text(i, value, f"{value:.2f}", ha="center", va="bottom", fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_sweep_chart(rows: Sequence[dict], out_path: str | Path) -> Path:
    """AL and SSR versus alpha, one line per (S, T) filter pair."""
    pairs = sorted({(row["filter_servers"], row["filter_tools"]) for row in rows})
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.8))
    for s_filter, t_filter in pairs:
        cell = sorted(
            (r for r in rows if (r["filter_servers"], r["filter_tools"]) == (s_filter, t_filter)),
            key=lambda r: r["alpha"],
        )
        alphas = [r["alpha"] for r in cell]
        label = f"s{s_filter}t{t_filter}"
        left.plot(alphas, [r["al_ms"] for r in cell], marker="o", label=label)
        right.plot(alphas, [r["ssr"] for r in cell], marker="o", label=label)
    left.set_xlabel("alpha")
    left.set_ylabel("AL (ms)")
    left.set_title("average latency vs alpha")
    right.set_xlabel("alpha")
    right.set_ylabel("SSR")
    right.set_ylim(0, 1.05)
    right.set_title("selection success vs alpha")
    left.legend(fontsize=7)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
