"""Per-server latency time series: generation, point queries, feedforward writes.

A series is sampled on a fixed tick grid over a horizon. Each tick value is

    l(t) = base + amplitude * sin(2*pi * t*tick / period + phase) + noise(t)

with Gaussian noise of the configured std, clamped to >= 1 ms so relative
penalties never divide by zero. Ticks inside an outage interval are
overridden to the interval's severity exactly.

Observed execution latencies can be recorded back onto a series
(single-writer per server); recorded observations win over generated
samples at the same tick.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .config import DurationMs, FailureConfig, LatencyProfileConfig, ScenarioConfig
from .rng import RandomStream, derive_seed

MIN_LATENCY_MS = 1.0

SERIES_CSV_HEADER = ("tick_index", "latency_ms")

_SAFE_NAME_RE = re.compile(r"[^A-Za-z0-9_.-]+")


class ContractError(ValueError):
    """A caller violated an operation's recording contract."""


@dataclass(frozen=True)
class OutageInterval:
    """Half-open tick range [start, end) pinned at ``severity_ms``."""

    start: int
    end: int
    severity_ms: float

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"outage interval must satisfy start < end, got [{self.start}, {self.end})")

    def covers(self, t: int) -> bool:
        return self.start <= t < self.end


def sample_outage_intervals(
    failure: FailureConfig,
    horizon_ms: DurationMs,
    tick_ms: DurationMs,
    seed: int,
) -> list[OutageInterval]:
    """Draw the outage episodes for one horizon.

    ``probability`` is the per-horizon episode probability: a single
    Bernoulli draw decides whether one outage occurs. If it does, its
    duration and severity are uniform over their configured ranges and its
    start is uniform over the positions where the episode fits.
    """
    n_ticks = horizon_ms // tick_ms
    if failure.duration_range_ms[0] > horizon_ms:
        raise ValueError(
            f"outage duration min {failure.duration_range_ms[0]}ms cannot fit "
            f"in horizon {horizon_ms}ms"
        )
    stream = RandomStream(seed)
    if not stream.chance(failure.probability):
        return []
    duration_ms = stream.uniform(*map(float, failure.duration_range_ms))
    severity_ms = stream.uniform(*map(float, failure.severity_range_ms))
    duration_ticks = max(1, round(duration_ms / tick_ms))
    duration_ticks = min(duration_ticks, n_ticks)
    start = stream.int_below(n_ticks - duration_ticks + 1)
    return [OutageInterval(start=start, end=start + duration_ticks, severity_ms=severity_ms)]


class LatencySeries:
    """Generated latency history for one server plus recorded observations.

    Reads (``sample_at``, ``history_up_to``) merge recorded observations
    over generated samples. Recording is monotone in the tick index; a
    second record at the same tick replaces the first.
    """

    def __init__(self, server_id: str, tick_ms: DurationMs, samples: list[float]):
        self.server_id = server_id
        self.tick_ms = tick_ms
        self._samples = samples
        self._overrides: dict[int, float] = {}
        self._observations: list[tuple[int, float]] = []

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def appended_observations(self) -> tuple[tuple[int, float], ...]:
        return tuple(self._observations)

    def _check_index(self, t: int) -> None:
        if not (0 <= t < len(self._samples)):
            raise IndexError(f"tick index {t} out of range [0, {len(self._samples)})")

    def sample_at(self, t: int) -> float:
        self._check_index(t)
        return self._overrides.get(t, self._samples[t])

    def history_up_to(self, t: int) -> list[float]:
        """Prefix [l_0 .. l_t] with recorded observations merged in."""
        self._check_index(t)
        if not self._overrides:
            return self._samples[: t + 1]
        return [self._overrides.get(i, self._samples[i]) for i in range(t + 1)]

    def record_observation(self, t: int, latency_ms: float) -> None:
        """Record an observed latency at tick ``t`` (monotone in ``t``)."""
        self._check_index(t)
        if self._observations:
            last_t = self._observations[-1][0]
            if t < last_t:
                raise ContractError(
                    f"observation at tick {t} predates last recorded tick {last_t}"
                )
            if t == last_t:
                self._observations[-1] = (t, latency_ms)
                self._overrides[t] = latency_ms
                return
        self._observations.append((t, latency_ms))
        self._overrides[t] = latency_ms


def generate_series(
    profile: LatencyProfileConfig,
    horizon_ms: DurationMs,
    tick_ms: DurationMs,
    seed: int,
    server_id: str = "server",
) -> LatencySeries:
    """Deterministically generate one server's latency series.

    The noise and outage substreams are derived independently from ``seed``,
    so toggling the failure block never shifts the noise sequence.
    """
    n_ticks = horizon_ms // tick_ms
    if n_ticks < 1:
        raise ValueError(f"horizon {horizon_ms}ms shorter than tick {tick_ms}ms")
    outages: list[OutageInterval] = []
    if profile.failure is not None:
        outages = sample_outage_intervals(
            profile.failure, horizon_ms, tick_ms, derive_seed(seed, "outage")
        )
    noise = RandomStream(derive_seed(seed, "noise"))
    base = float(profile.base_latency_ms)
    std = float(profile.std_dev_ms)
    samples: list[float] = []
    for t in range(n_ticks):
        value = base + noise.normal(0.0, std)
        if profile.periodicity is not None:
            p = profile.periodicity
            value += p.amplitude_ms * math.sin(
                (2.0 * math.pi * t * tick_ms) / p.period_ms + p.phase_shift
            )
        samples.append(max(MIN_LATENCY_MS, value))
    for interval in outages:
        for t in range(interval.start, min(interval.end, n_ticks)):
            samples[t] = interval.severity_ms
    return LatencySeries(server_id=server_id, tick_ms=tick_ms, samples=samples)


class LatencyEnvironment:
    """All per-server latency series for one scenario run."""

    def __init__(self, series: dict[str, LatencySeries], tick_ms: DurationMs):
        self._series = series
        self.tick_ms = tick_ms

    @classmethod
    def from_scenario(cls, scenario: ScenarioConfig, seed: int) -> "LatencyEnvironment":
        """Generate every configured server's series.

        Each server's substream is derived from (seed, server name), so
        adding or removing servers never perturbs the other series.
        """
        series = {
            name: generate_series(
                profile,
                scenario.horizon_ms,
                scenario.tick_ms,
                derive_seed(seed, "server", name),
                server_id=name,
            )
            for name, profile in scenario.profiles.items()
        }
        return cls(series=series, tick_ms=scenario.tick_ms)

    @property
    def server_ids(self) -> tuple[str, ...]:
        return tuple(self._series)

    @property
    def n_ticks(self) -> int:
        return min(len(s) for s in self._series.values()) if self._series else 0

    def has_series(self, server_id: str) -> bool:
        return server_id in self._series

    def series_for(self, server_id: str) -> LatencySeries:
        try:
            return self._series[server_id]
        except KeyError:
            raise KeyError(f"no latency series for server {server_id!r}") from None

    def export_csv(self, out_dir: str | Path) -> list[Path]:
        """Write one ``tick_index,latency_ms`` CSV per server; returns the paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for server_id, series in self._series.items():
            safe = _SAFE_NAME_RE.sub("_", server_id)
            path = out / f"{safe}.csv"
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(SERIES_CSV_HEADER)
                for t in range(len(series)):
                    writer.writerow([t, f"{series.sample_at(t):.6f}"])
            written.append(path)
        return written
