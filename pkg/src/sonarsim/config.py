"""Scenario configuration: duration strings, latency profile schemas, validation.

A scenario file is UTF-8 JSON with a top-level duration string ``last_time``,
an optional ``tick``, and exactly one scenario object mapping server names to
latency profile objects::

    {
      "last_time": "24h",
      "hybrid_scenario": {
        "High_Latency_Server": {"base_latency": "350ms", "std_dev": "20ms"},
        ...
      }
    }

Per-server keys: ``base_latency``, ``std_dev``, optional ``periodicity``
(``amplitude``, ``period``, ``phase_shift``) and optional ``failure_config``
(``type``, ``probability``, ``duration``, ``severity``; the last two are
two-element ``[min, max]`` arrays).

Duration values are strings like ``"350ms"``, ``"30min"``, ``"24h"``; bare
JSON numbers are also accepted and read as milliseconds. All parsing is pure
and the returned configurations are immutable.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

# Milliseconds, stored as a non-negative int. Kept as a plain alias so
# arithmetic stays ordinary integer math.
DurationMs = int

_UNIT_MS: dict[str, int] = {"ms": 1, "s": 1_000, "min": 60_000, "h": 3_600_000}

# Largest unit first so formatting picks the most compact exact form.
_FORMAT_UNITS: tuple[tuple[str, int], ...] = (
    ("h", 3_600_000),
    ("min", 60_000),
    ("s", 1_000),
    ("ms", 1),
)

_DURATION_RE = re.compile(r"^(?P<sign>-?)(?P<num>\d+(?:\.\d+)?)\s*(?P<unit>[a-zA-Z]+)$")

DEFAULT_TICK_MS: DurationMs = 60_000


class ConfigError(ValueError):
    """Invalid configuration input. ``path`` locates the offending member."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def parse_duration(text: str) -> DurationMs:
    """Parse ``"<n><unit>"`` into integer milliseconds.

    Units: ms, s, min, h. Decimal counts are allowed and truncate toward
    zero after unit multiplication ("1.5s" -> 1500, "1.5ms" -> 1).
    Raises ConfigError for malformed strings, unknown units, or negative
    values, naming the offending token.
    """
    if not isinstance(text, str):
        raise ConfigError(f"expected a duration string, got {type(text).__name__}")
    stripped = text.strip()
    m = _DURATION_RE.match(stripped)
    if m is None:
        raise ConfigError(f"malformed duration {stripped!r}")
    if m.group("sign"):
        raise ConfigError(f"negative duration {stripped!r}")
    unit = m.group("unit")
    if unit not in _UNIT_MS:
        raise ConfigError(f"unknown duration unit {unit!r} in {stripped!r}")
    try:
        count = Decimal(m.group("num"))
    except InvalidOperation:  # pragma: no cover - regex already constrains this
        raise ConfigError(f"malformed duration number in {stripped!r}")
    return int(count * _UNIT_MS[unit])


def format_duration(value_ms: DurationMs) -> str:
    """Canonical string form: the largest unit that divides the value evenly."""
    if value_ms < 0:
        raise ConfigError(f"negative duration {value_ms}")
    if value_ms == 0:
        return "0ms"
    for unit, factor in _FORMAT_UNITS:
        if value_ms % factor == 0:
            return f"{value_ms // factor}{unit}"
    raise AssertionError("unreachable: ms always divides")


@dataclass(frozen=True)
class PeriodicityConfig:
    """Sinusoidal latency component: amplitude/period in ms, phase in radians."""

    amplitude_ms: DurationMs
    period_ms: DurationMs
    phase_shift: float

    def __post_init__(self) -> None:
        if self.period_ms <= 0:
            raise ConfigError("period must be > 0")
        if self.amplitude_ms < 0:
            raise ConfigError("amplitude must be >= 0")
        if not math.isfinite(self.phase_shift):
            raise ConfigError("phase_shift must be finite")


@dataclass(frozen=True)
class FailureConfig:
    """Outage model: one Bernoulli(probability) episode per horizon."""

    kind: str
    probability: float
    duration_range_ms: tuple[DurationMs, DurationMs]
    severity_range_ms: tuple[DurationMs, DurationMs]

    def __post_init__(self) -> None:
        if self.kind != "intermittent":
            raise ConfigError(f"unknown failure type {self.kind!r}")
        if not (0.0 <= self.probability <= 1.0):
            raise ConfigError(f"probability {self.probability} out of range [0, 1]")
        if self.duration_range_ms[0] > self.duration_range_ms[1]:
            raise ConfigError("duration range min exceeds max")
        if self.severity_range_ms[0] > self.severity_range_ms[1]:
            raise ConfigError("severity range min exceeds max")


@dataclass(frozen=True)
class LatencyProfileConfig:
    """Generative model of one server's network behavior."""

    base_latency_ms: DurationMs
    std_dev_ms: DurationMs
    periodicity: PeriodicityConfig | None = None
    failure: FailureConfig | None = None

    def __post_init__(self) -> None:
        if self.base_latency_ms <= 0:
            raise ConfigError("base_latency must be > 0")
        if self.std_dev_ms < 0:
            raise ConfigError("std_dev must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    """A full latency scenario: horizon, sampling tick, per-server profiles."""

    horizon_ms: DurationMs
    tick_ms: DurationMs
    profiles: dict[str, LatencyProfileConfig] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.tick_ms <= 0:
            raise ConfigError("tick must be > 0")
        if self.horizon_ms < self.tick_ms:
            raise ConfigError("horizon must be >= tick")
        if not self.profiles:
            raise ConfigError("profiles non-empty")

    @property
    def n_ticks(self) -> int:
        return self.horizon_ms // self.tick_ms


def _check_no_duplicate_keys(pairs: list[tuple[str, object]]) -> dict:
    obj: dict = {}
    for key, value in pairs:
        if key in obj:
            raise ValueError(f"duplicate key {key!r}")
        obj[key] = value
    return obj


def _duration_value(value: object, path: str) -> DurationMs:
    """Accept a duration string or a bare number (read as ms)."""
    if isinstance(value, bool):
        raise ConfigError("expected a duration, got a boolean", path)
    if isinstance(value, str):
        try:
            return parse_duration(value)
        except ConfigError as exc:
            raise ConfigError(str(exc), path) from None
    if isinstance(value, int):
        if value < 0:
            raise ConfigError(f"negative duration {value}", path)
        return value
    if isinstance(value, float):
        if not math.isfinite(value) or value < 0:
            raise ConfigError(f"invalid duration {value}", path)
        return int(value)
    raise ConfigError(f"expected a duration, got {type(value).__name__}", path)


def _number_value(value: object, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {type(value).__name__}", path)
    if not math.isfinite(float(value)):
        raise ConfigError(f"non-finite number {value}", path)
    return float(value)


def _require_keys(obj: dict, allowed: set[str], required: set[str], path: str) -> None:
    for key in required:
        if key not in obj:
            raise ConfigError(f"missing required key {key!r}", path)
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", path)


def _duration_pair(value: object, path: str) -> tuple[DurationMs, DurationMs]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError("expected a 2-element [min, max] array", path)
    lo = _duration_value(value[0], f"{path}[0]")
    hi = _duration_value(value[1], f"{path}[1]")
    if lo > hi:
        raise ConfigError(f"min {lo} exceeds max {hi}", path)
    return (lo, hi)


def _parse_failure(obj: object, path: str) -> FailureConfig:
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", path)
    _require_keys(
        obj,
        allowed={"type", "probability", "duration", "severity"},
        required={"type", "probability", "duration", "severity"},
        path=path,
    )
    kind = obj["type"]
    if kind != "intermittent":
        raise ConfigError(f"unknown failure type {kind!r}", f"{path}.type")
    probability = _number_value(obj["probability"], f"{path}.probability")
    if not (0.0 <= probability <= 1.0):
        raise ConfigError(f"probability {probability} out of range [0, 1]", f"{path}.probability")
    return FailureConfig(
        kind=kind,
        probability=probability,
        duration_range_ms=_duration_pair(obj["duration"], f"{path}.duration"),
        severity_range_ms=_duration_pair(obj["severity"], f"{path}.severity"),
    )


def _parse_periodicity(obj: object, path: str) -> PeriodicityConfig:
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", path)
    _require_keys(
        obj,
        allowed={"amplitude", "period", "phase_shift"},
        required={"amplitude", "period"},
        path=path,
    )
    period = _duration_value(obj["period"], f"{path}.period")
    if period <= 0:
        raise ConfigError("period must be > 0", f"{path}.period")
    return PeriodicityConfig(
        amplitude_ms=_duration_value(obj["amplitude"], f"{path}.amplitude"),
        period_ms=period,
        phase_shift=_number_value(obj.get("phase_shift", 0.0), f"{path}.phase_shift"),
    )


def _parse_profile(obj: object, path: str) -> LatencyProfileConfig:
    if not isinstance(obj, dict):
        raise ConfigError("expected a profile object", path)
    _require_keys(
        obj,
        allowed={"base_latency", "std_dev", "periodicity", "failure_config"},
        required={"base_latency", "std_dev"},
        path=path,
    )
    base = _duration_value(obj["base_latency"], f"{path}.base_latency")
    if base <= 0:
        raise ConfigError("base_latency must be > 0", f"{path}.base_latency")
    periodicity = None
    if "periodicity" in obj:
        periodicity = _parse_periodicity(obj["periodicity"], f"{path}.periodicity")
    failure = None
    if "failure_config" in obj:
        failure = _parse_failure(obj["failure_config"], f"{path}.failure_config")
    return LatencyProfileConfig(
        base_latency_ms=base,
        std_dev_ms=_duration_value(obj["std_dev"], f"{path}.std_dev"),
        periodicity=periodicity,
        failure=failure,
    )


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Validate an already-parsed scenario document."""
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    if "last_time" not in data:
        raise ConfigError("missing required key 'last_time'")
    horizon = _duration_value(data["last_time"], "last_time")
    tick = DEFAULT_TICK_MS
    if "tick" in data:
        tick = _duration_value(data["tick"], "tick")
        if tick <= 0:
            raise ConfigError("tick must be > 0", "tick")
    scenario_keys = [k for k in data if k not in ("last_time", "tick")]
    if len(scenario_keys) != 1:
        raise ConfigError(
            "expected exactly one scenario object alongside 'last_time', "
            f"found {len(scenario_keys)}"
        )
    scenario_key = scenario_keys[0]
    body = data[scenario_key]
    if not isinstance(body, dict):
        raise ConfigError("expected an object of server profiles", scenario_key)
    if not body:
        raise ConfigError("profiles non-empty", scenario_key)
    if horizon < tick:
        raise ConfigError("last_time must be >= tick", "last_time")
    profiles = {
        name: _parse_profile(profile, f"{scenario_key}.{name}")
        for name, profile in body.items()
    }
    return ScenarioConfig(horizon_ms=horizon, tick_ms=tick, profiles=profiles)


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario file. Pure: same bytes, same config."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"scenario file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"), object_pairs_hook=_check_no_duplicate_keys)
    except ValueError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from None
    return scenario_from_dict(data)
