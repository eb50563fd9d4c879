"""Network health scoring from latency history.

The score of a server is built from an EWMA one-step latency prediction,
a base score that decays exponentially beyond the ideal band, and four
multiplicative penalties:

    final = base * (1 - w1*P_high) * (1 - w2*P_trend)
                 * (1 - w3*P_outage) * (1 - w4*P_instability)

If the most recent latency sample is at or above the offline threshold the
server is treated as offline and the final score is -1. Otherwise the
final score lies in [0, 1]; each weight is capped at 1 so no factor can
go negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .config import ConfigError


@dataclass(frozen=True)
class ScoringParams:
    """Tunables for latency scoring; defaults separate the standard profiles
    cleanly (constant 30 ms -> 1.0, constant 350 ms -> ~0.31, offline -> -1)."""

    ewma_lambda: float = 0.3
    window: int = 10
    ideal_low_ms: float = 20.0
    ideal_high_ms: float = 50.0
    decay_tau_ms: float = 300.0
    outage_threshold_ms: float = 800.0
    offline_threshold_ms: float = 1000.0
    weights: tuple[float, float, float, float] = (0.5, 0.2, 0.8, 0.3)
    cv_ref: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.ewma_lambda <= 1.0):
            raise ConfigError(f"ewma_lambda {self.ewma_lambda} out of range (0, 1]")
        if self.window < 2:
            raise ConfigError(f"window {self.window} must be >= 2")
        if not (self.ideal_low_ms < self.ideal_high_ms):
            raise ConfigError("ideal_low must be < ideal_high")
        if not (self.outage_threshold_ms < self.offline_threshold_ms):
            raise ConfigError("outage_threshold must be < offline_threshold")
        if self.decay_tau_ms <= 0:
            raise ConfigError("decay_tau must be > 0")
        if self.cv_ref <= 0:
            raise ConfigError("cv_ref must be > 0")
        if len(self.weights) != 4 or any(not (0.0 <= w <= 1.0) for w in self.weights):
            raise ConfigError("weights must be four values in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "ScoringParams":
        """Build from the ``network_scoring`` config section; all keys optional."""
        known = {
            "ewma_lambda",
            "window",
            "ideal_low_ms",
            "ideal_high_ms",
            "decay_tau_ms",
            "outage_threshold_ms",
            "offline_threshold_ms",
            "weights",
            "cv_ref",
        }
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown key {key!r}", "network_scoring")
        kwargs = dict(data)
        if "weights" in kwargs:
            kwargs["weights"] = tuple(kwargs["weights"])
        return cls(**kwargs)


@dataclass(frozen=True)
class NetworkScoreBreakdown:
    predicted_latency_ms: float
    base_score: float
    p_high: float
    p_trend: float
    p_outage: float
    p_instability: float
    final: float
    offline: bool


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def ewma_predict(history: Sequence[float], lam: float) -> float:
    """Recursive EWMA over the full history; returns the last prediction."""
    if not history:
        raise ValueError("EWMA requires a non-empty history")
    predicted = float(history[0])
    for value in history[1:]:
        predicted = lam * value + (1.0 - lam) * predicted
    return predicted


def base_score(predicted_ms: float, params: ScoringParams) -> float:
    """1.0 inside/below the ideal band, exponential decay beyond it."""
    if predicted_ms <= params.ideal_high_ms:
        return 1.0
    return math.exp(-(predicted_ms - params.ideal_high_ms) / params.decay_tau_ms)


def penalty_high(predicted_ms: float, params: ScoringParams) -> float:
    span = params.offline_threshold_ms - params.ideal_high_ms
    return _clamp01((predicted_ms - params.ideal_high_ms) / span)


def penalty_trend(window_samples: Sequence[float], params: ScoringParams) -> float:
    """Projected rise over the window relative to its mean; falls clamp to 0."""
    n = len(window_samples)
    if n < 2:
        return 0.0
    mean_x = (n - 1) / 2.0
    mean_y = sum(window_samples) / n
    sxx = sum((i - mean_x) ** 2 for i in range(n))
    sxy = sum((i - mean_x) * (y - mean_y) for i, y in enumerate(window_samples))
    slope = sxy / sxx
    projected_rise = slope * params.window
    return _clamp01(projected_rise / max(mean_y, 1.0))


def penalty_outage(window_samples: Sequence[float], params: ScoringParams) -> float:
    if not window_samples:
        return 0.0
    above = sum(1 for v in window_samples if v > params.outage_threshold_ms)
    return above / len(window_samples)


def penalty_instability(window_samples: Sequence[float], params: ScoringParams) -> float:
    if not window_samples:
        return 0.0
    n = len(window_samples)
    mean = sum(window_samples) / n
    variance = sum((v - mean) ** 2 for v in window_samples) / n
    cv = math.sqrt(variance) / max(mean, 1.0)
    return _clamp01(cv / params.cv_ref)


def compose_final(
    base: float,
    p_high: float,
    p_trend: float,
    p_outage: float,
    p_instability: float,
    weights: tuple[float, float, float, float],
) -> float:
    w1, w2, w3, w4 = weights
    return (
        base
        * (1.0 - w1 * p_high)
        * (1.0 - w2 * p_trend)
        * (1.0 - w3 * p_outage)
        * (1.0 - w4 * p_instability)
    )


def score_latency_history(
    history: Sequence[float], params: ScoringParams
) -> NetworkScoreBreakdown:
    """Score a server from its latency history up to the current tick.

    The window penalties use the last ``window`` samples (fewer during
    cold start); the EWMA prediction uses the full history. Penalties are
    reported even when the server is offline, for diagnostics.
    """
    if not history:
        raise ValueError("cannot score an empty latency history")
    window_samples = list(history[-params.window :])
    predicted = ewma_predict(history, params.ewma_lambda)
    base = base_score(predicted, params)
    p_high = penalty_high(predicted, params)
    p_trend = penalty_trend(window_samples, params)
    p_outage = penalty_outage(window_samples, params)
    p_instability = penalty_instability(window_samples, params)
    offline = history[-1] >= params.offline_threshold_ms
    if offline:
        final = -1.0
    else:
        final = compose_final(base, p_high, p_trend, p_outage, p_instability, params.weights)
    return NetworkScoreBreakdown(
        predicted_latency_ms=predicted,
        base_score=base,
        p_high=p_high,
        p_trend=p_trend,
        p_outage=p_outage,
        p_instability=p_instability,
        final=final,
        offline=offline,
    )
