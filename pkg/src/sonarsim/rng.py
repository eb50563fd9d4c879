"""Seedable random streams with output that is stable across platforms.

Streams wrap the standard library Mersenne Twister. Python guarantees that
``random.Random(seed).random()`` produces the same sequence on every
platform and every future version, so all draws here are derived from
``random()`` alone:

* uniforms by affine rescaling of one draw,
* Gaussians by the Box-Muller transform (two draws per value, cosine
  branch only; the first draw is mapped into (0, 1] so the log is finite),
* bounded ints by flooring a scaled draw,
* Bernoulli by thresholding one draw.

Substream seeds are derived by hashing a root seed with string tags
(SHA-256, first 8 bytes, big-endian). A per-server stream therefore never
shifts when other servers are added to or removed from a scenario.
"""

from __future__ import annotations

import hashlib
import math
import random

TWO_PI = 2.0 * math.pi


def derive_seed(root: int, *tags: str) -> int:
    """Stable substream seed from a root seed and string tags."""
    material = "|".join([str(root), *tags]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


class RandomStream:
    """One independent, reproducible stream of random draws."""

    def __init__(self, seed: int):
        self.seed = seed
        self._core = random.Random(seed)

    def random(self) -> float:
        """Uniform draw in [0, 1)."""
        return self._core.random()

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self._core.random()

    def normal(self, mean: float = 0.0, std: float = 0.0) -> float:
        """Gaussian draw via Box-Muller; always consumes exactly two uniforms."""
        u1 = 1.0 - self._core.random()
        u2 = self._core.random()
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)
        return mean + std * z

    def chance(self, probability: float) -> bool:
        """Bernoulli draw; always consumes one uniform, even for p in {0, 1}."""
        return self._core.random() < probability

    def int_below(self, n: int) -> int:
        """Uniform int in [0, n)."""
        if n <= 0:
            raise ValueError(f"int_below requires n >= 1, got {n}")
        return min(int(self._core.random() * n), n - 1)
