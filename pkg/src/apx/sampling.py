"""Nested level sets A_0 ⊇ A_1 ⊇ ... and base-case samples B_ℓ."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

_TAG_LEVEL = 0xA1
_TAG_BASE = 0xB1


def num_levels(n: int) -> int:
    """max(1, floor(log2 log2 n))."""
    if n < 4:
        return 1
    return max(1, int(math.floor(math.log2(math.log2(n)))))


def level_rate(i: int) -> float:
    """Conditional keep-probability when drawing A_i from A_{i-1}."""
    if i <= 0:
        return 1.0
    if i == 1:
        return 0.25
    return 2.0 ** -(2 ** (i - 1))


def marginal_rate(i: int) -> float:
    return 2.0 ** -(2**i) if i > 0 else 1.0


def _uniforms(seed: int, tag: int, key: int, n: int) -> np.ndarray:
    # Philox is counter-based; one stream per (seed, tag, key) gives each
    # vertex a fixed draw regardless of which other levels are built.
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), tag, key])
    return np.random.Generator(np.random.Philox(ss)).random(n)


@dataclass(frozen=True)
class SampleHierarchy:
    n: int
    L: int
    levels: tuple[np.ndarray, ...]
    level_of: np.ndarray
    seed: int

    def members(self, i: int) -> np.ndarray:
        return self.levels[i]

    def contains(self, i: int, v: int) -> bool:
        return bool(self.level_of[v] >= i)

    def to_json(self) -> str:
        return json.dumps(
            {"L": self.L, "levels": [lv.tolist() for lv in self.levels], "seed": self.seed}
        )

    @classmethod
    def from_json(cls, text: str, n: int) -> "SampleHierarchy":
        data = json.loads(text)
        levels = tuple(np.asarray(lv, dtype=np.int64) for lv in data["levels"])
        return cls(n, data["L"], levels, _level_of(n, levels), data["seed"])


def _level_of(n: int, levels) -> np.ndarray:
    out = np.full(n, -1, dtype=np.int64)
    for i, lv in enumerate(levels):
        out[lv] = i
    return out


def build_hierarchy(n: int, seed: int, L: int | None = None) -> SampleHierarchy:
    if n < 2:
        raise ValueError("n must be at least 2")
    if L is None:
        L = num_levels(n)
    alive = np.ones(n, dtype=bool)
    levels = [np.arange(n, dtype=np.int64)]
    for i in range(1, L):
        alive &= _uniforms(seed, _TAG_LEVEL, i, n) < level_rate(i)
        levels.append(np.nonzero(alive)[0].astype(np.int64))
    return SampleHierarchy(n, L, tuple(levels), _level_of(n, levels), int(seed))


def base_levels(n: int) -> range:
    lg = math.log2(n)
    return range(math.ceil(lg / 2), math.floor(lg) + 1)


@dataclass(frozen=True)
class BaseSamples:
    samples: dict[int, np.ndarray]
    oversample: float

    def rate(self, ell: int) -> float:
        return min(1.0, self.oversample / 2.0**ell)


def build_base_samples(n: int, seed: int, oversample: float = 1.0) -> BaseSamples:
    if n < 4:
        raise ValueError("n must be at least 4")
    out = {}
    for ell in base_levels(n):
        rate = min(1.0, oversample / 2.0**ell)
        out[ell] = np.nonzero(_uniforms(seed, _TAG_BASE, ell, n) < rate)[0].astype(np.int64)
    return BaseSamples(out, float(oversample))
