"""Seeded graph families used by the CLI, tests and benchmarks."""

from __future__ import annotations

import math

import numpy as np

from .graph import Graph, from_edge_list

FAMILIES = ("gnp", "path", "grid", "barbell", "path-with-chords", "power-law")


def gnp(n: int, p: float, seed: int) -> Graph:
    """G(n, p): one uniform draw per pair (u < v) in row-major order."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    return from_edge_list(np.stack([iu[keep], ju[keep]], 1), n)


def path(n: int) -> Graph:
    v = np.arange(n - 1, dtype=np.int64)
    return from_edge_list(np.stack([v, v + 1], 1), n)


def grid(rows: int, cols: int) -> Graph:
    idx = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], 1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], 1)
    return from_edge_list(np.concatenate([horiz, vert]), rows * cols)


def grid_n(n: int) -> Graph:
    """Grid on exactly n vertices: rows = largest divisor of n not above sqrt(n)."""
    rows = max(d for d in range(1, math.isqrt(n) + 1) if n % d == 0)
    return grid(rows, n // rows)


def barbell(n: int) -> Graph:
    """Two cliques of size max(3, n // 8) joined by a path through the rest."""
    c = max(3, n // 8)
    if 2 * c > n:
        raise ValueError("n too small for a barbell")
    edges = []
    for base in (0, n - c):
        iu, ju = np.triu_indices(c, k=1)
        edges.append(np.stack([iu + base, ju + base], 1))
    chain = np.arange(c - 1, n - c + 1, dtype=np.int64)
    edges.append(np.stack([chain[:-1], chain[1:]], 1))
    return from_edge_list(np.concatenate(edges), n)


def path_with_chords(n: int, seed: int, hubs: int | None = None, window: int | None = None, fanout: int | None = None) -> Graph:
    """A long path 0..n-1 plus hub vertices, each joined to random vertices in
    a local window of the path. Hubs get high degree while the path keeps a
    large diameter."""
    rng = np.random.default_rng(seed)
    if hubs is None:
        hubs = max(1, int(math.isqrt(n) // 4))
    if window is None:
        window = max(8, n // (2 * hubs))
    if fanout is None:
        fanout = max(2, int(math.isqrt(n)))
    v = np.arange(n - 1, dtype=np.int64)
    edges = [np.stack([v, v + 1], 1)]
    centers = rng.choice(n, size=min(hubs, n), replace=False)
    for c in centers.tolist():
        lo, hi = max(0, c - window // 2), min(n, c + window // 2 + 1)
        k = min(fanout, hi - lo)
        tgt = rng.choice(np.arange(lo, hi), size=k, replace=False)
        edges.append(np.stack([np.full(k, c), tgt], 1))
    return from_edge_list(np.concatenate(edges), n)


def power_law(n: int, exponent: float, seed: int, avg_degree: float = 6.0) -> Graph:
    """Chung–Lu graph with expected degrees following a power law."""
    rng = np.random.default_rng(seed)
    i = np.arange(1, n + 1, dtype=float)
    w = i ** (-1.0 / (exponent - 1.0))
    w *= avg_degree * n / w.sum()
    total = w.sum()
    iu, ju = np.triu_indices(n, k=1)
    prob = np.minimum(1.0, w[iu] * w[ju] / total)
    keep = rng.random(iu.shape[0]) < prob
    return from_edge_list(np.stack([iu[keep], ju[keep]], 1), n)


def generate(family: str, n: int, seed: int = 0, p: float | None = None, exponent: float = 2.5, chords: int | None = None) -> Graph:
    if family == "gnp":
        return gnp(n, 8.0 / n if p is None else p, seed)
    if family == "path":
        return path(n)
    if family == "grid":
        return grid_n(n)
    if family == "barbell":
        return barbell(n)
    if family == "path-with-chords":
        return path_with_chords(n, seed, hubs=chords)
    if family == "power-law":
        return power_law(n, exponent, seed)
    raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
