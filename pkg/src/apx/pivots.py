"""Pivots, balls and the inverse pivot index for every level."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .graph import INF, Graph, degree_filtered_view
from .sampling import SampleHierarchy

C_DEG = 4
C_BALL = 2


def log2_ceil(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def tau(i: int, n: int, c_deg: float = C_DEG) -> int:
    """Edge-degree threshold for level i: c_deg * 2^(2^i) * ceil(log2 n)."""
    return int(c_deg * 2 ** (2**i) * log2_ceil(n))


def ball_bound(i: int, n: int, c_ball: float = C_BALL) -> float:
    return c_ball * 2 ** (2**i) * math.log2(n)


@dataclass
class PivotTable:
    """pivot[i, s] (−1 when A_i is empty) and pdist[i, s] (INF then)."""

    pivot: np.ndarray
    pdist: np.ndarray

    @property
    def L(self) -> int:
        return self.pivot.shape[0]

    def edges(self) -> np.ndarray:
        """Distinct (x, pivot_j(x), d) rows over all levels, self pairs omitted."""
        L, n = self.pivot.shape
        xs = np.tile(np.arange(n, dtype=np.int64), L)
        ps = self.pivot.reshape(-1)
        ds = self.pdist.reshape(-1).astype(np.int64)
        keep = (ps >= 0) & (ps != xs)
        rows = np.stack([xs[keep], ps[keep], ds[keep]], 1)
        if rows.shape[0]:
            rows = np.unique(rows, axis=0)
        return rows


@dataclass
class BallTable:
    """Per level, CSR (ptr, vtx, dist) of ball_i(s) for all s."""

    ptr: list[np.ndarray]
    vtx: list[np.ndarray]
    dist: list[np.ndarray]

    def ball(self, i: int, s: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.ptr[i][s], self.ptr[i][s + 1]
        return self.vtx[i][a:b], self.dist[i][a:b]

    def sizes(self, i: int) -> np.ndarray:
        return np.diff(self.ptr[i])


@dataclass
class PivotInverse:
    """Per level, CSR over x of {w : pivot_i(w) = x} (empty unless x ∈ A_i)."""

    ptr: list[np.ndarray]
    members: list[np.ndarray]

    def of(self, i: int, x: int) -> np.ndarray:
        return self.members[i][self.ptr[i][x] : self.ptr[i][x + 1]]


def compute_pivot_level(
    g: Graph, h: SampleHierarchy, i: int, mode: str = "fast", c_deg: float = C_DEG
) -> tuple[np.ndarray, np.ndarray, int]:
    """Return (pivot, pdist, edge_scans) for level i."""
    if not 0 <= i < h.L:
        raise ValueError(f"level {i} out of range [0, {h.L})")
    n = g.n
    if i == 0:
        return np.arange(n, dtype=np.int64), np.zeros(n, dtype=np.uint32), 0
    sources = h.levels[i]
    if sources.shape[0] == 0:
        return np.full(n, -1, dtype=np.int64), np.full(n, INF, dtype=np.uint32), 0
    if mode == "fast":
        view = degree_filtered_view(g, tau(i, n, c_deg))
        d, p, scans = K.fast_pivots(g.indptr, g.indices, view.indptr, view.indices, sources)
    elif mode == "reference":
        d, p, scans = K.multi_source_bfs(g.indptr, g.indices, sources)
    else:
        raise ValueError(f"unknown pivot mode {mode!r}")
    d = np.where(p < 0, INF, d).astype(np.uint32)
    return p, d, int(scans)


def compute_pivots(
    g: Graph, h: SampleHierarchy, mode: str = "fast", c_deg: float = C_DEG
) -> tuple[PivotTable, int]:
    piv = np.empty((h.L, g.n), dtype=np.int64)
    pd = np.empty((h.L, g.n), dtype=np.uint32)
    scans = 0
    for i in range(h.L):
        piv[i], pd[i], sc = compute_pivot_level(g, h, i, mode, c_deg)
        scans += sc
    return PivotTable(piv, pd), scans


def compute_balls(g: Graph, pivots: PivotTable) -> tuple[BallTable, int]:
    ptrs, vtxs, dists = [], [], []
    scans = 0
    for i in range(pivots.L):
        radius = pivots.pdist[i].astype(np.int64)
        bp, bv, bd, sc = K.capped_balls(g.indptr, g.indices, radius)
        ptrs.append(bp)
        vtxs.append(bv)
        dists.append(bd.astype(np.uint32))
        scans += sc
    return BallTable(ptrs, vtxs, dists), int(scans)


def invert_pivots(pivots: PivotTable) -> PivotInverse:
    L, n = pivots.pivot.shape
    ptrs, mems = [], []
    for i in range(L):
        p = pivots.pivot[i]
        ws = np.nonzero(p >= 0)[0]
        order = np.argsort(p[ws], kind="stable")
        ws = ws[order]
        counts = np.bincount(p[ws], minlength=n)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        ptrs.append(ptr)
        mems.append(ws.astype(np.int64))
    return PivotInverse(ptrs, mems)
