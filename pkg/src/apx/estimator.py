"""The shared estimate matrix, its initializers and the relaxation primitive."""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from . import _kernels as K
from .graph import INF, Graph, degree_filtered_view
from .pivots import BallTable, PivotTable, log2_ceil

MAGIC = b"APXEST01"
_INF = INF


@dataclass
class Counters:
    attempts: int = 0
    improvements: int = 0
    edge_scans: int = 0

    def add(self, attempts: int = 0, improvements: int = 0, edge_scans: int = 0) -> None:
        self.attempts += int(attempts)
        self.improvements += int(improvements)
        self.edge_scans += int(edge_scans)

    def as_dict(self) -> dict:
        return {"attempts": self.attempts, "improvements": self.improvements, "edge_scans": self.edge_scans}


@dataclass
class EstimateMatrix:
    """Dense symmetric uint32 matrix of upper bounds; INF = unknown."""

    a: np.ndarray
    counters: Counters = field(default_factory=Counters)

    @classmethod
    def empty(cls, n: int) -> "EstimateMatrix":
        a = np.full((n, n), INF, dtype=np.uint32)
        np.fill_diagonal(a, 0)
        return cls(a)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def __getitem__(self, key):
        return self.a[key]

    def relax(self, s: int, t: int, val: int) -> bool:
        """est(s,t) = est(t,s) = min(old, val); the diagonal stays 0."""
        self.counters.add(attempts=1)
        if s == t or val >= self.a[s, t]:
            return False
        self.a[s, t] = val
        self.a[t, s] = val
        self.counters.add(improvements=1)
        return True

    def snapshot(self) -> np.ndarray:
        return self.a.copy()

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.a, dtype="<u4").tobytes()).hexdigest()

    def dump(self, path: str | Path, meta: dict | None = None) -> None:
        path = Path(path)
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", self.n))
            fh.write(np.ascontiguousarray(self.a, dtype="<u4").tobytes())
        sidecar = {"n": self.n, "dtype": "uint32-le", "inf": INF, "sha256": self.digest()}
        sidecar.update(meta or {})
        path.with_name(path.name + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "EstimateMatrix":
        with open(path, "rb") as fh:
            if fh.read(8) != MAGIC:
                raise ValueError(f"{path}: not an estimate matrix dump")
            (n,) = struct.unpack("<Q", fh.read(8))
            raw = fh.read()
        if len(raw) != 4 * n * n:
            raise ValueError(f"{path}: truncated matrix ({len(raw)} bytes for n={n})")
        return cls(np.frombuffer(raw, dtype="<u4").reshape(n, n).astype(np.uint32))


def exact_rows(g, sources: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """BFS rows from ``sources`` (default: every vertex) in ``g`` or a view."""
    n = g.n
    if sources is None:
        sources = np.arange(n, dtype=np.int64)
    out = np.empty((sources.shape[0], n), dtype=np.uint32)
    scans = K.apsp_bfs(g.indptr, g.indices, sources, out)
    return out, int(scans)


@njit(cache=True, nogil=True)
def _min_through(est, rows):
    """est(u, v) <- min(est(u, v), rows[k, u] + rows[k, v]) for every k."""
    n = est.shape[0]
    attempts = 0
    improved = 0
    for k in range(rows.shape[0]):
        r = rows[k]
        for u in range(n):
            du = np.int64(r[u])
            if du == _INF:
                continue
            attempts += n
            for v in range(u + 1, n):
                dv = np.int64(r[v])
                if dv == _INF:
                    continue
                val = du + dv
                if val < est[u, v]:
                    est[u, v] = val
                    est[v, u] = val
                    improved += 1
    return attempts, improved


@njit(cache=True, nogil=True)
def _min_into(est, rows, sources):
    improved = 0
    n = est.shape[0]
    for k in range(sources.shape[0]):
        s = sources[k]
        r = rows[k]
        for v in range(n):
            if v != s and r[v] < est[s, v]:
                est[s, v] = r[v]
                est[v, s] = r[v]
                improved += 1
    return improved


@njit(cache=True, nogil=True)
def _greedy_dominators(ptr, idx, heavy_mask):
    """Greedy set cover: repeatedly take the vertex whose closed
    neighbourhood holds the most undominated heavy vertices."""
    n = ptr.shape[0] - 1
    cover = np.zeros(n, dtype=np.int64)
    for h in range(n):
        if heavy_mask[h]:
            cover[h] += 1
            for j in range(ptr[h], ptr[h + 1]):
                cover[idx[j]] += 1
    done = np.zeros(n, dtype=np.bool_)
    left = heavy_mask.sum()
    out = np.empty(n, dtype=np.int64)
    k = 0
    while left > 0:
        best = 0
        for x in range(1, n):
            if cover[x] > cover[best]:
                best = x
        out[k] = best
        k += 1
        # every heavy vertex in N[best] becomes dominated
        for j in range(ptr[best], ptr[best + 1] + 1):
            h = best if j == ptr[best + 1] else idx[j]
            if not heavy_mask[h] or done[h]:
                continue
            done[h] = True
            left -= 1
            cover[h] -= 1
            for q in range(ptr[h], ptr[h + 1]):
                cover[idx[q]] -= 1
    return np.sort(out[:k])


def _hitting_set(g: Graph, threshold: int) -> np.ndarray:
    """Vertices dominating every vertex of degree >= threshold (closed
    neighbourhoods). Greedy cover keeps the set at O(n log n / threshold)."""
    heavy = g.degree >= threshold
    if not heavy.any():
        return np.zeros(0, dtype=np.int64)
    return _greedy_dominators(g.indptr, g.indices, heavy)


def init_21_approx(g: Graph, variant: str = "additive2", seed: int = 0) -> tuple[EstimateMatrix, dict]:
    """Matrix with d <= est <= 2d + 1 everywhere.

    ``exact``: BFS from every vertex. ``additive2``: est <= d + 2 via a
    hitting set of heavy vertices plus BFS in the light-edge subgraph.
    ``inflated``: 2d + 1 for every d >= 1; used to stress later phases.
    """
    n = g.n
    est = EstimateMatrix.empty(n)
    info: dict = {"variant": variant}
    if variant in ("exact", "inflated"):
        rows, scans = exact_rows(g)
        if variant == "inflated":
            big = rows.astype(np.int64)
            fin = (big != INF) & (big > 0)
            big[fin] = 2 * big[fin] + 1
            rows = big.astype(np.uint32)
        est.a[:] = rows
        est.counters.add(attempts=n * n, improvements=int((rows != INF).sum()) - n, edge_scans=scans)
        return est, info
    if variant != "additive2":
        raise ValueError(f"unknown init variant {variant!r}")
    threshold = max(1, math.isqrt(n - 1) + 1) if n > 1 else 1  # ceil(sqrt(n))
    dom = _hitting_set(g, threshold)
    light = degree_filtered_view(g, threshold - 1)
    lrows, lscans = exact_rows(light)
    est.a[:] = lrows
    drows, dscans = exact_rows(g, dom)
    att, imp = _min_through(est.a, drows)
    imp += _min_into(est.a, drows, dom)
    est.counters.add(attempts=n * n + att, improvements=int((lrows != INF).sum()) - n + imp, edge_scans=lscans + dscans)
    info.update({"threshold": threshold, "hitting_set": int(dom.shape[0]), "light_edges": light.m})
    return est, info


def low_degree_tau(n: int, c_deg: float = 4) -> int:
    return int(c_deg * math.ceil(math.sqrt(n)) * log2_ceil(n))


def low_degree_apsp(
    g: Graph, est: EstimateMatrix, tau: int | None = None, backend: str = "exact", c_deg: float = 4, seed: int = 0
) -> dict:
    """Guarantee est <= 2d for pairs with a shortest path whose edges all have
    edge degree <= tau."""
    if tau is None:
        tau = low_degree_tau(g.n, c_deg)
    info: dict = {"backend": backend, "tau": int(tau)}
    if backend == "none" or tau <= 0 or g.m == 0:
        return info
    h = degree_filtered_view(g, tau)
    info["h_edges"] = h.m
    if backend in ("exact", "exact_on_subgraph"):
        rows, scans = exact_rows(h)
        imp = _min_into(est.a, rows, np.arange(g.n, dtype=np.int64))
        est.counters.add(attempts=g.n * g.n, improvements=imp, edge_scans=scans)
        return info
    if backend == "bk":
        info.update(_ball_intersection_apsp(h, est, seed))
        return info
    raise ValueError(f"unknown low-degree backend {backend!r}")


def _ball_intersection_apsp(h, est: EstimateMatrix, seed: int) -> dict:
    n = h.n
    ptr, idx = h.indptr, h.indices
    rate = 1.0 / max(1, math.ceil(math.sqrt(n)))
    rng = np.random.default_rng([seed, 0xB4])
    S = np.nonzero(rng.random(n) < rate)[0].astype(np.int64)
    att = imp = scans = 0
    if S.shape[0]:
        srows, sc = exact_rows(h, S)
        scans += sc
        imp += _min_into(est.a, srows, S)
        att += S.shape[0] * n
        dS, lab, sc = K.multi_source_bfs(ptr, idx, S)
        scans += sc
        slot = np.full(n, -1, dtype=np.int64)
        slot[S] = np.arange(S.shape[0])
        a2, i2 = _relax_via_nearest(est.a, dS, lab, slot, srows)
        att += a2
        imp += i2
        radius = np.where(lab >= 0, dS, n + 1).astype(np.int64)
    else:
        radius = np.full(n, n + 1, dtype=np.int64)
    bp, bv, bd, sc = K.capped_balls(ptr, idx, radius)
    scans += sc
    owner = np.repeat(np.arange(n, dtype=np.int64), np.diff(bp))
    a3, i3 = _relax_pairs(est.a, owner, bv, bd)
    att += a3
    imp += i3
    # invert balls: C(m) = {(u, d(u, m)) : m in ball(u)}
    order = np.argsort(bv, kind="stable")
    cu = owner[order]
    cd = bd[order]
    cptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(bv, minlength=n), out=cptr[1:])
    a4, i4 = K.relax_via_inverse_balls(est.a, cptr, cu, cd, ptr, idx)
    att += a4
    imp += i4
    est.counters.add(attempts=att, improvements=imp, edge_scans=scans)
    return {"sample": int(S.shape[0]), "ball_entries": int(bv.shape[0])}


@njit(cache=True, nogil=True)
def _relax_via_nearest(est, dS, lab, slot, srows):
    n = est.shape[0]
    att = 0
    imp = 0
    for u in range(n):
        p = lab[u]
        if p < 0:
            continue
        r = dS[u]
        row = srows[slot[p]]
        att += n
        for v in range(n):
            if v == u:
                continue
            b = np.int64(row[v])
            if b == _INF:
                continue
            val = r + b
            if val < est[u, v]:
                est[u, v] = val
                est[v, u] = val
                imp += 1
    return att, imp


@njit(cache=True, nogil=True)
def _relax_pairs(est, us, vs, ds):
    imp = 0
    for k in range(us.shape[0]):
        u = us[k]
        v = vs[k]
        d = ds[k]
        if u != v and d < est[u, v]:
            est[u, v] = d
            est[v, u] = d
            imp += 1
    return us.shape[0], imp


def seed_pivot_distances(est: EstimateMatrix, pivots: PivotTable, balls: BallTable) -> None:
    """Write exact pivot and ball distances into est."""
    n = est.n
    att = imp = 0
    for i in range(pivots.L):
        p = pivots.pivot[i]
        ok = p >= 0
        xs = np.nonzero(ok)[0].astype(np.int64)
        a, b = _relax_pairs(est.a, xs, p[ok], pivots.pdist[i][ok].astype(np.int64))
        att += a
        imp += b
        owner = np.repeat(np.arange(n, dtype=np.int64), np.diff(balls.ptr[i]))
        a, b = _relax_pairs(est.a, owner, balls.vtx[i], balls.dist[i].astype(np.int64))
        att += a
        imp += b
    est.counters.add(attempts=att, improvements=imp)
