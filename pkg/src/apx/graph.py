"""Undirected unweighted graphs in CSR form, filtered views and SSSP engines."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _kernels as K

INF = K.INF


class GraphInputError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable CSR graph. Neighbour lists are sorted ascending."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    degree: np.ndarray
    dropped_duplicates: int = 0
    dropped_self_loops: int = 0
    _views: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return int(self.indices.shape[0] // 2)

    @property
    def max_degree(self) -> int:
        return int(self.degree.max()) if self.n else 0

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        j = np.searchsorted(nb, v)
        return bool(j < nb.shape[0] and nb[j] == v)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v, sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degree)
        mask = src < self.indices
        return np.stack([src[mask], self.indices[mask]], axis=1)


def _csr_from_pairs(n: int, u: np.ndarray, v: np.ndarray):
    """Build symmetric CSR from canonical (u < v) unique pairs."""
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]
    degree = np.bincount(src, minlength=n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degree, out=indptr[1:])
    return indptr, dst.astype(np.int64), degree


def from_edge_list(edges: Iterable[tuple[int, int]] | np.ndarray, n: int) -> Graph:
    """Build a canonical graph, dropping duplicates and self-loops.

    The counts of dropped items are kept on the returned graph.
    """
    if n < 0:
        raise GraphInputError("n must be non-negative")
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GraphInputError("edges must be pairs")
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
        raise GraphInputError(f"vertex index out of range in edge {tuple(int(x) for x in bad)} for n={n}")
    loops = arr[:, 0] == arr[:, 1]
    n_loops = int(loops.sum())
    arr = arr[~loops]
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    key = np.unique(lo * max(n, 1) + hi)
    n_dups = int(arr.shape[0] - key.shape[0])
    u = key // max(n, 1)
    v = key % max(n, 1)
    indptr, indices, degree = _csr_from_pairs(n, u, v)
    return Graph(n, indptr, indices, degree, n_dups, n_loops)


def edge_degree(g: Graph, u: int, v: int) -> int:
    if not g.has_edge(u, v):
        raise ValueError(f"({u}, {v}) is not an edge")
    return int(min(g.degree[u], g.degree[v]))


def edge_degrees(g: Graph) -> np.ndarray:
    """Edge degree of every CSR slot (aligned with ``g.indices``)."""
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degree)
    return np.minimum(g.degree[src], g.degree[g.indices])


@dataclass(frozen=True, eq=False)
class FilteredView:
    """Edges of ``base`` with edge degree <= tau, in CSR form over the same
    vertex ids."""

    base: Graph
    tau: int
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return int(self.indices.shape[0] // 2)


def degree_filtered_view(g: Graph, tau: int) -> FilteredView:
    """Cached view of edges with edge_degree <= tau."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    tau = min(int(tau), g.max_degree)
    hit = g._views.get(tau)
    if hit is not None:
        return hit
    if tau >= g.max_degree:
        view = FilteredView(g, tau, g.indptr, g.indices)
    else:
        keep = edge_degrees(g) <= tau
        src = np.repeat(np.arange(g.n, dtype=np.int64), g.degree)
        counts = np.bincount(src[keep], minlength=g.n)
        indptr = np.zeros(g.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        view = FilteredView(g, tau, indptr, g.indices[keep].copy())
    g._views[tau] = view
    return view


def _csr(h) -> tuple[np.ndarray, np.ndarray]:
    return h.indptr, h.indices


def bfs_sssp(h: Graph | FilteredView, source: int, cap: int | None = None) -> np.ndarray:
    """Hop distances from ``source`` (uint32, INF if unreached or beyond cap)."""
    if not 0 <= source < h.n:
        raise ValueError("source out of range")
    ptr, idx = _csr(h)
    dist, _ = K.bfs_row(ptr, idx, source, INF if cap is None else int(cap))
    return dist


@dataclass
class OverlayGraph:
    """Filtered base edges (unit weight) plus weighted star and pivot edges.

    ``star_center``/``star_weights`` describe edges [w, x] of weight
    ``star_weights[x]`` (INF = absent). ``pivot_edges`` is an (e, 3) array
    of (x, p, weight) rows, treated as undirected.
    """

    base: Graph | FilteredView
    star_center: int | None = None
    star_weights: np.ndarray | None = None
    pivot_edges: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.base.n

    def weighted_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rows = [np.zeros((0, 3), dtype=np.int64)]
        if self.pivot_edges is not None and len(self.pivot_edges):
            pe = np.asarray(self.pivot_edges, dtype=np.int64)
            rows += [pe, pe[:, [1, 0, 2]]]
        if self.star_center is not None and self.star_weights is not None:
            w = self.star_center
            sw = np.asarray(self.star_weights, dtype=np.int64)
            xs = np.nonzero(sw != INF)[0]
            xs = xs[xs != w]
            ws = np.full(xs.shape[0], w, dtype=np.int64)
            rows += [np.stack([ws, xs, sw[xs]], 1), np.stack([xs, ws, sw[xs]], 1)]
        all_rows = np.concatenate(rows)
        if (all_rows[:, 2] < 0).any():
            raise ValueError("negative overlay weight")
        return weighted_csr(self.n, all_rows)


def weighted_csr(n: int, rows: np.ndarray):
    """CSR from directed (u, v, w) rows."""
    order = np.argsort(rows[:, 0], kind="stable")
    rows = rows[order]
    counts = np.bincount(rows[:, 0], minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, rows[:, 1].copy(), rows[:, 2].copy()


def dijkstra_sssp(h: OverlayGraph, source: int) -> np.ndarray:
    """Exact shortest distances from ``source`` in the overlay (uint32)."""
    if not 0 <= source < h.n:
        raise ValueError("source out of range")
    ptr, idx = _csr(h.base)
    init = np.full(h.n, INF, dtype=np.uint32)
    init[source] = 0
    star = h
    if h.star_center == source and h.star_weights is not None:
        init = np.asarray(h.star_weights, dtype=np.uint32).copy()
        init[source] = 0
        star = OverlayGraph(h.base, None, None, h.pivot_edges)
    wptr, widx, wval = star.weighted_csr()
    dist = np.empty(h.n, dtype=np.int64)
    K.dial_sssp(init, ptr, idx, wptr, widx, wval, dist)
    return dist.astype(np.uint32)


def read_edge_list(path: str | Path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise GraphInputError("first line must be 'n m'")
        n, m = int(header[0]), int(header[1])
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else np.zeros((0, 2), np.int64)
    if data.shape[0] != m:
        raise GraphInputError(f"header says {m} edges, found {data.shape[0]}")
    return from_edge_list(data.reshape(-1, 2), n)


def write_edge_list(g: Graph, path: str | Path) -> None:
    e = g.edges()
    with open(path, "w") as fh:
        fh.write(f"{g.n} {e.shape[0]}\n")
        for u, v in e.tolist():
            fh.write(f"{u} {v}\n")
