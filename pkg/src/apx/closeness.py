"""UpdateFrom, Triangulate and the three-part closeness pass.

Each batch reads a snapshot of the matrix taken when the batch starts and
merges its results with a min. The outcome therefore does not depend on the
order in which sources are processed or on the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .estimator import EstimateMatrix
from .graph import Graph, OverlayGraph, degree_filtered_view, dijkstra_sssp, weighted_csr
from .pivots import C_DEG, PivotTable, tau
from .sampling import SampleHierarchy

_CHUNK_BYTES = 32 << 20


@dataclass
class OverlayParts:
    """Level-i overlay pieces shared by every source: the filtered base and
    the weighted pivot edges in CSR form."""

    ptr: np.ndarray
    idx: np.ndarray
    wptr: np.ndarray
    widx: np.ndarray
    wval: np.ndarray
    tau: int


def overlay_parts(g: Graph, pivots: PivotTable, level: int, c_deg: float = C_DEG) -> OverlayParts:
    t = tau(level, g.n, c_deg)
    view = degree_filtered_view(g, t)
    rows = pivots.edges()
    rows = np.concatenate([rows, rows[:, [1, 0, 2]]]) if rows.shape[0] else np.zeros((0, 3), np.int64)
    wptr, widx, wval = weighted_csr(g.n, rows)
    return OverlayParts(view.indptr, view.indices, wptr, widx, wval, t)


def overlay_for(g: Graph, est: EstimateMatrix, pivots: PivotTable, w: int, level: int, c_deg: float = C_DEG) -> OverlayGraph:
    """The explicit overlay H_w (for inspection and tests)."""
    view = degree_filtered_view(g, tau(level, g.n, c_deg))
    return OverlayGraph(view, w, est.a[w].copy(), pivots.edges())


def update_from(g: Graph, est: EstimateMatrix, pivots: PivotTable, w: int, level: int, c_deg: float = C_DEG) -> np.ndarray:
    """Shortest distances from w in H_w, relaxed into est(w, .). Returns the
    overlay distance row."""
    row = dijkstra_sssp(overlay_for(g, est, pivots, w, level, c_deg), w)
    imp = K.merge_rows(est.a, np.array([w], dtype=np.int64), row[None, :])
    est.counters.add(attempts=g.n, improvements=imp)
    return row


def run_rows(est: EstimateMatrix, items: np.ndarray, fill, threads: int = 1) -> tuple[int, int]:
    """Compute one candidate row per item with ``fill(chunk, out) -> count``
    and min-merge rows into est in item order.

    ``fill`` must read only from a snapshot, so chunks can run on worker
    threads while the merge stays sequential and deterministic.
    """
    n = est.n
    items = np.asarray(items, dtype=np.int64)
    if items.shape[0] == 0:
        return 0, 0
    chunk = max(1, min(items.shape[0], _CHUNK_BYTES // (4 * max(n, 1))))
    if threads > 1:
        chunk = max(1, min(chunk, -(-items.shape[0] // threads)))
    batches = [items[a : a + chunk] for a in range(0, items.shape[0], chunk)]

    def work(b):
        out = np.empty((b.shape[0], n), dtype=np.uint32)
        return out, fill(b, out)

    count = imp = 0
    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(threads) as pool:
            for b, (rows, c) in zip(batches, pool.map(work, batches)):
                count += c
                imp += K.merge_rows(est.a, b, rows)
    else:
        for b in batches:
            rows, c = work(b)
            count += c
            imp += K.merge_rows(est.a, b, rows)
    return int(count), int(imp)


def update_from_batch(
    est: EstimateMatrix, parts: OverlayParts, ws: np.ndarray, threads: int = 1
) -> tuple[int, int, int]:
    """UpdateFrom for every w in ``ws`` against one snapshot."""
    snap = est.snapshot()
    scans, imp = run_rows(
        est,
        ws,
        lambda b, out: K.overlay_rows(snap, b, parts.ptr, parts.idx, parts.wptr, parts.widx, parts.wval, out),
        threads,
    )
    att = len(ws) * est.n
    est.counters.add(attempts=att, improvements=imp, edge_scans=scans)
    return att, imp, scans


def triangulate(est: EstimateMatrix, pivots: PivotTable, s: int, level: int) -> int:
    """est(s, t) <- |s pivot(s)| + est(pivot(s), t) for all t."""
    return triangulate_batch(est, pivots, level, np.array([s], dtype=np.int64))[1]


def triangulate_batch(
    est: EstimateMatrix, pivots: PivotTable, level: int, sources: np.ndarray | None = None, threads: int = 1
) -> tuple[int, int]:
    if sources is None:
        sources = np.arange(est.n, dtype=np.int64)
    snap = est.snapshot()
    piv, pd = pivots.pivot[level], pivots.pdist[level]
    att, imp = run_rows(est, sources, lambda b, out: K.triangulate_rows(snap, b, piv, pd, out), threads)
    est.counters.add(attempts=att, improvements=imp)
    return att, imp


def ensure_closeness(
    g: Graph,
    est: EstimateMatrix,
    hierarchy: SampleHierarchy,
    pivots: PivotTable,
    c_deg: float = C_DEG,
    threads: int = 1,
    on_level=None,
) -> dict:
    """Parts 1, 2 (UpdateFrom over A_i, twice) and 3 (Triangulate over V)
    for every level."""
    stats = {}
    for i in range(hierarchy.L):
        parts = overlay_parts(g, pivots, i, c_deg)
        ws = hierarchy.levels[i]
        p1 = update_from_batch(est, parts, ws, threads)
        p2 = update_from_batch(est, parts, ws, threads)
        p3 = triangulate_batch(est, pivots, i, threads=threads)
        stats[i] = {"part1": p1, "part2": p2, "part3": p3, "tau": parts.tau}
        if on_level is not None:
            on_level(i)
    return stats
