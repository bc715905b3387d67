"""Exact oracle, guarantee checks and witness-based lemma checks.

The oracle is scipy's unweighted shortest-path routine; nothing in the
pipeline calls it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .graph import INF, Graph
from .sampling import SampleHierarchy

LEMMAS = ("use21", "near", "es", "base", "mainclaim", "final")
_INF = INF


def exact_apsp(g: Graph) -> np.ndarray:
    """Exact hop distances as an int64 matrix; INF for disconnected pairs."""
    a = csr_matrix((np.ones(g.indices.shape[0], dtype=np.float64), g.indices, g.indptr), shape=(g.n, g.n))
    d = shortest_path(a, method="D", directed=False, unweighted=True)
    out = np.full(d.shape, INF, dtype=np.int64)
    fin = np.isfinite(d)
    out[fin] = d[fin].astype(np.int64)
    return out


@dataclass
class StretchReport:
    soundness_violations: int
    two_approx_violations: int
    additive_violations: int
    init_violations: int | None
    threshold: int
    pairs: int
    max_additive_gap: int
    max_stretch: float
    stretch_histogram: dict
    examples: dict = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return self.soundness_violations == 0 and self.two_approx_violations == 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _examples(mask: np.ndarray, est: np.ndarray, exact: np.ndarray, limit: int = 10) -> list:
    s, t = np.nonzero(np.triu(mask, 1))
    return [
        {"s": int(a), "t": int(b), "d": int(exact[a, b]), "est": int(est[a, b])}
        for a, b in zip(s[:limit].tolist(), t[:limit].tolist())
    ]


def check_guarantees(est: np.ndarray, exact: np.ndarray, threshold: int, init: np.ndarray | None = None) -> StretchReport:
    """Violation counts over unordered pairs s < t.

    (a) est < d, (b) d >= threshold and est > 2d,
    (c) est > max(2d, d + threshold), (d) init > 2d + 1 when ``init`` given.
    """
    est = np.asarray(est)
    if est.shape != exact.shape:
        raise ValueError(f"dimension mismatch: est {est.shape} vs exact {exact.shape}")
    e = est.astype(np.int64)
    d = exact
    upper = np.triu(np.ones(d.shape, dtype=bool), 1)
    fin = (d != INF) & upper
    sound = upper & (e < d)
    two = fin & (d >= threshold) & (e > 2 * d)
    add = fin & (e > np.maximum(2 * d, d + threshold))
    init_v = None
    if init is not None:
        init_v = int((fin & (init.astype(np.int64) > 2 * d + 1)).sum())
    pos = fin & (d > 0)
    gaps = (e - d)[pos]
    ratio = e[pos] / d[pos]
    edges = [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0]
    hist = {}
    for lo, hi in zip(edges, edges[1:] + [math.inf]):
        hist[f"[{lo},{hi})"] = int(((ratio >= lo) & (ratio < hi)).sum())
    return StretchReport(
        soundness_violations=int(sound.sum()),
        two_approx_violations=int(two.sum()),
        additive_violations=int(add.sum()),
        init_violations=init_v,
        threshold=int(threshold),
        pairs=int(fin.sum()),
        max_additive_gap=int(gaps.max()) if gaps.size else 0,
        max_stretch=float(ratio.max()) if ratio.size else 1.0,
        stretch_histogram=hist,
        examples={
            "soundness": _examples(sound | sound.T, e, d),
            "two_approx": _examples(two | two.T, e, d),
            "additive": _examples(add | add.T, e, d),
        },
    )


def canonical_path(g: Graph, exact: np.ndarray, s: int, t: int) -> np.ndarray:
    """Shortest s–t path where each vertex's predecessor is its smallest-id
    neighbour one step closer to s."""
    if exact[s, t] == INF:
        raise ValueError(f"{s} and {t} are disconnected")
    return _walk(g.indptr, g.indices, exact, s, t)


@njit(cache=True)
def _walk(ptr, idx, D, s, t):
    d = D[s, t]
    path = np.empty(d + 1, dtype=np.int64)
    v = t
    path[d] = t
    for j in range(d - 1, -1, -1):
        dv = D[s, v]
        for e in range(ptr[v], ptr[v + 1]):
            u = idx[e]
            if D[s, u] == dv - 1:
                v = u
                break
        path[j] = v
    return path


def distance_to_levels(exact: np.ndarray, hierarchy: SampleHierarchy) -> np.ndarray:
    """(L, n) exact distance from each vertex to the nearest A_i vertex."""
    out = np.full((hierarchy.L, exact.shape[0]), INF, dtype=np.int64)
    for i, lv in enumerate(hierarchy.levels):
        if lv.shape[0]:
            out[i] = exact[:, lv].min(axis=1)
    return out


def reference_pivots(exact: np.ndarray, hierarchy: SampleHierarchy) -> tuple[np.ndarray, np.ndarray]:
    """Nearest A_i vertex (smallest id on ties) and its distance, per level."""
    L, n = hierarchy.L, exact.shape[0]
    piv = np.full((L, n), -1, dtype=np.int64)
    dist = np.full((L, n), INF, dtype=np.int64)
    for i, lv in enumerate(hierarchy.levels):
        if lv.shape[0]:
            sub = exact[:, lv]
            j = sub.argmin(axis=1)  # lv is ascending, so first min = smallest id
            piv[i] = lv[j]
            dist[i] = sub[np.arange(n), j]
    return piv, dist


@dataclass
class AnalysisWitness:
    s: int
    t: int
    path: list
    a: list
    u: list
    b: list
    v: list
    pivot_dist_s: list
    pivot_dist_t: list


def extract_witnesses(g: Graph, exact: np.ndarray, hierarchy: SampleHierarchy, pair: tuple[int, int], path=None) -> AnalysisWitness:
    """a_i: first vertex on the path within distance 1 of A_i, u_i its nearest
    A_i vertex; b_i, v_i likewise from the t end. None where undefined."""
    s, t = pair
    if path is None:
        path = canonical_path(g, exact, s, t)
    piv, dist = reference_pivots(exact, hierarchy)
    a, u, b, v = [], [], [], []
    for i in range(hierarchy.L):
        near = np.nonzero(dist[i][path] <= 1)[0]
        if near.shape[0] == 0:
            a.append(None), u.append(None), b.append(None), v.append(None)
            continue
        ai, bi = int(path[near[0]]), int(path[near[-1]])
        a.append(ai)
        u.append(int(piv[i][ai]))
        b.append(bi)
        v.append(int(piv[i][bi]))
    return AnalysisWitness(
        s, t, [int(x) for x in path], a, u, b, v,
        [int(x) for x in dist[:, s]], [int(x) for x in dist[:, t]],
    )


# --- lemma suite -----------------------------------------------------------

PRE, MISS, PASS = -1, 0, 1


@njit(cache=True)
def _check_path(path, D, _ptr, _idx, deg, pdist, pivot, taus, btau, inB, blo, snaps, k_init, k_ec, k_base, k_iter, k_final, L, istop, status):
    """Fill status[lemma, level] with PRE / MISS / PASS for one pair and path."""
    for a in range(status.shape[0]):
        for b in range(status.shape[1]):
            status[a, b] = -1
    d = path.shape[0] - 1
    s = path[0]
    t = path[d]
    pa = np.full(L, -1, dtype=np.int64)
    pb = np.full(L, -1, dtype=np.int64)
    for i in range(L):
        for j in range(d + 1):
            if pdist[i, path[j]] <= 1:
                if pa[i] < 0:
                    pa[i] = j
                pb[i] = j
    pm = np.zeros(d + 1, dtype=np.int64)
    sm = np.zeros(d + 1, dtype=np.int64)
    for j in range(d):
        ed = min(deg[path[j]], deg[path[j + 1]])
        pm[j + 1] = max(pm[j], ed)
    for j in range(d - 1, -1, -1):
        ed = min(deg[path[j]], deg[path[j + 1]])
        sm[j] = max(sm[j + 1], ed)

    def lps(i):
        return pm[pa[i]] <= taus[i]

    def lpt(i):
        return sm[pb[i]] <= taus[i]

    # use21
    for i in range(L):
        if pa[i] < 0:
            continue
        u = pivot[i, path[pa[i]]]
        v = pivot[i, path[pb[i]]]
        status[0, i] = 1 if np.int64(snaps[k_init, u, v]) <= 2 * (pb[i] - pa[i]) + 5 else 0

    # near
    est_ec = np.int64(snaps[k_ec, s, t])
    if est_ec > 2 * d:
        for i in range(L):
            if pa[i] < 0 or not lps(i) or not lpt(i):
                continue
            sa = pa[i]
            tb = d - pb[i]
            s_ok = sa - pdist[i, s] <= 3
            t_ok = tb - pdist[i, t] <= 3
            ok = (sa <= tb and s_ok) or (sa >= tb and t_ok)
            status[1, i] = 1 if ok else 0

    # es
    for i in range(L - 1):
        if pa[i] < 0 or pa[i + 1] < 0:
            continue
        sa1 = pa[i + 1]
        tb1 = d - pb[i + 1]
        checked = False
        ok = True
        if sa1 <= tb1 and sa1 - pdist[i + 1, s] <= 3 and pa[i + 1] - pa[i] >= 6:
            P = pdist[i + 1, s]
            if 3 <= P <= d:
                z = path[P - 3]
                ui = pivot[i, path[pa[i]]]
                checked = True
                ok = ok and D[ui, z] < pdist[i + 1, ui]
        if tb1 <= sa1 and tb1 - pdist[i + 1, t] <= 3 and pb[i] - pb[i + 1] >= 6:
            Q = pdist[i + 1, t]
            if 3 <= Q <= d:
                z = path[d - Q + 3]
                vi = pivot[i, path[pb[i]]]
                checked = True
                ok = ok and D[vi, z] < pdist[i + 1, vi]
        if checked:
            status[2, i] = 1 if ok else 0

    # base case
    top = L - 1
    if pa[top] >= 0 and k_base >= 0:
        best = -1
        p = -1
        for j in range(pa[top], pb[top] + 1):
            if deg[path[j]] > best:
                best = deg[path[j]]
                p = path[j]
        if best >= 1:
            ell = 0
            while (1 << (ell + 1)) <= best:
                ell += 1
            li = ell - blo
            if 0 <= li < inB.shape[0] and best <= btau[li]:
                hit = inB[li, p]
                if not hit:
                    for e in range(_ptr[p], _ptr[p + 1]):
                        if inB[li, _idx[e]]:
                            hit = True
                            break
                if hit:
                    u = pivot[top, path[pa[top]]]
                    v = pivot[top, path[pb[top]]]
                    status[3, top] = 1 if np.int64(snaps[k_base, u, v]) <= (pb[top] - pa[top]) + 4 else 0

    # main claim for general iterations; prev snapshot for level L-1 is the base case
    for i in range(L - 2, istop, -1):
        k_now = k_iter[i]
        k_prev = k_base if i + 1 == L - 1 else k_iter[i + 1]
        if k_now < 0 or k_prev < 0 or pa[i] < 0 or pa[i + 1] < 0:
            continue
        if not lps(i + 1) or not lpt(i + 1):
            continue
        u1 = pivot[i + 1, path[pa[i + 1]]]
        v1 = pivot[i + 1, path[pb[i + 1]]]
        if np.int64(snaps[k_prev, u1, v1]) > (pb[i + 1] - pa[i + 1]) + 18 * (L - i - 1):
            continue
        sa1 = pa[i + 1]
        tb1 = d - pb[i + 1]
        side = False
        if sa1 <= tb1 and (pa[i + 1] - pa[i] <= 5 or sa1 - pdist[i + 1, s] <= 3):
            side = True
        if tb1 <= sa1 and (pb[i] - pb[i + 1] <= 5 or tb1 - pdist[i + 1, t] <= 3):
            side = True
        if not side:
            continue
        ui = pivot[i, path[pa[i]]]
        vi = pivot[i, path[pb[i]]]
        status[4, i] = 1 if np.int64(snaps[k_now, ui, vi]) <= (pb[i] - pa[i]) + 18 * (L - i) else 0

    # final step
    if istop >= 0 and k_final >= 0:
        i = istop
        k_prev = k_base if i + 1 == L - 1 else k_iter[i + 1]
        if k_prev >= 0 and pa[i + 1] >= 0 and lps(i + 1) and lpt(i + 1):
            u1 = pivot[i + 1, path[pa[i + 1]]]
            v1 = pivot[i + 1, path[pb[i + 1]]]
            if np.int64(snaps[k_prev, u1, v1]) <= (pb[i + 1] - pa[i + 1]) + 18 * (L - i - 1):
                sa1 = pa[i + 1]
                tb1 = d - pb[i + 1]
                side = False
                if sa1 <= tb1 and (sa1 <= 3 or sa1 - pdist[i + 1, s] <= 3):
                    side = True
                if tb1 <= sa1 and (tb1 <= 3 or tb1 - pdist[i + 1, t] <= 3):
                    side = True
                if side:
                    status[5, i] = 1 if np.int64(snaps[k_final, s, t]) <= d + 18 * (L - i) else 0


@njit(cache=True)
def _sweep(D, ptr, idx, deg, pdist, pivot, taus, btau, inB, blo, snaps, k_init, k_ec, k_base, k_iter, k_final, L, istop, max_miss):
    n = D.shape[0]
    checked = np.zeros((6, L), dtype=np.int64)
    passed = np.zeros((6, L), dtype=np.int64)
    misses = np.empty((max_miss, 4), dtype=np.int64)
    nm = 0
    status = np.empty((6, L), dtype=np.int64)
    for s in range(n):
        for t in range(s + 1, n):
            d = D[s, t]
            if d == _INF or d == 0:
                continue
            path = _walk(ptr, idx, D, s, t)
            _check_path(path, D, ptr, idx, deg, pdist, pivot, taus, btau, inB, blo, snaps,
                        k_init, k_ec, k_base, k_iter, k_final, L, istop, status)
            for a in range(6):
                for i in range(L):
                    st = status[a, i]
                    if st < 0:
                        continue
                    checked[a, i] += 1
                    if st == 1:
                        passed[a, i] += 1
                    elif nm < max_miss:
                        misses[nm, 0] = s
                        misses[nm, 1] = t
                        misses[nm, 2] = a
                        misses[nm, 3] = i
                        nm += 1
    return checked, passed, misses[:nm].copy()


def all_shortest_paths(g: Graph, exact: np.ndarray, s: int, t: int, limit: int = 20000):
    """Every shortest s–t path (up to ``limit``), by DFS over the
    shortest-path DAG."""
    d = int(exact[s, t])
    out = []
    stack = [(s, [s])]
    while stack and len(out) < limit:
        v, p = stack.pop()
        if v == t:
            out.append(np.asarray(p, dtype=np.int64))
            continue
        dv = exact[s, v]
        for u in g.neighbors(v)[::-1].tolist():
            if exact[s, u] == dv + 1 and exact[u, t] == d - dv - 1:
                stack.append((u, p + [u]))
    return out


@dataclass
class LemmaReport:
    checked: dict
    passed: dict
    rates: dict
    misses: list
    cleared_by_exhaustive: int
    pivots_exact: bool
    pivot_mismatch: list

    def all_pass(self) -> bool:
        return all(self.checked[k] == self.passed[k] for k in self.checked)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_lemma_suite(g: Graph, exact: np.ndarray, report, max_miss: int = 2000, exhaustive_n: int = 64) -> LemmaReport:
    """Evaluate the per-pair lemma inequalities on the run's phase snapshots.

    ``report`` is a RunReport produced with ``snapshot_phases=True``. Rates
    are over (pair, level) instances whose preconditions hold on the
    canonical path.
    """
    snaps_d = report.snapshots
    need = ["init", "seed", "base_case"]
    missing = [k for k in need if k not in snaps_d]
    if missing or report.pivots is None:
        raise ValueError(f"missing snapshots {missing}; run with snapshot_phases=True")
    h = report.hierarchy
    L = h.L
    cfg = report.config
    from .pivots import log2_ceil, tau

    names = list(snaps_d)
    stack = np.stack([snaps_d[k] for k in names])
    key = {k: j for j, k in enumerate(names)}
    k_init = key["init"]
    k_ec = key[f"closeness_{L - 1}"]
    k_base = key["base_case"]
    k_iter = np.array([key.get(f"iteration_{i}", -1) for i in range(L)], dtype=np.int64)
    k_final = key.get("final_step", -1)
    pdist = report.pivots.pdist.astype(np.int64)
    pivot = report.pivots.pivot
    taus = np.array([tau(i, g.n, cfg["c_deg"]) for i in range(L)], dtype=np.int64)
    ells = sorted(report.base_samples.samples)
    blo = ells[0] if ells else 0
    inB = np.zeros((len(ells), g.n), dtype=np.bool_)
    btau = np.zeros(len(ells), dtype=np.int64)
    lg = log2_ceil(g.n)
    for j, ell in enumerate(ells):
        inB[j, report.base_samples.samples[ell]] = True
        btau[j] = int(cfg["c_deg"] * 2 ** (ell + 1) * lg)
    ref = distance_to_levels(exact, h)
    mismatch = [int((ref[i] != pdist[i]).sum()) for i in range(L)]
    args = (g.degree, pdist, pivot, taus, btau, inB, blo, stack, k_init, k_ec, k_base, k_iter, k_final, L, report.i_stop)
    checked, passed, misses = _sweep(exact, g.indptr, g.indices, *args, max_miss)
    cleared = 0
    kept = []
    status = np.empty((6, L), dtype=np.int64)
    for s, t, a, i in misses.tolist():
        if g.n <= exhaustive_n:
            ok = False
            for p in all_shortest_paths(g, exact, s, t):
                _check_path(p, exact, g.indptr, g.indices, *args, status)
                if status[a, i] == PASS:
                    ok = True
                    break
            if ok:
                cleared += 1
                passed[a, i] += 1
                continue
        w = canonical_path(g, exact, s, t)
        kept.append({"s": s, "t": t, "lemma": LEMMAS[a], "level": i, "d": int(exact[s, t]),
                     "path_len": int(w.shape[0] - 1)})
    out_c, out_p, out_r = {}, {}, {}
    for a, name in enumerate(LEMMAS):
        for i in range(L):
            if checked[a, i]:
                k = f"{name}@{i}"
                out_c[k] = int(checked[a, i])
                out_p[k] = int(passed[a, i])
                out_r[k] = out_p[k] / out_c[k]
    return LemmaReport(out_c, out_p, out_r, kept, cleared, all(m == 0 for m in mismatch), mismatch)
