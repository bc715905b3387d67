"""End-to-end driver: initialization, closeness, base case, general
iterations and the final step."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels as K
from .closeness import ensure_closeness, overlay_parts, run_rows, update_from_batch
from .estimator import Counters, EstimateMatrix, exact_rows, init_21_approx, low_degree_apsp, seed_pivot_distances
from .graph import Graph, degree_filtered_view
from .pivots import (
    BallTable,
    PivotInverse,
    PivotTable,
    compute_balls,
    compute_pivots,
    invert_pivots,
    log2_ceil,
)
from .sampling import BaseSamples, SampleHierarchy, build_base_samples, build_hierarchy, num_levels


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """``k=None`` selects the k = log n mode, where log2 k is taken as L."""

    k: int | None = None
    seed: int = 1
    c_deg: float = 4
    c_ball: float = 2
    n0: int = 256
    force_pipeline: bool = False
    init_variant: str = "additive2"
    lowdeg_backend: str = "exact"
    base_oversample: float = 1.0
    pivot_mode: str = "fast"
    threads: int = 1
    snapshot_phases: bool = False


def log2k_of(cfg: RunConfig, n: int) -> int:
    L = num_levels(n)
    if cfg.k is None:
        return L
    k = int(cfg.k)
    if k < 2 or k & (k - 1):
        raise ConfigError(f"k must be a power of two >= 2, got {cfg.k}")
    lk = k.bit_length() - 1
    hi = math.log2(math.log2(n)) if n >= 4 else 1.0
    if lk > max(1.0, hi):
        raise ConfigError(f"k={k} too large for n={n}: need log2 k <= log2 log2 n = {hi:.3f}, i.e. k in [2, {2 ** max(1, int(hi))}]")
    return lk


def threshold(cfg: RunConfig, n: int) -> int:
    """Distance from which est <= 2d is guaranteed: 18 (log2 k + 1)."""
    return 18 * (log2k_of(cfg, n) + 1)


def i_stop(cfg: RunConfig, n: int) -> int:
    return max(-1, num_levels(n) - log2k_of(cfg, n) - 1)


@dataclass
class PhaseRecord:
    name: str
    seconds: float
    attempts: int
    improvements: int
    edge_scans: int
    digest: str
    extra: dict = field(default_factory=dict)


@dataclass
class RunReport:
    n: int
    m: int
    config: dict
    L: int = 0
    log2k: int = 0
    i_stop: int = -1
    threshold: int = 0
    exact_fallback: bool = False
    phases: list[PhaseRecord] = field(default_factory=list)
    whp_events: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)
    digest: str = ""
    # in-memory only
    snapshots: dict = field(default_factory=dict, repr=False)
    hierarchy: SampleHierarchy | None = field(default=None, repr=False)
    base_samples: BaseSamples | None = field(default=None, repr=False)
    pivots: PivotTable | None = field(default=None, repr=False)
    balls: BallTable | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {
            k: v
            for k, v in asdict(self).items()
            if k not in ("snapshots", "hierarchy", "base_samples", "pivots", "balls")
        }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


class _Recorder:
    """Appends a PhaseRecord with counter deltas and a digest per phase."""

    def __init__(self, report: RunReport, keep: bool):
        self.report = report
        self.keep = keep
        self.est: EstimateMatrix | None = None
        self._t = time.perf_counter()
        self._c = Counters()

    def __call__(self, name: str, **extra) -> None:
        now = time.perf_counter()
        c = self.est.counters
        self.report.phases.append(
            PhaseRecord(
                name,
                round(now - self._t, 6),
                c.attempts - self._c.attempts,
                c.improvements - self._c.improvements,
                c.edge_scans - self._c.edge_scans,
                self.est.digest(),
                extra,
            )
        )
        if self.keep:
            self.report.snapshots[name] = self.est.snapshot()
        self._c = Counters(**c.as_dict())
        self._t = time.perf_counter()


def _candidates(xs: np.ndarray, balls: BallTable, level: int, extra) -> tuple[np.ndarray, np.ndarray]:
    """CSR of candidate w per x: ball_level(x) plus ``extra(x)``."""
    ptr = np.zeros(xs.shape[0] + 1, dtype=np.int64)
    parts = []
    for k, x in enumerate(xs.tolist()):
        b, _ = balls.ball(level, x)
        c = np.union1d(b, extra(x))
        parts.append(c)
        ptr[k + 1] = ptr[k] + c.shape[0]
    idx = np.concatenate(parts).astype(np.int64) if parts else np.zeros(0, np.int64)
    return ptr, idx


def part3(est: EstimateMatrix, xs, cptr, cidx, piv_next, ys, threads: int = 1) -> tuple[int, int]:
    """est(x, y) <- est(x, w) + est(w, pivot(w)) + est(pivot(w), y) over the
    candidate lists, all reads from one snapshot."""
    snap = est.snapshot()
    ys = np.asarray(ys, dtype=np.int64)
    pos = {int(x): k for k, x in enumerate(xs.tolist())}

    def fill(b, out):
        sel = np.array([pos[int(x)] for x in b], dtype=np.int64)
        sptr = np.zeros(sel.shape[0] + 1, dtype=np.int64)
        sptr[1:] = np.cumsum(cptr[sel + 1] - cptr[sel])
        sidx = np.concatenate([cidx[cptr[j] : cptr[j + 1]] for j in sel]) if sel.shape[0] else cidx[:0]
        return K.triple_rows(snap, b, sptr, sidx.astype(np.int64), piv_next, ys, out)

    att, imp = run_rows(est, xs, fill, threads)
    est.counters.add(attempts=att, improvements=imp)
    return att, imp


def base_case(
    g: Graph, est: EstimateMatrix, base: BaseSamples, hierarchy: SampleHierarchy, c_deg: float = 4
) -> dict:
    """For each ℓ and w ∈ B_ℓ: BFS from w over its own edges plus edges of
    degree <= c_deg 2^(ℓ+1) log n, then relax through w on A_top x A_top."""
    top = hierarchy.levels[hierarchy.L - 1]
    lg = log2_ceil(g.n)
    scans = att = imp = 0
    sizes = {}
    for ell, ws in sorted(base.samples.items()):
        sizes[ell] = int(ws.shape[0])
        if ws.shape[0] == 0:
            continue
        view = degree_filtered_view(g, int(c_deg * 2 ** (ell + 1) * lg))
        sc, a, b = K.base_case_kernel(est.a, g.indptr, g.indices, view.indptr, view.indices, ws, top)
        scans += sc
        att += a
        imp += b
    est.counters.add(attempts=att, improvements=imp, edge_scans=scans)
    return {"sizes": sizes, "top_level_size": int(top.shape[0])}


def general_iteration(
    g: Graph,
    est: EstimateMatrix,
    i: int,
    hierarchy: SampleHierarchy,
    pivots: PivotTable,
    balls: BallTable,
    inverse: PivotInverse,
    c_deg: float = 4,
    threads: int = 1,
) -> dict:
    if not 0 <= i <= hierarchy.L - 2:
        raise ValueError(f"iteration level {i} out of range [0, {hierarchy.L - 2}]")
    parts = overlay_parts(g, pivots, i + 1, c_deg)
    ws = hierarchy.levels[i + 1]
    update_from_batch(est, parts, ws, threads)
    update_from_batch(est, parts, ws, threads)
    xs = hierarchy.levels[i]
    cptr, cidx = _candidates(xs, balls, i + 1, lambda x: inverse.of(i, x))
    att, imp = part3(est, xs, cptr, cidx, pivots.pivot[i + 1], xs, threads)
    return {"candidates": int(cidx.shape[0]), "pairs": int(xs.shape[0]) ** 2, "part3_attempts": att}


def final_step(
    g: Graph,
    est: EstimateMatrix,
    i: int,
    hierarchy: SampleHierarchy,
    pivots: PivotTable,
    balls: BallTable,
    c_deg: float = 4,
    threads: int = 1,
) -> dict:
    if not 0 <= i <= hierarchy.L - 2:
        raise ValueError(f"final step level {i} out of range [0, {hierarchy.L - 2}]")
    parts = overlay_parts(g, pivots, i + 1, c_deg)
    ws = hierarchy.levels[i + 1]
    update_from_batch(est, parts, ws, threads)
    update_from_batch(est, parts, ws, threads)
    xs = np.arange(g.n, dtype=np.int64)
    cptr, cidx = _candidates(xs, balls, i + 1, lambda x: np.array([x], dtype=np.int64))
    att, imp = part3(est, xs, cptr, cidx, pivots.pivot[i + 1], xs, threads)
    return {"candidates": int(cidx.shape[0]), "part3_attempts": att}


def run(g: Graph, cfg: RunConfig | None = None) -> tuple[EstimateMatrix, RunReport]:
    cfg = cfg or RunConfig()
    n = g.n
    if n < 2:
        raise ConfigError("graph must have at least 2 vertices")
    lk = log2k_of(cfg, n)
    L = num_levels(n)
    report = RunReport(n, g.m, asdict(cfg), L=L, log2k=lk, i_stop=i_stop(cfg, n), threshold=threshold(cfg, n))

    if n < cfg.n0 and not cfg.force_pipeline:
        t = time.perf_counter()
        est = EstimateMatrix.empty(n)
        rows, scans = exact_rows(g)
        est.a[:] = rows
        est.counters.add(attempts=n * n, edge_scans=scans)
        report.exact_fallback = True
        report.phases.append(PhaseRecord("exact", round(time.perf_counter() - t, 6), n * n, 0, scans, est.digest()))
        return _finish(est, report)

    rec = _Recorder(report, cfg.snapshot_phases)
    est, info = init_21_approx(g, cfg.init_variant, seed=cfg.seed)
    rec.est = est
    rec("init", **info)

    info = low_degree_apsp(g, est, None, cfg.lowdeg_backend, cfg.c_deg, seed=cfg.seed)
    rec("lowdeg", **info)

    h = build_hierarchy(n, cfg.seed, L)
    base = build_base_samples(n, cfg.seed, cfg.base_oversample) if n >= 4 else BaseSamples({}, cfg.base_oversample)
    report.hierarchy, report.base_samples = h, base
    rec("sampling", level_sizes=[int(x.shape[0]) for x in h.levels], base_sizes={str(k): int(v.shape[0]) for k, v in base.samples.items()})

    pivots, pscans = compute_pivots(g, h, cfg.pivot_mode, cfg.c_deg)
    balls, bscans = compute_balls(g, pivots)
    inverse = invert_pivots(pivots)
    est.counters.add(edge_scans=pscans + bscans)
    report.pivots, report.balls = pivots, balls
    ball_max = [int(balls.sizes(i).max()) if n else 0 for i in range(L)]
    rec("pivots", ball_max=ball_max)

    seed_pivot_distances(est, pivots, balls)
    rec("seed")

    ensure_closeness(g, est, h, pivots, cfg.c_deg, cfg.threads, on_level=lambda i: rec(f"closeness_{i}"))

    info = base_case(g, est, base, h, cfg.c_deg)
    rec("base_case", **info)

    stop = report.i_stop
    for i in range(L - 2, stop, -1):
        info = general_iteration(g, est, i, h, pivots, balls, inverse, cfg.c_deg, cfg.threads)
        rec(f"iteration_{i}", **info)
    if stop >= 0:
        info = final_step(g, est, stop, h, pivots, balls, cfg.c_deg, cfg.threads)
        rec("final_step", level=stop, **info)

    report.whp_events = {
        "empty_levels": [i for i in range(L) if h.levels[i].shape[0] == 0],
        "undefined_pivots": [int((pivots.pivot[i] < 0).sum()) for i in range(L)],
        "oversized_balls": [
            int((balls.sizes(i) > cfg.c_ball * 2 ** (2**i) * math.log2(n)).sum()) for i in range(L)
        ],
        "empty_base_samples": [ell for ell, v in base.samples.items() if v.shape[0] == 0],
    }
    return _finish(est, report)


def _finish(est: EstimateMatrix, report: RunReport):
    report.totals = est.counters.as_dict()
    report.totals["operations"] = report.totals["attempts"] + report.totals["edge_scans"]
    report.digest = est.digest()
    return est, report
