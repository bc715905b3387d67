import numpy as np
import pytest

from apx import generators as G
from apx.closeness import (
    ensure_closeness,
    overlay_parts,
    triangulate,
    triangulate_batch,
    update_from,
    update_from_batch,
)
from apx.estimator import EstimateMatrix, init_21_approx
from apx.pipeline import RunConfig, run
from apx.pivots import compute_pivots
from apx.sampling import build_hierarchy
from apx.verify import check_lemma_suite, exact_apsp

from test_pivots import hierarchy


def _setup(g, h):
    table, _ = compute_pivots(g, h)
    est, _ = init_21_approx(g, "inflated")
    return est, table


def test_update_from_fixed_point(p5):
    h = hierarchy(5, [3])
    table, _ = compute_pivots(p5, h)
    est, _ = init_21_approx(p5, "exact")
    before = est.snapshot()
    update_from(p5, est, table, 3, 1, c_deg=1)
    assert np.array_equal(before, est.a)


def test_update_from_base_path_beats_star(p5):
    h = hierarchy(5, [0])
    table, _ = compute_pivots(p5, h)
    est = EstimateMatrix.empty(5)
    est.a[0, 3] = est.a[3, 0] = 9
    row = update_from(p5, est, table, 0, 1, c_deg=1)
    assert row[3] == 3 and est[0, 3] == 3 and est[3, 0] == 3


def test_overlay_distances_sound(gnp200):
    h = build_hierarchy(200, seed=3)
    est, table = _setup(gnp200, h)
    D = exact_apsp(gnp200)
    for w in h.levels[1][:10].tolist():
        row = update_from(gnp200, est, table, w, 1, c_deg=0.25)
        assert (row.astype(np.int64) >= D[w]).all()


def test_batch_matches_single_and_threads(gnp200):
    h = build_hierarchy(200, seed=3)
    parts = overlay_parts(gnp200, compute_pivots(gnp200, h)[0], 1, c_deg=0.25)
    ws = h.levels[1]
    outs = []
    for threads in (1, 3):
        est, _ = _setup(gnp200, h)
        update_from_batch(est, parts, ws, threads)
        outs.append(est.a)
    assert np.array_equal(outs[0], outs[1])
    # one source against the batch kernel
    est1, table = _setup(gnp200, h)
    est2, _ = _setup(gnp200, h)
    w = int(ws[0])
    update_from(gnp200, est1, table, w, 1, c_deg=0.25)
    update_from_batch(est2, parts, np.array([w]))
    assert np.array_equal(est1.a, est2.a)


def test_triangulate_arithmetic(p5):
    h = hierarchy(5, [2])
    table, _ = compute_pivots(p5, h)
    est = EstimateMatrix.empty(5)
    est.a[2, 4] = est.a[4, 2] = 5
    est.a[0, 4] = est.a[4, 0] = 8
    triangulate(est, table, 0, 1)
    assert est[0, 4] == 7
    assert est[0, 2] == 2  # t = pivot: d(s, p) + 0


def test_triangulate_pivot_self_noop(p5):
    h = hierarchy(5, [2])
    table, _ = compute_pivots(p5, h)
    est = EstimateMatrix.empty(5)
    est.a[2, 4] = est.a[4, 2] = 5
    before = est.snapshot()
    triangulate(est, table, 2, 1)
    assert np.array_equal(before, est.a)


def test_triangulate_undefined_pivot(p5):
    table, _ = compute_pivots(p5, hierarchy(5, []))
    est = EstimateMatrix.empty(5)
    assert triangulate_batch(est, table, 1)[1] == 0


def test_ensure_closeness_keeps_exact(p5):
    h = hierarchy(5, [3])
    table, _ = compute_pivots(p5, h)
    est, _ = init_21_approx(p5, "exact")
    ensure_closeness(p5, est, h, table)
    assert np.array_equal(est.a.astype(np.int64), exact_apsp(p5))


def test_ensure_closeness_sound_and_monotone(gnp200):
    h = build_hierarchy(200, seed=3)
    est, table = _setup(gnp200, h)
    before = est.snapshot()
    ensure_closeness(gnp200, est, h, table, c_deg=0.25)
    D = exact_apsp(gnp200)
    assert (est.a <= before).all()
    assert (est.a.astype(np.int64) >= D).all()


@pytest.mark.parametrize("c_deg", [0.25, 0.1])
def test_closeness_lemma_gnp400(c_deg):
    g = G.gnp(400, 0.02, 5)
    cfg = RunConfig(k=None, seed=5, force_pipeline=True, init_variant="inflated", lowdeg_backend="none",
                    c_deg=c_deg, pivot_mode="reference", snapshot_phases=True)
    _, rep = run(g, cfg)
    lr = check_lemma_suite(g, exact_apsp(g), rep)
    keys = [k for k in lr.checked if k.startswith(("near", "es"))]
    assert keys and all(lr.rates[k] == 1.0 for k in keys)
