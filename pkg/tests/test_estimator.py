import json

import numpy as np
import pytest
from hypothesis import given, settings

from apx import generators as G
from apx.estimator import (
    EstimateMatrix,
    exact_rows,
    init_21_approx,
    low_degree_apsp,
    low_degree_tau,
    seed_pivot_distances,
)
from apx.graph import INF, degree_filtered_view, from_edge_list
from apx.pivots import compute_balls, compute_pivots
from apx.sampling import build_hierarchy
from apx.verify import exact_apsp

from conftest import small_graphs
from test_pivots import hierarchy


def test_relax_examples():
    est = EstimateMatrix.empty(3)
    est.a[0, 1] = est.a[1, 0] = 9
    assert est.relax(0, 1, 7) and est[0, 1] == 7 and est[1, 0] == 7
    assert not est.relax(0, 1, 9) and est[0, 1] == 7
    assert not est.relax(2, 2, 3) and est[2, 2] == 0
    assert est.counters.attempts == 3 and est.counters.improvements == 1


def test_dump_load_roundtrip(tmp_path, gnp200):
    est, _ = init_21_approx(gnp200, "exact")
    p = tmp_path / "m.bin"
    est.dump(p, {"note": "x"})
    back = EstimateMatrix.load(p)
    assert np.array_equal(back.a, est.a)
    side = json.loads((tmp_path / "m.bin.json").read_text())
    assert side["sha256"] == est.digest() and side["n"] == 200 and side["note"] == "x"


def test_load_rejects_garbage(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"nope")
    with pytest.raises(ValueError):
        EstimateMatrix.load(p)


def test_exact_init_path(p5):
    est, _ = init_21_approx(p5, "exact")
    assert est[0, 4] == 4


def test_additive2_single_edge():
    est, _ = init_21_approx(from_edge_list([(0, 1)], 2), "additive2")
    assert 1 <= est[0, 1] <= 3


def _gap(est, D):
    fin = D != INF
    assert (est.a[~fin] == INF).all()
    return (est.a.astype(np.int64) - D)[fin]


@settings(max_examples=60, deadline=None)
@given(small_graphs(max_n=40))
def test_additive2_gap_property(g):
    est, _ = init_21_approx(g, "additive2")
    gap = _gap(est, exact_apsp(g))
    assert gap.min() >= 0 and gap.max() <= 2


@pytest.mark.parametrize("family", ["barbell", "power-law", "path-with-chords", "gnp"])
def test_additive2_gap_heavy_graphs(family):
    g = G.generate(family, 400, seed=2, p=0.08 if family == "gnp" else None)
    est, info = init_21_approx(g, "additive2")
    gap = _gap(est, exact_apsp(g))
    assert gap.min() >= 0 and gap.max() <= 2
    assert g.max_degree < info["threshold"] or info["hitting_set"] > 0


def test_inflated_is_two_d_plus_one(gnp200):
    est, _ = init_21_approx(gnp200, "inflated")
    D = exact_apsp(gnp200)
    fin = (D != INF) & (D > 0)
    assert np.array_equal(est.a[fin].astype(np.int64), 2 * D[fin] + 1)


def test_unknown_variant(p5):
    with pytest.raises(ValueError):
        init_21_approx(p5, "fancy")


def test_lowdeg_path_exact(p5):
    est, _ = init_21_approx(p5, "inflated")
    low_degree_apsp(p5, est, tau=2)
    assert np.array_equal(est.a.astype(np.int64), exact_apsp(p5))


def test_lowdeg_tau_zero_noop(gnp200):
    est, _ = init_21_approx(gnp200, "inflated")
    before = est.snapshot()
    low_degree_apsp(gnp200, est, tau=0)
    assert np.array_equal(before, est.a)


def _low_degree_pairs(g, tau):
    h = degree_filtered_view(g, tau)
    dh, _ = exact_rows(h)
    D = exact_apsp(g)
    return D, (dh.astype(np.int64) == D) & (D != INF)


@pytest.mark.parametrize("tau", [None, 8, 5])
@pytest.mark.parametrize("backend", ["bk", "exact_on_subgraph"])
def test_lowdeg_contract(backend, tau):
    g = G.gnp(300, 0.03, 1)
    est, _ = init_21_approx(g, "inflated")
    low_degree_apsp(g, est, tau=tau, backend=backend, seed=1)
    D, ok = _low_degree_pairs(g, low_degree_tau(300) if tau is None else tau)
    e = est.a.astype(np.int64)
    assert (e >= D).all()
    assert (e[ok] <= 2 * D[ok]).all()
    assert ok.sum() > 300  # the check is not vacuous


def test_lowdeg_bad_backend(p5):
    est, _ = init_21_approx(p5, "exact")
    with pytest.raises(ValueError):
        low_degree_apsp(p5, est, tau=3, backend="quantum")


def test_seed_pivot_path(p5):
    h = hierarchy(5, [3])
    table, _ = compute_pivots(p5, h)
    balls, _ = compute_balls(p5, table)
    est = EstimateMatrix.empty(5)
    seed_pivot_distances(est, table, balls)
    assert est[0, 3] == 3 and est[3, 3] == 0


def test_seed_pivot_matches_oracle(gnp200):
    h = build_hierarchy(200, seed=6)
    table, _ = compute_pivots(gnp200, h)
    balls, _ = compute_balls(gnp200, table)
    est = EstimateMatrix.empty(200)
    seed_pivot_distances(est, table, balls)
    D = exact_apsp(gnp200)
    seeded = est.a != INF
    assert np.array_equal(est.a[seeded].astype(np.int64), D[seeded])
    for i in range(h.L):
        ok = table.pivot[i] >= 0
        xs = np.nonzero(ok)[0]
        assert np.array_equal(est.a[xs, table.pivot[i][ok]], table.pdist[i][ok])
