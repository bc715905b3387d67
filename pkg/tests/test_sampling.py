import math

import numpy as np
import pytest

from apx.sampling import (
    SampleHierarchy,
    base_levels,
    build_base_samples,
    build_hierarchy,
    marginal_rate,
    num_levels,
)


def test_two_vertices_clamped():
    h = build_hierarchy(2, seed=0)
    assert h.L == 1
    assert h.levels[0].tolist() == [0, 1]


def test_too_small():
    with pytest.raises(ValueError):
        build_hierarchy(1, seed=0)
    with pytest.raises(ValueError):
        build_base_samples(3, seed=0)


def test_level_count_and_expectation():
    assert num_levels(65536) == 4
    assert 65536 * marginal_rate(3) == 256
    assert [num_levels(n) for n in (64, 256, 4096)] == [2, 3, 3]


def test_nested_and_deterministic():
    a = build_hierarchy(4096, seed=11)
    b = build_hierarchy(4096, seed=11)
    for i in range(a.L):
        assert np.array_equal(a.levels[i], b.levels[i])
    for i in range(1, a.L):
        assert np.isin(a.levels[i], a.levels[i - 1]).all()
    assert not np.array_equal(build_hierarchy(4096, seed=12).levels[1], a.levels[1])


def test_level_of_consistent():
    h = build_hierarchy(1000, seed=2)
    for i in range(h.L):
        assert set(np.nonzero(h.level_of >= i)[0].tolist()) == set(h.levels[i].tolist())
    assert h.contains(0, 5)


def test_json_roundtrip():
    h = build_hierarchy(300, seed=4)
    back = SampleHierarchy.from_json(h.to_json(), 300)
    assert all(np.array_equal(x, y) for x, y in zip(h.levels, back.levels))
    assert np.array_equal(h.level_of, back.level_of)


def _within_3_sigma(sizes, n, p):
    sd_mean = math.sqrt(n * p * (1 - p) / len(sizes))
    return abs(np.mean(sizes) - n * p) <= 3 * sd_mean


def test_level_two_monte_carlo():
    n = 4096
    sizes = [build_hierarchy(n, seed=s).levels[2].shape[0] for s in range(200)]
    assert _within_3_sigma(sizes, n, 1 / 16)


def test_base_levels_range():
    assert list(base_levels(16)) == [2, 3, 4]
    assert list(base_levels(1024)) == [5, 6, 7, 8, 9, 10]
    assert build_base_samples(1024, 0).rate(10) * 1024 == 1


def test_base_samples_monte_carlo():
    n = 4096
    sizes = [build_base_samples(n, seed=s).samples[8].shape[0] for s in range(200)]
    assert _within_3_sigma(sizes, n, 1 / 256)


def test_base_oversample_scales_rate():
    b = build_base_samples(4096, 0, oversample=4.0)
    assert b.rate(8) == 4 / 256
    assert b.rate(1) == 1.0
