import itertools

import numpy as np
import pytest

from optics_cp import (
    CandidateSet,
    CostCache,
    DetectorKind,
    InfeasibleError,
    binary_segmentation,
    fit_all_candidates,
    segment_cost,
    segment_neighborhood,
)


def direct_sse(arr, a, b):
    block = np.atleast_2d(np.asarray(arr, dtype=float).T).T[a:b]
    centered = block - block.mean(axis=0)
    return float((centered * centered).sum())


def total_cost(arr, taus, n):
    bounds = (0,) + tuple(taus) + (n,)
    return sum(direct_sse(arr, a, b) for a, b in zip(bounds, bounds[1:]))


def brute_force_min(arr, k, min_seg):
    n = len(arr)
    best_cost, best_taus = np.inf, None
    positions = range(min_seg, n - min_seg + 1)
    for taus in itertools.combinations(positions, k):
        gaps = np.diff((0,) + taus + (n,))
        if gaps.min() < min_seg:
            continue
        cost = total_cost(arr, taus, n)
        if cost < best_cost:
            best_cost, best_taus = cost, taus
    return best_cost, best_taus


def test_segment_cost_constant_block():
    cache = CostCache.from_scores(np.zeros(3))
    assert segment_cost(cache, 0, 3) == 0.0


def test_segment_cost_two_points():
    cache = CostCache.from_scores(np.array([0.0, 2.0]))
    assert segment_cost(cache, 0, 2) == pytest.approx(2.0, abs=1e-12)


def test_segment_cost_matches_direct_sum():
    rng = np.random.default_rng(0)
    arr = rng.standard_normal((10, 2))
    cache = CostCache.from_scores(arr)
    for a in range(10):
        for b in range(a + 1, 11):
            assert segment_cost(cache, a, b) == pytest.approx(
                direct_sse(arr, a, b), rel=1e-9, abs=1e-12
            )


def test_segment_cost_bounds_checked():
    cache = CostCache.from_scores(np.zeros(5))
    for a, b in [(-1, 3), (3, 3), (4, 2), (0, 6)]:
        with pytest.raises(IndexError):
            segment_cost(cache, a, b)


def test_bs_single_obvious_break():
    scores = np.array([0.0, 0.0, 0.0, 2.0, 2.0, 2.0])
    seg = binary_segmentation(scores, k=1, min_seg=2)
    assert seg.taus == (3,)


def test_bs_constant_input_smallest_index():
    seg = binary_segmentation(np.zeros(12), k=1, min_seg=3)
    assert seg.taus == (3,)


def test_bs_matches_sn_for_single_break():
    rng = np.random.default_rng(1)
    for trial in range(20):
        arr = rng.standard_normal(30)
        bs = binary_segmentation(arr, k=1, min_seg=3)
        sn = segment_neighborhood(arr, k=1, min_seg=3)
        assert bs.taus == sn.taus, trial


def test_bs_infeasible():
    with pytest.raises(InfeasibleError):
        binary_segmentation(np.zeros(10), k=3, min_seg=3)


def test_sn_simple_exact_fits():
    seg = segment_neighborhood(np.array([0.0, 0, 0, 1, 1, 1]), k=1, min_seg=2)
    assert seg.taus == (3,)
    seg = segment_neighborhood(np.array([0.0, 0, 1, 1, 0, 0]), k=2, min_seg=2)
    assert seg.taus == (2, 4)


def test_sn_matches_brute_force():
    rng = np.random.default_rng(2)
    for trial in range(30):
        n = int(rng.integers(10, 15))
        arr = rng.standard_normal(n)
        k = int(rng.integers(1, 4))
        if n < (k + 1) * 2:
            continue
        seg = segment_neighborhood(arr, k=k, min_seg=2)
        bf_cost, bf_taus = brute_force_min(arr, k, 2)
        sn_cost = total_cost(arr, seg.taus, n)
        assert sn_cost == pytest.approx(bf_cost, rel=1e-9, abs=1e-9)


def test_sn_exhaustive_pairs_small_instance():
    rng = np.random.default_rng(3)
    arr = rng.standard_normal(14)
    seg = segment_neighborhood(arr, k=2, min_seg=2)
    bf_cost, bf_taus = brute_force_min(arr, 2, 2)
    assert total_cost(arr, seg.taus, 14) == pytest.approx(bf_cost, rel=1e-9)


def test_fit_all_noiseless_two_breaks():
    scores = np.concatenate([np.zeros(8), np.ones(8), np.full(8, 3.0)])
    segs = fit_all_candidates(scores, CandidateSet(2), DetectorKind("sn", min_seg=3))
    assert segs[2].taus == (8, 16)
    assert segs[1].taus == (16,)  # the larger jump wins the single split


def test_sn_cost_non_increasing_in_k():
    rng = np.random.default_rng(4)
    arr = rng.standard_normal(40)
    segs = fit_all_candidates(arr, CandidateSet(4), DetectorKind("sn", min_seg=3))
    costs = [total_cost(arr, segs[k].taus, 40) for k in range(1, 5)]
    assert all(c1 >= c2 - 1e-9 for c1, c2 in zip(costs, costs[1:]))


def test_sn_never_worse_than_bs():
    rng = np.random.default_rng(5)
    for trial in range(100):
        arr = rng.standard_normal(36)
        k = int(rng.integers(1, 4))
        sn = segment_neighborhood(arr, k=k, min_seg=3)
        bs = binary_segmentation(arr, k=k, min_seg=3)
        assert (
            total_cost(arr, sn.taus, 36)
            <= total_cost(arr, bs.taus, 36) + 1e-9
        ), trial


def test_outputs_satisfy_spacing_invariants():
    rng = np.random.default_rng(6)
    arr = rng.standard_normal(50)
    for kind in ("bs", "sn"):
        segs = fit_all_candidates(arr, CandidateSet(4), DetectorKind(kind, min_seg=5))
        for k, seg in segs.items():
            assert seg.k == k
            gaps = np.diff((0,) + seg.taus + (50,))
            assert gaps.min() >= 5


def test_coordinate_permutation_invariance():
    rng = np.random.default_rng(7)
    arr = rng.standard_normal((40, 3))
    shuffled = arr[:, [2, 0, 1]]
    for kind in ("bs", "sn"):
        a = fit_all_candidates(arr, CandidateSet(3), DetectorKind(kind, min_seg=4))
        b = fit_all_candidates(shuffled, CandidateSet(3), DetectorKind(kind, min_seg=4))
        for k in a:
            assert a[k].taus == b[k].taus


def test_fit_all_names_first_infeasible_candidate():
    with pytest.raises(InfeasibleError, match="K=3"):
        fit_all_candidates(np.zeros(11), CandidateSet(3), DetectorKind("sn", min_seg=3))


def test_detector_kind_validation():
    with pytest.raises(ValueError):
        DetectorKind("pelt")
    with pytest.raises(ValueError):
        DetectorKind("sn", min_seg=1)
