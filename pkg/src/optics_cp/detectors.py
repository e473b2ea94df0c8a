"""Change-position detectors: greedy binary segmentation and exact dynamic programming.

Both detectors minimize within-segment sum of squared deviations (SSE) on
a score sequence and return, for a requested count k, the positions of
the k boundaries.  Binary segmentation splits greedily one boundary at a
time; the segment-neighborhood dynamic program is exact for every k up
to a maximum in a single table pass.

Ties are broken deterministically toward the smallest boundary position
so repeated runs produce identical segmentations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CandidateSet, Segmentation, data_matrix
from .errors import InfeasibleError

BINARY_SEGMENTATION = "bs"
SEGMENT_NEIGHBORHOOD = "sn"


@dataclass(frozen=True)
class DetectorKind:
    """Detector selection plus the minimum admissible segment length."""

    kind: str
    min_seg: int = 5

    def __post_init__(self):
        if self.kind not in (BINARY_SEGMENTATION, SEGMENT_NEIGHBORHOOD):
            raise ValueError(
                f"unknown detector {self.kind!r}; expected "
                f"{BINARY_SEGMENTATION!r} or {SEGMENT_NEIGHBORHOOD!r}"
            )
        if self.min_seg < 2:
            raise ValueError(f"min_seg must be >= 2, got {self.min_seg}")


@dataclass(frozen=True)
class CostCache:
    """Prefix sums enabling O(1) segment SSE evaluation.

    cum[t] is the coordinatewise sum of the first t score vectors and
    cum_sq[t] the sum of their squared norms, so the SSE of the block
    (a, b] is cum_sq[b] - cum_sq[a] - ||cum[b] - cum[a]||^2 / (b - a).
    """

    cum: np.ndarray
    cum_sq: np.ndarray
    n: int
    d_p: int

    @classmethod
    def from_scores(cls, scores) -> "CostCache":
        arr = data_matrix(scores)
        n, d_p = arr.shape
        cum = np.zeros((n + 1, d_p))
        np.cumsum(arr, axis=0, out=cum[1:])
        cum_sq = np.zeros(n + 1)
        np.cumsum(np.sum(arr * arr, axis=1), out=cum_sq[1:])
        return cls(cum=cum, cum_sq=cum_sq, n=n, d_p=d_p)


def segment_cost(cache: CostCache, a: int, b: int) -> float:
    """SSE of the block (a, b] around its own mean; nonnegative."""
    if not 0 <= a < b <= cache.n:
        raise IndexError(f"invalid block ({a}, {b}] for n={cache.n}")
    diff = cache.cum[b] - cache.cum[a]
    val = cache.cum_sq[b] - cache.cum_sq[a] - float(diff @ diff) / (b - a)
    return max(val, 0.0)


def _costs_ending_at(cache: CostCache, t: int) -> np.ndarray:
    """Vector of segment_cost(a, t] for a = 0..t-1."""
    diff = cache.cum[t] - cache.cum[:t]
    sq = cache.cum_sq[t] - cache.cum_sq[:t]
    lengths = t - np.arange(t)
    return np.maximum(sq - np.sum(diff * diff, axis=1) / lengths, 0.0)


def _costs_starting_at(cache: CostCache, a: int, b_vec: np.ndarray) -> np.ndarray:
    diff = cache.cum[b_vec] - cache.cum[a]
    sq = cache.cum_sq[b_vec] - cache.cum_sq[a]
    return np.maximum(sq - np.sum(diff * diff, axis=1) / (b_vec - a), 0.0)


def _bs_best_split(cache: CostCache, a: int, b: int, min_seg: int):
    """Best admissible split of (a, b], or None if the block is too short.

    Returns (gain, t) where gain is the SSE reduction; ties go to the
    smallest t.
    """
    if b - a < 2 * min_seg:
        return None
    ts = np.arange(a + min_seg, b - min_seg + 1)
    whole = segment_cost(cache, a, b)
    # left costs: (a, t]; right costs: (t, b]
    left = _costs_starting_at(cache, a, ts)
    right_diff = cache.cum[b] - cache.cum[ts]
    right_sq = cache.cum_sq[b] - cache.cum_sq[ts]
    right = np.maximum(right_sq - np.sum(right_diff * right_diff, axis=1) / (b - ts), 0.0)
    gains = whole - left - right
    i = int(np.argmax(gains))
    return float(gains[i]), int(ts[i])


def _bs_split_path(cache: CostCache, k_max: int, min_seg: int) -> list[int]:
    """Greedy split positions in insertion order, up to k_max of them."""
    candidates = {}
    first = _bs_best_split(cache, 0, cache.n, min_seg)
    if first is not None:
        candidates[(0, cache.n)] = first
    path: list[int] = []
    while len(path) < k_max and candidates:
        # prefer the largest gain, then the smallest split, then the smallest start
        (a, b), (_, t) = min(
            candidates.items(), key=lambda item: (-item[1][0], item[1][1], item[0][0])
        )
        path.append(t)
        del candidates[(a, b)]
        for child in ((a, t), (t, b)):
            best = _bs_best_split(cache, child[0], child[1], min_seg)
            if best is not None:
                candidates[child] = best
    return path


def binary_segmentation(scores, k: int, min_seg: int = 5) -> Segmentation:
    """Greedy recursive segmentation with exactly k boundaries.

    At each step the segment and position with the largest SSE reduction
    are split, subject to ``min_seg``.  Raises InfeasibleError when k
    boundaries cannot be placed.
    """
    cache = CostCache.from_scores(scores)
    _check_feasible(cache.n, k, min_seg)
    path = _bs_split_path(cache, k, min_seg)
    if len(path) < k:
        raise InfeasibleError(
            f"greedy recursion stalled after {len(path)} of {k} splits "
            f"(n={cache.n}, min_seg={min_seg})"
        )
    return Segmentation(taus=tuple(sorted(path[:k])), n=cache.n, min_seg=min_seg)


def _check_feasible(n: int, k: int, min_seg: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < (k + 1) * min_seg:
        raise InfeasibleError(
            f"cannot place {k} boundaries in n={n} with min_seg={min_seg}: "
            f"need n >= {(k + 1) * min_seg}"
        )


def _sn_tables(cache: CostCache, k_max: int, min_seg: int):
    """Exact DP tables for 0..k_max boundaries.

    cost[j, t] is the minimal SSE of the first t points split by exactly
    j boundaries; back[j, t] is the smallest last boundary achieving it.
    """
    n = cache.n
    cost = np.full((k_max + 1, n + 1), np.inf)
    back = np.zeros((k_max + 1, n + 1), dtype=np.int64)
    for t in range(1, n + 1):
        col = _costs_ending_at(cache, t)
        if t >= min_seg:
            cost[0, t] = col[0]
        j_hi = min(k_max, t // min_seg - 1)
        for j in range(1, j_hi + 1):
            lo, hi = j * min_seg, t - min_seg
            if hi < lo:
                continue
            window = cost[j - 1, lo : hi + 1] + col[lo : hi + 1]
            i = int(np.argmin(window))
            cost[j, t] = window[i]
            back[j, t] = lo + i
    return cost, back


def _sn_extract(back: np.ndarray, k: int, n: int, min_seg: int) -> Segmentation:
    taus = []
    t = n
    for j in range(k, 0, -1):
        t = int(back[j, t])
        taus.append(t)
    return Segmentation(taus=tuple(reversed(taus)), n=n, min_seg=min_seg)


def segment_neighborhood(scores, k: int, min_seg: int = 5) -> Segmentation:
    """Exact minimum-SSE segmentation with exactly k boundaries.

    Dynamic program over all admissible boundary placements; O(n^2 k)
    time with the prefix-sum cache.
    """
    cache = CostCache.from_scores(scores)
    _check_feasible(cache.n, k, min_seg)
    cost, back = _sn_tables(cache, k, min_seg)
    if not np.isfinite(cost[k, cache.n]):
        raise InfeasibleError(f"no admissible segmentation with k={k}, min_seg={min_seg}")
    return _sn_extract(back, k, cache.n, min_seg)


def fit_all_candidates(scores, m: CandidateSet, kind: DetectorKind) -> dict[int, Segmentation]:
    """One segmentation per candidate count in ``m``.

    The segment-neighborhood table is built once and shared across all
    counts; binary segmentation reuses a single greedy path, taking its
    first k splits for candidate k.
    """
    cache = CostCache.from_scores(scores)
    for k in m:
        try:
            _check_feasible(cache.n, k, kind.min_seg)
        except InfeasibleError as exc:
            raise InfeasibleError(f"candidate K={k} infeasible: {exc}") from None

    out: dict[int, Segmentation] = {}
    if kind.kind == SEGMENT_NEIGHBORHOOD:
        cost, back = _sn_tables(cache, m.k_max, kind.min_seg)
        for k in m:
            if not np.isfinite(cost[k, cache.n]):
                raise InfeasibleError(f"candidate K={k} infeasible for n={cache.n}")
            out[k] = _sn_extract(back, k, cache.n, kind.min_seg)
        return out

    path = _bs_split_path(cache, m.k_max, kind.min_seg)
    for k in m:
        if len(path) < k:
            raise InfeasibleError(
                f"candidate K={k} infeasible: greedy recursion produced only "
                f"{len(path)} splits"
            )
        out[k] = Segmentation(taus=tuple(sorted(path[:k])), n=cache.n, min_seg=kind.min_seg)
    return out
