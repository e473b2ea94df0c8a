"""Confidence sets for the number of change-points.

The procedure: split the score sequence by index parity, fit one
segmentation per candidate count on the odd half, and judge each
candidate K by the out-of-sample criterion

    C(K) = mean_i || s_i_even - sbar_K,i_odd ||^2,

the mean squared distance of even-half scores from the odd-half segment
means.  For each rival J the per-point criterion differences

    xi_KJ_i = || s_i - sbar_K,i ||^2 - || s_i - sbar_J,i ||^2

are independent given the odd half; K is rejected when the studentized
max statistic T_K = max_J sqrt(n) * mean(xi) / rms(xi) is large relative
to its Gaussian multiplier bootstrap distribution.  The confidence set
collects every candidate whose bootstrap p-value exceeds alpha.

Numerical determinism: the studentized ratios xi/rms(xi) are snapped to
a fixed 2^-13 grid before entering the statistic, which makes T_K and
the bootstrap p-values exactly invariant when all scores are rescaled
by a positive constant.  Multipliers for replicate b come from a Philox
counter stream keyed by (seed, b), so serial and parallel execution
agree bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .core import CandidateSet, Segmentation, TimeSeries, data_matrix, segment_mean_map
from .detectors import DetectorKind, fit_all_candidates
from .errors import ConfigError, LengthError, ShapeError
from .scores import ScoreModel, ScoreSeries, transform

RIGHTMOST = "rightmost"
LEFTMOST = "leftmost"

# Resolution of the studentized ratios; 2^-13 keeps the statistic within
# ~1e-4 of its unsnapped value while making it exactly scale-invariant.
_STUDENT_GRID = 8192.0

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class BootstrapConfig:
    """Multiplier bootstrap settings.

    ``injected`` replaces the seeded Gaussian multipliers with an
    explicit (b_reps, n) matrix, mainly for tests.  ``conservative``
    switches the p-value to (1 + count) / (1 + B).
    """

    b_reps: int = 500
    seed: int = 0
    injected: np.ndarray | None = None
    conservative: bool = False

    def __post_init__(self):
        if self.b_reps < 1:
            raise ConfigError(f"b_reps must be >= 1, got {self.b_reps}")
        if self.injected is not None:
            inj = np.asarray(self.injected, dtype=np.float64)
            if inj.ndim != 2 or inj.shape[0] != self.b_reps:
                raise ConfigError(
                    f"injected multipliers must be ({self.b_reps}, n), got {inj.shape}"
                )
            object.__setattr__(self, "injected", inj)


@dataclass(frozen=True)
class XiMatrix:
    """Per-point criterion differences of one candidate against all rivals.

    Row r corresponds to rival rivals[r]: xi[r, i] is the difference of
    squared residuals at even index i, delta_hat[r] its mean, and
    sigma_hat[r] the root mean square.  ``studentized`` holds the
    grid-snapped rows xi / sigma_hat used by the test statistic; rows
    with sigma_hat == 0 are identically zero by convention.
    """

    k: int
    rivals: tuple[int, ...]
    xi: np.ndarray
    delta_hat: np.ndarray
    sigma_hat: np.ndarray
    studentized: np.ndarray
    n: int


@dataclass(frozen=True)
class PValueTable:
    """Bootstrap p-values, statistics and fit summaries for every candidate."""

    candidates: tuple[int, ...]
    p_hat: np.ndarray
    t_stat: np.ndarray
    criterion: np.ndarray
    segmentations: tuple[Segmentation, ...]
    delta_hat: np.ndarray  # [i, j] = mean criterion gap of candidate i over j
    n: int
    splits: tuple["PValueTable", ...] = ()

    def index_of(self, k: int) -> int:
        try:
            return self.candidates.index(k)
        except ValueError:
            raise KeyError(f"candidate {k} not in table") from None

    def entry(self, k: int) -> dict:
        i = self.index_of(k)
        return {
            "k": k,
            "p_hat": float(self.p_hat[i]),
            "t_stat": float(self.t_stat[i]),
            "criterion": float(self.criterion[i]),
            "taus": list(self.segmentations[i].taus),
        }


@dataclass(frozen=True)
class ConfidenceSet:
    """Candidates not rejected at level alpha; never empty.

    When every candidate is rejected the one with the largest p-value is
    retained (smallest count on ties) and ``fallback_used`` is set.
    """

    alpha: float
    members: tuple[int, ...]
    fallback_used: bool = False

    @property
    def rightmost(self) -> int:
        return max(self.members)

    @property
    def leftmost(self) -> int:
        return min(self.members)

    def __contains__(self, k) -> bool:
        return k in self.members

    def __len__(self) -> int:
        return len(self.members)


def criterion(seg: Segmentation, odd_scores: ScoreSeries, even_scores: ScoreSeries) -> float:
    """Out-of-sample fit of one segmentation: mean squared distance of the
    even half from the odd-half segment means."""
    odd = data_matrix(odd_scores)
    even = data_matrix(even_scores)
    if odd.shape != even.shape:
        raise ShapeError(f"odd/even shapes differ: {odd.shape} vs {even.shape}")
    means = segment_mean_map(odd, seg.boundaries())
    return float(_sq_rows(even - means).mean())


def _sq_rows(resid: np.ndarray) -> np.ndarray:
    """Row-wise squared norms; the plain per-point fit measure."""
    return (resid * resid).sum(axis=1)


def _snap(rows: np.ndarray) -> np.ndarray:
    return np.round(rows * _STUDENT_GRID) / _STUDENT_GRID


def _xi_from_fits(k: int, rivals: tuple[int, ...], fit_k: np.ndarray, fit_rivals: np.ndarray) -> XiMatrix:
    xi = fit_k[None, :] - fit_rivals
    delta = xi.mean(axis=1)
    sigma = np.sqrt((xi * xi).mean(axis=1))
    stud = np.zeros_like(xi)
    nz = sigma > 0
    if np.any(nz):
        stud[nz] = _snap(xi[nz] / sigma[nz, None])
    return XiMatrix(
        k=k,
        rivals=rivals,
        xi=xi,
        delta_hat=delta,
        sigma_hat=sigma,
        studentized=stud,
        n=xi.shape[1],
    )


def xi_matrix(
    k: int,
    segs: Mapping[int, Segmentation],
    odd: ScoreSeries,
    even: ScoreSeries,
) -> XiMatrix:
    """Criterion-difference rows for candidate k against every other entry of ``segs``."""
    if odd.n != even.n or odd.d_p != even.d_p:
        raise ShapeError("odd and even score series must have identical shape")
    rivals = tuple(j for j in sorted(segs) if j != k)
    fits = {
        j: _sq_rows(even.data - segment_mean_map(odd.data, segs[j].boundaries()))
        for j in sorted(segs)
    }
    fit_rivals = np.array([fits[j] for j in rivals]).reshape(len(rivals), odd.n)
    return _xi_from_fits(k, rivals, fits[k], fit_rivals)


def test_statistic(xm: XiMatrix) -> float:
    """Studentized max statistic: largest sqrt(n)-scaled mean of the
    studentized rows.  Zero-variance rows contribute 0; with no rivals
    the statistic is 0 by convention."""
    if len(xm.rivals) == 0:
        return 0.0
    rows = xm.studentized.sum(axis=1) / math.sqrt(xm.n)
    return float(rows.max())


def _multiplier_matrix(cfg: BootstrapConfig, n: int) -> np.ndarray:
    if cfg.injected is not None:
        if cfg.injected.shape[1] != n:
            raise ConfigError(
                f"injected multipliers have length {cfg.injected.shape[1]}, expected {n}"
            )
        return cfg.injected
    seed = cfg.seed & _SEED_MASK
    out = np.empty((cfg.b_reps, n))
    for b in range(cfg.b_reps):
        key = np.array([seed, b], dtype=np.uint64)
        out[b] = np.random.Generator(np.random.Philox(key=key)).standard_normal(n)
    return out


def _pvalue(xm: XiMatrix, t_obs: float, mult: np.ndarray, conservative: bool) -> float:
    if len(xm.rivals) == 0:
        # nothing to compare against: the candidate cannot be rejected
        return 1.0
    boot = (xm.studentized @ mult.T) / math.sqrt(xm.n)
    t_sharp = boot.max(axis=0)
    count = int(np.count_nonzero(t_sharp > t_obs))
    if conservative:
        return (1 + count) / (1 + mult.shape[0])
    return count / mult.shape[0]


def bootstrap_pvalue(xm: XiMatrix, cfg: BootstrapConfig) -> float:
    """Share of multiplier replicates whose statistic strictly exceeds the
    observed one.  Deterministic given the seed."""
    mult = _multiplier_matrix(cfg, xm.n)
    return _pvalue(xm, test_statistic(xm), mult, cfg.conservative)


def confidence_set(table: PValueTable, alpha: float) -> ConfidenceSet:
    """Threshold the table at alpha, retaining the best candidate if all fail."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    members = tuple(k for k, p in zip(table.candidates, table.p_hat) if p > alpha)
    if members:
        return ConfidenceSet(alpha=alpha, members=members)
    best = table.candidates[int(np.argmax(table.p_hat))]
    return ConfidenceSet(alpha=alpha, members=(best,), fallback_used=True)


def _parity_split_array(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = arr.shape[0] // 2
    return arr[0 : 2 * n : 2], arr[1 : 2 * n : 2]


def _map_indexed(fn: Callable[[int], object], count: int, threads: int) -> list:
    """Deterministic parallel map over range(count); results in index order."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def run_on_scores(
    scores: ScoreSeries,
    kind: DetectorKind,
    m: CandidateSet,
    alpha: float,
    cfg: BootstrapConfig,
    row_fit: Callable[[np.ndarray], np.ndarray] = _sq_rows,
    threads: int = 1,
) -> tuple[ConfidenceSet, PValueTable]:
    """Full pipeline from an already-transformed score sequence.

    ``row_fit`` maps an (n, d_p) residual matrix to per-point fit values;
    the default is the squared norm.  Robust variants substitute their
    own measure here and inherit everything else unchanged.
    """
    if scores.n < 4:
        raise LengthError(f"need at least 4 points to split, got {scores.n}")
    odd, even = _parity_split_array(scores.data)
    n = odd.shape[0]
    segs = fit_all_candidates(odd, m, kind)
    candidates = tuple(sorted(segs))

    fits = np.empty((len(candidates), n))
    for i, k in enumerate(candidates):
        fits[i] = row_fit(even - segment_mean_map(odd, segs[k].boundaries()))
    crit = fits.mean(axis=1)

    delta = np.zeros((len(candidates), len(candidates)))
    for i in range(len(candidates)):
        for j in range(len(candidates)):
            if i != j:
                delta[i, j] = float((fits[i] - fits[j]).mean())

    mult = _multiplier_matrix(cfg, n)

    def one_candidate(i: int) -> tuple[float, float]:
        rivals = tuple(c for c in candidates if c != candidates[i])
        xm = _xi_from_fits(candidates[i], rivals, fits[i], np.delete(fits, i, axis=0))
        t_obs = test_statistic(xm)
        return t_obs, _pvalue(xm, t_obs, mult, cfg.conservative)

    results = _map_indexed(one_candidate, len(candidates), threads)
    t_stat = np.array([r[0] for r in results])
    p_hat = np.array([r[1] for r in results])

    table = PValueTable(
        candidates=candidates,
        p_hat=p_hat,
        t_stat=t_stat,
        criterion=crit,
        segmentations=tuple(segs[k] for k in candidates),
        delta_hat=delta,
        n=n,
    )
    return confidence_set(table, alpha), table


def optics(
    ts: TimeSeries,
    model: ScoreModel,
    kind: DetectorKind,
    m: CandidateSet,
    alpha: float = 0.1,
    cfg: BootstrapConfig | None = None,
    covariates: np.ndarray | None = None,
    threads: int = 1,
) -> tuple[ConfidenceSet, PValueTable]:
    """Confidence set for the number of change-points in ``ts``.

    Transforms the series to scores, splits by parity, fits every
    candidate count on the odd half, and keeps the candidates whose
    bootstrap p-value exceeds alpha.  Deterministic given the seed in
    ``cfg`` regardless of thread count.
    """
    if cfg is None:
        cfg = BootstrapConfig()
    scores = transform(ts, model, covariates)
    return run_on_scores(scores, kind, m, alpha, cfg, threads=threads)


def copss_estimate(table: PValueTable) -> int:
    """Point estimate: the candidate minimizing the out-of-sample criterion
    (smallest count on ties)."""
    return table.candidates[int(np.argmin(table.criterion))]


def reduce(cs: ConfidenceSet, rule: str) -> int:
    """Collapse a set to a single count: its largest or smallest member."""
    if rule == RIGHTMOST:
        return cs.rightmost
    if rule == LEFTMOST:
        return cs.leftmost
    raise ValueError(f"unknown reduction rule {rule!r}")
