"""Extensions of the base procedure: multiple splitting, Huber robustness,
and m-dependent data.

Multiple splitting runs the base pipeline on L order-preserving
subsamples and fuses the per-candidate p-values with the Cauchy
combination, which stays valid under arbitrary dependence between the
splits.  The m-dependent variant is the same construction with
L = m + 1, so that observations within each subsample are at least m + 1
apart and hence independent.  The Huber variant swaps the squared-norm
fit measure for a coordinatewise Huber loss, leaving the rest of the
pipeline untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import CandidateSet, TimeSeries, order_preserving_l_split, split_like
from .detectors import DetectorKind
from .errors import ConfigError
from .inference import (
    BootstrapConfig,
    ConfidenceSet,
    PValueTable,
    confidence_set,
    optics,
    run_on_scores,
)
from .scores import ScoreModel, transform


@dataclass(frozen=True)
class CauchyWeights:
    """Nonnegative combination weights summing to one."""

    omega: tuple[float, ...]

    def __post_init__(self):
        omega = tuple(float(w) for w in self.omega)
        object.__setattr__(self, "omega", omega)
        if any(w < 0 for w in omega):
            raise ValueError("weights must be nonnegative")
        if abs(sum(omega) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(omega)}")

    @classmethod
    def uniform(cls, L: int) -> "CauchyWeights":
        return cls(omega=tuple(1.0 / L for _ in range(L)))


@dataclass(frozen=True)
class HuberConfig:
    """Huber threshold; ``adaptive`` rescales it from the even-half spread."""

    kappa: float = 1.5
    adaptive: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(f"kappa must be finite and positive, got {self.kappa}")


def cauchy_combine(pvals, w: CauchyWeights | None = None) -> float:
    """Combine p-values through the weighted Cauchy transform.

    T = sum_r w_r * tan((0.5 - p_r) * pi), mapped back through
    0.5 - arctan(T) / pi.  Valid under arbitrary dependence; strictly
    increasing in every input.  Inputs should lie strictly inside (0, 1).
    """
    p = np.asarray(pvals, dtype=np.float64).ravel()
    if w is None:
        w = CauchyWeights.uniform(len(p))
    omega = np.asarray(w.omega)
    if omega.shape != p.shape:
        raise ValueError(f"{len(omega)} weights for {len(p)} p-values")
    stat = float(np.sum(omega * np.tan((0.5 - p) * np.pi)))
    return 0.5 - math.atan(stat) / math.pi


def huber_loss(u, kappa: float):
    """Huber loss: quadratic inside [-kappa, kappa], linear outside.

    Scalars map to floats; vectors are summed over coordinates.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    arr = np.asarray(u, dtype=np.float64)
    vals = _huber_elem(arr, kappa)
    if arr.ndim == 0:
        return float(vals)
    return float(vals.sum())


def _huber_elem(x: np.ndarray, kappa: float) -> np.ndarray:
    ax = np.abs(x)
    return np.where(ax <= kappa, 0.5 * (x * x), kappa * ax - 0.5 * (kappa * kappa))


def _huber_rows(resid: np.ndarray, kappa: float) -> np.ndarray:
    return _huber_elem(resid, kappa).sum(axis=1)


def _adaptive_kappa(even: np.ndarray, fallback: float) -> float:
    centered = even - np.median(even, axis=0)
    mad = float(np.median(np.abs(centered)))
    if mad <= 0:
        return fallback
    return 1.345 * mad / 0.6745


def h_optics(
    ts: TimeSeries,
    model: ScoreModel,
    kind: DetectorKind,
    m: CandidateSet,
    alpha: float = 0.1,
    cfg: BootstrapConfig | None = None,
    h: HuberConfig | None = None,
    covariates: np.ndarray | None = None,
    threads: int = 1,
) -> tuple[ConfidenceSet, PValueTable]:
    """Huber-robust variant: per-point fits use the coordinatewise Huber
    loss of the residuals instead of their squared norm.

    With kappa above every residual magnitude the loss is half the
    squared norm, the factor cancels in studentization, and the result
    matches the plain pipeline exactly.
    """
    if cfg is None:
        cfg = BootstrapConfig()
    if h is None:
        h = HuberConfig()
    scores = transform(ts, model, covariates)
    kappa = h.kappa
    if h.adaptive:
        even = scores.data[1 : 2 * (scores.n // 2) : 2]
        kappa = _adaptive_kappa(even, h.kappa)
    return run_on_scores(
        scores, kind, m, alpha, cfg,
        row_fit=lambda resid: _huber_rows(resid, kappa),
        threads=threads,
    )


def _clip_unit(p: np.ndarray, b_reps: int) -> np.ndarray:
    # keep tan finite at the discrete bootstrap endpoints 0 and 1
    lo = 1.0 / (2.0 * b_reps)
    return np.clip(p, lo, 1.0 - lo)


def _combine_split_runs(
    runs: list[tuple[ConfidenceSet, PValueTable]],
    w: CauchyWeights,
    alpha: float,
    b_reps: int,
) -> tuple[ConfidenceSet, PValueTable]:
    tables = [table for _, table in runs]
    candidates = tables[0].candidates
    for table in tables[1:]:
        if table.candidates != candidates:
            raise ConfigError("split runs disagree on the candidate set")

    p_mat = np.stack([t.p_hat for t in tables])  # (L, K)
    clipped = _clip_unit(p_mat, b_reps)
    omega = np.asarray(w.omega)[:, None]
    stat = np.sum(omega * np.tan((0.5 - clipped) * np.pi), axis=0)
    combined_p = 0.5 - np.arctan(stat) / np.pi

    table = PValueTable(
        candidates=candidates,
        p_hat=combined_p,
        t_stat=stat,
        criterion=np.mean([t.criterion for t in tables], axis=0),
        segmentations=tables[0].segmentations,
        delta_hat=np.mean([t.delta_hat for t in tables], axis=0),
        n=tables[0].n,
        splits=tuple(tables),
    )
    return confidence_set(table, alpha), table


def ms_optics(
    ts: TimeSeries,
    model: ScoreModel,
    kind: DetectorKind,
    m: CandidateSet,
    alpha: float = 0.1,
    cfg: BootstrapConfig | None = None,
    L: int = 2,
    w: CauchyWeights | None = None,
    covariates: np.ndarray | None = None,
    threads: int = 1,
) -> tuple[ConfidenceSet, PValueTable]:
    """Multiple-splitting variant.

    The series is divided into L order-preserving subsamples, the base
    pipeline runs on each with its own parity split (subsample r derives
    its seed as seed XOR r), and the per-candidate p-values are fused by
    Cauchy combination before thresholding.  L = 1 is the base procedure
    itself.
    """
    if cfg is None:
        cfg = BootstrapConfig()
    if L == 1:
        # a combination of one is the identity; run the base pipeline as is
        return optics(ts, model, kind, m, alpha, cfg, covariates=covariates, threads=threads)
    if w is None:
        w = CauchyWeights.uniform(L)
    if len(w.omega) != L:
        raise ValueError(f"{len(w.omega)} weights for L={L} splits")

    subs = order_preserving_l_split(ts, L)
    cov_subs = split_like(np.asarray(covariates), L) if covariates is not None else [None] * L
    runs = []
    for r, sub in enumerate(subs):
        cfg_r = replace(cfg, seed=cfg.seed ^ r)
        runs.append(
            optics(sub, model, kind, m, alpha, cfg_r, covariates=cov_subs[r], threads=threads)
        )
    return _combine_split_runs(runs, w, alpha, cfg.b_reps)


def m_optics(
    ts: TimeSeries,
    model: ScoreModel,
    kind: DetectorKind,
    m_set: CandidateSet,
    alpha: float = 0.1,
    cfg: BootstrapConfig | None = None,
    m_dep: int = 0,
    covariates: np.ndarray | None = None,
    threads: int = 1,
) -> tuple[ConfidenceSet, PValueTable]:
    """Variant for m-dependent data: order-preserving (m+1)-way splitting
    with uniform Cauchy combination.  m_dep = 0 reduces to the base
    procedure."""
    if m_dep < 0:
        raise ValueError(f"m_dep must be >= 0, got {m_dep}")
    return ms_optics(
        ts, model, kind, m_set, alpha, cfg,
        L=m_dep + 1,
        covariates=covariates,
        threads=threads,
    )
