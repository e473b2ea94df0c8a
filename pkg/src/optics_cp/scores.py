"""Score transformations turning model-specific change problems into mean changes.

Each family maps an observation z to the gradient of a fitting loss at a
fixed reference parameter, so a change in the family's parameter becomes
a change in the mean of the score sequence:

    mean        s = z
    variance    s = log(z^2)            (scalar model)
    regression  s = y * (1, x')'        (response y, covariates x)
    covariance  s = vech(z z')
    network     s = vech(Z)             (Z a symmetric d x d adjacency)

vech stacks the lower triangle of a symmetric matrix column by column,
diagonal included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TimeSeries, _as_matrix
from .errors import DomainError, ShapeError

MEAN = "mean"
VARIANCE = "variance"
REGRESSION = "regression"
COVARIANCE = "covariance"
NETWORK = "network"

FAMILIES = (MEAN, VARIANCE, REGRESSION, COVARIANCE, NETWORK)


@dataclass(frozen=True)
class ScoreModel:
    """A model family plus an optional reference parameter.

    The reference parameter ``gamma`` defaults to the zero vector; the
    supported families' scores do not depend on it, so it is carried for
    interface completeness only.
    """

    family: str
    gamma: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")

    def score_dim(self, d: int) -> int:
        """Score dimension produced from d-dimensional input."""
        if self.family == MEAN:
            return d
        if self.family == VARIANCE:
            return 1
        if self.family == REGRESSION:
            return d + 1
        # covariance and network both emit vech of a symmetric d x d matrix
        return d * (d + 1) // 2


@dataclass(frozen=True)
class ScoreSeries:
    """A sequence of score vectors; all inference runs on these."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.data)
        if not np.all(np.isfinite(arr)):
            raise ValueError("score series contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d_p(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.n


def vech(mat: np.ndarray) -> np.ndarray:
    """Column-stacked lower triangle of a square matrix, diagonal included."""
    mat = np.asarray(mat, dtype=np.float64)
    d = mat.shape[0]
    if mat.shape != (d, d):
        raise ShapeError(f"vech expects a square matrix, got shape {mat.shape}")
    return np.concatenate([mat[j:, j] for j in range(d)])


def unvech(v: np.ndarray) -> np.ndarray:
    """Rebuild the symmetric matrix whose vech is ``v``."""
    v = np.asarray(v, dtype=np.float64).ravel()
    d = int((np.sqrt(8 * v.size + 1) - 1) / 2)
    if d * (d + 1) // 2 != v.size:
        raise ShapeError(f"length {v.size} is not a triangular number")
    mat = np.zeros((d, d))
    pos = 0
    for j in range(d):
        mat[j:, j] = v[pos : pos + d - j]
        pos += d - j
    return mat + np.tril(mat, -1).T


def _vech_indices(d: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.concatenate([np.arange(j, d) for j in range(d)])
    cols = np.concatenate([np.full(d - j, j) for j in range(d)])
    return rows, cols


def transform(ts: TimeSeries, model: ScoreModel, covariates: np.ndarray | None = None) -> ScoreSeries:
    """Compute the score sequence for a series under the given model family.

    Parameters
    ----------
    ts : TimeSeries
        Raw observations.  For the regression family these are the
        responses (d must be 1) and ``covariates`` must supply one row
        per observation.  For the network family each observation is a
        flattened symmetric d x d adjacency matrix (length d*d).
    model : ScoreModel
        Selected family.
    covariates : array, optional
        (n, d) design matrix, regression family only.
    """
    z = ts.data
    if model.family == MEAN:
        return ScoreSeries(z)

    if model.family == VARIANCE:
        sq = np.sum(z * z, axis=1)
        if np.any(sq == 0.0):
            raise DomainError("variance scores are undefined at zero observations")
        return ScoreSeries(np.log(sq).reshape(-1, 1))

    if model.family == REGRESSION:
        if ts.d != 1:
            raise ShapeError(f"regression expects scalar responses, got d={ts.d}")
        if covariates is None:
            raise ShapeError("regression requires a covariate matrix")
        x = _as_matrix(covariates)
        if x.shape[0] != ts.n:
            raise ShapeError(
                f"covariates have {x.shape[0]} rows for {ts.n} observations"
            )
        y = z[:, 0]
        return ScoreSeries(np.column_stack([y, y[:, None] * x]))

    if model.family == COVARIANCE:
        if ts.d < 2:
            raise ShapeError(f"covariance scores require d >= 2, got d={ts.d}")
        rows, cols = _vech_indices(ts.d)
        outer = z[:, :, None] * z[:, None, :]
        return ScoreSeries(outer[:, rows, cols])

    # network: each row is a flattened symmetric d x d matrix
    side = int(round(np.sqrt(ts.d)))
    if side * side != ts.d or side < 2:
        raise ShapeError(
            f"network observations must be flattened square matrices with side >= 2, "
            f"got row length {ts.d}"
        )
    mats = z.reshape(ts.n, side, side)
    if not np.allclose(mats, np.transpose(mats, (0, 2, 1)), atol=1e-8):
        raise ShapeError("network adjacency matrices must be symmetric")
    rows, cols = _vech_indices(side)
    return ScoreSeries(mats[:, rows, cols])
