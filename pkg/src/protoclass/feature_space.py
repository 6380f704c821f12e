"""Data-space transforms and distance measures.

Training features are standardized per column (sample standard deviation)
and then min-max scaled so every component lands in [0, 1].  The fitted
per-column parameters are frozen next to the model and re-applied verbatim
to validation inputs, whose out-of-range components are clipped back into
[0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionError

# Squared chord length between two unit vectors 30 degrees apart.  Vectors
# closer than this in direction are treated as pointing the same way; it is
# the default initial squared radius of a fresh data cloud.
ANGLE_30_CHORD_SQ = 2.0 - 2.0 * math.cos(math.pi / 6.0)


@dataclass(frozen=True)
class NormalizationParams:
    """Per-column statistics fixed on a training matrix.

    ``mean``/``std`` come from the raw training columns, ``min``/``max``
    from the standardized ones.  Applying the stored parameters to the
    training matrix reproduces the normalized matrix bit-identically.
    """

    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


def _as_matrix(matrix) -> np.ndarray:
    try:
        arr = np.asarray(matrix, dtype=np.float64)
    except ValueError as exc:
        raise DimensionError(f"inconsistent row lengths: {exc}") from exc
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D sample matrix, got ndim={arr.ndim}")
    return arr


def _check_dim(arr: np.ndarray, params: NormalizationParams) -> None:
    if arr.shape[1] != params.dim:
        raise DimensionError(
            f"matrix has {arr.shape[1]} columns but params were fitted on {params.dim}"
        )


def _apply_standardize(matrix: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    # Columns with zero spread carry no information; map them to 0 instead
    # of dividing by zero.
    safe = np.where(std > 0.0, std, 1.0)
    out = (matrix - mean) / safe
    out[:, std == 0.0] = 0.0
    return out


def standardize(matrix) -> tuple[np.ndarray, NormalizationParams]:
    """Center and scale each column to zero mean and unit sample std.

    Returns the standardized matrix together with the fitted parameters;
    ``params.min``/``params.max`` are taken from the standardized columns so
    the same object drives the follow-up min-max step.
    """
    X = _as_matrix(matrix)
    if X.shape[0] < 2:
        raise DimensionError(f"standardize needs at least 2 rows, got {X.shape[0]}")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    X_hat = _apply_standardize(X, mean, std)
    params = NormalizationParams(
        mean=mean, std=std, min=X_hat.min(axis=0), max=X_hat.max(axis=0)
    )
    return X_hat, params


def minmax_normalize(matrix, params: NormalizationParams) -> np.ndarray:
    """Rescale standardized values into [0, 1] using the stored column ranges.

    Degenerate columns (min == max) map to 0.5; anything falling outside the
    training range is clipped, so the output always lies in [0, 1].
    """
    X = _as_matrix(matrix)
    _check_dim(X, params)
    span = params.max - params.min
    safe = np.where(span > 0.0, span, 1.0)
    out = (X - params.min) / safe
    out[:, span == 0.0] = 0.5
    np.clip(out, 0.0, 1.0, out=out)
    return out


def fit_transform(matrix) -> tuple[np.ndarray, NormalizationParams]:
    """Fit normalization on a training matrix and return its [0,1] image."""
    X_hat, params = standardize(matrix)
    return minmax_normalize(X_hat, params), params


def transform(matrix, params: NormalizationParams) -> np.ndarray:
    """Apply previously fitted parameters to new samples (with clipping)."""
    X = _as_matrix(matrix)
    _check_dim(X, params)
    return minmax_normalize(_apply_standardize(X, params.mean, params.std), params)


def euclidean_sq(x, y) -> float:
    """Squared Euclidean distance between two equal-length vectors."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.dot(d, d))


def angular_dissimilarity(x, y) -> float:
    """Distance between the directions of two vectors.

    Equals the chord length ``sqrt(2 - 2 cos(theta))`` for the angle theta
    between the vectors, so it lies in [0, 2] and is scale-invariant.
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("angular dissimilarity is undefined for a zero vector")
    return float(np.linalg.norm(a / na - b / nb))
