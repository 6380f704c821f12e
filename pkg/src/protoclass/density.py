"""Streaming class statistics, Cauchy data density, and typicality.

The per-class mean and mean of squared norms are maintained recursively in
a single pass, so the density of any point around the running mean is
available in closed form at every step:

    D(x) = 1 / (1 + ||x - mean||^2 / var),   var = mean_sq_norm - ||mean||^2

Typicality turns a set of data clouds into a support-weighted mixture of
Cauchy kernels, normalized over an evaluation grid so the profile is a
discrete probability vector.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, StateError

# Variance floor below which the density collapses to an indicator at the mean.
EPS = 1e-12


class RunningStats:
    """Single-pass mean / mean-squared-norm / count for one sample stream.

    Updates are order-dependent and strictly sequential; reads are safe once
    the stream is frozen.
    """

    __slots__ = ("mean", "mean_sq_norm", "count")

    def __init__(self, mean: np.ndarray | None = None, mean_sq_norm: float = 0.0,
                 count: int = 0):
        self.mean = mean
        self.mean_sq_norm = float(mean_sq_norm)
        self.count = int(count)

    def update(self, x) -> "RunningStats":
        """Absorb one sample into the running statistics."""
        x = np.asarray(x, dtype=np.float64)
        if self.count > 0 and x.shape != self.mean.shape:
            raise DimensionError(
                f"sample has shape {x.shape}, stats track {self.mean.shape}"
            )
        self.count += 1
        i = self.count
        if i == 1:
            self.mean = x.copy()
            self.mean_sq_norm = float(np.dot(x, x))
        else:
            a = (i - 1) / i
            b = 1.0 / i
            self.mean = a * self.mean + b * x
            self.mean_sq_norm = a * self.mean_sq_norm + b * float(np.dot(x, x))
        return self

    def variance(self) -> float:
        """Mean squared distance from the mean, clamped at 0 against round-off."""
        v = self.mean_sq_norm - float(np.dot(self.mean, self.mean))
        return v if v > 0.0 else 0.0

    def copy(self) -> "RunningStats":
        mean = None if self.mean is None else self.mean.copy()
        return RunningStats(mean, self.mean_sq_norm, self.count)

    def __repr__(self) -> str:
        return f"RunningStats(count={self.count}, mean_sq_norm={self.mean_sq_norm})"


def batch_density(stats: RunningStats, points) -> np.ndarray:
    """Density of each row of ``points`` under the running statistics."""
    if stats.count < 1:
        raise StateError("density requires at least one absorbed sample")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != stats.mean.shape[0]:
        raise DimensionError(
            f"points have shape {pts.shape}, stats track dimension {stats.mean.shape[0]}"
        )
    diffs = pts - stats.mean
    d2 = (diffs * diffs).sum(axis=1)
    var = stats.variance()
    if var <= EPS:
        # Degenerate spread: density is 1 exactly at the mean, 0 elsewhere.
        return np.where(d2 <= EPS, 1.0, 0.0)
    return 1.0 / (1.0 + d2 / var)


def density(stats: RunningStats, x) -> float:
    """Cauchy-form density of a single point; 1 at the mean, decreasing outward."""
    x = np.asarray(x, dtype=np.float64)
    return float(batch_density(stats, x[np.newaxis, :])[0])


def typicality(clouds, grid) -> np.ndarray:
    """Support-weighted kernel mixture over ``grid``, normalized to sum to 1.

    Each cloud contributes a Cauchy kernel centered at its prototype with
    scale ``radius_sq`` (floored at EPS), weighted by its support.  The
    normalization is discrete over the supplied grid, so the result is a
    probability vector usable for ranking and visualization.
    """
    clouds = list(clouds)
    if not clouds:
        raise StateError("typicality requires at least one cloud")
    G = np.asarray(grid, dtype=np.float64)
    if G.ndim == 1:
        G = G[:, np.newaxis]
    if G.shape[0] == 0:
        raise StateError("typicality requires a nonempty grid")
    protos = np.stack([np.asarray(c.prototype, dtype=np.float64) for c in clouds])
    if G.shape[1] != protos.shape[1]:
        raise DimensionError(
            f"grid dimension {G.shape[1]} does not match prototypes {protos.shape[1]}"
        )
    supports = np.array([float(c.support) for c in clouds])
    scales = np.maximum(np.array([float(c.radius_sq) for c in clouds]), EPS)

    diffs = G[:, np.newaxis, :] - protos[np.newaxis, :, :]
    d2 = (diffs * diffs).sum(axis=2)
    kernels = 1.0 / (1.0 + d2 / scales)
    raw = kernels @ supports
    return raw / raw.sum()
