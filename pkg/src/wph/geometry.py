"""Point clouds, per-point growth-rate functions, and weighted distance matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PointCloud",
    "RadiusFunction",
    "Linear",
    "Affine",
    "PowerLaw",
    "Region",
    "linear_radii",
    "pairwise_distances",
    "weighted_distance_matrix",
]


def _freeze(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PointCloud:
    """Finite point set in R^d with one positive weight per point.

    The weight of a point is its linear ball-growth rate: at scale t, the ball
    centered on point i has radius ``weights[i] * t``.  A 1-d ``points`` input
    is interpreted as n points on the real line.
    """

    points: np.ndarray
    weights: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 0)
        if pts.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError(
                f"got {pts.shape[0]} points but {w.shape[0]} weights"
            )
        if w.size and not (np.all(np.isfinite(w)) and np.all(w > 0.0)):
            raise ValueError("weights must be strictly positive and finite")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != pts.shape[0]:
                raise ValueError("labels must match the number of points")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(w))

    def __len__(self):
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


class RadiusFunction:
    """Strictly increasing ball-growth profile with exact inverse.

    Concrete families are :class:`Linear`, :class:`Affine` and
    :class:`PowerLaw`; they carry closed forms for the inverse and the
    inverse's derivative so perturbation bounds need no numerical inversion.
    """

    #: lower end of the range; inverse(s) is only defined for s >= range_start
    range_start: float = 0.0

    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def inverse(self, s: float) -> float:
        raise NotImplementedError

    def inverse_derivative(self, s: float) -> float:
        raise NotImplementedError

    def inverse_array(self, s: np.ndarray) -> np.ndarray:
        """Vectorized inverse, clamped to 0 below the range start."""
        raise NotImplementedError

    def inverse_clamped(self, s: float) -> float:
        """Inverse extended by 0 below the range start (entry-time convention)."""
        return self.inverse(s)

    def sup_inverse_derivative(self, upper: float) -> float:
        """Exact supremum of the inverse's derivative over [0, upper]."""
        raise NotImplementedError

    def _check_range(self, s: float):
        if s < self.range_start:
            raise ValueError(
                f"{s!r} is below the range lower bound {self.range_start!r} of {self!r}"
            )


@dataclass(frozen=True)
class Linear(RadiusFunction):
    """r(t) = rate * t."""

    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError("rate must be positive and finite")

    def __call__(self, t):
        return self.rate * t

    def inverse(self, s):
        self._check_range(s)
        return s / self.rate

    def inverse_derivative(self, s):
        self._check_range(s)
        return 1.0 / self.rate

    def inverse_array(self, s):
        return np.maximum(np.asarray(s, dtype=float), 0.0) / self.rate

    def sup_inverse_derivative(self, upper):
        return 1.0 / self.rate


@dataclass(frozen=True)
class Affine(RadiusFunction):
    """r(t) = offset + rate * t: a ball born with positive radius ``offset``.

    The range is [offset, inf); entry-time computations clamp the inverse to 0
    below the offset so that points already covered at t=0 enter at scale 0.
    """

    offset: float
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.offset) and self.offset >= 0):
            raise ValueError("offset must be nonnegative and finite")
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError("rate must be positive and finite")

    @property
    def range_start(self) -> float:  # type: ignore[override]
        return self.offset

    def __call__(self, t):
        return self.offset + self.rate * t

    def inverse(self, s):
        self._check_range(s)
        return (s - self.offset) / self.rate

    def inverse_clamped(self, s):
        return max(0.0, (s - self.offset) / self.rate)

    def inverse_derivative(self, s):
        self._check_range(s)
        return 1.0 / self.rate

    def inverse_array(self, s):
        return np.maximum(np.asarray(s, dtype=float) - self.offset, 0.0) / self.rate

    def sup_inverse_derivative(self, upper):
        return 1.0 / self.rate if upper > self.offset else 0.0


@dataclass(frozen=True)
class PowerLaw(RadiusFunction):
    """r(t) = rate * t**exponent.

    For exponent > 1 the inverse's derivative blows up at 0, so the supremum
    over any interval touching 0 is infinite; perturbation bounds then hold
    vacuously.
    """

    rate: float
    exponent: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError("rate must be positive and finite")
        if not (math.isfinite(self.exponent) and self.exponent > 0):
            raise ValueError("exponent must be positive and finite")

    def __call__(self, t):
        return self.rate * t ** self.exponent

    def inverse(self, s):
        self._check_range(s)
        return (s / self.rate) ** (1.0 / self.exponent)

    def inverse_derivative(self, s):
        self._check_range(s)
        p = self.exponent
        if s == 0.0:
            if p > 1.0:
                return math.inf
            if p < 1.0:
                return 0.0
            return 1.0 / self.rate
        return (s / self.rate) ** (1.0 / p - 1.0) / (p * self.rate)

    def inverse_array(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        return (s / self.rate) ** (1.0 / self.exponent)

    def sup_inverse_derivative(self, upper):
        p = self.exponent
        if p > 1.0:
            return math.inf
        if p == 1.0:
            return 1.0 / self.rate
        if upper <= 0.0:
            return 0.0
        return (upper / self.rate) ** (1.0 / p - 1.0) / (p * self.rate)


def linear_radii(cloud: PointCloud) -> tuple[Linear, ...]:
    """One linear growth function per point, with rate = the point's weight."""
    return tuple(Linear(float(w)) for w in cloud.weights)


@dataclass(frozen=True)
class Region:
    """Axis-aligned box with a per-axis evaluation grid resolution."""

    lower: np.ndarray
    upper: np.ndarray
    resolution: tuple[int, ...]

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lower and upper corners must share a nonzero dimension")
        if not np.all(lo < hi):
            raise ValueError("lower corner must be strictly below upper corner")
        res = self.resolution
        if isinstance(res, int):
            res = (res,) * lo.size
        res = tuple(int(r) for r in res)
        if len(res) != lo.size or any(r < 1 for r in res):
            raise ValueError("resolution must give a positive count per axis")
        object.__setattr__(self, "lower", _freeze(lo))
        object.__setattr__(self, "upper", _freeze(hi))
        object.__setattr__(self, "resolution", res)

    @property
    def dim(self) -> int:
        return self.lower.size

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def grid(self) -> np.ndarray:
        """All grid points as an (N, d) array, N = prod(resolution)."""
        axes = [
            np.linspace(self.lower[i], self.upper[i], self.resolution[i])
            for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> bool:
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            return True
        return bool(
            np.all(pts >= self.lower - tol) and np.all(pts <= self.upper + tol)
        )

    @classmethod
    def bounding(cls, points: np.ndarray, margin: float = 0.0, resolution=64) -> "Region":
        pts = np.asarray(points, dtype=float)
        lo = pts.min(axis=0) - margin
        hi = pts.max(axis=0) + margin
        # degenerate axes (all points equal) still need a proper box
        flat = hi - lo <= 0
        lo[flat] -= 0.5
        hi[flat] += 0.5
        return cls(lo, hi, resolution)


def pairwise_distances(cloud: PointCloud) -> np.ndarray:
    """Symmetric matrix of Euclidean distances, zero diagonal."""
    pts = cloud.points
    diff = pts[:, None, :] - pts[None, :, :]
    m = np.sqrt(np.sum(diff * diff, axis=-1))
    if m.size:
        np.fill_diagonal(m, 0.0)
    return m


def weighted_distance_matrix(cloud: PointCloud) -> np.ndarray:
    """Distance matrix rescaled entrywise by the weight sums.

    Entry (i, j) is d(x_i, x_j) / (w_i + w_j): the scale at which the balls of
    points i and j first touch under linear growth.  Feeding this matrix to a
    plain Rips builder at unit scale reproduces the weighted Rips filtration.
    """
    w = cloud.weights
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    m = pairwise_distances(cloud) / (w[:, None] + w[None, :])
    if m.size:
        np.fill_diagonal(m, 0.0)
    return m
