"""Unit-sphere primitives: validated vectors and samples, coordinate conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from .exceptions import DimensionMismatch, NotUnitNorm, OutOfRange, ZeroVector

UNIT_NORM_TOL = 1e-10
_ZERO_NORM = 1e-300


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UnitVector:
    """A point on S^{d-1}, d >= 2."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.shape[0] < 2:
            raise DimensionMismatch(f"unit vector needs shape (d,) with d >= 2, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise NotUnitNorm("unit vector has non-finite entries")
        norm = float(np.linalg.norm(c))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise NotUnitNorm(f"norm {norm!r} is not within {UNIT_NORM_TOL} of 1")
        object.__setattr__(self, "coords", _frozen(c))

    @property
    def d(self) -> int:
        return self.coords.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __len__(self):
        return self.d

    def __eq__(self, other):
        if not isinstance(other, UnitVector):
            return NotImplemented
        return bool(np.array_equal(self.coords, other.coords))

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __repr__(self):
        return f"UnitVector({np.array2string(self.coords, precision=6, separator=', ')})"


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered collection of n >= 1 points on a common S^{d-1}.

    ``data`` is a read-only ``(n, d)`` array. Rows must have unit norm to
    within ``UNIT_NORM_TOL``; rows further off are rejected rather than
    renormalized.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 2:
            raise DimensionMismatch(f"sample needs shape (n, d) with n >= 1, d >= 2, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NotUnitNorm("sample has non-finite entries")
        dev = np.abs(np.sqrt(np.einsum("ij,ij->i", a, a)) - 1.0)
        bad = np.flatnonzero(dev > UNIT_NORM_TOL)
        if bad.size:
            raise NotUnitNorm(f"row {int(bad[0])} is not a unit vector (|norm - 1| = {dev[bad[0]]:.3g})")
        object.__setattr__(self, "data", a if not a.flags.writeable and a.dtype == float else _frozen(a))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> UnitVector:
        return UnitVector(self.data[i])

    def __iter__(self):
        for row in self.data:
            yield UnitVector(row)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))

    def __repr__(self):
        return f"Sample(n={self.n}, d={self.d})"

    def rotate(self, q: ArrayLike) -> "Sample":
        """Apply the orthogonal matrix ``q`` to every row (x -> q x)."""
        return Sample(self.data @ np.asarray(q, dtype=float).T)

    def mean_vector(self) -> np.ndarray:
        return self.data.mean(axis=0)

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "Sample":
        # Skips the norm check; only for arrays produced by our own samplers.
        obj = object.__new__(cls)
        a = np.ascontiguousarray(a, dtype=float)
        a.setflags(write=False)
        object.__setattr__(obj, "data", a)
        return obj


SampleLike = Union[Sample, ArrayLike]


def as_sample(x: SampleLike) -> Sample:
    if isinstance(x, Sample):
        return x
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    return Sample(a)


def as_array(x: SampleLike) -> np.ndarray:
    """Validated ``(n, d)`` view of ``x``."""
    return as_sample(x).data


def normalize(v: ArrayLike) -> UnitVector:
    """Scale ``v`` to unit length.

    >>> normalize([2.0, 0.0, 0.0]).coords
    array([1., 0., 0.])
    """
    a = np.asarray(v, dtype=float)
    if a.ndim != 1 or a.shape[0] < 2:
        raise DimensionMismatch(f"expected a vector of length d >= 2, got shape {a.shape}")
    norm = float(np.linalg.norm(a))
    if not norm > _ZERO_NORM:
        raise ZeroVector("cannot normalize a zero vector")
    return UnitVector(a / norm)


def normalize_rows(a: ArrayLike) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    norms = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(~(norms > _ZERO_NORM)):
        raise ZeroVector("cannot normalize a zero row")
    return a / norms


def dec_inc_to_cartesian(dec_deg: ArrayLike, inc_deg: ArrayLike) -> np.ndarray:
    """Vectorized declination/inclination (degrees) to Cartesian coordinates.

    Returns an array of shape ``broadcast(dec, inc).shape + (3,)`` holding
    ``(sin I, cos I cos D, cos I sin D)``.
    """
    dec = np.asarray(dec_deg, dtype=float)
    inc = np.asarray(inc_deg, dtype=float)
    if not (np.all(np.isfinite(dec)) and np.all(np.isfinite(inc))):
        raise OutOfRange("declination and inclination must be finite")
    if np.any((inc < -90.0) | (inc > 90.0)):
        raise OutOfRange("inclination must lie in [-90, 90] degrees")
    d = np.deg2rad(dec)
    i = np.deg2rad(inc)
    ci = np.cos(i)
    return np.stack(np.broadcast_arrays(np.sin(i), ci * np.cos(d), ci * np.sin(d)), axis=-1)


def from_dec_inc(dec_deg: float, inc_deg: float) -> UnitVector:
    """Convert one (declination, inclination) pair in degrees to a point on S^2."""
    return UnitVector(dec_inc_to_cartesian(float(dec_deg), float(inc_deg)))


def surface_area(d: int) -> float:
    """Surface area 2 pi^{d/2} / Gamma(d/2) of the unit sphere S^{d-1} in R^d."""
    if int(d) != d or d < 2:
        raise DimensionMismatch(f"dimension must be an integer >= 2, got {d}")
    d = int(d)
    if d <= 300:
        return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
    return math.exp(math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(d / 2))


def log_surface_area(d: int) -> float:
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(d / 2)


def basis_vector(d: int, i: int = 0) -> UnitVector:
    e = np.zeros(d)
    e[i] = 1.0
    return UnitVector(e)


def orthonormal_complement(theta: ArrayLike) -> np.ndarray:
    """Return a ``(d, d-1)`` matrix whose columns span the tangent space at ``theta``."""
    t = np.asarray(theta, dtype=float)
    # Householder reflection mapping e_k to theta, k = argmax |theta_k| for stability.
    k = int(np.argmax(np.abs(t)))
    e = np.zeros_like(t)
    e[k] = 1.0
    v = t - e if t[k] < 0 else t + e
    h = np.eye(t.shape[0]) - 2.0 * np.outer(v, v) / (v @ v)
    return np.delete(h, k, axis=1)
