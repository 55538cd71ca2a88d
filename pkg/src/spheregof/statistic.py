"""Kernels and the two-sample characteristic-function statistic.

With C the cosine transform of the weight measure, the statistic is

    T = nm/(n+m) * [ n^-2 sum C(X_j - X_k) - 2/(nm) sum C(X_j - Y_k) + m^-2 sum C(Y_j - Y_k) ]

with diagonal terms kept in the within-sample sums (V-statistic form).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import DimensionMismatch, InvalidSpec
from .geometry import Sample, SampleLike, UnitVector, as_array

DEFAULT_MEMORY_CAP = 1 << 30
# Temporaries alive per kernel-matrix element while a block is evaluated.
_BYTES_PER_ELEMENT = 8 * 3


class KernelSpec:
    """A function C(z) of ||z|| only, applied to squared distances."""

    def from_sqdist(self, d2: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class StableCF(KernelSpec):
    """C(z) = exp(-gamma ||z||^xi), the CF of a spherical stable weight."""

    gamma: float
    xi: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidSpec(f"gamma must be > 0, got {self.gamma}")
        if not 0 < self.xi <= 2:
            raise InvalidSpec(f"xi must lie in (0, 2], got {self.xi}")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "xi", float(self.xi))

    def from_sqdist(self, d2):
        if self.xi == 2.0:
            return np.exp(-self.gamma * d2)
        return np.exp(-self.gamma * np.power(d2, 0.5 * self.xi))

    @property
    def label(self) -> str:
        return f"stable(xi={self.xi:g},gamma={self.gamma:g})"


@dataclass(frozen=True)
class EnergySR(KernelSpec):
    """C(z) = -||z||^a, giving the energy-distance form of the statistic."""

    a: float

    def __post_init__(self):
        if not 0 < self.a < 2:
            raise InvalidSpec(f"a must lie in (0, 2), got {self.a}")
        object.__setattr__(self, "a", float(self.a))

    def from_sqdist(self, d2):
        return -np.power(d2, 0.5 * self.a)

    @property
    def label(self) -> str:
        return f"energy(a={self.a:g})"


def kernel_from_dict(obj: dict) -> KernelSpec:
    kind = str(obj.get("type", "stable")).lower()
    if kind in ("stable", "stablecf"):
        return StableCF(float(obj["gamma"]), float(obj.get("xi", 2.0)))
    if kind in ("energy", "energysr", "sr"):
        return EnergySR(float(obj["a"]))
    raise InvalidSpec(f"unknown kernel type {obj.get('type')!r}")


def kernel_to_dict(kernel: KernelSpec) -> dict:
    if isinstance(kernel, StableCF):
        return {"type": "stable", "gamma": kernel.gamma, "xi": kernel.xi}
    if isinstance(kernel, EnergySR):
        return {"type": "energy", "a": kernel.a}
    raise TypeError(type(kernel).__name__)


@dataclass(frozen=True)
class StatisticValue:
    t: float
    n: int
    m: int
    kernel: KernelSpec

    @property
    def delta(self) -> float:
        """(m+n)/(mn) * t, the plug-in estimate of the weighted L2 distance."""
        return self.t * (self.n + self.m) / (self.n * self.m)

    def __float__(self):
        return self.t


def pairwise_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of ``a`` and ``b``.

    Coordinates are accumulated in a fixed order from exact differences, so
    ``pairwise_sqdist(b, a)`` is bitwise the transpose of
    ``pairwise_sqdist(a, b)`` and coincident points give exactly 0.
    """
    out = np.subtract.outer(a[:, 0], b[:, 0])
    out *= out
    for k in range(1, a.shape[1]):
        diff = np.subtract.outer(a[:, k], b[:, k])
        diff *= diff
        out += diff
    return out


def kernel_matrix(kernel: KernelSpec, a, b=None) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    return kernel.from_sqdist(pairwise_sqdist(a, b))


def kernel_eval(kernel: KernelSpec, x, y) -> float:
    """C(x - y) for two points."""
    xa = np.asarray(x, dtype=float).reshape(-1)
    ya = np.asarray(y, dtype=float).reshape(-1)
    if xa.shape != ya.shape:
        raise DimensionMismatch(f"dimensions differ: {xa.shape[0]} vs {ya.shape[0]}")
    return float(kernel.from_sqdist(np.array([[np.sum((xa - ya) ** 2)]]))[0, 0])


def _block_size(memory_cap: int) -> int:
    return max(1, int(math.isqrt(max(1, memory_cap // _BYTES_PER_ELEMENT))))


def _within_sum(kernel, a, block):
    n = a.shape[0]
    if n <= block:
        return float(np.sum(kernel_matrix(kernel, a)))
    partials = []
    for i in range(0, n, block):
        for j in range(0, n, block):
            partials.append(float(np.sum(kernel_matrix(kernel, a[i:i + block], a[j:j + block]))))
    return math.fsum(partials)


def _cross_sum(kernel, a, b, block):
    # sum(K) + sum(K^T) evaluated on contiguous copies: swapping a and b
    # produces the same two partial sums, so the total is swap-invariant.
    if a.shape[0] <= block and b.shape[0] <= block:
        k = kernel_matrix(kernel, a, b)
        return 0.5 * (float(np.sum(k)) + float(np.sum(np.ascontiguousarray(k.T))))
    partials = []
    for i in range(0, a.shape[0], block):
        for j in range(0, b.shape[0], block):
            k = kernel_matrix(kernel, a[i:i + block], b[j:j + block])
            partials.append(float(np.sum(k)) + float(np.sum(np.ascontiguousarray(k.T))))
    return 0.5 * math.fsum(partials)


def _check_pair(x: SampleLike, y: SampleLike):
    xa = x.data if isinstance(x, Sample) else as_array(x)
    ya = y.data if isinstance(y, Sample) else as_array(y)
    if xa.shape[1] != ya.shape[1]:
        raise DimensionMismatch(f"samples live in different dimensions: {xa.shape[1]} vs {ya.shape[1]}")
    return xa, ya


def _discrepancy(xa, ya, kernel, memory_cap):
    n, m = xa.shape[0], ya.shape[0]
    if (n + m) ** 2 * 8 <= memory_cap:
        block = max(n, m)
    else:
        block = _block_size(memory_cap)
    sxx = _within_sum(kernel, xa, block)
    syy = _within_sum(kernel, ya, block)
    sxy = _cross_sum(kernel, xa, ya, block)
    return (sxx / (n * n) + syy / (m * m)) - 2.0 * sxy / (n * m)


def compute_statistic(x: SampleLike, y: SampleLike, kernel: KernelSpec,
                      memory_cap: int = DEFAULT_MEMORY_CAP) -> StatisticValue:
    """Two-sample CF statistic T_{n,m} between samples ``x`` and ``y``.

    Parameters
    ----------
    x, y : Sample or array_like of shape (n, d), (m, d)
        Points on the same sphere.
    kernel : KernelSpec
        The function C, i.e. the choice of weight measure.
    memory_cap : int
        Above ``(n+m)^2 * 8`` bytes the kernel blocks are streamed in tiles
        instead of being materialized.

    Returns
    -------
    StatisticValue
    """
    xa, ya = _check_pair(x, y)
    n, m = xa.shape[0], ya.shape[0]
    disc = _discrepancy(xa, ya, kernel, memory_cap)
    return StatisticValue((n * m) / (n + m) * disc, n, m, kernel)


def delta_hat(x: SampleLike, y: SampleLike, kernel: KernelSpec,
              memory_cap: int = DEFAULT_MEMORY_CAP) -> float:
    """(m+n)/(mn) T_{n,m}: consistent estimate of the population distance."""
    xa, ya = _check_pair(x, y)
    return _discrepancy(xa, ya, kernel, memory_cap)


def statistic_value(xa: np.ndarray, ya: np.ndarray, kernel: KernelSpec) -> float:
    """Unchecked fast path returning only T, for arrays already validated."""
    n, m = xa.shape[0], ya.shape[0]
    return (n * m) / (n + m) * _discrepancy(xa, ya, kernel, DEFAULT_MEMORY_CAP)


def pooled_quadratic_statistics(gram: np.ndarray, weights: np.ndarray, n: int, m: int) -> np.ndarray:
    """Statistics for resampled splits of a pooled sample.

    Row ``j`` of ``weights`` holds c_x/n - c_y/m, where c_x, c_y count how
    often each pooled point enters the resampled X and Y. Then
    (m+n)/(mn) T = w' K w exactly.
    """
    kw = weights @ gram
    return (n * m) / (n + m) * np.einsum("ij,ij->i", kw, weights)


Kernel = Union[StableCF, EnergySR]
