"""Distributions on S^{d-1}: random generation and densities.

Every model is a frozen dataclass exposing ``d``, ``log_density`` and a
private ``_draw(n, gen)``. The module-level :func:`sample` and
:func:`density` are the public entry points; randomness always flows
through a :class:`SeedStream` so that results never depend on call order
or thread scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize
from scipy.special import logsumexp

from .exceptions import InvalidSpec, UnsupportedDimension
from .geometry import UNIT_NORM_TOL, Sample, UnitVector, log_surface_area
from .special import kent_log_normalizer, vmf_log_normalizer

_U64 = 2**64


@dataclass(frozen=True)
class SeedStream:
    """Deterministic random stream identified by ``(seed, stream_id, path)``.

    ``path`` addresses nested sub-streams (replication -> bootstrap
    replicate -> ...). Identical triples always yield identical draws.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and 0 <= int(v) < _U64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream_id", int(self.stream_id))
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, i: int) -> "SeedStream":
        return SeedStream(self.seed, self.stream_id, self.path + (int(i),))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)
        return np.random.Generator(np.random.PCG64(ss))


RandomSource = Union[SeedStream, np.random.Generator]


def _as_generator(rng: RandomSource) -> np.random.Generator:
    if isinstance(rng, SeedStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected SeedStream or numpy Generator, got {type(rng).__name__}")


def _unit(v, name="theta") -> np.ndarray:
    a = np.asarray(v.coords if isinstance(v, UnitVector) else v, dtype=float)
    if a.ndim != 1 or a.shape[0] < 2:
        raise InvalidSpec(f"{name} must be a vector of length d >= 2")
    if abs(np.linalg.norm(a) - 1.0) > UNIT_NORM_TOL:
        raise InvalidSpec(f"{name} must have unit norm")
    a = a.copy()
    a.setflags(write=False)
    return a


def _points(x, d: int) -> tuple[np.ndarray, bool]:
    if isinstance(x, (UnitVector, Sample)):
        a = np.asarray(x, dtype=float)
    else:
        a = np.asarray(x, dtype=float)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    if a.shape[-1] != d:
        from .exceptions import DimensionMismatch
        raise DimensionMismatch(f"points have dimension {a.shape[-1]}, model has {d}")
    return a, single


def _normalize_rows(z: np.ndarray) -> np.ndarray:
    return z / np.sqrt(np.einsum("ij,ij->i", z, z))[:, None]


class DistributionSpec:
    """Common interface of all models."""

    d: int

    def log_density(self, x):
        raise NotImplementedError

    def density(self, x):
        return np.exp(self.log_density(x))

    def _draw(self, n: int, gen: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise InvalidSpec(f"dimension must be an integer >= 2, got {self.d}")

    def log_density(self, x):
        a, single = _points(x, self.d)
        out = np.full(a.shape[0], -log_surface_area(self.d))
        return float(out[0]) if single else out

    def _draw(self, n, gen):
        return _normalize_rows(gen.standard_normal((n, self.d)))


@dataclass(frozen=True, eq=False)
class VonMisesFisher(DistributionSpec):
    theta: np.ndarray
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _unit(self.theta))
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise InvalidSpec(f"kappa must be finite and >= 0, got {self.kappa}")
        object.__setattr__(self, "kappa", float(self.kappa))

    def __eq__(self, other):
        return (isinstance(other, VonMisesFisher) and self.kappa == other.kappa
                and np.array_equal(self.theta, other.theta))

    def __hash__(self):
        return hash((self.theta.tobytes(), self.kappa))

    @property
    def d(self) -> int:
        return self.theta.shape[0]

    def log_density(self, x):
        a, single = _points(x, self.d)
        out = vmf_log_normalizer(self.kappa, self.d) + self.kappa * (a @ self.theta)
        return float(out[0]) if single else out

    def _draw(self, n, gen):
        if self.kappa == 0.0:
            return Uniform(self.d)._draw(n, gen)
        w, one_minus_w = _wood_cosines(self.kappa, self.d, n, gen)
        v = gen.standard_normal((n, self.d))
        v -= np.outer(v @ self.theta, self.theta)
        v = _normalize_rows(v)
        s = np.sqrt(one_minus_w * (1.0 + w))
        return w[:, None] * self.theta[None, :] + s[:, None] * v


def _wood_cosines(kappa: float, d: int, n: int, gen: np.random.Generator):
    """Rejection sampler for W = theta'X under vMF (Ulrich 1984, Wood 1994).

    Returns ``(w, 1 - w)``; the second is computed without cancellation.
    """
    dm1 = d - 1.0
    b = dm1 / (math.sqrt(4.0 * kappa * kappa + dm1 * dm1) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dm1 * math.log(4.0 * b / (1.0 + b) ** 2)
    w_out = np.empty(n)
    omw_out = np.empty(n)
    filled = 0
    while filled < n:
        k = int(1.2 * (n - filled)) + 8
        z = gen.beta(0.5 * dm1, 0.5 * dm1, size=k)
        u = gen.random(k)
        denom = 1.0 - (1.0 - b) * z
        w = (1.0 - (1.0 + b) * z) / denom
        omw = 2.0 * b * z / denom
        ok = kappa * w + dm1 * np.log1p(-x0 * w) - c >= np.log(u)
        take = np.flatnonzero(ok)[: n - filled]
        w_out[filled:filled + take.size] = w[take]
        omw_out[filled:filled + take.size] = omw[take]
        filled += take.size
    return w_out, omw_out


@dataclass(frozen=True, eq=False)
class MixtureVMF(DistributionSpec):
    """Finite mixture of vMF laws, drawn component-index first."""

    weights: tuple
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise InvalidSpec("mixture needs at least one weight")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidSpec("mixture weights must be nonnegative and sum to 1")
        comps = []
        for c in self.components:
            if isinstance(c, VonMisesFisher):
                comps.append(c)
            else:
                theta, kappa = c
                comps.append(VonMisesFisher(theta, kappa))
        if len(comps) != w.size:
            raise InvalidSpec("number of weights and components differ")
        if len({c.d for c in comps}) != 1:
            raise InvalidSpec("mixture components must share one dimension")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "components", tuple(comps))

    def __eq__(self, other):
        return (isinstance(other, MixtureVMF) and self.weights == other.weights
                and self.components == other.components)

    def __hash__(self):
        return hash((self.weights, self.components))

    @property
    def d(self) -> int:
        return self.components[0].d

    def log_density(self, x):
        a, single = _points(x, self.d)
        logs = np.stack([c.log_density(a) for c in self.components])
        with np.errstate(divide="ignore"):
            lw = np.log(np.asarray(self.weights))[:, None]
        out = logsumexp(logs + lw, axis=0)
        return float(out[0]) if single else out

    def _draw(self, n, gen):
        if len(self.components) == 1:
            return self.components[0]._draw(n, gen)
        u = gen.random(n)
        edges = np.cumsum(self.weights)[:-1]
        idx = np.searchsorted(edges, u, side="right")
        out = np.empty((n, self.d))
        for k, comp in enumerate(self.components):
            rows = np.flatnonzero(idx == k)
            if rows.size:
                out[rows] = comp._draw(rows.size, gen)
        return out


@dataclass(frozen=True, eq=False)
class AngularCentralGaussian(DistributionSpec):
    """ACG(Sigma): law of z/|z| for z ~ N(0, Sigma). Sigma matters only up to scale."""

    sigma: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigma, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 2:
            raise InvalidSpec("sigma must be a square matrix of size d >= 2")
        if not np.all(np.isfinite(s)):
            raise InvalidSpec("sigma has non-finite entries")
        if np.max(np.abs(s - s.T)) > 1e-10 * max(1.0, np.max(np.abs(s))):
            raise InvalidSpec("sigma must be symmetric")
        s = 0.5 * (s + s.T)
        if np.min(np.linalg.eigvalsh(s)) <= 0:
            raise InvalidSpec("sigma must be positive definite")
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        chol = np.linalg.cholesky(s)
        chol.setflags(write=False)
        object.__setattr__(self, "_chol", chol)

    def __eq__(self, other):
        return isinstance(other, AngularCentralGaussian) and np.array_equal(self.sigma, other.sigma)

    def __hash__(self):
        return hash(self.sigma.tobytes())

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    def log_density(self, x):
        a, single = _points(x, self.d)
        sol = np.linalg.solve(self._chol, a.T)
        q = np.einsum("ij,ij->j", sol, sol)
        logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))
        out = -log_surface_area(self.d) - 0.5 * logdet - 0.5 * self.d * np.log(q)
        return float(out[0]) if single else out

    def _draw(self, n, gen):
        z = gen.standard_normal((n, self.d)) @ self._chol.T
        return _normalize_rows(z)


@dataclass(frozen=True, eq=False)
class Kent(DistributionSpec):
    """Kent (FB5) law on S^2 with density exp(kappa x'g1 + beta[(x'g2)^2 - (x'g3)^2]) / c.

    ``axes`` holds (g1, g2, g3) as columns: mean direction, major axis,
    minor axis. By default the unimodal regime 0 <= 2 beta < kappa is
    enforced; pass ``strict=False`` to admit fitted parameters outside it.
    """

    kappa: float
    beta: float
    axes: np.ndarray
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise InvalidSpec(f"kappa must be > 0, got {self.kappa}")
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise InvalidSpec(f"beta must be >= 0, got {self.beta}")
        if self.strict and not 2.0 * self.beta < self.kappa:
            raise InvalidSpec(f"unimodal Kent requires 2 beta < kappa (kappa={self.kappa}, beta={self.beta})")
        g = np.array(self.axes, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
            raise InvalidSpec("axes must be a square matrix")
        if np.max(np.abs(g.T @ g - np.eye(g.shape[0]))) > 1e-10:
            raise InvalidSpec("axes must be orthonormal")
        g.setflags(write=False)
        object.__setattr__(self, "axes", g)
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "beta", float(self.beta))

    def __eq__(self, other):
        return (isinstance(other, Kent) and self.kappa == other.kappa and self.beta == other.beta
                and np.array_equal(self.axes, other.axes))

    def __hash__(self):
        return hash((self.kappa, self.beta, self.axes.tobytes()))

    @property
    def d(self) -> int:
        return self.axes.shape[0]

    @property
    def theta(self) -> np.ndarray:
        return self.axes[:, 0]

    @property
    def regime(self) -> str:
        return "unimodal" if 2.0 * self.beta < self.kappa else "bimodal"

    @property
    def shape_matrix(self) -> np.ndarray:
        """A = beta (g2 g2' - g3 g3'); symmetric, trace 0, A theta = 0."""
        g2, g3 = self.axes[:, 1], self.axes[:, 2]
        return self.beta * (np.outer(g2, g2) - np.outer(g3, g3))

    def _check_dim(self):
        if self.d != 3:
            raise UnsupportedDimension("Kent sampling and density are implemented for d = 3 only")

    def log_normalizer(self) -> float:
        self._check_dim()
        return kent_log_normalizer(self.kappa, self.beta)

    def log_density(self, x):
        self._check_dim()
        a, single = _points(x, self.d)
        y = a @ self.axes
        out = self.kappa * y[:, 0] + self.beta * (y[:, 1] ** 2 - y[:, 2] ** 2) - self.log_normalizer()
        return float(out[0]) if single else out

    def _draw(self, n, gen):
        self._check_dim()
        return _kent_canonical(self.kappa, self.beta, n, gen) @ self.axes.T


@dataclass(frozen=True)
class _KentEnvelope:
    """ACG envelope for the canonical Kent density exp(kappa y1 + beta(y2^2 - y3^2)).

    kappa*y1 <= kappa/2 + kappa*y1^2/2 turns the target into a Bingham
    bound exp(kappa/2 + lam - y'Ay) with A = diag(lam - kappa/2, lam - beta,
    lam + beta) >= 0, lam = max(kappa/2, beta); the Bingham factor is in
    turn bounded by an ACG with Omega = I + 2A/b (Kent, Ganeiber & Mardia 2018).
    """

    kappa: float
    beta: float
    lam: float
    omega: np.ndarray
    b: float
    log_bound: float

    @classmethod
    def build(cls, kappa: float, beta: float) -> "_KentEnvelope":
        lam = max(0.5 * kappa, beta)
        a = np.array([lam - 0.5 * kappa, lam - beta, lam + beta])
        q = 3.0
        if np.all(a == 0):
            b = q
        else:
            b = optimize.brentq(lambda t: np.sum(1.0 / (t + 2.0 * a)) - 1.0, 1e-12, q, xtol=1e-14)
        omega = 1.0 + 2.0 * a / b
        log_m = -0.5 * (q - b) + 0.5 * q * math.log(q / b)
        return cls(kappa, beta, lam, omega, b, 0.5 * kappa + lam + log_m)

    def log_target(self, y):
        return self.kappa * y[:, 0] + self.beta * (y[:, 1] ** 2 - y[:, 2] ** 2)

    def log_envelope(self, y):
        # Unnormalized: log_bound - 3/2 log(y' Omega y) >= log_target(y)
        return self.log_bound - 1.5 * np.log(y ** 2 @ self.omega)

    def propose(self, k, gen):
        return _normalize_rows(gen.standard_normal((k, 3)) / np.sqrt(self.omega))


def _kent_canonical(kappa: float, beta: float, n: int, gen: np.random.Generator) -> np.ndarray:
    env = _KentEnvelope.build(kappa, beta)
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        k = 2 * (n - filled) + 16
        y = env.propose(k, gen)
        u = gen.random(k)
        ok = np.log(u) <= env.log_target(y) - env.log_envelope(y)
        take = np.flatnonzero(ok)[: n - filled]
        out[filled:filled + take.size] = y[take]
        filled += take.size
    return out


def sample(spec: DistributionSpec, n: int, rng: RandomSource) -> Sample:
    """Draw ``n`` i.i.d. points from ``spec``; deterministic given ``rng``."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return Sample._trusted(spec._draw(int(n), _as_generator(rng)))


def density(spec: DistributionSpec, x) -> Union[float, np.ndarray]:
    """Density of ``spec`` at ``x`` with respect to surface measure on S^{d-1}."""
    return spec.density(x)


def log_density(spec: DistributionSpec, x) -> Union[float, np.ndarray]:
    return spec.log_density(x)


def spec_to_dict(spec: DistributionSpec) -> dict:
    if isinstance(spec, Uniform):
        return {"type": "uniform", "d": spec.d}
    if isinstance(spec, VonMisesFisher):
        return {"type": "vmf", "theta": spec.theta.tolist(), "kappa": spec.kappa}
    if isinstance(spec, MixtureVMF):
        return {"type": "mixture_vmf", "weights": list(spec.weights),
                "components": [{"theta": c.theta.tolist(), "kappa": c.kappa} for c in spec.components]}
    if isinstance(spec, AngularCentralGaussian):
        return {"type": "acg", "sigma": spec.sigma.tolist()}
    if isinstance(spec, Kent):
        return {"type": "kent", "kappa": spec.kappa, "beta": spec.beta, "axes": spec.axes.tolist(),
                "regime": spec.regime}
    raise TypeError(f"unknown distribution {type(spec).__name__}")


def spec_from_dict(obj: dict) -> DistributionSpec:
    kind = str(obj.get("type", "")).lower()
    if kind == "uniform":
        return Uniform(int(obj["d"]))
    if kind == "vmf":
        return VonMisesFisher(np.asarray(obj["theta"], dtype=float), float(obj["kappa"]))
    if kind == "mixture_vmf":
        comps = [(np.asarray(c["theta"], dtype=float), float(c["kappa"])) for c in obj["components"]]
        return MixtureVMF(tuple(obj["weights"]), tuple(comps))
    if kind == "acg":
        return AngularCentralGaussian(np.asarray(obj["sigma"], dtype=float))
    if kind == "kent":
        return Kent(float(obj["kappa"]), float(obj["beta"]), np.asarray(obj["axes"], dtype=float),
                    strict=bool(obj.get("strict", False)))
    raise InvalidSpec(f"unknown distribution type {obj.get('type')!r}")


__all__ = [
    "SeedStream", "DistributionSpec", "Uniform", "VonMisesFisher", "MixtureVMF",
    "AngularCentralGaussian", "Kent", "sample", "density", "log_density",
    "spec_to_dict", "spec_from_dict",
]
