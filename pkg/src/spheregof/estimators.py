"""Parameter estimation for the composite null families (vMF, ACG, Kent)."""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .exceptions import DegenerateMean, NoConvergence, RankDeficient, UnsupportedDimension
from .geometry import Sample, SampleLike, as_array, log_surface_area, orthonormal_complement
from .samplers import AngularCentralGaussian, DistributionSpec, Kent, VonMisesFisher
from .special import (
    kent_log_normalizer_grad,
    mean_resultant_length,
    mean_resultant_length_derivative,
    vmf_log_normalizer,
)

KAPPA_MAX = 1e6
_DEGENERATE_MEAN = 1e-12
_SATURATED = 1.0 - 1e-9


@dataclass(frozen=True)
class FitResult:
    """A fitted model with convergence diagnostics.

    ``loglik`` is the log-likelihood with respect to surface measure.
    ``status`` is one of ``"ok"``, ``"saturated"`` or ``"max_iter"``.
    """

    spec: DistributionSpec
    loglik: float
    iterations: int
    converged: bool
    tolerance_achieved: float
    status: str = "ok"
    info: dict = field(default_factory=dict, compare=False)


def _data(x: SampleLike) -> np.ndarray:
    return x.data if isinstance(x, Sample) else as_array(x)


def _solve_kappa(rbar: float, d: int, tol: float, kappa_max: float):
    """Invert A_d(kappa) = rbar by bisection on [0, kappa_max], switching to
    Newton once the bracket is narrower than 1."""
    lo, hi = 0.0, kappa_max
    # Banerjee et al. (2005) approximation, used only to place the first probe.
    k = min(rbar * (d - rbar * rbar) / (1.0 - rbar * rbar), kappa_max)
    it = 0
    resid = math.inf
    while it < 500:
        it += 1
        a = mean_resultant_length(k, d)
        resid = a - rbar
        if abs(resid) <= tol:
            return k, it, abs(resid), True
        if resid < 0:
            lo = k
        else:
            hi = k
        if hi - lo <= 1.0:
            step = resid / mean_resultant_length_derivative(k, d, a)
            cand = k - step
            if lo < cand < hi:
                if cand == k:
                    return k, it, abs(resid), abs(resid) <= tol
                k = cand
                continue
        if hi - lo <= 1e-15 * max(1.0, hi):
            return k, it, abs(resid), False
        k = 0.5 * (lo + hi)
    return k, it, abs(resid), False


def fit_vmf(x: SampleLike, tol: float = 1e-12, kappa_max: float = KAPPA_MAX) -> FitResult:
    """Maximum-likelihood vMF fit.

    The mean direction is the normalized sample mean; kappa solves
    A_d(kappa) = R, R the mean resultant length. When R is within 1e-9 of 1
    kappa is capped at ``kappa_max`` and the fit is marked unconverged.
    """
    a = _data(x)
    n, d = a.shape
    if n < 2:
        raise ValueError("fit_vmf needs at least 2 observations")
    xbar = a.mean(axis=0)
    rbar = float(np.linalg.norm(xbar))
    if rbar < _DEGENERATE_MEAN:
        raise DegenerateMean(f"mean resultant length {rbar:.3g} is numerically zero")
    theta = xbar / rbar
    if rbar > _SATURATED:
        kappa, it, resid, ok, status = kappa_max, 0, abs(1.0 - rbar), False, "saturated"
        warnings.warn(f"mean resultant length {rbar!r} is saturated; kappa capped at {kappa_max:g}",
                      RuntimeWarning, stacklevel=2)
    else:
        kappa, it, resid, ok = _solve_kappa(rbar, d, tol, kappa_max)
        status = "ok" if ok else "max_iter"
    loglik = n * (vmf_log_normalizer(kappa, d) + kappa * rbar)
    return FitResult(VonMisesFisher(theta, kappa), loglik, it, ok, resid, status,
                     {"mean_resultant_length": rbar})


def _tyler(xs: np.ndarray, tol: float, max_iter: int, init: np.ndarray | None = None):
    """Tyler's fixed point Sigma <- (d/n) sum x x' / (x' Sigma^-1 x), run on a
    stack of samples ``xs`` of shape (B, n, d), trace-normalized to d."""
    nb, n, d = xs.shape
    sig = np.broadcast_to(np.eye(d) if init is None else np.asarray(init, dtype=float), (nb, d, d)).copy()
    iters = np.zeros(nb, dtype=int)
    resid = np.full(nb, np.inf)
    active = np.arange(nb)
    for it in range(1, max_iter + 1):
        xa = xs[active]
        s = sig[active]
        q = np.einsum("bni,bni->bn", xa @ np.linalg.inv(s), xa)
        new = np.swapaxes(xa / q[..., None], 1, 2) @ xa
        new *= d / np.trace(new, axis1=1, axis2=2)[:, None, None]
        r = np.sqrt(np.sum((new - s) ** 2, axis=(1, 2)))
        sig[active] = new
        resid[active] = r
        iters[active] = it
        active = active[r > tol]
        if active.size == 0:
            break
    return 0.5 * (sig + np.swapaxes(sig, 1, 2)), iters, resid


def _acg_loglik(a: np.ndarray, sigma: np.ndarray) -> float:
    n, d = a.shape
    sol = np.linalg.solve(sigma, a.T)
    q = np.einsum("ij,ji->i", a, sol)
    _, logdet = np.linalg.slogdet(sigma)
    return float(n * (-log_surface_area(d) - 0.5 * logdet) - 0.5 * d * np.sum(np.log(q)))


def _check_acg_input(a: np.ndarray):
    n, d = a.shape
    if n < d or np.linalg.matrix_rank(a) < d:
        raise RankDeficient(f"{n} observations do not span R^{d}")


def fit_acg(x: SampleLike, tol: float = 1e-10, max_iter: int = 1000, init=None) -> FitResult:
    """Angular central Gaussian fit by Tyler's fixed-point iteration.

    Sigma is identified only up to scale; the estimate is normalized to
    trace d. After ``max_iter`` steps the last iterate is returned with
    ``converged=False``.
    """
    a = _data(x)
    _check_acg_input(a)
    sig, iters, resid = _tyler(a[None], tol, max_iter, init)
    return _acg_result(a, sig[0], int(iters[0]), float(resid[0]), tol)


def _acg_result(a, sigma, it, resid, tol):
    ok = resid <= tol
    return FitResult(AngularCentralGaussian(sigma), _acg_loglik(a, sigma), it, ok, resid,
                     "ok" if ok else "max_iter")


def fit_acg_many(samples: Sequence[np.ndarray], tol: float = 1e-10, max_iter: int = 1000) -> list:
    """Fit several equally sized samples at once; failed inputs yield the exception."""
    out: list = [None] * len(samples)
    good = []
    for i, a in enumerate(samples):
        try:
            _check_acg_input(a)
            good.append(i)
        except RankDeficient as exc:
            out[i] = exc
    if good:
        sig, iters, resid = _tyler(np.stack([samples[i] for i in good]), tol, max_iter)
        for k, i in enumerate(good):
            out[i] = _acg_result(samples[i], sig[k], int(iters[k]), float(resid[k]), tol)
    return out


def kent_axes(a: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Moment estimate of the Kent axes.

    Returns ``(axes, r1, q)`` with columns (mean direction, major, minor),
    r1 the mean resultant length and q = l1 - l2 the spread of the
    tangent-plane scatter eigenvalues.
    """
    xbar = a.mean(axis=0)
    r1 = float(np.linalg.norm(xbar))
    if r1 < _DEGENERATE_MEAN:
        raise DegenerateMean(f"mean resultant length {r1:.3g} is numerically zero")
    theta = xbar / r1
    p = orthonormal_complement(theta)
    scatter = a.T @ a / a.shape[0]
    evals, evecs = np.linalg.eigh(p.T @ scatter @ p)
    g2 = p @ evecs[:, 1]
    g2 /= np.linalg.norm(g2)
    g3 = np.cross(theta, g2)
    g3 /= np.linalg.norm(g3)
    return np.column_stack([theta, g2, g3]), r1, float(evals[1] - evals[0])


def _kent_start(r1: float, q: float, constrained: bool):
    u = 2.0 - 2.0 * r1 - q
    v = 2.0 - 2.0 * r1 + q
    if u > 0 and v > 0:
        kappa = 1.0 / u + 1.0 / v
        beta = 0.5 * (1.0 / u - 1.0 / v)
    else:
        kappa, beta = 3.0 * r1 + 1e-3, 0.0
    kappa = min(max(kappa, 1e-3), KAPPA_MAX)
    if constrained:
        beta = min(beta, 0.45 * kappa)
    return kappa, max(beta, 0.0)


def fit_kent(x: SampleLike, constrained: bool = True, max_iter: int = 500, tol: float = 1e-10) -> FitResult:
    """Kent (FB5) fit on S^2.

    Axes come from the moment construction (mean direction plus the
    eigenvectors of the tangent-plane scatter); (kappa, beta) then maximize
    the exact log-likelihood. With ``constrained=True`` the search is
    restricted to 0 <= 2 beta < kappa; otherwise any beta >= 0 is allowed
    and ``info["regime"]`` reports which side of the boundary the fit lies.
    """
    a = _data(x)
    n, d = a.shape
    if d != 3:
        raise UnsupportedDimension("Kent fitting is implemented for d = 3 only")
    if n < 4:
        raise ValueError("fit_kent needs at least 4 observations")
    axes, r1, q = kent_axes(a)
    k0, b0 = _kent_start(r1, q, constrained)
    evals = [0]

    def nll(kappa, beta):
        evals[0] += 1
        logc, dk, db = kent_log_normalizer_grad(kappa, beta)
        return logc - kappa * r1 - beta * q, dk - r1, db - q

    shrink = 1.0 - 1e-9
    if constrained:
        def obj(p):
            kappa, s = p
            f, gk, gb = nll(kappa, 0.5 * s * kappa)
            return f, np.array([gk + 0.5 * s * gb, 0.5 * kappa * gb])

        p0 = np.array([k0, 2.0 * b0 / k0])
        bounds = [(1e-8, KAPPA_MAX), (0.0, shrink)]
    else:
        def obj(p):
            f, gk, gb = nll(*p)
            return f, np.array([gk, gb])

        p0 = np.array([k0, b0])
        bounds = [(1e-8, KAPPA_MAX), (0.0, KAPPA_MAX)]
    res = optimize.minimize(obj, p0, jac=True, method="L-BFGS-B", bounds=bounds,
                            options={"maxiter": max_iter, "ftol": 1e-15, "gtol": tol})
    kappa = float(res.x[0])
    beta = float(0.5 * res.x[1] * kappa) if constrained else float(res.x[1])
    _, gk, gb = nll(kappa, beta)
    grad = math.hypot(gk, gb)
    # L-BFGS-B may stop on the ftol criterion with a tiny but nonzero projected gradient.
    pg = res.jac.copy()
    for i, (lo, hi) in enumerate(bounds):
        if (res.x[i] <= lo and pg[i] > 0) or (res.x[i] >= hi and pg[i] < 0):
            pg[i] = 0.0
    achieved = float(np.max(np.abs(pg)))
    ok = res.nit < max_iter and achieved <= max(tol, 1e-7)
    spec = Kent(kappa, beta, axes, strict=constrained)
    loglik = -n * float(res.fun)
    result = FitResult(spec, loglik, int(res.nit), ok, achieved, "ok" if ok else "max_iter",
                       {"regime": spec.regime, "mean_resultant_length": r1, "scatter_spread": q,
                        "gradient_norm": grad, "evaluations": evals[0]})
    if res.nit >= max_iter:
        raise NoConvergence(f"Kent likelihood maximization exceeded {max_iter} iterations", result)
    return result


@dataclass(frozen=True)
class Family:
    """A composite null: how to fit it and how to fit many samples at once."""

    name: str
    fit: Callable[[np.ndarray], FitResult]
    fit_many: Callable[[Sequence[np.ndarray]], list] | None = None

    def fit_batch(self, samples: Sequence[np.ndarray]) -> list:
        if self.fit_many is not None:
            return self.fit_many(samples)
        out = []
        for a in samples:
            try:
                out.append(self.fit(a))
            except Exception as exc:  # recorded per replicate, retried by the caller
                out.append(exc)
        return out


FAMILIES = {
    "vmf": Family("vmf", fit_vmf),
    "acg": Family("acg", fit_acg, fit_acg_many),
    "kent": Family("kent", fit_kent),
}


def get_family(name: str, **options) -> Family:
    """Look up a family by name; ``options`` are forwarded to its fit function,
    e.g. ``get_family("kent", constrained=False)``."""
    try:
        fam = FAMILIES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None
    if not options:
        return fam
    many = functools.partial(fam.fit_many, **options) if fam.fit_many is not None else None
    return Family(fam.name, functools.partial(fam.fit, **options), many)
