"""Bessel-function quantities needed by the vMF and Kent models.

Everything here works in log space or with ratios so that large
concentrations never overflow.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

_CF_TOL = 1e-15
_CF_MAX_TERMS = 100_000
_CF_KAPPA_LIMIT = 200.0
_HYP0F1_LIMIT = 500.0
_COTH_SERIES_CUTOFF = 0.1


def _ratio_continued_fraction(nu: float, x: float) -> float:
    """I_nu(x) / I_{nu-1}(x) by the modified Lentz algorithm.

    Uses r = x / (2nu + x^2 / (2(nu+1) + x^2 / (2(nu+2) + ...))).
    """
    tiny = 1e-300
    x2 = x * x
    f = tiny
    c = f
    dd = 0.0
    for j in range(1, _CF_MAX_TERMS):
        a = x if j == 1 else x2
        b = 2.0 * (nu + j - 1)
        dd = b + a * dd
        dd = tiny if dd == 0.0 else dd
        c = b + a / c
        c = tiny if c == 0.0 else c
        dd = 1.0 / dd
        delta = c * dd
        f *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return f
    raise ArithmeticError(f"continued fraction for I_{nu}/I_{nu - 1} at {x} did not converge")


def _coth_minus_inv(kappa: float) -> float:
    if kappa < _COTH_SERIES_CUTOFF:
        k2 = kappa * kappa
        # coth k - 1/k = k/3 - k^3/45 + 2k^5/945 - k^7/4725 + 2k^9/93555
        return kappa * (1 / 3 + k2 * (-1 / 45 + k2 * (2 / 945 + k2 * (-1 / 4725 + k2 * (2 / 93555)))))
    return 1.0 / math.tanh(kappa) - 1.0 / kappa


def bessel_i_ratio(nu: float, kappa: float) -> float:
    """Ratio I_nu(kappa) / I_{nu-1}(kappa) of modified Bessel functions.

    Parameters
    ----------
    nu : float
        Order of the numerator, ``nu >= 1/2``. The vMF mean resultant
        length in dimension d is ``bessel_i_ratio(d / 2, kappa)``.
    kappa : float
        Argument, ``kappa >= 0``.

    Returns
    -------
    float
        Value in [0, 1); 0 at ``kappa = 0``, increasing to 1 as ``kappa``
        grows.
    """
    nu = float(nu)
    kappa = float(kappa)
    if not nu >= 0.5:
        raise ValueError(f"order must be >= 1/2, got {nu}")
    if not kappa >= 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if kappa == 0.0:
        return 0.0
    if nu == 1.5:
        return _coth_minus_inv(kappa)
    if nu == 0.5:
        return math.tanh(kappa)
    if kappa <= _CF_KAPPA_LIMIT + nu:
        return _ratio_continued_fraction(nu, kappa)
    return float(special.ive(nu, kappa) / special.ive(nu - 1.0, kappa))


def mean_resultant_length(kappa: float, d: int) -> float:
    """A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa), the vMF expected resultant."""
    return bessel_i_ratio(0.5 * d, kappa)


def mean_resultant_length_derivative(kappa: float, d: int, a: float | None = None) -> float:
    """dA_d/dkappa = 1 - A^2 - (d-1) A / kappa."""
    if a is None:
        a = mean_resultant_length(kappa, d)
    if kappa == 0.0:
        return 1.0 / d
    return 1.0 - a * a - (d - 1) * a / kappa


def log_scaled_bessel_i(nu, kappa):
    """log of (kappa/2)^{-nu} I_nu(kappa), finite at kappa = 0.

    Equals ``log 0F1(; nu+1; kappa^2/4) - lgamma(nu+1)``. Vectorized over
    ``nu`` and ``kappa``.
    """
    nu, kappa = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(kappa, dtype=float))
    out = np.empty(nu.shape, dtype=float)
    small = kappa < _HYP0F1_LIMIT
    if np.any(small):
        n, k = nu[small], kappa[small]
        out[small] = np.log(special.hyp0f1(n + 1.0, 0.25 * k * k)) - special.gammaln(n + 1.0)
    big = ~small
    if np.any(big):
        n, k = nu[big], kappa[big]
        out[big] = np.log(special.ive(n, k)) + k - n * np.log(0.5 * k)
    return out if out.ndim else float(out)


def vmf_log_normalizer(kappa: float, d: int) -> float:
    """log C_d(kappa), where C_d(kappa) exp(kappa x'theta) is the vMF density
    with respect to surface measure on S^{d-1}."""
    nu = 0.5 * d - 1.0
    return nu * math.log(2.0) - 0.5 * d * math.log(2.0 * math.pi) - float(log_scaled_bessel_i(nu, kappa))


_KENT_TERM_TOL = 1e-14
_KENT_CHUNK = 32
_KENT_MAX_TERMS = 4096


def _kent_terms(kappa: float, beta: float):
    """Log-terms of the Kent series plus log of (kappa/2) s(nu+1)/s(nu) per term."""
    log_beta2 = 2.0 * math.log(beta)
    logs, dlogs = [], []
    start = 0
    while start < _KENT_MAX_TERMS:
        j = np.arange(start, start + _KENT_CHUNK, dtype=float)
        nu = 2.0 * j + 0.5
        ls = log_scaled_bessel_i(nu, kappa)
        logs.append(special.gammaln(j + 0.5) - special.gammaln(j + 1.0) + j * log_beta2 + ls)
        dlogs.append(log_scaled_bessel_i(nu + 1.0, kappa) - ls)
        all_terms = np.concatenate(logs)
        total = special.logsumexp(all_terms)
        if all_terms[-1] < all_terms[-2] and all_terms[-1] - total < math.log(_KENT_TERM_TOL):
            return all_terms, np.concatenate(dlogs), float(total)
        start += _KENT_CHUNK
    raise ArithmeticError(f"Kent normalizing series did not converge for kappa={kappa}, beta={beta}")


def kent_log_normalizer(kappa: float, beta: float) -> float:
    """log c(kappa, beta) for the Kent density on S^2.

    c = 2 pi sum_j Gamma(j+1/2)/Gamma(j+1) beta^{2j} (kappa/2)^{-2j-1/2} I_{2j+1/2}(kappa),
    summed in log space until a term falls below 1e-14 of the running total.
    The series converges for every beta >= 0, including the bimodal regime
    2 beta >= kappa.
    """
    kappa = float(kappa)
    beta = float(beta)
    if kappa < 0 or beta < 0:
        raise ValueError("kappa and beta must be nonnegative")
    if beta == 0.0:
        return math.log(2.0 * math.pi) + math.lgamma(0.5) + float(log_scaled_bessel_i(0.5, kappa))
    _, _, total = _kent_terms(kappa, beta)
    return math.log(2.0 * math.pi) + total


def kent_log_normalizer_grad(kappa: float, beta: float) -> tuple[float, float, float]:
    """(log c, d log c / d kappa, d log c / d beta).

    The derivatives are the model expectations of theta'x and
    (g2'x)^2 - (g3'x)^2. Uses d/dk[(k/2)^-nu I_nu(k)] = (k/2)(k/2)^-nu I_{nu+1}(k).
    """
    kappa = float(kappa)
    beta = float(beta)
    if beta == 0.0:
        ls = float(log_scaled_bessel_i(0.5, kappa))
        dk = 0.5 * kappa * math.exp(float(log_scaled_bessel_i(1.5, kappa)) - ls)
        return math.log(2.0 * math.pi) + math.lgamma(0.5) + ls, dk, 0.0
    terms, dlogs, total = _kent_terms(kappa, beta)
    p = np.exp(terms - total)
    dk = 0.5 * kappa * float(np.sum(p * np.exp(dlogs)))
    j = np.arange(terms.size, dtype=float)
    db = float(np.sum(p * 2.0 * j)) / beta
    return math.log(2.0 * math.pi) + total, dk, db
