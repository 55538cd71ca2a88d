"""Named directions, ACG scatter matrices and the preset simulation designs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..samplers import AngularCentralGaussian, DistributionSpec, MixtureVMF, Uniform, VonMisesFisher
from ..statistic import EnergySR, KernelSpec, StableCF


def mu1(d: int = 3) -> np.ndarray:
    """(1, 0, ..., 0)."""
    v = np.zeros(d)
    v[0] = 1.0
    return v


def one(d: int = 3) -> np.ndarray:
    """(1, ..., 1) / sqrt(d)."""
    return np.full(d, 1.0 / np.sqrt(d))


def mu2(d: int = 3) -> np.ndarray:
    """(-1, 1, ..., 1) / sqrt(d)."""
    v = np.full(d, 1.0 / np.sqrt(d))
    v[0] = -v[0]
    return v


DIRECTIONS = {"mu1": mu1, "one": one, "mu2": mu2}


def direction(name: str, d: int = 3) -> np.ndarray:
    """Resolve ``"mu1"``, ``"-mu1"``, ``"one"``, ``"mu2"`` and friends."""
    sign = -1.0 if name.startswith("-") else 1.0
    key = name.lstrip("+-")
    if key not in DIRECTIONS:
        raise KeyError(f"unknown direction {name!r}; known: {sorted(DIRECTIONS)}")
    return sign * DIRECTIONS[key](d)


ACG_MATRIX = np.array([
    [-0.846, -0.531, -0.779],
    [0.609, -0.096, 0.761],
    [0.851, 0.133, -0.666],
])


def acg_sigma(ell: int) -> np.ndarray:
    """Scatter matrix of scenario ACG_ell.

    ACG_0 uses diag(1, 2, 3); for ell = 1..4 the matrix is (A^ell)' A^ell
    where A^ell raises each entry of ``ACG_MATRIX`` to the power ell.
    """
    if ell == 0:
        return np.diag([1.0, 2.0, 3.0])
    if ell not in (1, 2, 3, 4):
        raise ValueError(f"ACG scenarios are indexed 0..4, got {ell}")
    a = ACG_MATRIX ** ell
    return a.T @ a


@dataclass(frozen=True)
class Scenario:
    label: str
    spec: DistributionSpec


def _fmt(v: float) -> str:
    return f"{v:g}"


def vmf(kappa: float, dir_name: str = "mu1", d: int = 3) -> Scenario:
    return Scenario(f"vMF({dir_name},{_fmt(kappa)})", VonMisesFisher(direction(dir_name, d), kappa))


def mmf(weights: Sequence[float], dirs: Sequence[str], kappas: Sequence[float], d: int = 3) -> Scenario:
    label = "MMF(({}),({}),({}))".format(",".join(map(_fmt, weights)), ",".join(dirs),
                                         ",".join(map(_fmt, kappas)))
    comps = tuple((direction(n, d), float(k)) for n, k in zip(dirs, kappas))
    return Scenario(label, MixtureVMF(tuple(float(w) for w in weights), comps))


def acg(ell: int) -> Scenario:
    return Scenario(f"ACG{ell}", AngularCentralGaussian(acg_sigma(ell)))


def _two_mode_rows(pairs: Sequence[tuple]) -> list:
    return [mmf(w, dirs, kap) for w, dirs, kap in pairs]


_VMF_KAPPAS = (0.0, 0.25, 0.5, 0.75, 1.0)
_Q, _H, _T = (0.25, 0.75), (0.5, 0.5), (0.75, 0.25)
_SAME, _OPP = ("mu1", "mu1"), ("-mu1", "mu1")
_CORE_MIXTURES = [
    (_Q, _SAME, (0, 2)), (_Q, _OPP, (2, 2)), (_H, _SAME, (0, 2)),
    (_H, _OPP, (2, 2)), (_T, _SAME, (0, 2)), (_T, _OPP, (2, 2)),
]


def _sweep(w) -> list:
    return [(w, _OPP, (5, k)) for k in range(5)] + [(w, _OPP, (k, 3)) for k in range(5)]


def uniformity_alternatives() -> list:
    """Rows of the uniformity power tables (vMF and two-component mixtures)."""
    return ([vmf(k) for k in _VMF_KAPPAS]
            + _two_mode_rows(_CORE_MIXTURES + _sweep(_Q) + _sweep(_H)))


def three_mode_alternatives() -> list:
    dirs = ("-one", "mu2", "mu1")
    kappas = [(2, 2, 2), (2, 3, 2), (2, 4, 2), (2, 2, 1), (2, 2, 3), (2, 2, 4),
              (0.5, 2, 1), (0.25, 1, 2), (2, 0.25, 1)]
    return [mmf(w, dirs, k) for w in ((0.25, 0.25, 0.5), (0.1, 0.1, 0.8)) for k in kappas]


def composite_alternatives() -> list:
    """Rows used for the composite vMF and ACG power tables."""
    return [vmf(k) for k in _VMF_KAPPAS] + _two_mode_rows(_CORE_MIXTURES + _sweep(_Q))


def stable_grid(gammas: Sequence[float], xi: float = 2.0) -> list:
    return [StableCF(float(g), xi) for g in gammas]


UNIFORMITY_GAMMAS = (5, 2, 1, 0.5, 0.25, 0.17)
WEIGHT_GAMMAS = (0.1, 0.5, 0.75, 1, 2, 3)
VMF_GAMMAS = (0.1, 0.5, 0.75, 1, 2, 3)
ACG_GAMMAS = (0.1, 0.5, 1, 3)
FIGURE_M_VALUES = (10, 50, 100, 200, 500)


def preset(name: str) -> dict:
    """Simulation design in the plain-dict form accepted by ``ExperimentSpec.from_dict``.

    ``table1`` and ``table2`` test uniformity with the Gaussian kernel,
    ``table3`` varies the kernel family, ``table4``/``table5`` test the fit to
    the vMF and ACG families, and ``figure_m`` sweeps the artificial sample
    size. Replications and b are at desk scale.
    """
    from .power import ExperimentSpec

    base = dict(n=50, alpha=0.05, replications=1000, seed=20240521, method="bootstrap")
    if name == "table1":
        return ExperimentSpec(uniformity_alternatives(), Uniform(3), stable_grid(UNIFORMITY_GAMMAS),
                              m=500, b=199, **base).to_dict()
    if name == "table2":
        return ExperimentSpec(three_mode_alternatives(), Uniform(3), stable_grid(UNIFORMITY_GAMMAS),
                              m=500, b=199, **base).to_dict()
    if name == "table3":
        kernels = (stable_grid(WEIGHT_GAMMAS, 1.0) + stable_grid(WEIGHT_GAMMAS, 1.5)
                   + [EnergySR(a) for a in (0.1, 0.5, 0.75, 1.0, 1.5, 1.9)])
        return ExperimentSpec(uniformity_alternatives(), Uniform(3), kernels, m=500, b=199, **base).to_dict()
    if name == "table4":
        return ExperimentSpec(composite_alternatives(), "vmf", stable_grid(VMF_GAMMAS),
                              m=200, b=199, **{**base, "replications": 500}).to_dict()
    if name == "table5":
        rows = [acg(ell) for ell in range(5)] + composite_alternatives()
        return ExperimentSpec(rows, "acg", stable_grid(ACG_GAMMAS),
                              m=200, b=199, **{**base, "replications": 500}).to_dict()
    if name == "figure_m":
        return ExperimentSpec([vmf(k) for k in (0.25, 0.5, 0.75, 1.0)], Uniform(3), [StableCF(1.0)],
                              m=500, b=199, m_values=FIGURE_M_VALUES, **base).to_dict()
    raise KeyError(f"unknown preset {name!r}; choose from {PRESETS}")


PRESETS = ("table1", "table2", "table3", "table4", "table5", "figure_m")
