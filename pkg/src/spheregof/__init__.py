"""Goodness-of-fit tests on the hypersphere based on empirical characteristic functions."""

__version__ = "0.1.0"

from .estimators import FitResult, fit_acg, fit_kent, fit_vmf
from .exceptions import *  # noqa: F401,F403
from .geometry import (
    Sample, UnitVector, dec_inc_to_cartesian, from_dec_inc, normalize, surface_area,
)
from .resampling import Method, TestConfig, TestResult, empirical_quantile, test_composite, test_simple
from .samplers import (
    AngularCentralGaussian, Kent, MixtureVMF, SeedStream, Uniform, VonMisesFisher, density, log_density,
    sample,
)
from .special import bessel_i_ratio, kent_log_normalizer, mean_resultant_length, vmf_log_normalizer
from .statistic import EnergySR, StableCF, StatisticValue, compute_statistic, delta_hat

__all__ = [
    "FitResult", "fit_acg", "fit_kent", "fit_vmf", "Sample", "UnitVector", "dec_inc_to_cartesian",
    "from_dec_inc", "normalize", "surface_area", "Method", "TestConfig", "TestResult",
    "empirical_quantile", "test_composite", "test_simple", "AngularCentralGaussian", "Kent",
    "MixtureVMF", "SeedStream", "Uniform", "VonMisesFisher", "density", "log_density", "sample",
    "bessel_i_ratio", "kent_log_normalizer", "mean_resultant_length", "vmf_log_normalizer",
    "EnergySR", "StableCF", "StatisticValue", "compute_statistic", "delta_hat",
]
