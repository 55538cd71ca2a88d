"""Simple- and composite-hypothesis goodness-of-fit tests.

Both tests compare the data with an artificial sample drawn from the
(fitted) null model and calibrate the statistic by resampling. Stream
layout under ``config.seed``: ``child(0)`` draws the artificial sample,
``child(j + 1)`` drives resampling replicate ``j``. Replicates therefore
never share random numbers and the result does not depend on the order in
which they are evaluated.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .estimators import Family, FitResult, get_family
from .exceptions import DimensionMismatch, EmptyInput, EstimationError, FitFailed, InvalidConfig
from .geometry import Sample, SampleLike, as_array
from .samplers import DistributionSpec, SeedStream, sample
from .statistic import KernelSpec, StableCF, pairwise_sqdist, statistic_value

MAX_REDRAWS = 10
MAX_FAILURE_FRACTION = 0.05


class Method(str, enum.Enum):
    BOOTSTRAP = "bootstrap"
    PERMUTATION = "permutation"


@dataclass(frozen=True)
class TestConfig:
    """Settings shared by :func:`test_simple` and :func:`test_composite`.

    Parameters
    ----------
    alpha : float
        Nominal level in (0, 1).
    m : int
        Size of the artificial sample drawn from the null model.
    b : int
        Number of resampling replicates, at least 19. Values below 99 give
        a coarse critical value and trigger a warning.
    method : Method or str
        ``"bootstrap"`` (pooled, with replacement) or ``"permutation"``.
        Used by the simple test only.
    seed : SeedStream or int
    kernel : KernelSpec
    """

    __test__ = False

    alpha: float = 0.05
    m: int = 500
    b: int = 199
    method: Method = Method.BOOTSTRAP
    seed: SeedStream = field(default_factory=lambda: SeedStream(0))
    kernel: KernelSpec = field(default_factory=lambda: StableCF(1.0))

    def __post_init__(self):
        if not 0.0 < float(self.alpha) < 1.0:
            raise InvalidConfig(f"alpha must lie in (0, 1), got {self.alpha}")
        for name, low in (("m", 1), ("b", 19)):
            v = getattr(self, name)
            if int(v) != v or v < low:
                raise InvalidConfig(f"{name} must be an integer >= {low}, got {v}")
            object.__setattr__(self, name, int(v))
        if self.b < 99:
            warnings.warn(f"b={self.b} replicates give a coarse critical value; use b >= 99",
                          RuntimeWarning, stacklevel=3)
        try:
            object.__setattr__(self, "method", Method(self.method))
        except ValueError:
            raise InvalidConfig(f"unknown resampling method {self.method!r}") from None
        seed = self.seed
        if isinstance(seed, (int, np.integer)):
            seed = SeedStream(int(seed))
        if not isinstance(seed, SeedStream):
            raise InvalidConfig("seed must be a SeedStream or an integer")
        object.__setattr__(self, "seed", seed)
        if not isinstance(self.kernel, KernelSpec):
            raise InvalidConfig("kernel must be a KernelSpec")
        object.__setattr__(self, "alpha", float(self.alpha))

    def with_kernel(self, kernel: KernelSpec) -> "TestConfig":
        return _replace(self, kernel=kernel)

    def with_seed(self, seed) -> "TestConfig":
        return _replace(self, seed=seed)


def _replace(cfg: TestConfig, **changes) -> TestConfig:
    values = {k: getattr(cfg, k) for k in ("alpha", "m", "b", "method", "seed", "kernel")}
    values.update(changes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return TestConfig(**values)


@dataclass(frozen=True)
class TestResult:
    """Outcome of one test.

    ``reject`` is ``statistic_observed > critical_value``. ``p_value`` is
    the add-one Monte Carlo p-value (1 + #{t* >= t}) / (b + 1).
    """

    __test__ = False

    statistic_observed: float
    critical_value: float
    p_value: float
    reject: bool
    replicate_statistics: np.ndarray
    kernel: KernelSpec
    fitted: FitResult | None = None
    failed_replicates: int = 0


def empirical_quantile(values, q: float) -> float:
    """Order-statistic quantile: the ceil(q b)-th smallest of ``b`` values.

    >>> empirical_quantile(range(1, 101), 0.95)
    95.0
    """
    v = np.sort(np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float))
    if v.size == 0:
        raise EmptyInput("cannot take a quantile of an empty collection")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    # Rounding guards against q*b landing a hair above an integer, e.g. 0.95*100.
    k = max(1, math.ceil(round(q * v.size, 9)))
    return float(v[k - 1])


def _decide(t_obs: float, reps: np.ndarray, cfg: TestConfig, kernel, fitted=None, failed=0) -> TestResult:
    reps = np.array(reps, dtype=float)
    reps.setflags(write=False)
    crit = empirical_quantile(reps, 1.0 - cfg.alpha)
    p = (1.0 + float(np.count_nonzero(reps >= t_obs))) / (reps.size + 1.0)
    return TestResult(float(t_obs), crit, p, bool(t_obs > crit), reps, kernel, fitted, failed)


def _kernels(cfg: TestConfig, kernels) -> list:
    return [cfg.kernel] if kernels is None else list(kernels)


def _split_weights(n: int, m: int, cfg: TestConfig) -> np.ndarray:
    """Rows c_x/n - c_y/m for each replicate, from that replicate's stream."""
    N = n + m
    w = np.empty((cfg.b, N))
    for j in range(cfg.b):
        gen = cfg.seed.child(j + 1).generator()
        if cfg.method is Method.BOOTSTRAP:
            idx = gen.integers(0, N, size=N)
            w[j] = np.bincount(idx[:n], minlength=N) / n - np.bincount(idx[n:], minlength=N) / m
        else:
            perm = gen.permutation(N)
            w[j, perm[:n]] = 1.0 / n
            w[j, perm[n:]] = -1.0 / m
    return w


def test_simple(x: SampleLike, null_spec: DistributionSpec, config: TestConfig, *,
                y: SampleLike | None = None) -> TestResult:
    """Test H0: X ~ ``null_spec`` for a fully specified null.

    An artificial sample Y of size ``config.m`` is drawn from the null, and
    the null distribution of T is approximated by resampling the pooled
    sample: with replacement (pooled bootstrap) or by random relabelling
    (permutation). Passing ``y`` replaces the drawn artificial sample.
    """
    return test_simple_many(x, null_spec, config, y=y)[0]


def test_simple_many(x: SampleLike, null_spec: DistributionSpec, config: TestConfig,
                     kernels: Sequence[KernelSpec] | None = None, *,
                     y: SampleLike | None = None) -> list:
    """Run :func:`test_simple` for several kernels on the same draws."""
    xa = _data(x)
    if y is None:
        ya = sample(null_spec, config.m, config.seed.child(0)).data
    else:
        ya = _data(y)
    if xa.shape[1] != null_spec.d or ya.shape[1] != xa.shape[1]:
        raise DimensionMismatch(f"data dimension {xa.shape[1]} does not match the null ({null_spec.d})")
    n, m = xa.shape[0], ya.shape[0]
    z = np.concatenate([xa, ya])
    d2 = pairwise_sqdist(z, z)
    w = _split_weights(n, m, config)
    scale = (n * m) / (n + m)
    out = []
    for kern in _kernels(config, kernels):
        gram = kern.from_sqdist(d2)
        reps = scale * np.einsum("ij,ij->i", w @ gram, w)
        out.append(_decide(statistic_value(xa, ya, kern), reps, config, kern))
    return out


def _data(x: SampleLike) -> np.ndarray:
    a = x.data if isinstance(x, Sample) else as_array(x)
    if a.shape[0] == 0:
        raise EmptyInput("sample is empty")
    return a


def batch_statistics(xs: np.ndarray, ys: np.ndarray, kernels: Sequence[KernelSpec]) -> np.ndarray:
    """T for stacks of sample pairs: ``xs`` (B, n, d), ``ys`` (B, m, d).

    Returns an array of shape (len(kernels), B). Squared distances come from
    the Gram identity |x - y|^2 = 2 - 2 x'y, which is accurate to about
    1e-15 for unit vectors and much cheaper than exact differences; the
    diagonal is set to exactly 0.
    """
    nb, n, _ = xs.shape
    m = ys.shape[1]
    w = np.concatenate([np.full(n, 1.0 / n), np.full(m, -1.0 / m)])
    out = np.empty((len(kernels), nb))
    for j in range(nb):
        z = np.concatenate([xs[j], ys[j]])
        d2 = z @ z.T
        d2 *= -2.0
        d2 += 2.0
        np.maximum(d2, 0.0, out=d2)
        np.fill_diagonal(d2, 0.0)
        for i, kern in enumerate(kernels):
            out[i, j] = (kern.from_sqdist(d2) @ w) @ w
    return (n * m) / (n + m) * out


def _usable(fit) -> bool:
    return isinstance(fit, FitResult) and fit.converged


def _parametric_replicates(fitted: DistributionSpec, fam: Family, n: int, cfg: TestConfig):
    """Draw X* from the fitted model, refit, then draw Y* from the refit.

    A replicate whose fit fails is redrawn from its own stream up to
    ``MAX_REDRAWS`` times. Returns the stacked X*, Y* for the successful
    replicates and the number of replicates that never produced a fit.
    """
    b = cfg.b
    gens = [cfg.seed.child(j + 1).generator() for j in range(b)]
    fits: list = [None] * b
    xs = [None] * b
    pending = list(range(b))
    for _ in range(MAX_REDRAWS + 1):
        if not pending:
            break
        for j in pending:
            xs[j] = fitted._draw(n, gens[j])
        with warnings.catch_warnings():
            # Saturated replicate fits are handled as failures below.
            warnings.simplefilter("ignore", RuntimeWarning)
            results = fam.fit_batch([xs[j] for j in pending])
        still = []
        for j, res in zip(pending, results):
            if _usable(res):
                fits[j] = res
            else:
                still.append(j)
        pending = still
    ok = [j for j in range(b) if fits[j] is not None]
    if not ok:
        return np.empty((0, n, fitted.d)), np.empty((0, cfg.m, fitted.d)), b
    ys = np.stack([fits[j].spec._draw(cfg.m, gens[j]) for j in ok])
    return np.stack([xs[j] for j in ok]), ys, b - len(ok)


def test_composite(x: SampleLike, family: Union[str, Family], config: TestConfig) -> TestResult:
    """Test H0: X belongs to the parametric ``family`` (vmf, acg or kent).

    Parametric bootstrap: fit the family to X, compare X with an artificial
    sample from the fit, and calibrate by repeating fit-and-compare on
    samples drawn from the fitted model.

    Raises
    ------
    FitFailed
        If the data cannot be fitted, or more than 5% of the replicates fail
        after ``MAX_REDRAWS`` redraws each.
    """
    return test_composite_many(x, family, config)[0]


def test_composite_many(x: SampleLike, family: Union[str, Family], config: TestConfig,
                        kernels: Sequence[KernelSpec] | None = None) -> list:
    """Run :func:`test_composite` for several kernels on the same draws."""
    xa = _data(x)
    fam = get_family(family) if isinstance(family, str) else family
    try:
        fit = fam.fit(xa)
    except EstimationError as exc:
        raise FitFailed(f"{fam.name} fit of the observed sample failed: {exc}") from exc
    if not fit.converged:
        raise FitFailed(f"{fam.name} fit of the observed sample did not converge (status {fit.status})")
    n = xa.shape[0]
    ya = fit.spec._draw(config.m, config.seed.child(0).generator())
    xs, ys, failed = _parametric_replicates(fit.spec, fam, n, config)
    if failed > MAX_FAILURE_FRACTION * config.b:
        raise FitFailed(f"{failed} of {config.b} bootstrap replicates could not be fitted "
                        f"after {MAX_REDRAWS} redraws each")
    ks = _kernels(config, kernels)
    reps = batch_statistics(xs, ys, ks)
    return [_decide(statistic_value(xa, ya, k), reps[i], config, k, fit, failed) for i, k in enumerate(ks)]


__all__ = [
    "Method", "TestConfig", "TestResult", "empirical_quantile", "test_simple", "test_simple_many",
    "test_composite", "test_composite_many", "batch_statistics",
]
