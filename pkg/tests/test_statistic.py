import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cf_statistic_mc, naive_statistic, uniform_sphere
from spheregof.exceptions import DimensionMismatch, InvalidSpec
from spheregof.samplers import SeedStream, Uniform, VonMisesFisher, sample
from spheregof.statistic import (
    EnergySR, StableCF, compute_statistic, delta_hat, kernel_eval, kernel_from_dict, kernel_to_dict,
    pairwise_sqdist, pooled_quadratic_statistics,
)


def points(n, d, seed):
    return uniform_sphere(n, d, np.random.default_rng(seed))


def test_closed_form_antipodal_pair():
    # n = m = 1: T = (1/2)(2 - 2 e^{-4}) = 1 - e^{-4}.
    t = compute_statistic([[1.0, 0.0, 0.0]], [[-1.0, 0.0, 0.0]], StableCF(1.0)).t
    assert t == pytest.approx(1 - math.exp(-4), abs=1e-14)


def test_energy_closed_form_antipodal_pair():
    # C(z) = -|z|: T = (1/2)(0 + 2 * 2 + 0) = 2.
    assert compute_statistic([[0.0, 1.0]], [[0.0, -1.0]], EnergySR(1.0)).t == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("kernel", [StableCF(0.7), StableCF(2.0, 1.0), EnergySR(0.5), EnergySR(1.5)])
def test_matches_naive_oracle(kernel):
    x, y = points(13, 3, 1), points(9, 3, 2)
    kind, par = ("stable", kernel.gamma) if isinstance(kernel, StableCF) else ("energy", kernel.a)
    xi = getattr(kernel, "xi", 2.0)
    assert compute_statistic(x, y, kernel).t == pytest.approx(naive_statistic(x, y, kind, par, xi), rel=1e-12)


def test_matches_characteristic_function_definition():
    # Gaussian kernel corresponds to a N(0, 2 gamma I) weight on t.
    x, y = points(6, 3, 3), points(5, 3, 4)
    exact = compute_statistic(x, y, StableCF(0.8)).t
    approx = cf_statistic_mc(x, y, 0.8, draws=2_000_000)
    assert approx == pytest.approx(exact, rel=0.02)


def test_identical_samples_give_zero():
    x = points(20, 4, 5)
    assert compute_statistic(x, x, StableCF(1.0)).t == 0.0
    assert compute_statistic(x, x, EnergySR(0.3)).t == 0.0


def test_nonnegative_for_positive_definite_kernel():
    rng = np.random.default_rng(6)
    for _ in range(20):
        x = uniform_sphere(rng.integers(1, 30), 3, rng)
        y = uniform_sphere(rng.integers(1, 30), 3, rng)
        assert compute_statistic(x, y, StableCF(rng.uniform(0.1, 5), rng.uniform(0.2, 2))).t >= -1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 25), st.integers(1, 25), st.sampled_from([2, 3, 5]), st.integers(0, 2**32 - 1))
def test_swap_symmetry_exact(n, m, d, seed):
    x, y = points(n, d, seed), points(m, d, seed + 1)
    for k in (StableCF(1.3), EnergySR(0.9)):
        assert compute_statistic(x, y, k).t == compute_statistic(y, x, k).t


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20), st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_rotation_invariance(n, m, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    x, y = uniform_sphere(n, 3, rng), uniform_sphere(m, 3, rng)
    k = StableCF(0.6)
    assert compute_statistic(x @ q.T, y @ q.T, k).t == pytest.approx(compute_statistic(x, y, k).t,
                                                                     rel=1e-10, abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 15), st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_permutation_invariance(n, m, seed):
    rng = np.random.default_rng(seed)
    x, y = uniform_sphere(n, 3, rng), uniform_sphere(m, 3, rng)
    k = StableCF(2.0)
    assert compute_statistic(rng.permutation(x), rng.permutation(y), k).t == pytest.approx(
        compute_statistic(x, y, k).t, rel=1e-12, abs=1e-14)


def test_blocked_path_matches_dense():
    x, y = points(300, 3, 7), points(250, 3, 8)
    k = StableCF(1.0)
    dense = compute_statistic(x, y, k).t
    blocked = compute_statistic(x, y, k, memory_cap=50_000).t
    assert blocked == pytest.approx(dense, rel=1e-12)


def test_delta_scaling():
    x, y = points(30, 3, 9), points(20, 3, 10)
    v = compute_statistic(x, y, StableCF(1.0))
    assert v.delta == pytest.approx(delta_hat(x, y, StableCF(1.0)), rel=1e-15)
    assert v.delta == pytest.approx(v.t * 50 / 600, rel=1e-15)


def test_pairwise_sqdist_exact_properties():
    x, y = points(15, 4, 11), points(12, 4, 12)
    d = pairwise_sqdist(x, y)
    assert np.array_equal(d, pairwise_sqdist(y, x).T)
    assert np.all(np.diag(pairwise_sqdist(x, x)) == 0.0)
    assert np.allclose(d, ((x[:, None, :] - y[None, :, :]) ** 2).sum(-1), atol=1e-15)


def test_pooled_quadratic_form_identity():
    # w = c_x/n - c_y/m over the pooled sample reproduces T for any resampled split.
    rng = np.random.default_rng(13)
    z = uniform_sphere(12, 3, rng)
    n, m = 5, 7
    k = StableCF(0.9)
    idx = rng.integers(0, 12, size=n + m)
    w = np.bincount(idx[:n], minlength=12) / n - np.bincount(idx[n:], minlength=12) / m
    gram = k.from_sqdist(pairwise_sqdist(z, z))
    t = pooled_quadratic_statistics(gram, w[None], n, m)[0]
    assert t == pytest.approx(compute_statistic(z[idx[:n]], z[idx[n:]], k).t, rel=1e-12)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        compute_statistic(points(3, 3, 0), points(3, 4, 0), StableCF(1.0))


def test_kernel_validation_and_round_trip():
    for bad in (lambda: StableCF(0.0), lambda: StableCF(1.0, 2.5), lambda: EnergySR(2.0), lambda: EnergySR(0.0)):
        with pytest.raises(InvalidSpec):
            bad()
    for k in (StableCF(0.5, 1.5), EnergySR(0.75)):
        assert kernel_from_dict(kernel_to_dict(k)) == k
    assert kernel_eval(StableCF(1.0), [1.0, 0.0], [0.0, 1.0]) == pytest.approx(math.exp(-2.0), rel=1e-15)


def test_delta_hat_consistency_small_scale():
    # Large n pulls delta_hat towards the population value: here X and Y share a law.
    x = sample(VonMisesFisher([1.0, 0.0, 0.0], 2.0), 3000, SeedStream(1))
    y = sample(VonMisesFisher([1.0, 0.0, 0.0], 2.0), 3000, SeedStream(2))
    assert delta_hat(x, y, StableCF(1.0)) < 2e-3
    u = sample(Uniform(3), 3000, SeedStream(3))
    assert delta_hat(x, u, StableCF(1.0)) > 0.05
