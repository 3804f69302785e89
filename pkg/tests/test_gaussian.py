import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bayes_perceptron import (
    Gaussian1D,
    WeightPosterior,
    affine_forward,
    partial_moments,
    posterior_reweight,
    std_normal_cdf,
    std_normal_pdf,
)

finite = st.floats(-8.0, 8.0, allow_nan=False)


def _quad(f, lo=-np.inf, hi=np.inf):
    return integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-13)[0]


def _gauss(a, mu, var):
    return math.exp(-(a - mu) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)


def random_psd(rng, d, rank=None):
    a = rng.normal(size=(d, rank or d))
    return a @ a.T


# -- densities ----------------------------------------------------------------


def test_pdf_normalises_and_peak():
    assert _quad(std_normal_pdf) == pytest.approx(1.0, abs=1e-12)
    assert std_normal_pdf(0.0) == pytest.approx(0.3989422804014327, abs=1e-15)
    assert std_normal_pdf(10.0) < 1e-20


@given(finite)
def test_pdf_even(z):
    assert std_normal_pdf(z) == std_normal_pdf(-z)
    assert std_normal_pdf(z) > 0.0


def test_cdf_against_integrated_pdf():
    assert std_normal_cdf(0.0) == 0.5
    # scipy quad of the density from -inf to 1
    assert std_normal_cdf(1.0) == pytest.approx(0.8413447460685431, abs=1e-12)
    for z in (-6.0, -2.5, -0.3, 0.7, 3.1):
        assert std_normal_cdf(z) == pytest.approx(_quad(std_normal_pdf, -np.inf, z), abs=1e-12)


@given(finite)
def test_cdf_symmetry(z):
    assert abs(std_normal_cdf(z) + std_normal_cdf(-z) - 1.0) <= 1e-14


@given(finite, st.floats(0.0, 1.0))
def test_cdf_monotone(z, dz):
    assert std_normal_cdf(z) <= std_normal_cdf(z + dz)
    assert 0.0 <= std_normal_cdf(z) <= 1.0


# -- truncated moments --------------------------------------------------------


def test_partial_moments_standard_normal():
    pm = partial_moments(Gaussian1D(0.0, 1.0))
    assert pm.p0 == pytest.approx(0.5, abs=1e-12)
    assert pm.t1 == pytest.approx(0.3989422804014327, abs=1e-12)
    assert pm.t2 == pytest.approx(0.5, abs=1e-12)
    assert pm.pa == pytest.approx(0.3989422804014327, abs=1e-12)
    assert (pm.e1, pm.e2) == (0.0, 1.0)


def test_partial_moments_point_mass():
    pm = partial_moments(Gaussian1D(3.0, 0.0))
    assert (pm.p0, pm.t1, pm.t2, pm.pa) == (1.0, 3.0, 9.0, 0.0)
    neg = partial_moments(Gaussian1D(-2.0, 0.0))
    assert (neg.p0, neg.t1, neg.t2, neg.pa) == (0.0, 0.0, 0.0, 0.0)
    assert partial_moments(Gaussian1D(0.0, 0.0)).p0 == 0.5


def test_partial_moments_shifted():
    # quad over [0, inf) of N(a; -1, 2), a N(a; -1, 2), a^2 N(a; -1, 2)
    pm = partial_moments(Gaussian1D(-1.0, 2.0))
    assert pm.p0 == pytest.approx(0.23975006109347677, abs=1e-12)
    assert pm.t1 == pytest.approx(0.19964122837424567, abs=1e-12)
    assert pm.t2 == pytest.approx(0.27985889381270784, abs=1e-12)


@pytest.mark.parametrize("mu,var", [(0.4, 0.3), (-2.0, 5.0), (3.0, 0.1), (-0.1, 1e-4)])
def test_partial_moments_match_quadrature(mu, var):
    pm = partial_moments(Gaussian1D(mu, var))
    lo = 0.0
    hi = mu + 40 * math.sqrt(var) if mu + 40 * math.sqrt(var) > 0 else 1.0
    assert pm.p0 == pytest.approx(_quad(lambda a: _gauss(a, mu, var), lo, hi), abs=1e-10)
    assert pm.t1 == pytest.approx(_quad(lambda a: a * _gauss(a, mu, var), lo, hi), abs=1e-10)
    assert pm.t2 == pytest.approx(_quad(lambda a: a * a * _gauss(a, mu, var), lo, hi), abs=1e-10)


@given(finite, st.floats(0.0, 10.0))
def test_partial_moments_invariants(mu, var):
    pm = partial_moments(Gaussian1D(mu, var))
    assert 0.0 <= pm.p0 <= 1.0
    assert 0.0 <= pm.t2 <= pm.e2 + 1e-12
    # the negative half is the reflected positive half of N(-mu, var)
    reflected = partial_moments(Gaussian1D(-mu, var))
    assert pm.t1 - reflected.t1 == pytest.approx(pm.e1, abs=1e-12)


@given(st.floats(1e-6, 100.0))
def test_partial_moments_symmetric_at_zero_mean(var):
    assert abs(partial_moments(Gaussian1D(0.0, var)).p0 - 0.5) <= 1e-12


def test_gaussian_rejects_negative_variance():
    with pytest.raises(ValueError):
        Gaussian1D(0.0, -1.0)
    with pytest.raises(ValueError):
        Gaussian1D(float("nan"), 1.0)


# -- weight posterior ---------------------------------------------------------


def test_weight_posterior_validation():
    with pytest.raises(ValueError):
        WeightPosterior([0.0, 0.0], np.eye(3))
    with pytest.raises(ValueError):
        WeightPosterior([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
    w = WeightPosterior([1.0, 2.0], np.eye(2))
    with pytest.raises(ValueError):
        w.mean[0] = 3.0


def test_affine_forward_prior_example():
    w = WeightPosterior([-1.0, 0.0], np.eye(2))
    a = affine_forward(w, [1.0, 1.0])
    assert (a.mean, a.variance) == (-1.0, 2.0)


def test_affine_forward_deterministic_weights():
    w = WeightPosterior([0.3, -0.2, 1.0], np.zeros((3, 3)))
    assert affine_forward(w, [4.0, 5.0, -6.0]).variance == 0.0


def test_affine_forward_dimension_mismatch():
    with pytest.raises(ValueError):
        affine_forward(WeightPosterior([0.0, 0.0], np.eye(2)), [1.0, 2.0, 3.0])


def test_affine_forward_matches_monte_carlo():
    rng = np.random.default_rng(11)
    mean = rng.normal(size=3)
    cov = random_psd(rng, 3)
    x = rng.normal(size=3)
    a = affine_forward(WeightPosterior(mean, cov), x)
    draws = rng.multivariate_normal(mean, cov, size=1_000_000) @ x
    n = draws.size
    se_mean = draws.std() / math.sqrt(n)
    se_var = math.sqrt(np.mean((draws - draws.mean()) ** 4) - draws.var() ** 2) / math.sqrt(n)
    assert abs(a.mean - draws.mean()) <= 3 * se_mean
    assert abs(a.variance - draws.var()) <= 3 * se_var


@settings(max_examples=200)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_affine_forward_variance_nonnegative(d, rank, seed):
    rng = np.random.default_rng(seed)
    w = WeightPosterior(rng.normal(size=d), random_psd(rng, d, rank))
    assert affine_forward(w, rng.normal(size=d)).variance >= 0.0


# -- rank-one reweighting -----------------------------------------------------


def test_reweight_zero_innovation_is_identity():
    rng = np.random.default_rng(3)
    w = WeightPosterior(rng.normal(size=4), random_psd(rng, 4))
    x = rng.normal(size=4)
    a = affine_forward(w, x)
    out = posterior_reweight(w, x, a, a)
    np.testing.assert_array_equal(out.mean, w.mean)
    np.testing.assert_allclose(out.cov, w.cov, rtol=0, atol=1e-15)


def test_reweight_scalar_conjugate():
    # prior N(0, 1) on w, a = w, refined belief N(0.5, 0.5) -> posterior N(0.5, 0.5)
    w = WeightPosterior([0.0], [[1.0]])
    out = posterior_reweight(w, [1.0], Gaussian1D(0.0, 1.0), Gaussian1D(0.5, 0.5))
    assert out.mean[0] == pytest.approx(0.5, abs=1e-15)
    assert out.cov[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_reweight_rejects_zero_variance():
    w = WeightPosterior([0.0, 0.0], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        posterior_reweight(w, [1.0, 1.0], Gaussian1D(0.0, 0.0), Gaussian1D(0.0, 0.0))


@settings(max_examples=300)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0),
       st.floats(-3.0, 3.0))
def test_reweight_contracts_and_stays_psd(d, seed, shrink, shift):
    rng = np.random.default_rng(seed)
    w = WeightPosterior(rng.normal(size=d), random_psd(rng, d) + 1e-3 * np.eye(d))
    x = rng.normal(size=d)
    prior = affine_forward(w, x)
    updated = Gaussian1D(prior.mean + shift, prior.variance * shrink)
    out = posterior_reweight(w, x, prior, updated)
    np.testing.assert_array_equal(out.cov, out.cov.T)
    assert x @ out.cov @ x <= x @ w.cov @ x + 1e-12 * (x @ w.cov @ x)
    assert out.is_psd(scale=np.trace(w.cov))
