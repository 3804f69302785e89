import csv
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayes_perceptron import Activation, Gaussian1D, WeightPosterior, affine_forward
from bayes_perceptron.oracle import (
    OracleError,
    QuadratureConfig,
    exact_linear_posterior,
    mc_output_moments,
    quad_output_moments,
    true_posterior_a,
)

FIXTURES = Path(__file__).parent / "fixtures"
SIGMOID = Activation.sigmoid()
RELU = Activation.relu()
LINEAR = Activation.linear()


def load_fixture(name):
    with open(FIXTURES / name) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(rows)]


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(half_width=6.0)


# -- output moments -----------------------------------------------------------


def test_quad_linear_closed_form():
    m = quad_output_moments(LINEAR, Gaussian1D(1.7, 0.6))
    assert m.mu_y == pytest.approx(1.7, abs=1e-10)
    assert m.sigma_y2 == pytest.approx(0.6, abs=1e-10)
    assert m.sigma_ya == pytest.approx(0.6, abs=1e-10)


def test_quad_relu_half_gaussian():
    m = quad_output_moments(RELU, Gaussian1D(0.0, 1.0))
    assert m.mu_y == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-10)
    assert m.sigma_y2 == pytest.approx(0.5 - 1 / (2 * math.pi), abs=1e-10)
    assert m.sigma_ya == pytest.approx(0.5, abs=1e-10)


def test_quad_sigmoid_symmetry():
    assert quad_output_moments(SIGMOID, Gaussian1D(0.0, 1.0)).mu_y == pytest.approx(0.5, abs=1e-10)


def test_quad_point_mass():
    m = quad_output_moments(RELU, Gaussian1D(-2.0, 0.0))
    assert (m.mu_y, m.sigma_y2, m.sigma_ya) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("act", [SIGMOID, RELU, Activation.pwl(0.2, 1.5)], ids=str)
@pytest.mark.parametrize("mu,var", [(1.0, 2.0), (-3.0, 0.4), (0.5, 4.0)])
def test_half_width_stability(act, mu, var):
    g = Gaussian1D(mu, var)
    narrow = quad_output_moments(act, g, QuadratureConfig(half_width=10.0))
    wide = quad_output_moments(act, g, QuadratureConfig(half_width=14.0))
    for u, v in zip((narrow.mu_y, narrow.sigma_y2, narrow.sigma_ya),
                    (wide.mu_y, wide.sigma_y2, wide.sigma_ya)):
        assert abs(u - v) <= 1e-10


def test_quad_reports_non_convergence():
    with pytest.raises(OracleError) as info:
        quad_output_moments(SIGMOID, Gaussian1D(0.3, 1.0),
                            QuadratureConfig(abs_tol=1e-300, max_subdivisions=1))
    assert info.value.error_estimate is not None


# -- Monte Carlo ----------------------------------------------------------------


def _within(mc, ref, k=4.0):
    return (abs(mc.mu_y - ref.mu_y) <= k * mc.se_mu_y
            and abs(mc.sigma_y2 - ref.sigma_y2) <= k * mc.se_sigma_y2
            and abs(mc.sigma_ya - ref.sigma_ya) <= k * mc.se_sigma_ya)


def test_mc_agrees_with_quad_sigmoid():
    g = Gaussian1D(1.0, 2.0)
    assert _within(mc_output_moments(SIGMOID, g, 1_000_000, seed=0),
                   quad_output_moments(SIGMOID, g))


def test_mc_quad_sweep():
    rng = np.random.default_rng(21)
    acts = [SIGMOID, RELU, Activation.pwl(0.1, 1.3)]
    hits = 0
    total = 0
    for i in range(30):
        act = acts[i % 3]
        g = Gaussian1D(rng.uniform(-4, 4), rng.uniform(0.05, 4))
        mc = mc_output_moments(act, g, 200_000, seed=i)
        total += 1
        hits += _within(mc, quad_output_moments(act, g))
    # three moments at 4 standard errors each: misses should be very rare
    assert hits >= total - 1


def test_mc_deterministic_and_point_mass():
    g = Gaussian1D(0.3, 0.7)
    assert mc_output_moments(SIGMOID, g, 10_000, 5) == mc_output_moments(SIGMOID, g, 10_000, 5)
    pm = mc_output_moments(RELU, Gaussian1D(1.5, 0.0), 10_000, 0)
    assert (pm.mu_y, pm.sigma_y2, pm.sigma_ya) == (1.5, 0.0, 0.0)
    with pytest.raises(ValueError):
        mc_output_moments(SIGMOID, g, 100, 0)


# -- true posterior of a --------------------------------------------------------


@pytest.mark.parametrize("row", load_fixture("true_posterior_a.csv"),
                         ids=lambda r: f"{r['mu_a']}_{r['sigma_a2']}_{r['y']}_{r['epsilon']}")
def test_true_posterior_fixtures(row):
    mean, var = true_posterior_a(SIGMOID, Gaussian1D(row["mu_a"], row["sigma_a2"]),
                                 row["y"], row["epsilon"])
    assert mean == pytest.approx(row["true_mean"], abs=1e-9)
    assert var == pytest.approx(row["true_var"], abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.05, 3.0), st.floats(-3.0, 3.0), st.floats(0.01, 2.0))
def test_true_posterior_linear_is_kalman(mu, var, y, eps):
    mean, post_var = true_posterior_a(LINEAR, Gaussian1D(mu, var), y, eps)
    assert mean == pytest.approx(mu + var * (y - mu) / (var + eps), abs=1e-10)
    assert post_var == pytest.approx(var * eps / (var + eps), abs=1e-10)


def test_true_posterior_evidence_direction():
    mean, var = true_posterior_a(SIGMOID, Gaussian1D(0.0, 1.0), 1.0, 0.01)
    assert mean > 0.0
    assert 0.0 < var < 1.0


def test_true_posterior_rejects_degenerate():
    with pytest.raises(ValueError):
        true_posterior_a(SIGMOID, Gaussian1D(0.0, 1.0), 1.0, 0.0)
    with pytest.raises(ValueError):
        true_posterior_a(SIGMOID, Gaussian1D(0.0, 0.0), 1.0, 0.1)


def test_true_posterior_stable_in_half_width():
    g = Gaussian1D(1.0, 1.0)
    a = true_posterior_a(SIGMOID, g, 1.0, 0.01, QuadratureConfig(half_width=10.0))
    b = true_posterior_a(SIGMOID, g, 1.0, 0.01, QuadratureConfig(half_width=14.0))
    assert a == pytest.approx(b, abs=1e-9)


# -- conjugate linear posterior -------------------------------------------------


def test_exact_linear_scalar():
    post = exact_linear_posterior(WeightPosterior([0.0], [[1.0]]), [1.0], 1.0, 1.0)
    assert post.mean[0] == 0.5 and post.cov[0, 0] == 0.5


def test_exact_linear_infinite_noise():
    w = WeightPosterior([0.3, -1.0], [[1.0, 0.2], [0.2, 2.0]])
    post = exact_linear_posterior(w, [1.0, 1.0], 4.0, 1e15)
    np.testing.assert_allclose(post.mean, w.mean, atol=1e-12)
    np.testing.assert_allclose(post.cov, w.cov, atol=1e-12)


def test_exact_linear_projects_to_scalar_kalman():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(4, 4))
    w = WeightPosterior(rng.normal(size=4), a @ a.T)
    x = rng.normal(size=4)
    prior = affine_forward(w, x)
    post = affine_forward(exact_linear_posterior(w, x, 0.7, 0.2), x)
    mean, var = true_posterior_a(LINEAR, prior, 0.7, 0.2)
    assert post.mean == pytest.approx(mean, abs=1e-10)
    assert post.variance == pytest.approx(var, abs=1e-10)
