"""Ground-truth engines: adaptive quadrature, Monte Carlo and exact conjugate updates.

Nothing here reuses the closed-form moment code.  All integrals are taken in
the standardised coordinate ``z = (a - mu) / sigma`` over ``[-half_width,
half_width]`` with scipy's adaptive QUADPACK routine.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .activations import Activation, OutputMoments
from .gaussian import Gaussian1D, WeightPosterior


class OracleError(RuntimeError):
    def __init__(self, message, error_estimate=None):
        super().__init__(message if error_estimate is None
                         else f"{message} (error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    half_width: float = 12.0
    max_subdivisions: int = 500

    def __post_init__(self):
        if not self.abs_tol > 0.0:
            raise ValueError("abs_tol must be positive")
        if not self.half_width >= 8.0:
            raise ValueError("half_width must be at least 8 standard deviations")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")


DEFAULT_QUADRATURE = QuadratureConfig()


def _activation_fn(act: Activation):
    if act.is_sigmoid:
        return special.expit
    alpha, beta = act.alpha, act.beta
    return lambda a: np.maximum(alpha * a, beta * a)


def _std_normal(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _quad(fn, cfg, points=None):
    lo, hi = -cfg.half_width, cfg.half_width
    pts = sorted({float(p) for p in (points or ()) if lo < p < hi}) or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(fn, lo, hi, epsabs=cfg.abs_tol, epsrel=1e-12,
                             limit=cfg.max_subdivisions, points=pts, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3 and err > cfg.abs_tol:
        raise OracleError(f"quadrature did not converge: {out[3]}", err)
    return value


def quad_output_moments(act: Activation, a: Gaussian1D,
                        cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> OutputMoments:
    """``E f(a)``, ``Var f(a)`` and ``Cov(f(a), a)`` by numerical integration."""
    f = _activation_fn(act)
    mu = a.mean
    if a.variance == 0.0:
        return OutputMoments(float(f(mu)), 0.0, 0.0)
    s = a.std
    kinks = None if act.is_sigmoid else [-mu / s]

    mu_y = _quad(lambda z: f(mu + s * z) * _std_normal(z), cfg, kinks)
    sigma_y2 = _quad(lambda z: (f(mu + s * z) - mu_y) ** 2 * _std_normal(z), cfg, kinks)
    sigma_ya = _quad(lambda z: (f(mu + s * z) - mu_y) * s * z * _std_normal(z), cfg, kinks)
    return OutputMoments(mu_y, max(sigma_y2, 0.0), sigma_ya)


def true_posterior_a(act: Activation, prior: Gaussian1D, y: float, epsilon: float,
                     cfg: QuadratureConfig = DEFAULT_QUADRATURE):
    """Mean and variance of ``p(a | y)`` with ``p(y | a) = N(y; f(a), epsilon)``.

    The integrand is rescaled by its maximum over a dense grid so that
    likelihoods far in the tails do not underflow the normaliser.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    if not prior.variance > 0.0:
        raise ValueError("prior variance must be positive")
    f = _activation_fn(act)
    mu, s = prior.mean, prior.std

    def log_w(z):
        r = y - f(mu + s * z)
        return -0.5 * z * z - 0.5 * r * r / epsilon

    grid = np.linspace(-cfg.half_width, cfg.half_width, 4001)
    logs = log_w(grid)
    peak = grid[int(np.argmax(logs))]
    shift = logs.max()
    if not np.isfinite(shift):
        raise OracleError("likelihood vanishes over the integration range")

    def w(z):
        return math.exp(log_w(z) - shift)

    points = [peak] + ([] if act.is_sigmoid else [-mu / s])
    norm = _quad(w, cfg, points)
    if not norm > 0.0:
        raise OracleError("vanishing normalisation constant")
    m_z = _quad(lambda z: z * w(z), cfg, points) / norm
    v_z = _quad(lambda z: (z - m_z) ** 2 * w(z), cfg, points) / norm
    return mu + s * m_z, s * s * v_z


def exact_linear_posterior(w: WeightPosterior, x, y: float, epsilon: float) -> WeightPosterior:
    """Conjugate Bayesian linear regression update for ``y = x' w + N(0, epsilon)``."""
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    cx = w.cov @ x
    s = float(x @ cx) + epsilon
    mean = w.mean + cx * (y - float(x @ w.mean)) / s
    cov = w.cov - np.outer(cx, cx) / s
    return WeightPosterior(mean, 0.5 * (cov + cov.T))


@dataclass(frozen=True)
class MonteCarloMoments:
    mu_y: float
    sigma_y2: float
    sigma_ya: float
    se_mu_y: float
    se_sigma_y2: float
    se_sigma_ya: float


def mc_output_moments(act: Activation, a: Gaussian1D, n_samples: int, seed: int) -> MonteCarloMoments:
    """Sample moments of ``f(a)`` with their standard errors."""
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    if a.variance == 0.0:
        f = _activation_fn(act)
        return MonteCarloMoments(float(f(a.mean)), 0.0, 0.0, 0.0, 0.0, 0.0)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n_samples)
    samples = a.mean + a.std * z
    if act.is_sigmoid:
        ys = special.expit(samples)
    else:
        ys = np.maximum(act.alpha * samples, act.beta * samples)
    n = float(n_samples)
    mu_y = ys.mean()
    dy = ys - mu_y
    sq = dy * dy
    cross = dy * (a.std * z)
    return MonteCarloMoments(
        float(mu_y), float(sq.mean()), float(cross.mean()),
        float(ys.std() / math.sqrt(n)),
        float(sq.std() / math.sqrt(n)),
        float(cross.std() / math.sqrt(n)),
    )
