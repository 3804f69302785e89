"""Numeric kernels shared by the public API.

Everything here works on plain floats and float64 arrays so the same source
can be compiled with ``numba.njit`` or executed as ordinary numpy code.  The
backend is picked once at import time:

* numba is used when it is importable and ``BAYES_PERCEPTRON_NUMBA`` is not
  set to ``0`` / ``false`` / ``off``;
* otherwise the interpreted numpy path runs, with a vectorised
  ``forward_batch`` instead of the compiled row loop.

Kernels never raise on numeric conditions; they return status codes and the
typed wrappers in the other modules turn those into exceptions.
"""

import math
import os

import numpy as np
from scipy import special

SIGMOID = 0
PWL = 1

OK = 0
ZERO_OUTPUT_VARIANCE = 1

# probit scale that best matches the logistic sigmoid
LAMBDA = math.sqrt(math.pi / 8.0)
LAMBDA2 = math.pi / 8.0
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
SQRT2 = math.sqrt(2.0)


def _env_wants_numba():
    flag = os.environ.get("BAYES_PERCEPTRON_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _env_wants_numba()
BACKEND = "numba" if USE_NUMBA else "numpy"


def norm_pdf(z):
    return INV_SQRT_2PI * math.exp(-0.5 * z * z)


def norm_cdf(z):
    # erfc keeps full relative accuracy in the lower tail
    return 0.5 * math.erfc(-z / SQRT2)


def logistic(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def partial_moments(mu, var):
    """Return ``(p0, t1, t2, pa)`` for ``a ~ N(mu, var)`` truncated to a >= 0."""
    if var == 0.0:
        if mu > 0.0:
            return 1.0, mu, mu * mu, 0.0
        if mu < 0.0:
            return 0.0, 0.0, 0.0, 0.0
        return 0.5, 0.0, 0.0, 0.0
    s = math.sqrt(var)
    z = mu / s
    p0 = norm_cdf(z)
    # var * N(0; mu, var) == s * pdf(z)
    pa = s * norm_pdf(z)
    t1 = mu * p0 + pa
    t2 = (mu * mu + var) * p0 + mu * pa
    return p0, t1, t2, pa


def sigmoid_moments(mu, var):
    """Probit-approximated ``(mu_y, sigma_y2, sigma_ya)`` of s(a)."""
    t = math.sqrt(1.0 + LAMBDA2 * var)
    mu_y = logistic(mu / t)
    # 1 - 1/t without cancellation for small var
    shrink = LAMBDA2 * var / (t * (t + 1.0))
    sigma_y2 = mu_y * (1.0 - mu_y) * shrink
    sigma_ya = LAMBDA * var / t * norm_pdf(LAMBDA * mu / t)
    return mu_y, sigma_y2, sigma_ya


def pwl_moments(alpha, beta, mu, var):
    """Exact ``(mu_y, sigma_y2, sigma_ya)`` of max(alpha*a, beta*a)."""
    if alpha == beta:
        return beta * mu, beta * beta * var, beta * var
    if var == 0.0:
        if mu > 0.0:
            return beta * mu, 0.0, 0.0
        return alpha * mu, 0.0, 0.0
    p0, t1, t2, pa = partial_moments(mu, var)
    e1 = mu
    e2 = mu * mu + var
    mu_y = alpha * e1 + (beta - alpha) * t1
    sigma_y2 = alpha * alpha * e2 + (beta * beta - alpha * alpha) * t2 - mu_y * mu_y
    sigma_ya = alpha * e2 + (beta - alpha) * t2 - mu_y * mu
    if sigma_y2 < 0.0:
        sigma_y2 = 0.0
    if sigma_ya < 0.0:
        sigma_ya = 0.0
    return mu_y, sigma_y2, sigma_ya


def output_moments(kind, alpha, beta, mu, var):
    if kind == SIGMOID:
        return sigmoid_moments(mu, var)
    return pwl_moments(alpha, beta, mu, var)


def affine(mean, cov, x):
    """Pre-activation mean, ``C @ x`` and the unclamped variance ``x' C x``."""
    cx = np.dot(cov, x)
    return np.dot(x, mean), cx, np.dot(x, cx)


def reweight(mean, cov, cx, var_a, d_mu, d_var):
    gain = cx / var_a
    new_mean = mean + gain * d_mu
    new_cov = cov + np.outer(gain, gain) * d_var
    new_cov = 0.5 * (new_cov + new_cov.T)
    return new_mean, new_cov


def refine(kind, alpha, beta, mu_a, var_a, y, eps):
    """Condition ``a ~ N(mu_a, var_a)`` on target ``y`` assuming (y, a) jointly Gaussian.

    Returns ``(mu_i, var_i, status)``; the gain is ``cov(y, a) / (var_y + eps)``.
    """
    mu_y, sigma_y2, sigma_ya = output_moments(kind, alpha, beta, mu_a, var_a)
    s_eff = sigma_y2 + eps
    if not s_eff > 0.0:
        return mu_a, var_a, ZERO_OUTPUT_VARIANCE
    k = sigma_ya / s_eff
    return mu_a + k * (y - mu_y), var_a - k * sigma_ya, OK


def update_step(mean, cov, x, y, kind, alpha, beta, eps, floor):
    """One assumed-density-filtering step; returns ``(mean, cov, status)``."""
    mu_a, cx, var_a = affine(mean, cov, x)
    if var_a < floor:
        # a deterministic output carries no noise to divide by when eps == 0
        if eps == 0.0:
            return mean, cov, ZERO_OUTPUT_VARIANCE
        var_a = floor
    mu_i, var_i, status = refine(kind, alpha, beta, mu_a, var_a, y, eps)
    if status != OK:
        return mean, cov, status
    new_mean, new_cov = reweight(mean, cov, cx, var_a, mu_i - mu_a, var_i - var_a)
    return new_mean, new_cov, OK


def fit_sequence(mean, cov, xs, ys, kind, alpha, beta, eps, floor):
    """Sequential single pass; returns ``(mean, cov, failed_index)``, -1 if none."""
    for i in range(xs.shape[0]):
        new_mean, new_cov, status = update_step(
            mean, cov, xs[i], ys[i], kind, alpha, beta, eps, floor
        )
        if status != OK:
            return mean, cov, i
        mean = new_mean
        cov = new_cov
    return mean, cov, -1


def _forward_batch_loop(mean, cov, xs, kind, alpha, beta):
    n = xs.shape[0]
    mu_y = np.empty(n)
    sigma_y2 = np.empty(n)
    mu_a = np.empty(n)
    sigma_a2 = np.empty(n)
    d = mean.shape[0]
    for i in range(n):
        # scalar loops avoid allocating C @ x per row
        m = 0.0
        v = 0.0
        for j in range(d):
            xj = xs[i, j]
            m += xj * mean[j]
            acc = 0.0
            for k in range(d):
                acc += cov[j, k] * xs[i, k]
            v += xj * acc
        if v < 0.0:
            v = 0.0
        my, sy, _ = output_moments(kind, alpha, beta, m, v)
        mu_y[i] = my
        sigma_y2[i] = sy
        mu_a[i] = m
        sigma_a2[i] = v
    return mu_y, sigma_y2, mu_a, sigma_a2


def _forward_batch_numpy(mean, cov, xs, kind, alpha, beta):
    mu_a = xs @ mean
    sigma_a2 = np.maximum(np.einsum("ij,jk,ik->i", xs, cov, xs), 0.0)
    if kind == SIGMOID:
        t = np.sqrt(1.0 + LAMBDA2 * sigma_a2)
        mu_y = special.expit(mu_a / t)
        sigma_y2 = mu_y * (1.0 - mu_y) * (LAMBDA2 * sigma_a2 / (t * (t + 1.0)))
        return mu_y, sigma_y2, mu_a, sigma_a2
    if alpha == beta:
        return beta * mu_a, beta * beta * sigma_a2, mu_a, sigma_a2

    det = sigma_a2 == 0.0
    s = np.sqrt(np.where(det, 1.0, sigma_a2))
    z = mu_a / s
    p0 = special.ndtr(z)
    pa = s * INV_SQRT_2PI * np.exp(-0.5 * z * z)
    e2 = mu_a * mu_a + sigma_a2
    t1 = mu_a * p0 + pa
    t2 = e2 * p0 + mu_a * pa
    mu_y = alpha * mu_a + (beta - alpha) * t1
    sigma_y2 = alpha * alpha * e2 + (beta * beta - alpha * alpha) * t2 - mu_y * mu_y
    sigma_y2 = np.maximum(sigma_y2, 0.0)
    mu_y = np.where(det, np.where(mu_a > 0.0, beta, alpha) * mu_a, mu_y)
    sigma_y2 = np.where(det, 0.0, sigma_y2)
    return mu_y, sigma_y2, mu_a, sigma_a2


if USE_NUMBA:
    _jit = numba.njit(cache=True)
    # rebinding module globals lets the compiled callers resolve compiled callees
    norm_pdf = _jit(norm_pdf)
    norm_cdf = _jit(norm_cdf)
    logistic = _jit(logistic)
    partial_moments = _jit(partial_moments)
    sigmoid_moments = _jit(sigmoid_moments)
    pwl_moments = _jit(pwl_moments)
    output_moments = _jit(output_moments)
    refine = _jit(refine)
    affine = _jit(affine)
    reweight = _jit(reweight)
    update_step = _jit(update_step)
    fit_sequence = _jit(fit_sequence)
    forward_batch = _jit(_forward_batch_loop)
else:
    forward_batch = _forward_batch_numpy
