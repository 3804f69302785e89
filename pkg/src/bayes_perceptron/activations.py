"""Output moments of sigmoid and piecewise-linear activations under a Gaussian input.

For a pre-activation ``a ~ N(mu_a, sigma_a2)`` these functions return the
mean and variance of ``y = f(a)`` together with ``cov(y, a)``.  Sigmoid
moments go through the probit approximation ``s(a) ~ Phi(LAMBDA * a)``;
piecewise-linear moments are exact.

There is no tanh variant.  Use ``tanh(a) = 2 * s(2a) - 1`` with a sigmoid
model on rescaled inputs if you need it.
"""

import math
from dataclasses import dataclass

from . import _kernels
from .gaussian import Gaussian1D

LAMBDA = _kernels.LAMBDA


@dataclass(frozen=True)
class Activation:
    """Either the logistic sigmoid or ``max(alpha * a, beta * a)``."""

    kind: str
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind == "sigmoid":
            object.__setattr__(self, "alpha", 0.0)
            object.__setattr__(self, "beta", 0.0)
            return
        if self.kind != "pwl":
            raise ValueError(f"unknown activation kind {self.kind!r}")
        alpha, beta = float(self.alpha), float(self.beta)
        if not (math.isfinite(alpha) and math.isfinite(beta)):
            raise ValueError("non-finite pwl slopes")
        if not (0.0 <= alpha <= 1.0 and beta >= 0.0 and alpha <= beta):
            raise ValueError(
                f"pwl slopes must satisfy 0 <= alpha <= 1, beta >= 0, alpha <= beta; "
                f"got alpha={alpha}, beta={beta}"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def sigmoid(cls):
        return cls("sigmoid")

    @classmethod
    def pwl(cls, alpha, beta):
        return cls("pwl", alpha, beta)

    @classmethod
    def relu(cls):
        return cls("pwl", 0.0, 1.0)

    @classmethod
    def leaky_relu(cls, slope):
        return cls("pwl", slope, 1.0)

    @classmethod
    def linear(cls):
        return cls("pwl", 1.0, 1.0)

    @property
    def is_sigmoid(self) -> bool:
        return self.kind == "sigmoid"

    @property
    def code(self) -> int:
        return _kernels.SIGMOID if self.is_sigmoid else _kernels.PWL

    def __call__(self, a):
        """Evaluate the deterministic activation at ``a``."""
        if self.is_sigmoid:
            return _kernels.logistic(float(a))
        return max(self.alpha * a, self.beta * a)

    def derivative(self, a):
        """Derivative, taking the lower slope at the kink of a pwl activation."""
        if self.is_sigmoid:
            s = _kernels.logistic(float(a))
            return s * (1.0 - s)
        return self.beta if a > 0.0 else self.alpha

    def __str__(self):
        if self.is_sigmoid:
            return "sigmoid"
        return f"pwl:{self.alpha!r},{self.beta!r}"


@dataclass(frozen=True)
class OutputMoments:
    mu_y: float
    sigma_y2: float
    sigma_ya: float


def _require_pwl(act):
    if act.is_sigmoid:
        raise ValueError("expected a piecewise-linear activation")


def sigmoid_mean_var(a: Gaussian1D):
    mu_y, sigma_y2, _ = _kernels.sigmoid_moments(a.mean, a.variance)
    return mu_y, sigma_y2


def sigmoid_cross_cov(a: Gaussian1D) -> float:
    """Approximate ``cov(s(a), a)``; zero for a deterministic ``a``."""
    return _kernels.sigmoid_moments(a.mean, a.variance)[2]


def pwl_mean_var(act: Activation, a: Gaussian1D):
    _require_pwl(act)
    mu_y, sigma_y2, _ = _kernels.pwl_moments(act.alpha, act.beta, a.mean, a.variance)
    return mu_y, sigma_y2


def pwl_cross_cov(act: Activation, a: Gaussian1D, mu_y: float) -> float:
    """Exact ``E{a f(a)} - mu_y * mu_a`` for a pwl activation.

    ``mu_y`` must be the mean returned by :func:`pwl_mean_var` for the same
    inputs.
    """
    _require_pwl(act)
    alpha, beta = act.alpha, act.beta
    mu, var = a.mean, a.variance
    if alpha == beta:
        return beta * var
    if var == 0.0:
        return 0.0
    _, _, t2, _ = _kernels.partial_moments(mu, var)
    e2 = mu * mu + var
    return max(alpha * e2 + (beta - alpha) * t2 - mu_y * mu, 0.0)


def output_moments(act: Activation, a: Gaussian1D) -> OutputMoments:
    return OutputMoments(*_kernels.output_moments(act.code, act.alpha, act.beta,
                                                  a.mean, a.variance))
