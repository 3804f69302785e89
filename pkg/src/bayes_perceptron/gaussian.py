"""Scalar and vector Gaussian primitives used by the perceptron."""

from dataclasses import dataclass

import numpy as np

from . import _kernels

SYMMETRY_RTOL = 1e-12
PSD_TOL = 1e-10
ROUNDOFF_TOL = 1e-14


@dataclass(frozen=True)
class Gaussian1D:
    """Scalar Gaussian belief, used for the pre-activation ``a``."""

    mean: float
    variance: float

    def __post_init__(self):
        mean = float(self.mean)
        variance = float(self.variance)
        if not (np.isfinite(mean) and np.isfinite(variance)):
            raise ValueError(f"non-finite Gaussian parameters ({mean}, {variance})")
        if variance < 0.0:
            raise ValueError(f"negative variance {variance}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))


@dataclass(frozen=True, eq=False)
class WeightPosterior:
    """Gaussian belief over the (optionally bias-augmented) weight vector.

    Arrays are copied, made C-contiguous float64 and marked read-only.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64, order="C").reshape(-1)
        cov = np.array(self.cov, dtype=np.float64, order="C")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValueError(f"covariance shape {cov.shape} does not match mean length {d}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("non-finite weight posterior")
        scale = max(np.max(np.abs(cov), initial=0.0), 1e-300)
        if np.max(np.abs(cov - cov.T), initial=0.0) > SYMMETRY_RTOL * scale:
            raise ValueError("covariance is not symmetric")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def isotropic(cls, mean, variance=1.0):
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        return cls(mean, variance * np.eye(mean.shape[0]))

    def is_psd(self, tol=PSD_TOL, scale=None) -> bool:
        """Smallest eigenvalue >= -tol * scale (``scale`` defaults to the trace)."""
        if scale is None:
            scale = np.trace(self.cov)
        eig = np.linalg.eigvalsh(self.cov)
        return bool(eig.min(initial=0.0) >= -tol * max(scale, 0.0))

    def __eq__(self, other):
        if not isinstance(other, WeightPosterior):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.cov, other.cov)


@dataclass(frozen=True)
class PartialMoments:
    """Moments of ``a ~ N(mu, var)`` restricted to ``a >= 0``.

    ``t1``/``t2`` are the truncated raw moments, ``e1``/``e2`` the full raw
    moments and ``pa = var * N(0; mu, var)``.
    """

    p0: float
    t1: float
    t2: float
    e1: float
    e2: float
    pa: float


def std_normal_pdf(z):
    return _kernels.norm_pdf(float(z))


def std_normal_cdf(z):
    """Standard normal CDF (the probit function)."""
    return _kernels.norm_cdf(float(z))


def partial_moments(g: Gaussian1D) -> PartialMoments:
    p0, t1, t2, pa = _kernels.partial_moments(g.mean, g.variance)
    return PartialMoments(p0, t1, t2, g.mean, g.mean * g.mean + g.variance, pa)


def _as_input(w: WeightPosterior, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != w.dim:
        raise ValueError(f"input has dimension {x.shape[0]}, weights have {w.dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return x


def affine_forward(w: WeightPosterior, x) -> Gaussian1D:
    """Distribution of ``a = x' w`` for Gaussian ``w`` (bias already in ``x``)."""
    x = _as_input(w, x)
    mu, _, var = _kernels.affine(w.mean, w.cov, x)
    if var < 0.0:
        if var < -ROUNDOFF_TOL * max(np.trace(w.cov), 0.0) * max(float(x @ x), 1.0):
            raise ValueError(f"covariance is not PSD along x (x'Cx = {var})")
        var = 0.0
    return Gaussian1D(mu, var)


def posterior_reweight(w: WeightPosterior, x, prior_a: Gaussian1D,
                       updated_a: Gaussian1D) -> WeightPosterior:
    """Propagate a refined belief about ``a`` back to the weights.

    Rank-one smoother update with gain ``C x / var_a``.  ``prior_a`` must be
    the forward projection of ``w`` along ``x`` with strictly positive
    variance; floor it before calling if necessary.
    """
    x = _as_input(w, x)
    if not prior_a.variance > 0.0:
        raise ValueError("pre-activation variance is zero; floor it before reweighting")
    cx = np.dot(w.cov, x)
    mean, cov = _kernels.reweight(
        w.mean, w.cov, cx, prior_a.variance,
        updated_a.mean - prior_a.mean, updated_a.variance - prior_a.variance,
    )
    return WeightPosterior(mean, cov)
