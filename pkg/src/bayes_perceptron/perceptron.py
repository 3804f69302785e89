"""Bayesian perceptron: moment-matched prediction and sequential closed-form training."""

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .activations import Activation
from .gaussian import Gaussian1D, WeightPosterior, affine_forward

DEFAULT_EPSILON = 0.01
VARIANCE_FLOOR = 1e-12
FORMAT_VERSION = 1


class TrainingError(ValueError):
    """An instance could not be absorbed; ``index`` is its position in the data."""

    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"instance {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class Prediction:
    mu_y: float
    sigma_y2: float
    mu_a: float
    sigma_a2: float


@dataclass(frozen=True, eq=False)
class TrainingInstance:
    x: np.ndarray
    y: float

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64).reshape(-1)
        y = float(self.y)
        if not (np.all(np.isfinite(x)) and math.isfinite(y)):
            raise ValueError("non-finite training instance")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class BayesianPerceptron:
    """A single neuron with Gaussian weights.

    ``weights`` covers the bias as its first entry when ``bias`` is true.
    ``epsilon`` is the variance of additive output noise; it only enters the
    training gain, never the reported predictive variance.
    """

    weights: WeightPosterior
    activation: Activation
    epsilon: float = DEFAULT_EPSILON
    bias: bool = True

    def __post_init__(self):
        eps = float(self.epsilon)
        if not (math.isfinite(eps) and eps >= 0.0):
            raise ValueError(f"epsilon must be finite and >= 0, got {eps}")
        object.__setattr__(self, "epsilon", eps)
        if self.input_dim < 1:
            raise ValueError("perceptron needs at least one input")

    @classmethod
    def from_prior(cls, input_dim, activation, prior_mean=0.0, prior_var=1.0,
                   epsilon=DEFAULT_EPSILON, bias=True):
        """Isotropic prior ``N(prior_mean, prior_var * I)``; a scalar mean broadcasts."""
        d = input_dim + (1 if bias else 0)
        mean = np.broadcast_to(np.asarray(prior_mean, dtype=np.float64), (d,))
        return cls(WeightPosterior(mean, prior_var * np.eye(d)), activation, epsilon, bias)

    @property
    def input_dim(self) -> int:
        return self.weights.dim - (1 if self.bias else 0)

    def augment(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.input_dim:
            raise ValueError(f"expected input of length {self.input_dim}, got {x.shape[0]}")
        if self.bias:
            x = np.concatenate(([1.0], x))
        return np.ascontiguousarray(x)

    def augment_batch(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1) if self.input_dim == 1 else xs.reshape(1, -1)
        if xs.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs with {self.input_dim} columns, got {xs.shape[1]}")
        if self.bias:
            xs = np.hstack((np.ones((xs.shape[0], 1)), xs))
        return np.ascontiguousarray(xs)

    def predict(self, x) -> Prediction:
        return predict(self, x)

    def predict_batch(self, xs):
        return predict_batch(self, xs)

    def update(self, x, y) -> "BayesianPerceptron":
        return update(self, TrainingInstance(x, y))

    def fit(self, data) -> "BayesianPerceptron":
        return fit(self, data)

    # persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        act = {"kind": self.activation.kind}
        if not self.activation.is_sigmoid:
            act.update(alpha=self.activation.alpha, beta=self.activation.beta)
        return {
            "version": FORMAT_VERSION,
            "input_dim": self.input_dim,
            "bias": self.bias,
            "activation": act,
            "epsilon": self.epsilon,
            "mean": [float(v) for v in self.weights.mean],
            "cov": [[float(v) for v in row] for row in self.weights.cov],
        }

    @classmethod
    def from_dict(cls, doc) -> "BayesianPerceptron":
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {doc.get('version')!r}")
        act = doc["activation"]
        if act["kind"] == "sigmoid":
            activation = Activation.sigmoid()
        else:
            activation = Activation(act["kind"], act["alpha"], act["beta"])
        model = cls(WeightPosterior(doc["mean"], doc["cov"]), activation,
                    doc["epsilon"], bool(doc["bias"]))
        if model.input_dim != int(doc["input_dim"]):
            raise ValueError("input_dim does not match weight dimension")
        return model

    def dumps(self) -> str:
        # float repr round-trips float64 exactly
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text) -> "BayesianPerceptron":
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "BayesianPerceptron":
        with open(path) as fh:
            return cls.loads(fh.read())


def predict(model: BayesianPerceptron, x) -> Prediction:
    """Predictive moments of the output for a single input (no output noise)."""
    a = affine_forward(model.weights, model.augment(x))
    act = model.activation
    mu_y, sigma_y2, _ = _kernels.output_moments(act.code, act.alpha, act.beta,
                                                a.mean, a.variance)
    return Prediction(mu_y, sigma_y2, a.mean, a.variance)


def predict_batch(model: BayesianPerceptron, xs):
    """Vectorised :func:`predict`; returns arrays ``(mu_y, sigma_y2, mu_a, sigma_a2)``."""
    xs = model.augment_batch(xs)
    act = model.activation
    return _kernels.forward_batch(np.array(model.weights.mean), np.array(model.weights.cov),
                                  xs, act.code, act.alpha, act.beta)


_ZERO_VARIANCE = "zero effective output variance (epsilon = 0 with a deterministic output)"


def refine_preactivation(activation: Activation, prior_a: Gaussian1D, y: float,
                         epsilon: float = DEFAULT_EPSILON,
                         floor: float = VARIANCE_FLOOR) -> Gaussian1D:
    """Gaussian approximation of ``p(a | y)`` used inside :func:`update`.

    Kalman-style measurement update of the pre-activation with gain
    ``cov(y, a) / (var_y + epsilon)``; the prior variance is floored first.
    """
    if prior_a.variance < floor and epsilon == 0.0:
        raise TrainingError(_ZERO_VARIANCE)
    var_a = max(prior_a.variance, floor)
    mu_i, var_i, status = _kernels.refine(activation.code, activation.alpha, activation.beta,
                                          prior_a.mean, var_a, float(y), float(epsilon))
    if status != _kernels.OK:
        raise TrainingError(_ZERO_VARIANCE)
    return Gaussian1D(mu_i, var_i)


def _run(model, xs, ys):
    """Return the trained model and the index of a failed instance (-1 if none)."""
    act = model.activation
    mean, cov, failed = _kernels.fit_sequence(
        np.array(model.weights.mean), np.array(model.weights.cov), xs, ys,
        act.code, act.alpha, act.beta, model.epsilon, VARIANCE_FLOOR,
    )
    return replace(model, weights=WeightPosterior(mean, cov)), int(failed)


def update(model: BayesianPerceptron, inst: TrainingInstance) -> BayesianPerceptron:
    """Absorb one training instance and return the updated model."""
    x = model.augment(inst.x)
    updated, failed = _run(model, x.reshape(1, -1), np.array([inst.y]))
    if failed >= 0:
        raise TrainingError(_ZERO_VARIANCE)
    return updated


def fit(model: BayesianPerceptron, data) -> BayesianPerceptron:
    """Single sequential pass of :func:`update` over ``data`` in order.

    ``data`` is an iterable of :class:`TrainingInstance` or an ``(X, y)`` pair
    of arrays.
    """
    if isinstance(data, tuple) and len(data) == 2 and not isinstance(data[0], TrainingInstance):
        xs, ys = data
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.ascontiguousarray(ys, dtype=np.float64).reshape(-1)
        if xs.size == 0:
            return model
        xs = model.augment_batch(xs)
        if xs.shape[0] != ys.shape[0]:
            raise ValueError(f"{xs.shape[0]} inputs but {ys.shape[0]} targets")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("non-finite training data")
    else:
        data = list(data)
        if not data:
            return model
        rows = []
        for i, inst in enumerate(data):
            try:
                rows.append(model.augment(inst.x))
            except ValueError as exc:
                raise TrainingError(str(exc), i) from None
        xs = np.ascontiguousarray(np.vstack(rows))
        ys = np.array([inst.y for inst in data], dtype=np.float64)
    trained, failed = _run(model, xs, ys)
    if failed >= 0:
        raise TrainingError(_ZERO_VARIANCE, failed)
    return trained


def classify(model: BayesianPerceptron, x, threshold=0.5):
    """Return ``(label, mu_y)``; label is 1 only when ``mu_y > threshold``."""
    if not model.activation.is_sigmoid:
        raise ValueError("classification needs a sigmoid activation")
    mu_y = predict(model, x).mu_y
    return (1 if mu_y > threshold else 0), mu_y
