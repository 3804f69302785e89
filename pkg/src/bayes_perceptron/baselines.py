"""Deterministic perceptrons trained with the classic rule or plain gradient descent."""

from dataclasses import dataclass, replace

import numpy as np

from .activations import Activation


@dataclass(frozen=True, eq=False)
class ClassicPerceptron:
    weights: np.ndarray
    learning_rate: float
    activation: Activation

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def preactivation(self, x) -> float:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.weights.shape[0]:
            raise ValueError(f"input has dimension {x.shape[0]}, weights have {self.weights.shape[0]}")
        return float(x @ self.weights)

    def predict(self, x) -> float:
        return float(self.activation(self.preactivation(x)))

    def predict_batch(self, xs) -> np.ndarray:
        a = np.asarray(xs, dtype=np.float64) @ self.weights
        if self.activation.is_sigmoid:
            return 1.0 / (1.0 + np.exp(-a))
        return np.maximum(self.activation.alpha * a, self.activation.beta * a)


def squared_loss(p: ClassicPerceptron, x, y) -> float:
    return 0.5 * (y - p.predict(x)) ** 2


def perceptron_rule_step(p: ClassicPerceptron, x, y) -> ClassicPerceptron:
    """``w <- w + lr * (y - f(x'w)) * x``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    err = y - p.predict(x)
    return replace(p, weights=p.weights + p.learning_rate * err * x)


def gradient_regression_step(p: ClassicPerceptron, x, y) -> ClassicPerceptron:
    """One SGD step on ``0.5 * (y - f(x'w))**2``; the pwl kink takes the lower slope."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    a = p.preactivation(x)
    err = y - p.activation(a)
    return replace(p, weights=p.weights + p.learning_rate * err * p.activation.derivative(a) * x)
