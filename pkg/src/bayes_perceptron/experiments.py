"""Synthetic experiments: ground-truth comparison, linear classification and softplus regression.

Every runner is deterministic given its config.  Trial ``t`` draws from
``numpy.random.default_rng([seed, t])``, so trials do not depend on each
other or on execution order.
"""

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .activations import Activation
from .baselines import ClassicPerceptron, gradient_regression_step
from .gaussian import Gaussian1D
from .metrics import cumulative_abs_error_distribution, rmse
from .oracle import DEFAULT_QUADRATURE, OracleError, QuadratureConfig, true_posterior_a
from .perceptron import (
    VARIANCE_FLOOR,
    BayesianPerceptron,
    TrainingInstance,
    predict_batch,
    refine_preactivation,
    update,
)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def _grid(lo, hi, step):
    n = int(round((hi - lo) / step)) + 1
    return np.round(lo + step * np.arange(n), 10)


def write_csv(path, records):
    """Write a list of flat dicts with a header row; floats keep full precision."""
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(records[0]))
        writer.writeheader()
        for rec in records:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})


# ground truth -------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruthConfig:
    epsilon: float = 0.01
    mu_min: float = -3.0
    mu_max: float = 3.0
    mu_step: float = 0.1
    var_max: float = 2.0
    var_step: float = 0.2
    quadrature: QuadratureConfig = DEFAULT_QUADRATURE

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("oracle epsilon must be positive")
        if not (self.mu_step > 0.0 and self.var_step > 0.0 and self.mu_max >= self.mu_min
                and self.var_max >= 0.0):
            raise ValueError("invalid grid")

    def mu_grid(self):
        return _grid(self.mu_min, self.mu_max, self.mu_step)

    def var_grid(self):
        return _grid(0.0, self.var_max, self.var_step)


@dataclass
class GroundTruthResult:
    records: list
    summary: dict
    mean_error_cdf: list
    var_error_cdf: list


def heaviside_label(mu_a) -> float:
    return 1.0 if mu_a > 0.0 else 0.0


def run_ground_truth_comparison(cfg: GroundTruthConfig = GroundTruthConfig()) -> GroundTruthResult:
    """Compare the approximate posterior of ``a`` with numerical integration of Bayes' rule."""
    act = Activation.sigmoid()
    records = []
    for var in cfg.var_grid():
        for mu in cfg.mu_grid():
            mu, var = float(mu), float(var)
            y = heaviside_label(mu)
            approx = refine_preactivation(act, Gaussian1D(mu, var), y, cfg.epsilon)
            try:
                true_mean, true_var = true_posterior_a(
                    act, Gaussian1D(mu, max(var, VARIANCE_FLOOR)), y, cfg.epsilon, cfg.quadrature)
            except OracleError as exc:
                raise OracleError(f"grid point mu_a={mu}, sigma_a2={var}: {exc}") from exc
            records.append({
                "mu_a": mu,
                "sigma_a2": var,
                "y": y,
                "approx_mean": approx.mean,
                "approx_var": approx.variance,
                "true_mean": true_mean,
                "true_var": true_var,
                "abs_err_mean": abs(approx.mean - true_mean),
                "abs_err_var": abs(approx.variance - true_var),
            })
    err_m = np.array([r["abs_err_mean"] for r in records])
    err_v = np.array([r["abs_err_var"] for r in records])
    summary = {
        "n_points": len(records),
        "epsilon": cfg.epsilon,
        "mean_mae": float(err_m.mean()),
        "mean_mae_std": float(err_m.std()),
        "var_mae": float(err_v.mean()),
        "var_mae_std": float(err_v.std()),
        "frac_mean_err_le_0.2": float(np.mean(err_m <= 0.2)),
    }
    return GroundTruthResult(records, summary,
                             cumulative_abs_error_distribution(err_m),
                             cumulative_abs_error_distribution(err_v))


# linear classification ------------------------------------------------------


@dataclass(frozen=True)
class ClassificationConfig:
    seed: int = 0
    trials: int = 50
    n: int = 25
    area: float = 3.0
    prior_mean: tuple = (-1.0, 0.0)
    prior_var: float = 1.0
    epsilon: float = 0.01
    lattice_half_width: float = 4.0
    lattice_step: float = 0.1
    near_radius: float = 1.0
    far_radius: float = 3.0
    snapshots: tuple = (1, 3, 5, 10, 25)

    def __post_init__(self):
        if self.trials < 1 or self.n < 0:
            raise ValueError("trials must be >= 1 and n >= 0")

    def lattice(self):
        g = _grid(-self.lattice_half_width, self.lattice_half_width, self.lattice_step)
        gx, gy = np.meshgrid(g, g)
        return np.column_stack((gx.ravel(), gy.ravel()))


@dataclass
class ClassificationTrial:
    trial: int
    mean: np.ndarray
    cov: np.ndarray
    cosine: float
    angle_deg: float
    accuracy: float
    sigma_a2_field: np.ndarray
    near_mask: np.ndarray
    far_mask: np.ndarray
    mu_y_snapshots: dict = field(default_factory=dict)

    def record(self) -> dict:
        field_ = self.sigma_a2_field
        return {
            "trial": self.trial,
            "w1": float(self.mean[0]),
            "w2": float(self.mean[1]),
            "cosine": self.cosine,
            "angle_deg": self.angle_deg,
            "accuracy": self.accuracy,
            "var_near": float(field_[self.near_mask].mean()) if self.near_mask.any() else math.nan,
            "var_far": float(field_[self.far_mask].mean()) if self.far_mask.any() else math.nan,
        }


@dataclass
class ClassificationResult:
    trials: list
    lattice: np.ndarray
    summary: dict

    @property
    def records(self):
        return [t.record() for t in self.trials]


def _classification_trial(cfg, t, lattice, truth):
    rng = trial_rng(cfg.seed, t)
    xs = rng.uniform(-cfg.area, cfg.area, size=(cfg.n, 2))
    ys = (xs @ np.ones(2) > 0.0).astype(np.float64)
    model = BayesianPerceptron.from_prior(2, Activation.sigmoid(), cfg.prior_mean,
                                          cfg.prior_var, cfg.epsilon, bias=False)
    snapshots = {}
    done = 0
    for stop in sorted(set(cfg.snapshots) | {cfg.n}):
        if stop > cfg.n:
            break
        model = model.fit((xs[done:stop], ys[done:stop]))
        done = stop
        if stop in cfg.snapshots:
            snapshots[stop] = predict_batch(model, lattice)[0]

    mu_y, _, _, sigma_a2 = predict_batch(model, lattice)
    mean = np.array(model.weights.mean)
    norm = np.linalg.norm(mean)
    cosine = float(mean.sum() / (math.sqrt(2.0) * norm)) if norm > 0.0 else 0.0
    if cfg.n:
        dist = np.sqrt(((lattice[:, None, :] - xs[None, :, :]) ** 2).sum(-1)).min(axis=1)
    else:
        dist = np.full(lattice.shape[0], np.inf)
    return ClassificationTrial(
        trial=t,
        mean=mean,
        cov=np.array(model.weights.cov),
        cosine=cosine,
        angle_deg=float(np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0)))),
        accuracy=float(np.mean((mu_y > 0.5) == truth)),
        sigma_a2_field=sigma_a2,
        near_mask=dist <= cfg.near_radius,
        far_mask=dist > cfg.far_radius,
        mu_y_snapshots=snapshots,
    )


def run_linear_classification(cfg: ClassificationConfig = ClassificationConfig()) -> ClassificationResult:
    """Sequentially learn the boundary ``x1 + x2 = 0`` without a bias term."""
    lattice = cfg.lattice()
    truth = lattice @ np.ones(2) > 0.0
    trials = [_classification_trial(cfg, t, lattice, truth) for t in range(cfg.trials)]

    cos = np.array([t.cosine for t in trials])
    acc = np.array([t.accuracy for t in trials])
    near = np.concatenate([t.sigma_a2_field[t.near_mask] for t in trials])
    far = np.concatenate([t.sigma_a2_field[t.far_mask] for t in trials])
    summary = {
        "trials": cfg.trials,
        "median_cosine": float(np.median(cos)),
        "mean_cosine": float(cos.mean()),
        "median_accuracy": float(np.median(acc)),
        "mean_accuracy": float(acc.mean()),
        "accuracy_std": float(acc.std()),
        "pooled_var_near": float(near.mean()) if near.size else math.nan,
        "pooled_var_far": float(far.mean()) if far.size else math.nan,
    }
    return ClassificationResult(trials, lattice, summary)


# softplus regression --------------------------------------------------------


@dataclass(frozen=True)
class RegressionConfig:
    seed: int = 0
    trials: int = 50
    n: int = 20
    gamma: float = 2.0
    delta: float = 1.0
    noise_var: float = 0.01
    train_range: tuple = (-4.0, 2.0)
    n_test: int = 40
    test_range: tuple = (-4.0, 4.0)
    prior_mean: tuple = (0.0, 0.0)
    prior_var: float = 1.0
    epsilon: float = 0.01
    learning_rate: float = 0.05
    checkpoints: tuple = (1, 5, 10, 15, 20)
    timing: bool = True
    band_points: int = 161

    def __post_init__(self):
        if self.trials < 1 or self.n < 1:
            raise ValueError("trials and n must be >= 1")
        if any(c < 1 or c > self.n for c in self.checkpoints):
            raise ValueError("checkpoints must lie in [1, n]")
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")


def softplus(x, gamma=1.0, delta=0.0):
    return np.logaddexp(0.0, gamma * np.asarray(x, dtype=np.float64) + delta)


@dataclass
class RegressionResult:
    records: list
    summary: dict
    band_x: np.ndarray
    # (trial, checkpoint) -> (mu_y, sigma_y) of the BP on band_x
    bands: dict


def run_softplus_regression(cfg: RegressionConfig = RegressionConfig()) -> RegressionResult:
    """Fit a noisy softplus with a ReLU Bayesian perceptron and an SGD-trained ReLU perceptron.

    The SGD baseline sees the same instances in the same order, one step per
    instance, and starts from a weight vector drawn from the Bayesian prior.
    """
    relu = Activation.relu()
    sd = math.sqrt(cfg.noise_var)
    band_x = np.linspace(cfg.test_range[0], cfg.test_range[1], cfg.band_points)
    probe = np.array([4.0, -1.0])
    records, bands = [], {}
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, t)
        xs = rng.uniform(cfg.train_range[0], cfg.train_range[1], cfg.n)
        ys = softplus(xs, cfg.gamma, cfg.delta) + rng.normal(0.0, sd, cfg.n)
        x_test = rng.uniform(cfg.test_range[0], cfg.test_range[1], cfg.n_test)
        y_test = softplus(x_test, cfg.gamma, cfg.delta) + rng.normal(0.0, sd, cfg.n_test)
        w0 = rng.normal(np.asarray(cfg.prior_mean, dtype=np.float64), math.sqrt(cfg.prior_var))

        bp = BayesianPerceptron.from_prior(1, relu, cfg.prior_mean, cfg.prior_var,
                                           cfg.epsilon, bias=True)
        gd = ClassicPerceptron(w0, cfg.learning_rate, relu)
        test_aug = np.column_stack((np.ones(cfg.n_test), x_test))
        bp_time = gd_time = 0.0
        for i in range(cfg.n):
            inst = TrainingInstance([xs[i]], ys[i])
            start = time.perf_counter()
            bp = update(bp, inst)
            mid = time.perf_counter()
            gd = gradient_regression_step(gd, (1.0, xs[i]), ys[i])
            end = time.perf_counter()
            bp_time += mid - start
            gd_time += end - mid
            n_seen = i + 1
            if n_seen not in cfg.checkpoints:
                continue
            bp_pred = predict_batch(bp, x_test)[0]
            _, probe_var, _, _ = predict_batch(bp, probe)
            mu_band, var_band, _, _ = predict_batch(bp, band_x)
            bands[(t, n_seen)] = (mu_band, np.sqrt(var_band))
            records.append({
                "trial": t,
                "checkpoint_n": n_seen,
                "bp_rmse": rmse(bp_pred, y_test),
                "grad_rmse": rmse(gd.predict_batch(test_aug), y_test),
                "bp_time_s": bp_time if cfg.timing else math.nan,
                "grad_time_s": gd_time if cfg.timing else math.nan,
                "bp_sigma_y_at_4": float(math.sqrt(probe_var[0])),
                "bp_sigma_y_at_m1": float(math.sqrt(probe_var[1])),
            })
    return RegressionResult(records, _regression_summary(cfg, records), band_x, bands)


def _regression_summary(cfg, records):
    summary = {"trials": cfg.trials, "learning_rate": cfg.learning_rate}
    for c in cfg.checkpoints:
        rows = [r for r in records if r["checkpoint_n"] == c]
        bp = np.array([r["bp_rmse"] for r in rows])
        gd = np.array([r["grad_rmse"] for r in rows])
        summary[f"n{c}"] = {
            "bp_rmse_mean": float(bp.mean()),
            "bp_rmse_std": float(bp.std()),
            "grad_rmse_mean": float(gd.mean()),
            "grad_rmse_std": float(gd.std()),
            "bp_time_mean_s": float(np.mean([r["bp_time_s"] for r in rows])),
            "grad_time_mean_s": float(np.mean([r["grad_time_s"] for r in rows])),
        }
    last = [r for r in records if r["checkpoint_n"] == max(cfg.checkpoints)]
    summary["frac_sigma_y_4_gt_m1"] = float(np.mean(
        [r["bp_sigma_y_at_4"] > r["bp_sigma_y_at_m1"] for r in last]))
    return summary
