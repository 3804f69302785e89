"""Command-line interface.

Exit codes: 0 ok, 2 I/O or parse error, 3 dimension mismatch, 4 invalid
model specification, 5 unknown experiment.
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import experiments as ex
from .activations import Activation
from .perceptron import DEFAULT_EPSILON, BayesianPerceptron, TrainingError, fit, predict

EXIT_OK = 0
EXIT_IO = 2
EXIT_DIM = 3
EXIT_SPEC = 4
EXIT_EXPERIMENT = 5

EXPERIMENTS = ("ground-truth", "classification", "regression")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _finite(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def _vector(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"not a list of finite numbers: {text!r}")
    return values


def parse_activation(spec: str) -> Activation:
    """``sigmoid``, ``relu``, ``linear``, ``leaky:<s>`` or ``pwl:<alpha>,<beta>``."""
    spec = spec.strip().lower()
    try:
        if spec == "sigmoid":
            return Activation.sigmoid()
        if spec == "relu":
            return Activation.relu()
        if spec == "linear":
            return Activation.linear()
        if spec.startswith("leaky:"):
            return Activation.leaky_relu(_finite(spec[6:]))
        if spec.startswith("pwl:"):
            alpha, beta = _vector(spec[4:])
            return Activation.pwl(alpha, beta)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise CliError(f"invalid activation {spec!r}: {exc}", EXIT_SPEC) from None
    raise CliError(f"unknown activation {spec!r}", EXIT_SPEC)


def read_training_csv(path):
    """Read ``x1..xd,y`` rows; returns ``(X, y, d)`` with ``d`` None for an empty file."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    if not rows:
        return np.empty((0, 0)), np.empty(0), None
    header = [c.strip() for c in rows[0]]
    d = len(header) - 1
    if d < 1 or header[-1] != "y" or header[:-1] != [f"x{i + 1}" for i in range(d)]:
        raise CliError(f"{path}: header must be x1..xd,y, got {','.join(header)}", EXIT_IO)
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != d + 1:
            raise CliError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}", EXIT_IO)
        try:
            values = [float(c) for c in row]
        except ValueError:
            raise CliError(f"{path}:{lineno}: non-numeric field", EXIT_IO) from None
        if not all(math.isfinite(v) for v in values):
            raise CliError(f"{path}:{lineno}: non-finite field", EXIT_IO)
        data.append(values)
    arr = np.array(data, dtype=np.float64).reshape(-1, d + 1)
    return arr[:, :d], arr[:, d], d


def _load_model(path):
    try:
        return BayesianPerceptron.load(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"cannot load model {path}: {exc}", EXIT_IO) from None


def _fmt(v):
    return format(float(v), ".17g")


def cmd_train(args):
    activation = parse_activation(args.activation)
    xs, ys, d = read_training_csv(args.data)
    bias = not args.no_bias
    extra = 1 if bias else 0
    prior_mean = args.prior_mean
    if d is None:
        if len(prior_mean) == 1:
            raise CliError("empty data file: give a vector --prior-mean to fix the dimension",
                           EXIT_IO)
        d = len(prior_mean) - extra
        if d < 1:
            raise CliError("prior mean too short for the bias term", EXIT_DIM)
    if len(prior_mean) not in (1, d + extra):
        raise CliError(f"--prior-mean has {len(prior_mean)} entries, model needs {d + extra}",
                       EXIT_DIM)
    if not args.prior_var > 0.0:
        raise CliError("--prior-var must be positive", EXIT_SPEC)
    if not args.epsilon >= 0.0:
        raise CliError("--epsilon must be >= 0", EXIT_SPEC)
    mean = prior_mean[0] if len(prior_mean) == 1 else prior_mean
    model = BayesianPerceptron.from_prior(d, activation, mean, args.prior_var,
                                          args.epsilon, bias=bias)
    if xs.shape[0]:
        try:
            model = fit(model, (xs, ys))
        except TrainingError as exc:
            raise CliError(str(exc), EXIT_SPEC) from None
    try:
        model.save(args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from None
    print(f"instances = {xs.shape[0]}")
    print("mean = " + ",".join(_fmt(v) for v in model.weights.mean))
    print(f"cov_trace = {_fmt(np.trace(model.weights.cov))}")
    return EXIT_OK


def cmd_predict(args):
    model = _load_model(args.model)
    if len(args.input) != model.input_dim:
        raise CliError(f"input has {len(args.input)} entries, model expects {model.input_dim}",
                       EXIT_DIM)
    p = predict(model, args.input)
    for name in ("mu_y", "sigma_y2", "mu_a", "sigma_a2"):
        print(f"{name} = {_fmt(getattr(p, name))}")
    return EXIT_OK


def cmd_inspect(args):
    model = _load_model(args.model)
    eig = np.linalg.eigvalsh(model.weights.cov)
    print(f"activation = {model.activation}")
    print(f"input_dim = {model.input_dim}")
    print(f"bias = {str(model.bias).lower()}")
    print(f"epsilon = {_fmt(model.epsilon)}")
    print("mean = " + ",".join(_fmt(v) for v in model.weights.mean))
    print(f"cov_trace = {_fmt(np.trace(model.weights.cov))}")
    print(f"cov_min_eigenvalue = {_fmt(eig.min())}")
    return EXIT_OK


def _write(path, records):
    try:
        ex.write_csv(path, records)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def cmd_experiment(args):
    name = args.name
    if name not in EXPERIMENTS:
        raise CliError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}",
                       EXIT_EXPERIMENT)
    eps = DEFAULT_EPSILON if args.epsilon is None else args.epsilon
    if name == "ground-truth":
        result = ex.run_ground_truth_comparison(ex.GroundTruthConfig(epsilon=eps))
        s = result.summary
        if args.cdf_out:
            cdf = [{"which": which, "abs_error": e, "cum_prob": p}
                   for which, pairs in (("mean", result.mean_error_cdf),
                                        ("variance", result.var_error_cdf))
                   for e, p in pairs]
            _write(args.cdf_out, cdf)
        print(f"grid points = {s['n_points']} (oracle epsilon = {s['epsilon']})")
        print(f"mean-mae = {s['mean_mae']:.4f} +- {s['mean_mae_std']:.4f}")
        print(f"variance-mae = {s['var_mae']:.4f} +- {s['var_mae_std']:.4f}")
        print(f"fraction mean error <= 0.2 = {s['frac_mean_err_le_0.2']:.4f}")
    elif name == "classification":
        kwargs = {"seed": args.seed, "trials": args.trials, "epsilon": eps}
        if args.n is not None:
            kwargs["n"] = args.n
        result = ex.run_linear_classification(ex.ClassificationConfig(**kwargs))
        s = result.summary
        print(f"trials = {s['trials']}")
        print(f"median cosine = {s['median_cosine']:.4f}")
        print(f"accuracy = {s['mean_accuracy']:.4f} +- {s['accuracy_std']:.4f} "
              f"(median {s['median_accuracy']:.4f})")
        print(f"sigma_a2 near data = {s['pooled_var_near']:.4f}, "
              f"far from data = {s['pooled_var_far']:.4f}")
    else:
        kwargs = {"seed": args.seed, "trials": args.trials, "epsilon": eps,
                  "timing": not args.no_timing}
        if args.learning_rate is not None:
            kwargs["learning_rate"] = args.learning_rate
        if args.n is not None:
            kwargs["n"] = args.n
            kwargs["checkpoints"] = tuple(sorted(
                {c for c in ex.RegressionConfig.checkpoints if c <= args.n} | {args.n}))
        result = ex.run_softplus_regression(ex.RegressionConfig(**kwargs))
        s = result.summary
        print(f"trials = {s['trials']} (baseline learning rate {s['learning_rate']})")
        for key, row in s.items():
            if not key.startswith("n"):
                continue
            print(f"{key}: bp rmse = {row['bp_rmse_mean']:.4f} +- {row['bp_rmse_std']:.4f}, "
                  f"grad rmse = {row['grad_rmse_mean']:.4f} +- {row['grad_rmse_std']:.4f}")
    if args.out:
        _write(args.out, result.records)
    if args.summary_json:
        try:
            with open(args.summary_json, "w") as fh:
                json.dump(result.summary, fh, indent=2)
        except OSError as exc:
            raise CliError(f"cannot write {args.summary_json}: {exc}", EXIT_IO) from None
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="bayes-perceptron",
                                     description="Bayesian perceptron training and prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a CSV file (single sequential pass)")
    p.add_argument("--data", required=True, help="CSV with header x1..xd,y")
    p.add_argument("--activation", default="sigmoid",
                   help="sigmoid | relu | linear | leaky:<s> | pwl:<alpha>,<beta>")
    p.add_argument("--epsilon", type=_finite, default=DEFAULT_EPSILON,
                   help="output noise variance (default %(default)s)")
    p.add_argument("--prior-mean", type=_vector, default=[0.0],
                   help="scalar (broadcast) or comma-separated vector incl. bias weight first")
    p.add_argument("--prior-var", type=_finite, default=1.0, help="prior covariance is r * I")
    p.add_argument("--no-bias", action="store_true", help="do not prepend a constant 1 input")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predictive moments for one input")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, type=_vector, help="comma-separated input vector")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="summarise a model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("experiment", help="run one of the synthetic experiments")
    p.add_argument("name", help=" | ".join(EXPERIMENTS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--out", help="results CSV")
    p.add_argument("--summary-json", help="write the aggregate summary as JSON")
    p.add_argument("--epsilon", type=_finite, default=None,
                   help="output noise variance; for ground-truth the oracle likelihood variance")
    p.add_argument("--n", type=int, default=None, help="training instances per trial")
    p.add_argument("--learning-rate", type=_finite, default=None,
                   help="regression baseline SGD step size (default 0.05)")
    p.add_argument("--no-timing", action="store_true",
                   help="regression: write nan instead of wall-clock times (byte-stable CSV)")
    p.add_argument("--cdf-out", help="ground-truth: CSV of cumulative error distributions")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be >= 1")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        # rejected configuration values, e.g. --n 0
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
