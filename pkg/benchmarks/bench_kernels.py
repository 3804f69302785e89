"""Compare the numba kernels with the interpreted fallback.

Each backend runs in its own interpreter because the backend is fixed at
import time by ``BAYES_PERCEPTRON_NUMBA``.

    python3 benchmarks/bench_kernels.py --n 20000 --dim 8 --repeat 5
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from bayes_perceptron import BACKEND, Activation, BayesianPerceptron, predict_batch

n, dim, repeat = map(int, sys.argv[1:4])
rng = np.random.default_rng(0)
xs = rng.normal(size=(n, dim))
ys = (xs.sum(axis=1) > 0).astype(float)
model = BayesianPerceptron.from_prior(dim, Activation.sigmoid())

# warm-up triggers (or loads cached) compilation
model.fit((xs[:10], ys[:10]))
predict_batch(model, xs[:10])

def best(fn):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)

trained = model.fit((xs, ys))
print(json.dumps({
    "backend": BACKEND,
    "fit_s": best(lambda: model.fit((xs, ys))),
    "predict_batch_s": best(lambda: predict_batch(trained, xs)),
    "checksum": float(trained.weights.mean.sum()),
}))
"""


def run_backend(flag, n, dim, repeat):
    env = dict(os.environ, BAYES_PERCEPTRON_NUMBA=flag)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(n), str(dim), str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20_000, help="training instances")
    parser.add_argument("--dim", type=int, default=8, help="input dimension")
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions (best of)")
    args = parser.parse_args(argv)

    rows = [run_backend(flag, args.n, args.dim, args.repeat) for flag in ("1", "0")]
    print(f"n = {args.n}, dim = {args.dim}, best of {args.repeat}")
    print(f"{'backend':<8} {'fit (s)':>10} {'predict_batch (s)':>18} {'checksum':>22}")
    for r in rows:
        print(f"{r['backend']:<8} {r['fit_s']:>10.4f} {r['predict_batch_s']:>18.5f} "
              f"{r['checksum']:>22.15g}")
    jit, py = rows
    print(f"speed-up: fit x{py['fit_s'] / jit['fit_s']:.1f}, "
          f"predict_batch x{py['predict_batch_s'] / jit['predict_batch_s']:.1f}")


if __name__ == "__main__":
    main()
