"""Time the SA-EM kernels: compiled (Cython) against pure Python.

    python benchmarks/bench_saem.py [--iters N] [--p P] [--repeat R]

Both backends consume the same pre-drawn random numbers, so the fitted
vectors must agree bit for bit; the script checks that before timing.
"""
import argparse
import time

import numpy as np

from shuffled import _backend, saem
from shuffled.models import GaussianMeansModel, MultinomialModel
from shuffled.permute import ShuffleGroup


def cases(p):
    rng = np.random.default_rng(0)
    yield "gaussian", GaussianMeansModel(p), rng.normal(0, 2, p)
    yield "multinomial", MultinomialModel(p, 10 * p), rng.multinomial(10 * p, np.full(p, 1 / p))


def fit(backend, model, x, config):
    _backend.use(backend)
    t0 = time.perf_counter()
    res = saem.run(model, x, ShuffleGroup.full(model.p), config)
    return res, time.perf_counter() - t0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=200_000)
    ap.add_argument("--p", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if "cython" not in _backend.available():
        raise SystemExit("compiled kernels not built; install with Cython to benchmark")
    config = saem.SaemConfig(iterations=args.iters, restarts=1, use_oracle_loglik=False)
    print(f"{'model':<12}{'cython s':>10}{'python s':>10}{'speedup':>9}  identical")
    for name, model, x in cases(args.p):
        rc, _ = fit("cython", model, x, config)
        rp, _ = fit("python", model, x, config)
        same = np.array_equal(rc.psi_raw, rp.psi_raw) and np.array_equal(rc.theta_shuffle, rp.theta_shuffle)
        tc = min(fit("cython", model, x, config)[1] for _ in range(args.repeat))
        tp = min(fit("python", model, x, config)[1] for _ in range(args.repeat))
        print(f"{name:<12}{tc:>10.3f}{tp:>10.3f}{tp / tc:>8.1f}x  {same}")
    _backend.use("cython")


if __name__ == "__main__":
    main()
