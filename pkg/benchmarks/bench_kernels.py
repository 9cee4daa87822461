"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--runs 10000] [--horizon 200] [--repeat 3]
"""
import argparse
import time

import numpy as np

from deltaconsensus import kernels, rng
from deltaconsensus.dynamics import SamplingScheme
from deltaconsensus.graph import build_laplacian, ring5
from deltaconsensus.switching import dwell_matrices, scenario_ensemble
from deltaconsensus.verify import MONOTONE_TOL


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=10_000)
    ap.add_argument("--horizon", type=int, default=200)
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    e = scenario_ensemble(ring5(), (0.3, 0.3, 0.2, 0.2))
    s = SamplingScheme.from_dwell(0.01, 0.1)
    trans = np.ascontiguousarray(dwell_matrices(e, s))
    cum = rng.cumulative(e.probs)
    x0 = np.array([0.2, 0.8, 0.4, -1.0, -2.0])
    keys = rng.run_keys(1, args.runs)
    lap = np.ascontiguousarray(build_laplacian(ring5()).mat)

    print(f"default backend: {kernels.BACKEND}")
    print(f"{'kernel':<32}{'backend':<10}{'seconds':>10}")
    results = {}
    for name in sorted(kernels.BACKENDS):
        impl = kernels.get(name)
        t_mc = best_of(lambda: impl.run_ensemble(trans, cum, x0, keys, args.horizon, MONOTONE_TOL), args.repeat)
        t_tr = best_of(lambda: impl.delta_trajectory(lap, x0, 0.1, args.steps), args.repeat)
        results[name] = (t_mc, t_tr)
        print(f"{f'run_ensemble {args.runs}x{args.horizon}':<32}{name:<10}{t_mc:>10.4f}")
        print(f"{f'delta_trajectory {args.steps}':<32}{name:<10}{t_tr:>10.4f}")
    if len(results) == 2:
        c, p = results["compiled"], results["python"]
        print(f"speedup run_ensemble {p[0] / c[0]:.1f}x, delta_trajectory {p[1] / c[1]:.1f}x")


if __name__ == "__main__":
    main()
