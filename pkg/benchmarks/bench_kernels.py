"""Time the compiled kernels against their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from fracskellam import kernels
from fracskellam.rates import RateFunction


def cases():
    gm = kernels.encode_rates([RateFunction.gompertz_makeham(0.6, 0.1, 5.0),
                               RateFunction.gompertz_makeham(0.7, 0.2, 4.0)])
    lam = np.array([3.0, 2.0, 1.0])
    cps = np.array([0.5, 1.0, 2.0])

    def bg():
        return np.random.Philox(np.random.SeedSequence(1))

    return {
        "ngcp_recurrence n=400": lambda m: m.ngcp_recurrence(lam, 400),
        "subordinator_grid 4096 steps": lambda m: m.subordinator_grid(0.7, 4097, 1 / 1024, bg()),
        "subordinator_at 200 draws": lambda m: m.subordinator_at(0.7, cps, 1 / 256, 200, bg()),
        "thinning_counts 200 paths": lambda m: m.thinning_counts(gm, cps, 16, 200, bg()),
        "renewal_counts 200 paths": lambda m: m.renewal_counts(gm, 0.7, cps, 200, bg()),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    pure = kernels.backend(pure=True)
    compiled = kernels.backend() if kernels.BACKEND == "compiled" else None
    print(f"{'kernel':<30} {'pure (ms)':>10} {'compiled (ms)':>14} {'speedup':>8}")
    for name, fn in cases().items():
        tp = min(timeit.repeat(lambda: fn(pure), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<30} {tp:10.2f} {'n/a':>14} {'n/a':>8}")
            continue
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<30} {tp:10.2f} {tc:14.3f} {tp / tc:7.0f}x")


if __name__ == "__main__":
    main()
