"""Per-iteration cost of full-space vs reduced-space (efficient) ProMises as m grows.

    python scripts/benchmark_efficient.py --n 20 --N 5 --m 250 500 1000 2000
"""
import argparse
import time
import warnings

import numpy as np

from promal.align import AlignConfig, solve_efficient_promises, solve_promises
from promal.errors import NonConvergenceWarning


def timed(fn, *args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--N", type=int, default=5)
    ap.add_argument("--m", type=int, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--iters", type=int, default=1, help="iterations timed per route")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = dict(scaling=False, max_iter=args.iters)
    warnings.simplefilter("ignore", NonConvergenceWarning)
    print(f"{'m':>6} {'full s':>9} {'efficient s':>12} {'ratio':>8}")
    for m in args.m:
        xs = [rng.standard_normal((args.n, m)) for _ in range(args.N)]
        t_eff = timed(solve_efficient_promises, xs, AlignConfig(method="efficient_promises", **cfg))
        t_full = timed(solve_promises, xs, AlignConfig(method="promises", **cfg))
        print(f"{m:>6} {t_full:>9.3f} {t_eff:>12.4f} {t_full / t_eff:>8.0f}")


if __name__ == "__main__":
    main()
