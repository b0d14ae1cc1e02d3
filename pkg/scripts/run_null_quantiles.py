"""Simulated null 0.999-quantiles of the two-sample Watson statistic against F(2, 2(n-2))."""

import argparse

import numpy as np

from axisfdr import special
from axisfdr.simulator import simulate_null_statistics


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--kappa", type=float, nargs="+", default=[2.0, 5.0, 10.0, 20.0, 50.0, 200.0])
    p.add_argument("--n", type=int, default=6, help="subjects per group")
    p.add_argument("--reps", type=int, default=10**6)
    p.add_argument("--level", type=float, default=0.999)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    crit = special.f_quantile(2, 2 * (2 * args.n - 2), args.level)
    print(f"F(2, {2 * (2 * args.n - 2)}) {args.level} quantile: {crit:.3f}")
    print("kappa,quantile")
    for i, k in enumerate(args.kappa):
        T = simulate_null_statistics(k, args.n, args.n, args.reps, seed=args.seed + i)
        print(f"{k:g},{np.quantile(T, args.level):.3f}")


if __name__ == "__main__":
    main()
