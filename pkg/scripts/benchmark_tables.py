#!/usr/bin/env python3
"""Benchmark table runs: final-time residual norm and iteration count for
the two example problems over a list of sizes. Runtime columns are
hardware-dependent and only informative."""

import argparse
import sys
import time

from dlekrylov import (SolverConfig, TimeGrid, gen_convdiff, gen_heat_fem,
                       gen_random_block, solve_eba_bdf, solve_eba_exp,
                       wrap_sparse)


def run_case(op, B, grid, method, m_max, tol):
    solver = solve_eba_exp if method == "eba_exp" else solve_eba_bdf
    t0 = time.perf_counter()
    traj = solver(op, B, None, grid, SolverConfig(m_max=m_max, tol=tol,
                                                  bdf_order=2))
    elapsed = time.perf_counter() - t0
    return traj.final_residual, traj.iterations[-1].m, elapsed


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--example", choices=["convdiff", "heat"], default="convdiff")
    ap.add_argument("--sizes", type=int, nargs="+", default=[2500, 6400])
    ap.add_argument("--methods", nargs="+", default=["eba_exp", "eba_bdf"])
    ap.add_argument("--m-max", type=int, default=30)
    ap.add_argument("--tol", type=float, default=1e-10)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    grid = TimeGrid(0.0, 2.0, 1e-3)
    print(f"{'n':>8} {'method':>8} {'residual':>12} {'m':>4} {'time [s]':>9}")
    for n in args.sizes:
        if args.example == "convdiff":
            n0 = int(round(n ** 0.5))
            if n0 * n0 != n:
                print(f"skipping n={n}: not a perfect square", file=sys.stderr)
                continue
            op = wrap_sparse(gen_convdiff(n0))
            B = gen_random_block(n, 2, seed=args.seed)
        else:
            op, build_b = gen_heat_fem(n, dt=0.01, alpha=0.05)
            B = build_b(gen_random_block(n, 2, seed=args.seed))
        for method in args.methods:
            res, m, elapsed = run_case(op, B, grid, method, args.m_max, args.tol)
            print(f"{n:>8} {method:>8} {res:>12.3e} {m:>4} {elapsed:>9.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
