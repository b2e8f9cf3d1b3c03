#!/usr/bin/env python3
"""Design one irregular capability mixture for a target channel quality.

Solves the discretized LP, post-verifies the result with a DE threshold run,
and prints the mixture together with its achieved mean capability.

Usage: python scripts/design_mixture.py --c 13.40
"""

import argparse
import sys

from gpclab import optimizer


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--c", type=float, default=13.40)
    parser.add_argument("--grid-m", type=int, default=1000)
    parser.add_argument("--t-max", type=int, default=50)
    parser.add_argument("--t-min", type=int, default=1)
    args = parser.parse_args()

    problem = optimizer.build_lp(args.c, args.grid_m, args.t_max, args.t_min)
    solution = optimizer.solve(problem)
    if solution.status != optimizer.STATUS_OPTIMAL:
        print(f"no feasible mixture at c = {args.c}", file=sys.stderr)
        return 3
    solution = optimizer.post_verify(solution)
    print(f"c = {args.c}  grid M = {args.grid_m}  t in [{args.t_min}, {args.t_max}]")
    print(f"status               {solution.status}")
    print(f"mean capability      {solution.t_bar:.6f}")
    print(f"2*t_bar bound gap    {2 * solution.t_bar - args.c:.6f}")
    print(f"verified threshold   {solution.verified_threshold:.4f}")
    print(f"fine-grid min slack  {solution.fine_grid_min_slack:.3e}")
    print("mixture:")
    for t, w in solution.tau.support():
        print(f"  t = {t:2d}   weight = {w:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
