#!/usr/bin/env python3
"""How the sign-flip field's KS distance to its limit law shrinks with the window.

The normalized sum factorizes as z * (A/sqrt(l)) * (B/sqrt(m)) with A, B sums
of Rademacher signs, so it carries an atom at zero of mass about
2 * binom(l, l/2) / 2^l ~ 2 * sqrt(2 / (pi l)).  The one-sample KS distance
against the continuous limit CDF is floored at half that mass no matter how
many replicates are drawn; this script prints the measured distance next to
the predicted floor for growing square windows.

Usage: python3 scripts/window_convergence.py [--sides 256 1024 4096 16384] [-R 20000]
"""

import argparse
import math
import sys
import time

import numpy as np

from fieldclt import SignFlipCocycle, Window, bessel_cdf_many, replicate_stats
from fieldclt.stats import ks_one_sample


def atom_floor(side: int) -> float:
    # P(sum of `side` signs == 0), via the exact central binomial
    logp = math.lgamma(side + 1) - 2 * math.lgamma(side // 2 + 1) - side * math.log(2)
    p = math.exp(logp)
    return (1 - (1 - p) ** 2) / 2


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sides", nargs="*", type=int, default=[256, 1024, 4096, 16384])
    ap.add_argument("-R", "--replicates", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=20260823)
    return ap.parse_args()


def main():
    args = parse_args()
    spec = SignFlipCocycle()
    print(f"{'side':>7s} {'KS':>8s} {'atom floor':>11s} {'secs':>6s}   (R={args.replicates})")
    for side in args.sides:
        t0 = time.time()
        rep = replicate_stats(
            spec, Window((side, side)), "partial_sum", args.replicates, args.seed
        )
        d = ks_one_sample(np.sort(rep.values), bessel_cdf_many)
        print(f"{side:>7d} {d:>8.4f} {atom_floor(side):>11.4f} {time.time() - t0:>6.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
