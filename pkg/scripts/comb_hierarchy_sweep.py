#!/usr/bin/env python3
"""Sweep comb sizes and compare the closed forms against the recursion.

Prints one row per tooth count: the identity coefficient, the index-set
size, and how long each route took.  Exits nonzero on any disagreement.
"""

import argparse
import sys
import time

from hoq.comb_toolkit import CombSpec, comb_delta_closed, comb_lambda_closed
from hoq.semantics import lambda_recursive
from hoq.subspace_algebra import delta_of_type
from hoq.type_ast import parse_type, print_canonical


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--base", default="A:2->B:2", help="tooth type")
    ap.add_argument("--max-n", type=int, default=6)
    args = ap.parse_args()

    base = parse_type(args.base)
    print(f"base tooth: {print_canonical(base)}")
    print(f"{'n':>3} {'lambda':>12} {'|delta|':>8} "
          f"{'closed [ms]':>12} {'recursion [ms]':>15}  agree")
    ok = True
    for n in range(1, args.max_n + 1):
        spec = CombSpec.uniform(base, n)

        t0 = time.perf_counter()
        lam_closed = comb_lambda_closed(spec)
        delta_closed = comb_delta_closed(spec)
        t_closed = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        lam_rec = lambda_recursive(spec.derived)
        delta_rec = delta_of_type(spec.derived)
        t_rec = (time.perf_counter() - t0) * 1e3

        agree = lam_closed == lam_rec and delta_closed == delta_rec
        ok = ok and agree
        print(f"{n:>3} {str(lam_closed):>12} {len(delta_closed):>8} "
              f"{t_closed:>12.2f} {t_rec:>15.2f}  {'yes' if agree else 'NO'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
