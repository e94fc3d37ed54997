#!/usr/bin/env python3
"""Run the bounded inverse search for a prescribed index set.

The default arguments reproduce the no-go: no type with two qubit factors
realizes the isolated fully-traceless string {00} within depth 4.
"""

import argparse
import sys
import time

from hoq.inverse_search import SearchSpec, inverse_search
from hoq.subspace_algebra import StringSet


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="2,2", help="comma-separated factor dims")
    ap.add_argument(
        "--target",
        default="00",
        help="comma-separated bitstrings (empty string for the empty set)",
    )
    ap.add_argument("--max-depth", type=int, default=4)
    ap.add_argument("--trivial-leaves", type=int, default=2)
    ap.add_argument("--perms", action="store_true")
    args = ap.parse_args()

    dims = tuple(int(d) for d in args.dims.split(","))
    strings = [s for s in args.target.split(",") if s]
    spec = SearchSpec(
        dims=dims,
        target=StringSet.from_bitstrings(len(dims), strings),
        max_depth=args.max_depth,
        max_trivial_leaves=args.trivial_leaves,
        allow_permutations=args.perms,
    )

    def progress(examined: int, pruned: int) -> None:
        print(f"  examined {examined}, pruned {pruned}", file=sys.stderr)

    t0 = time.perf_counter()
    result = inverse_search(spec, progress=progress)
    elapsed = time.perf_counter() - t0

    print(f"dims {list(dims)}, target {strings or '{}'}, "
          f"depth <= {args.max_depth}, trivial leaves <= {args.trivial_leaves}")
    print(f"exhausted: {result.exhausted}  pruned: {result.pruned_count}  "
          f"elapsed: {elapsed:.2f}s")
    if result.matches:
        print(f"{len(result.matches)} match(es):")
        for text in result.matches:
            print(f"  {text}")
        return 0
    print("no matches" + ("" if result.exhausted else " (search capped)"))
    return 1 if result.exhausted else 3


if __name__ == "__main__":
    sys.exit(main())
