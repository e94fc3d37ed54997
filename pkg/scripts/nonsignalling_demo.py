#!/usr/bin/env python3
"""Strict inclusion demo: non-signalling bipartite channels beyond products.

A classical PR-box channel (measure both inputs, prepare outputs with
x XOR y = a AND b, uniform marginals) is deterministic for the type
(A->B) (x) (C->D) — it passes the block membership check — yet Gilbert's
algorithm shows its distance to the convex hull of sampled product channels
N1 (x) N2 stays bounded away from zero, while a genuine mixture of product
channels converges towards the hull.
"""

import argparse
import sys

import numpy as np

from hoq.choi_numeric import HermOp, check_deterministic, random_channel_choi, reorder_factors
from hoq.type_ast import parse_type, tensor


def pr_box_choi() -> np.ndarray:
    """Choi of the PR-box channel, factor layout (A, B, C, D)."""
    blocks = np.zeros((2, 2, 4, 4), dtype=complex)  # [a, b] -> output state
    for a in range(2):
        for b in range(2):
            sigma = np.zeros((4, 4), dtype=complex)
            for x in range(2):
                for y in range(2):
                    if x ^ y == a & b:
                        sigma[2 * x + y, 2 * x + y] = 0.5
            blocks[a, b] = sigma
    # measure-and-prepare: M = sum_{a,b} |ab><ab| (x) sigma_ab over (A, C, B, D)
    m = np.zeros((16, 16), dtype=complex)
    for a in range(2):
        for b in range(2):
            proj = np.zeros((4, 4), dtype=complex)
            proj[2 * a + b, 2 * a + b] = 1.0
            m += np.kron(proj, blocks[a, b])
    return reorder_factors(HermOp((2, 2, 2, 2), m), (0, 2, 1, 3)).matrix


def product_choi(rng: np.random.Generator) -> np.ndarray:
    c1 = random_channel_choi(2, 2, rng)
    c2 = random_channel_choi(2, 2, rng)
    return np.kron(c1.matrix, c2.matrix)  # layout (A, B, C, D)


def gilbert_distance(point, vertices, iterations):
    """Distance from `point` to conv(vertices) by Gilbert's algorithm."""
    hull = vertices[0].copy()
    for _ in range(iterations):
        gap = point - hull
        scores = [float(np.tensordot(gap.conj(), v, axes=2).real) for v in vertices]
        best = vertices[int(np.argmax(scores))]
        step = best - hull
        denom = float(np.tensordot(step.conj(), step, axes=2).real)
        if denom < 1e-15:
            break
        t = float(np.tensordot(gap.conj(), step, axes=2).real) / denom
        if t <= 0:
            break
        hull = hull + min(1.0, t) * (best - hull)
    return float(np.linalg.norm(point - hull))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--iterations", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    xtens = tensor(parse_type("A:2->B:2"), parse_type("C:2->D:2"))
    pr = pr_box_choi()

    report = check_deterministic(pr, xtens)
    print(f"PR-box channel passes the tensor-type membership check: "
          f"{report.verdict} (residual outside the admissible blocks "
          f"{report.residual_outside_delta:.2e})")
    if not report.verdict:
        return 1

    rng = np.random.default_rng(args.seed)
    vertices = [product_choi(rng) for _ in range(args.samples)]

    mix = sum(v for v in vertices[:5]) / 5.0
    d_mix = gilbert_distance(mix, vertices, args.iterations)
    d_pr = gilbert_distance(pr, vertices, args.iterations)

    print(f"hull of {args.samples} sampled product channels, "
          f"{args.iterations} Gilbert iterations:")
    print(f"  distance of a 5-product mixture : {d_mix:.4f}")
    print(f"  distance of the PR-box channel  : {d_pr:.4f}")
    if d_pr < 10 * max(d_mix, 1e-6):
        print("unexpected: PR box looks close to the product hull")
        return 1
    print("the PR-box channel stays bounded away from the product hull")
    return 0


if __name__ == "__main__":
    sys.exit(main())
