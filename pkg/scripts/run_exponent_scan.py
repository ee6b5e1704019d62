#!/usr/bin/env python3
"""Scan the integer exponent lattice for admissible quantum potentials.

Classifies every candidate Q = A R^m |grad R|^n (lap R)^p on seeded
node-free probe fields and prints the residual table. Only the constant
form (0,0,0) and the Laplacian ratio (-1,0,1) should survive.
"""

import argparse

from qbohm.condition import exponent_scan
from qbohm.fields import grid_1d


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=512)
    ap.add_argument("--probes", type=int, default=10)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--tol", type=float, default=1e-3)
    ap.add_argument("--span", type=int, default=2, help="scan [-span, span]^3")
    args = ap.parse_args()

    grid = grid_1d(-10.0, 10.0, args.points)
    b = (-args.span, args.span)
    report = exponent_scan(bounds=(b, b, b), probes=args.probes, seed=args.seed,
                           grid=grid, tol=args.tol)

    print(f"lattice [-{args.span},{args.span}]^3, {args.probes} probes, seed {args.seed}, "
          f"{args.points}-point grid, tol {args.tol:g}")
    print(f"{'(m,n,p)':>12}  {'max residual':>14}  classified")
    for r in sorted(report.results, key=lambda r: r.max_residual):
        mark = "  <-- solution" if r.classified else ""
        print(f"{str(r.triple):>12}  {r.max_residual:14.3e}  {int(r.classified)}{mark}")
    print(f"\nsolution set: {report.solutions}")
    for r in report.results:
        if r.refined_residual is not None:
            print(f"near-threshold {r.triple}: {r.max_residual:.3e} -> "
                  f"{r.refined_residual:.3e} under 2x refinement")


if __name__ == "__main__":
    main()
