"""Convergence threshold of the Picard iteration for gaussian data of several widths.

    python3 scripts/threshold_scan.py --widths 0.5 1 2 --nx 16
"""

import argparse

from halfspace_neumann.grid import GridSpec
from halfspace_neumann.model import BoundaryDataFamily, ProblemSpec
from halfspace_neumann.potentials import calibrated_constants
from halfspace_neumann.solver import SolverConfig, threshold_search


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", default="3")
    ap.add_argument("--widths", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--nx", type=int, default=16)
    ap.add_argument("--ratio", type=float, default=1.1)
    args = ap.parse_args()
    spec = ProblemSpec(3, args.m)
    g = GridSpec(3, 4.0, args.nx, 2.0, args.nx // 2)
    consts = calibrated_constants(3)
    sv = SolverConfig(max_iter=60)
    print(f"{'width':>6} {'low':>10} {'high':>10} {'evals':>6}")
    for w in args.widths:
        fam = BoundaryDataFamily("gaussian", 1.0, width=w)
        res = threshold_search(fam, spec, g, consts, solver=sv, ratio=args.ratio, start=0.25)
        fmt = lambda v: "open" if v is None else f"{v:.4f}"
        print(f"{w:6.2f} {fmt(res.low):>10} {fmt(res.high):>10} {res.evaluations:6d}")


if __name__ == "__main__":
    main()
