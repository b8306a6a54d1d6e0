"""Grid-refinement table for the linear operators.

Prints, per resolution, the delta-recovery error (derived and alternate beta),
the harmonicity residual of N f and the Green-identity residual, together with
successive error factors.

    python3 scripts/refinement_study.py --nx 16 32 64
"""

import argparse

import numpy as np

from halfspace_neumann.grid import BoundaryField, GridSpec, HalfSpaceField
from halfspace_neumann.model import BoundaryDataFamily
from halfspace_neumann.potentials import (calibrated_constants, delta_recovery_error,
                                          green_identity_residual, harmonicity_residual)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, nargs="+", default=[16, 32])
    ap.add_argument("--n", type=int, default=3)
    args = ap.parse_args()
    derived = calibrated_constants(args.n)
    alternate = calibrated_constants(args.n, "alternate")
    rows = []
    for nx in args.nx:
        # delta recovery: thin slab so the lowest level resolves t -> 0
        g = GridSpec(args.n, 3.0, nx, 0.375, nx // 2)
        f = BoundaryDataFamily("gaussian", 1.0).sample(g)
        e_d = delta_recovery_error(f, derived)
        e_p = delta_recovery_error(f, alternate)
        g = GridSpec(args.n, 4.0, nx, 4.0, nx // 2)
        h = harmonicity_residual(BoundaryField(g, np.exp(-g.radius() ** 2)), derived)
        F = HalfSpaceField(g, np.exp(-g.radius()[..., None] ** 2 - (g.t_axis() - 2) ** 2))
        gr = green_identity_residual(F, derived)
        rows.append((nx, e_d, e_p, h, gr))
    print(f"{'nx':>4} {'delta(derived)':>15} {'delta(alt)':>15} {'harmonicity':>12} "
          f"{'green':>12}")
    prev = None
    for r in rows:
        print(f"{r[0]:>4} {r[1]:15.4e} {r[2]:15.4e} {r[3]:12.4e} {r[4]:12.4e}")
        if prev is not None:
            fac = [p / c for p, c in zip(prev[1:], r[1:])]
            print(f"{'':>4} {fac[0]:15.3f} {fac[1]:15.3f} {fac[2]:12.3f} {fac[3]:12.3f}")
        prev = r


if __name__ == "__main__":
    main()
