"""Print the critical exponents m_c = (n+1)/(n-1) and M_c = (n+3)/(n-1) as CSV."""

import argparse
import csv
import sys

from halfspace_neumann.model import critical_curves


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=10)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "m_c", "M_c", "m_c_float", "M_c_float"])
    for n, mc, Mc in critical_curves(range(2, args.n_max + 1)):
        w.writerow([n, mc, Mc, f"{float(mc):.6f}", f"{float(Mc):.6f}"])


if __name__ == "__main__":
    main()
