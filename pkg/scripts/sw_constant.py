"""Measure C = max |E_sw - E_exact| U / J^2 for the doublon-band model over a (U, h) grid.

    python3 scripts/sw_constant.py --N 15

The frozen SW_BOUND_C in wqed.verification came from this scan.
"""
import argparse

import numpy as np

from wqed.model import LatticeParams
from wqed.verification import SW_BOUND_C, measure_sw_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, default=15)
    ap.add_argument("--U", type=float, nargs="+", default=[20, 50, 100, 200])
    ap.add_argument("--h", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0])
    args = ap.parse_args()

    worst = 0.0
    print("U/J    " + "  ".join(f"h={h:<5g}" for h in args.h))
    for U in args.U:
        row = [measure_sw_constant(LatticeParams(N=args.N, U=U, h=h)) for h in args.h]
        worst = max(worst, max(row))
        print(f"{U:<6g} " + "  ".join(f"{c:7.3f}" for c in row))
    print(f"worst C = {worst:.3f}; frozen bound C = {SW_BOUND_C}")
    if not np.isfinite(worst) or worst > SW_BOUND_C:
        print("warning: frozen bound exceeded on this grid")


if __name__ == "__main__":
    main()
