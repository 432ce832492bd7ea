"""Mean 1/Lambda_2 over mid-spectrum eigenstates of a free chain deep in the localised phase.

    python3 scripts/localisation_length.py --N 20 --h 3

Compares both pulse models with the product-of-decays estimate 2 ln(h/2J) and with
ln(h/2J), the value left when photon 1 sits exactly on a one-particle level and only
photon 2's off-resonant decay survives.
"""
import argparse
import logging
import math
import time

import numpy as np

from wqed.model import LatticeParams
from wqed.observables import build_evaluators, mobility_map


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, default=20)
    ap.add_argument("--h", type=float, default=3.0, help="h/J")
    ap.add_argument("--half-width", type=int, default=5, help="alphas d2//2 +- this")
    ap.add_argument("--pulse", choices=("lorentzian", "delta", "both"), default="both")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    p = LatticeParams(N=args.N, U=0.0)
    d2 = build_evaluators(p.with_(h=args.h)).d2
    mid = d2 // 2
    alphas = list(range(max(1, mid - args.half_width), min(d2, mid + args.half_width) + 1))
    ref = math.log(args.h / 2)
    print(f"N={args.N} h/J={args.h} alphas {alphas[0]}..{alphas[-1]} of {d2}")
    print(f"  2 ln(h/2J) = {2 * ref:.4f}   ln(h/2J) = {ref:.4f}")
    pulses = ("delta", "lorentzian") if args.pulse == "both" else (args.pulse,)
    for pulse in pulses:
        t0 = time.time()
        res = mobility_map(p, [args.h], alphas, ("inv_lambda2",), pulse, workers=args.workers)
        vals = np.array([r.get("inv_lambda2", np.nan) for r in res.records])
        print(f"  {pulse:10s} mean 1/Lambda2 = {np.nanmean(vals):.4f}  "
              f"(min {np.nanmin(vals):.3f}, max {np.nanmax(vals):.3f}, {time.time() - t0:.0f} s)")


if __name__ == "__main__":
    main()
