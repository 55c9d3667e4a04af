"""Opaque-barrier scan: subensemble dwell times, Smith/Bohm and phase times
against barrier width at fixed energy below the barrier top.

    python3 scripts/hartman_scan.py --k 1 --V0 1 --d-max 12
"""

import argparse
import math

import numpy as np

from tunnelsplit import RectangularBarrier
from tunnelsplit.times import dwell_ref_rect, dwell_smith, dwell_tr_rect, phase_time
from tunnelsplit.stationary import tunneling_params


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=float, default=1.0)
    ap.add_argument("--V0", type=float, default=1.0)
    ap.add_argument("--d-min", type=float, default=0.5)
    ap.add_argument("--d-max", type=float, default=12.0)
    ap.add_argument("--n", type=int, default=24)
    args = ap.parse_args()

    kap = math.sqrt(2 * args.V0 - args.k**2)
    print(f"# kappa = {kap:.6g}")
    print(f"{'d':>6} {'kd':>6} {'tau_tr':>12} {'tau_ref':>10} {'smith':>10} {'bohm':>12} {'phase':>10}")
    ds = np.linspace(args.d_min, args.d_max, args.n)
    log_tr = []
    for d in ds:
        bar = RectangularBarrier(args.V0, 10.0, float(d))
        tr, ref = dwell_tr_rect(bar, args.k), dwell_ref_rect(bar, args.k)
        sm = dwell_smith(bar, args.k)
        bo = sm / tunneling_params(bar, args.k).T
        print(f"{d:6.2f} {kap * d:6.2f} {tr:12.5g} {ref:10.6f} {sm:10.6f} {bo:12.5g} "
              f"{phase_time(bar, args.k):10.6f}")
        log_tr.append(math.log(tr))
    sel = (kap * ds >= 6) & (kap * ds <= 12)
    if sel.sum() >= 2:
        slope = np.polyfit(ds[sel], np.array(log_tr)[sel], 1)[0]
        print(f"# slope of ln tau_tr over kappa d in [6, 12]: {slope:.5f} (kappa = {kap:.5f})")


if __name__ == "__main__":
    main()
