"""Compare the three Larmor-time routes for one Gaussian packet: barrier
occupancy integrated over time, spectral average of the stationary dwell
times, and the small-field spin precession.

    python3 scripts/larmor_triangle.py --k0 1 --l0 20 --a 200
"""

import argparse
import time
import warnings

from tunnelsplit import RectangularBarrier
from tunnelsplit.larmor import precession_rate
from tunnelsplit.wavepacket import (GaussianSpec, ScatteringPacket, larmor_time_spectral,
                                    larmor_time_timeintegral)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--V0", type=float, default=1.0)
    ap.add_argument("--d", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=200.0)
    ap.add_argument("--k0", type=float, default=1.0)
    ap.add_argument("--l0", type=float, default=20.0)
    ap.add_argument("--n-k", type=int, default=256)
    args = ap.parse_args()

    bar = RectangularBarrier(args.V0, args.a, args.d)
    spec = GaussianSpec(args.k0, args.l0)
    t0 = time.perf_counter()
    pk = ScatteringPacket(bar, spec, n_nodes=args.n_k)
    T, R = pk.spectral_norms()
    print(f"T = {T:.10f}  R = {R:.10f}")
    for kind in ("tr", "ref"):
        spec_route = larmor_time_spectral(pk, kind).tau
        time_route = larmor_time_timeintegral(pk, kind).tau
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prec = precession_rate(bar, spec, kind, n_nodes=args.n_k)
        print(f"{kind:>3}: time integral {time_route:.8f}  spectral {spec_route:.8f}  "
              f"precession {prec.tau:.8f}  (tau_0 {prec.tau0:.6f}, tau_z {prec.tauz:.6f})")
    print(f"elapsed {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
