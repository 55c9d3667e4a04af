"""Norms of the full, transmitted and reflected packets and their overlap
over the course of the collision.

    python3 scripts/packet_invariants.py --k0 1 --l0 20 --a 200
"""

import argparse

import numpy as np

from tunnelsplit import RectangularBarrier
from tunnelsplit.wavepacket import GaussianSpec, ScatteringPacket, packet_xgrid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--V0", type=float, default=1.0)
    ap.add_argument("--d", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=200.0)
    ap.add_argument("--k0", type=float, default=1.0)
    ap.add_argument("--l0", type=float, default=20.0)
    ap.add_argument("--n-times", type=int, default=9)
    args = ap.parse_args()

    bar = RectangularBarrier(args.V0, args.a, args.d)
    spec = GaussianSpec(args.k0, args.l0)
    pk = ScatteringPacket(bar, spec, n_nodes=256)
    T, R = pk.spectral_norms()
    t_end = 2.25 * bar.x_c / args.k0
    x = packet_xgrid(bar, spec, t_max=t_end)
    print(f"T = {T:.12f}  R = {R:.12f}")
    print(f"{'t':>8} {'N_full-1':>10} {'N_tr-T':>10} {'N_ref-R':>10} {'Re<tr|ref>':>11} {'|<tr|ref>|':>10}")
    for t in np.linspace(0.0, t_end, args.n_times):
        full, tr, ref = pk.fields(t, x)
        nf = pk.integrate(np.abs(full) ** 2, x)
        nt = pk.integrate(np.abs(tr) ** 2, x)
        nr = pk.integrate(np.abs(ref) ** 2, x)
        ov = pk.integrate(np.conj(tr) * ref, x)
        print(f"{t:8.2f} {nf - 1:+10.2e} {nt - T:+10.2e} {nr - R:+10.2e} {ov.real:+11.2e} {abs(ov):10.2e}")


if __name__ == "__main__":
    main()
