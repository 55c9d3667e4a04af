"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from tunnelsplit import (RectangularBarrier, SampledSymmetricBarrier, rect_tunneling_params,
                         stationary_decompose, tunneling_params)
from tunnelsplit.larmor import SpinorPacket, precession_rate, richardson
from tunnelsplit.stationary import default_xgrid, scattering_state
from tunnelsplit.times import (dwell_bohm, dwell_ref_numeric, dwell_ref_rect, dwell_smith,
                               dwell_tr_numeric, dwell_tr_rect, fit_beta, tau0_rect, tauz_rect)
from tunnelsplit.wavepacket import (GaussianSpec, ScatteringPacket, larmor_time_spectral,
                                    larmor_time_timeintegral, packet_xgrid)

RESULTS = []


def record(n, title, checks):
    """``checks`` maps a description to ``(ok, detail)``; prints one line."""
    ok = all(c[0] for c in checks.values())
    bad = [name for name, (good, _) in checks.items() if not good]
    parts = [f"{'ok' if good else 'FAIL'} {name} ({detail})" for name, (good, detail) in checks.items()]
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} | " + "; ".join(parts)
    RESULTS.append(line)
    print(line)
    return ok, bad


def smooth_barrier():
    return SampledSymmetricBarrier.from_function(
        lambda x: np.cos(np.pi * (x - 10.5)) ** 2, a=10.0, d=1.0, n=1001)


RECT = RectangularBarrier(1.0, 10.0, 1.0)
PACKET_BAR = RectangularBarrier(1.0, 200.0, 1.0)
PACKET_SPEC = GaussianSpec(k0=1.0, l0=20.0)
N_NODES = 256


def _ang(z):
    return math.atan2(z.imag, z.real)


# ---------------------------------------------------------------------------

def test_criterion_1_unitarity_and_splits():
    worst = dict(unit=0.0, split=0.0, split2=0.0, phase=0.0)
    for bar in (RECT, smooth_barrier()):
        for k in np.linspace(0.05, 3.0, 100):
            a = scattering_state(bar, float(k)).amps
            worst["unit"] = max(worst["unit"], abs(abs(a.a_out) ** 2 + abs(a.b_out) ** 2 - 1))
            worst["split"] = max(worst["split"], abs(a.A_in_tr + a.A_in_ref - 1))
            worst["split2"] = max(worst["split2"], abs(abs(a.A_in_tr) ** 2 + abs(a.A_in_ref) ** 2 - 1))
            d = math.remainder(_ang(a.A_in_ref) - _ang(a.A_in_tr), 2 * math.pi)
            worst["phase"] = max(worst["phase"], abs(abs(d) - math.pi / 2))
    ok, bad = record(1, "unitarity & splits", {
        "|a|^2+|b|^2=1": (worst["unit"] <= 1e-10, f"max err {worst['unit']:.1e}"),
        "A_tr+A_ref=1": (worst["split"] <= 1e-12, f"max err {worst['split']:.1e}"),
        "|A_tr|^2+|A_ref|^2=1": (worst["split2"] <= 1e-10, f"max err {worst['split2']:.1e}"),
        "phase difference pi/2": (worst["phase"] <= 1e-8, f"max err {worst['phase']:.1e}"),
    })
    assert ok, bad


def test_criterion_2_decomposition_invariants():
    worst = dict(sum=0.0, mid=0.0, fref=0.0, ftr=0.0)
    pairs = [(b, float(k)) for b in (RECT, smooth_barrier()) for k in np.linspace(0.3, 2.7, 10)]
    for bar, k in pairs:
        dec = stationary_decompose(bar, k, xgrid=default_xgrid(bar, k))
        scale = float(np.max(np.abs(dec.psi_full)))
        v = bar.units.velocity(k)
        T = dec.params.T
        worst["sum"] = max(worst["sum"], float(np.max(np.abs(dec.psi_full - dec.psi_tr - dec.psi_ref))))
        worst["mid"] = max(worst["mid"], abs(dec.state.ref_at_midpoint()) / scale)
        worst["fref"] = max(worst["fref"], float(np.max(np.abs(dec.flux_ref))) / v)
        worst["ftr"] = max(worst["ftr"], float(np.max(np.abs(dec.flux_tr - T * v))) / (T * v))
    ok, bad = record(2, f"decomposition invariants ({len(pairs)} pairs)", {
        "psi_full=tr+ref": (worst["sum"] <= 1e-12, f"max {worst['sum']:.1e}"),
        "psi_ref(x_c)=0": (worst["mid"] <= 1e-10, f"max rel {worst['mid']:.1e}"),
        "flux_ref=0": (worst["fref"] <= 1e-8, f"max rel {worst['fref']:.1e}"),
        "flux_tr=T hbar k/m": (worst["ftr"] <= 1e-8, f"max rel {worst['ftr']:.1e}"),
    })
    assert ok, bad


def test_criterion_3_dwell_closed_forms_vs_quadrature():
    worst_tr = worst_ref = 0.0
    n_over = n_under = 0
    for bar in (RECT, RectangularBarrier(1.0, 10.0, 3.0)):
        for k in np.linspace(0.1, 6.0, 50):
            k = float(k)
            dec = stationary_decompose(bar, k, xgrid=[bar.a, bar.b])
            if bar.units.energy(k) < bar.V0:
                n_under += 1
            else:
                n_over += 1
            worst_tr = max(worst_tr, abs(dwell_tr_rect(bar, k) / dwell_tr_numeric(dec) - 1))
            if dec.params.R > 1e-12:
                worst_ref = max(worst_ref, abs(dwell_ref_rect(bar, k) / dwell_ref_numeric(dec) - 1))
    fit = fit_beta(RectangularBarrier(1.0, 10.0, 3.0), np.linspace(1.45, 6.0, 60))
    betas = {**{f"tr F={F:.3g}": b for F, b in fit.tr.items()},
             **{f"ref F={F:.3g}": b for F, b in fit.ref.items()}}
    unit = len(fit.tr) == 2 and all(abs(abs(b) - 1) <= 1e-4 for b in betas.values())
    ok, bad = record(3, f"dwell closed forms vs quadrature ({n_under} under, {n_over} over)", {
        "tr agreement": (worst_tr <= 1e-6, f"max rel {worst_tr:.1e}"),
        "ref agreement": (worst_ref <= 1e-6, f"max rel {worst_ref:.1e}"),
        "fitted beta = +-1 per branch": (unit, ", ".join(f"{k}: {v:.6f}" for k, v in betas.items())),
    })
    assert ok, bad


def test_criterion_4_hartman_scan():
    k = 1.0   # V0 = 1 so kappa = 1 and kappa d = d
    kap = 1.0
    ds = np.linspace(6.0, 12.0, 13)
    log_tr = [math.log(dwell_tr_rect(RectangularBarrier(1.0, 10.0, float(d)), k)) for d in ds]
    slope = float(np.polyfit(ds, log_tr, 1)[0])
    b10, b12, b8 = (RectangularBarrier(1.0, 10.0, d / kap) for d in (10.0, 12.0, 8.0))
    ref_change = abs(dwell_ref_rect(b12, k) / dwell_ref_rect(b10, k) - 1)
    smith_change = abs(dwell_smith(b12, k) / dwell_smith(b10, k) - 1)
    bohm, tr, smith = dwell_bohm(b8, k), dwell_tr_rect(b8, k), dwell_smith(b8, k)
    ratio = bohm / tr / math.cosh(8.0)
    ok, bad = record(4, "opaque-barrier scan", {
        "slope ln tau_tr = kappa": (abs(slope / kap - 1) <= 0.05, f"slope {slope:.5f}"),
        "tau_ref saturates": (ref_change <= 1e-3, f"rel change {ref_change:.1e}"),
        "tau_smith saturates": (smith_change <= 1e-3, f"rel change {smith_change:.1e}"),
        "bohm >> tr >> smith": (bohm > 10 * tr and tr > 10 * smith,
                                f"{bohm:.4g} / {tr:.4g} / {smith:.4g}"),
        "bohm/tr ~ cosh(kd)": (0.5 <= ratio <= 2.0, f"ratio/cosh {ratio:.4f}"),
    })
    assert ok, bad


def test_criterion_5_packet_invariants():
    pk = ScatteringPacket(PACKET_BAR, PACKET_SPEC, n_nodes=N_NODES)
    T, R = pk.spectral_norms()
    t_end = 2.25 * PACKET_BAR.x_c / PACKET_SPEC.k0
    x = packet_xgrid(PACKET_BAR, PACKET_SPEC, t_max=t_end, h=0.03)
    nf, nt, nr, re_ov = [], [], [], []
    last = None
    for t in np.linspace(0.0, t_end, 9):
        full, tr, ref = pk.fields(float(t), x)
        nf.append(float(pk.integrate(np.abs(full) ** 2, x)))
        nt.append(float(pk.integrate(np.abs(tr) ** 2, x)))
        nr.append(float(pk.integrate(np.abs(ref) ** 2, x)))
        last = complex(pk.integrate(np.conj(tr) * ref, x))
        re_ov.append(last.real)
    drift = lambda v, c: max(abs(a - c) for a in v)
    ok, bad = record(5, "packet invariants (9 times)", {
        "norm(full)=1": (drift(nf, 1.0) <= 1e-8, f"max dev {drift(nf, 1.0):.1e}"),
        "norm(tr)=T": (drift(nt, T) <= 1e-8, f"max dev {drift(nt, T):.1e}"),
        "norm(ref)=R": (drift(nr, R) <= 1e-8, f"max dev {drift(nr, R):.1e}"),
        "T+R=1": (abs(T + R - 1) <= 1e-10, f"err {abs(T + R - 1):.1e}"),
        "Re<tr|ref>=0": (max(map(abs, re_ov)) <= 1e-8, f"max {max(map(abs, re_ov)):.1e}"),
        "|<tr|ref>| late": (abs(last) <= 1e-6, f"{abs(last):.1e}"),
    })
    assert ok, bad


def test_criterion_6_larmor_triangle():
    start = time.perf_counter()
    pk = ScatteringPacket(PACKET_BAR, PACKET_SPEC, n_nodes=N_NODES)
    checks = {}
    for kind in ("tr", "ref"):
        a = larmor_time_timeintegral(pk, kind).tau
        b = larmor_time_spectral(pk, kind).tau
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            c = precession_rate(PACKET_BAR, PACKET_SPEC, kind, n_nodes=N_NODES).tau
        worst = max(abs(a / b - 1), abs(a / c - 1), abs(b / c - 1))
        checks[f"{kind} routes agree"] = (worst <= 0.01,
                                          f"time {a:.6f}, spectral {b:.6f}, precession {c:.6f}")
    elapsed = time.perf_counter() - start
    checks["runtime <= 300 s"] = (elapsed <= 300, f"{elapsed:.0f} s")
    ok, bad = record(6, "Larmor consistency triangle", checks)
    assert ok, bad


def test_criterion_7_clock_offsets():
    spec = GaussianSpec(k0=1.0, l0=20.0)
    x0 = packet_xgrid(PACKET_BAR, spec, t_max=0.0)
    omegas = [1e-3, 5e-4]
    angles = {"tr": [], "ref": []}
    kgrid = None
    for w in omegas:
        sp = SpinorPacket(PACKET_BAR, spec, w, kgrid=kgrid, n_nodes=N_NODES)
        kgrid = sp.kgrid
        for kind in angles:
            s = sp.spin_expectations(kind, 0.0, x0)
            angles[kind].append((s.phi / w, (0.5 * math.pi - s.theta) / w))
    t0, tz = tau0_rect(PACKET_BAR, 1.0), tauz_rect(PACKET_BAR, 1.0)
    est = {kind: (richardson(omegas, [p for p, _ in v]), richardson(omegas, [z for _, z in v]))
           for kind, v in angles.items()}
    rel = lambda a, b: abs(a / b - 1)
    ok, bad = record(7, "clock offsets", {
        "phi_tr/w = tau_0": (rel(est["tr"][0], t0) <= 0.01, f"{est['tr'][0]:.6f} vs {t0:.6f}"),
        "(pi/2-theta_tr)/w = tau_z": (rel(est["tr"][1], tz) <= 0.01, f"{est['tr'][1]:.6f} vs {tz:.6f}"),
        "phi_ref/w = -tau_0": (rel(est["ref"][0], -t0) <= 0.01, f"{est['ref'][0]:.6f} vs {-t0:.6f}"),
        "(pi/2-theta_ref)/w = -tau_z": (rel(est["ref"][1], -tz) <= 0.01,
                                        f"{est['ref'][1]:.6f} vs {-tz:.6f}"),
    })
    assert ok, bad


def test_criterion_8_zero_and_identity():
    free = RectangularBarrier(0.0, 10.0, 1.3)
    ks = np.linspace(0.1, 4.0, 40)
    free_T = max(abs(tunneling_params(free, float(k)).T - 1) for k in ks)
    free_J = max(abs(math.remainder(tunneling_params(free, float(k)).J - k * free.d, 2 * math.pi))
                 for k in ks)
    free_tau = max(max(abs(dwell_tr_rect(free, float(k)) * k / free.d - 1),
                       abs(dwell_tr_numeric(stationary_decompose(free, float(k), xgrid=[10, 11.3]))
                           * k / free.d - 1)) for k in ks)
    res_T = res_ref = 0.0
    for n in (1, 2, 3):
        bar = RectangularBarrier(1.0, 10.0, 1.0)
        k = math.sqrt(bar.kappa0_sq + (n * math.pi) ** 2)
        dec = stationary_decompose(bar, k)
        res_T = max(res_T, abs(dec.params.T - 1))
        res_ref = max(res_ref, float(np.max(np.abs(dec.psi_ref))) / float(np.max(np.abs(dec.psi_full))))
    spec = GaussianSpec(1.0, 10.0)
    bar = RectangularBarrier(1.0, 100.0, 1.0)
    sp = SpinorPacket(bar, spec, 0.0, n_nodes=128)
    pk = ScatteringPacket(bar, spec, n_nodes=128)
    x = packet_xgrid(bar, spec, t_max=100.0)
    ident = all(np.array_equal(sp.components(kind, 100.0, x)[i], pk.evolve(kind, 100.0, x))
                for kind in ("full", "tr", "ref") for i in (0, 1))
    ok, bad = record(8, "zero/identity suite", {
        "V=0: T=1": (free_T <= 1e-14, f"max err {free_T:.1e}"),
        "V=0: J=kd": (free_J <= 1e-12, f"max err {free_J:.1e}"),
        "V=0: tau_tr=md/hbar k": (free_tau <= 1e-8, f"max rel {free_tau:.1e}"),
        "resonance T=1": (res_T <= 1e-12, f"max err {res_T:.1e}"),
        "resonance psi_ref=0": (res_ref <= 1e-10, f"max rel {res_ref:.1e}"),
        "omega=0 spinor == scalar (bitwise)": (ident, "identical" if ident else "differs"),
    })
    assert ok, bad


def _cli(args, threads):
    r = subprocess.run([sys.executable, "-m", "tunnelsplit.cli", *args, "--threads", str(threads)],
                       capture_output=True, check=True)
    return r.stdout


def test_criterion_9_determinism():
    outputs = {}
    for name, args in (("times", ["times", "--k-range", "0.2", "3.0", "40"]),
                       ("hartman", ["hartman", "--k", "1.0", "--d-range", "2", "12", "21"])):
        outputs[name] = [_cli(args, n) for n in (1, 4, 8)]
    checks = {f"{name} identical for 1/4/8 threads": (len(set(o)) == 1, f"{len(o[0])} bytes")
              for name, o in outputs.items()}
    ok, bad = record(9, "determinism", checks)
    assert ok, bad


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
