"""Larmor clock: a spin-1/2 packet whose two spin components see barriers
shifted by -+ hbar omega_L / 2.

The spinor starts polarized along x, ``(psi_up, psi_down) = psi / sqrt(2)``
for each component, so both components evolve as independent scalar packets
(see :mod:`tunnelsplit.wavepacket`). Spin expectations of a subensemble are
normalized by its own norm and carry the ``hbar/2`` prefactor:

    Sz = (hbar/2) (N_up - N_down) / (N_up + N_down)
    Sx + i Sy = hbar <psi_down | psi_up> / (N_up + N_down)

so the azimuth ``phi`` grows in the sense of the precession produced by the
field and ``theta = arccos(2 Sz / hbar)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .barrier import Barrier, RectangularBarrier
from .stationary import DEFAULT_ODE, ODESettings, scattering_state
from .wavepacket import (GaussianSpec, KGrid, PacketError, ScatteringPacket, barrier_occupancy,
                         build_kgrid, packet_xgrid, phase_spread, PHASE_PER_NODE,
                         _KIND_INDEX)

UP, DOWN = "up", "down"


class ExtrapolationWarning(RuntimeWarning):
    pass


def shifted_barrier(barrier: Barrier, omega_L: float, spin: str) -> Barrier:
    """Barrier seen by one spin component: ``V -+ hbar omega_L / 2`` on ``[a, b]``."""
    if omega_L < 0:
        raise ValueError("omega_L must be non-negative")
    if spin not in (UP, DOWN):
        raise ValueError(f"spin must be 'up' or 'down', got {spin!r}")
    if omega_L == 0:
        return barrier
    delta = 0.5 * barrier.units.hbar * omega_L * (-1.0 if spin == UP else 1.0)
    if isinstance(barrier, RectangularBarrier):
        return barrier.with_height(barrier.V0 + delta)
    return barrier.shifted(delta)


def default_omegas(spec: GaussianSpec, units) -> tuple[float, float]:
    scale = units.hbar * spec.k0**2 / units.mass
    return (1e-3 * scale, 5e-4 * scale)


# ---------------------------------------------------------------------------
# stationary clock offsets
# ---------------------------------------------------------------------------

def _stationary_angles(barrier: Barrier, k: float, omega: float, kind: str,
                       ode_settings: ODESettings):
    up = scattering_state(shifted_barrier(barrier, omega, UP), k, ode_settings)
    dn = scattering_state(shifted_barrier(barrier, omega, DOWN), k, ode_settings)
    if kind == "tr":
        au, ad = up.amps.A_in_tr, dn.amps.A_in_tr
    else:
        au, ad = up.amps.A_in_ref, dn.amps.A_in_ref
    nu, nd = abs(au) ** 2, abs(ad) ** 2
    phi = math.atan2((au * ad.conjugate()).imag, (au * ad.conjugate()).real)
    theta = math.acos(max(-1.0, min(1.0, (nu - nd) / (nu + nd))))
    return theta, phi


def stationary_clock_offsets(barrier: Barrier, k: float, kind: str = "tr",
                             omega: float | None = None,
                             ode_settings: ODESettings = DEFAULT_ODE) -> tuple[float, float]:
    """Initial clock readings ``(phi / omega, (pi/2 - theta) / omega)`` of a
    monochromatic subensemble, extrapolated to ``omega -> 0``.

    The angles come from the incoming split amplitudes of the two shifted
    barriers; the estimates at ``omega`` and ``omega/2`` are combined by
    Richardson extrapolation (errors are even in ``omega``).
    """
    if omega is None:
        omega = 1e-4 * max(barrier.units.energy(k), 1e-3) / barrier.units.hbar
    est = []
    for w in (omega, 0.5 * omega):
        theta, phi = _stationary_angles(barrier, k, w, kind, ode_settings)
        est.append((phi / w, (0.5 * math.pi - theta) / w))
    (p1, z1), (p2, z2) = est
    return (4 * p2 - p1) / 3, (4 * z2 - z1) / 3


# ---------------------------------------------------------------------------
# spinor packets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinExpectation:
    t: float
    kind: str
    Sx: float
    Sy: float
    Sz: float
    theta: float
    phi: float
    norm: float


class SpinorPacket:
    """Two scalar packets, one per spin component, on a shared k-grid."""

    def __init__(self, barrier: Barrier, spec: GaussianSpec, omega_L: float,
                 kgrid: KGrid | None = None, n_nodes: int = 128, eps_k: float = 1e-8,
                 threads: int = 1, ode_settings: ODESettings = DEFAULT_ODE):
        if omega_L < 0:
            raise ValueError("omega_L must be non-negative")
        self.omega_L = omega_L
        self.barrier = barrier
        self.spec = spec
        self.units = barrier.units
        self.kgrid = kgrid if kgrid is not None else build_kgrid(spec, eps_k, n_nodes)
        kw = dict(kgrid=self.kgrid, threads=threads, ode_settings=ode_settings)
        self.up = ScatteringPacket(shifted_barrier(barrier, omega_L, UP), spec, **kw)
        self.down = (self.up if omega_L == 0
                     else ScatteringPacket(shifted_barrier(barrier, omega_L, DOWN), spec, **kw))

    def components(self, kind: str, t: float, x):
        """``(psi_up, psi_down)`` of the ``kind`` subensemble, without the
        ``1/sqrt(2)`` mixture weights."""
        i = _KIND_INDEX[kind]
        up = self.up.fields(t, x)[i]
        dn = up if self.down is self.up else self.down.fields(t, x)[i]
        return up, dn

    def subensemble_norms(self) -> dict:
        Tu, Ru = self.up.spectral_norms()
        Td, Rd = self.down.spectral_norms()
        return {"T_up": Tu, "R_up": Ru, "T_down": Td, "R_down": Rd}

    def spin_expectations(self, kind: str, t: float, x) -> SpinExpectation:
        x = np.asarray(x, dtype=float)
        up, dn = self.components(kind, t, x)
        if kind == "ref":
            keep = x <= self.barrier.x_c
            x, up, dn = x[keep], up[keep], dn[keep]
        integ = self.up.integrate
        nu = float(integ(np.abs(up) ** 2, x))
        nd = float(integ(np.abs(dn) ** 2, x))
        ov = complex(integ(np.conj(dn) * up, x))
        tot = nu + nd
        if tot < 1e-300:
            raise PacketError(f"{kind} subensemble norm underflows")
        h = self.units.hbar
        sz = 0.5 * h * (nu - nd) / tot
        sx, sy = h * ov.real / tot, h * ov.imag / tot
        theta = math.acos(max(-1.0, min(1.0, 2 * sz / h)))
        return SpinExpectation(t=t, kind=kind, Sx=sx, Sy=sy, Sz=sz, theta=theta,
                               phi=math.atan2(sy, sx), norm=0.5 * tot)

    def late_time(self, margin: float = 10.0) -> float:
        """A time by which both outgoing packets have left the barrier."""
        return late_time(self.barrier, self.spec, margin)


def late_time(barrier: Barrier, spec: GaussianSpec, margin: float = 10.0) -> float:
    """Time at which the packet centre is ``margin`` widths past the barrier."""
    u = barrier.units
    v0 = u.velocity(spec.k0)
    t = (barrier.b - spec.x0) / v0
    for _ in range(6):
        t = (barrier.b - spec.x0 + margin * spec.width_at(t, u)) / v0
    return t


def spinor_evolve(spec: GaussianSpec, barrier: Barrier, omega_L: float, **kwargs) -> SpinorPacket:
    return SpinorPacket(barrier, spec, omega_L, **kwargs)


def spin_expectations(spinor: SpinorPacket, kind: str, t: float, x) -> SpinExpectation:
    return spinor.spin_expectations(kind, t, x)


def initial_angles(spinor: SpinorPacket, kind: str, x=None) -> tuple[float, float]:
    """``(theta, phi)`` of the subensemble at ``t = 0``."""
    if x is None:
        x = packet_xgrid(spinor.barrier, spinor.spec, t_max=0.0)
    s = spinor.spin_expectations(kind, 0.0, x)
    return s.theta, s.phi


# ---------------------------------------------------------------------------
# small-field extrapolation
# ---------------------------------------------------------------------------

def richardson(omegas, values) -> float:
    """Extrapolate ``values(omega) = v0 + c omega^2 + ...`` to ``omega = 0``."""
    w2 = np.asarray(omegas, dtype=float) ** 2
    vals = np.asarray(values, dtype=float)
    if w2.size == 1:
        return float(vals[0])
    coef = np.polynomial.polynomial.polyfit(w2, vals, w2.size - 1)
    return float(coef[0])


@dataclass(frozen=True)
class AngleSeries:
    omega: float
    theta0: float
    phi0: float
    theta_late: float
    phi_late: float

    @property
    def dphi(self) -> float:
        return math.remainder(self.phi_late - self.phi0, 2 * math.pi)


@dataclass(frozen=True)
class PrecessionResult:
    kind: str
    series: tuple
    tau: float
    tau0: float
    tauz: float
    spread: float
    converged: bool
    t_late: float = 0.0
    estimates: tuple = field(default=())


def precession_rate(barrier: Barrier, spec: GaussianSpec, kind: str, omega_list=None,
                    n_nodes: int = 128, eps_k: float = 1e-8, threads: int = 1,
                    t_late: float | None = None, x=None, rel_tol: float = 0.01,
                    ode_settings: ODESettings = DEFAULT_ODE) -> PrecessionResult:
    """Small-field precession ``d(phi_late - phi_0)/d omega_L`` of a subensemble.

    One spinor packet is run per ``omega`` in ``omega_list``; the ratios
    ``dphi / omega`` are extrapolated to ``omega -> 0``. The initial offsets
    ``phi_0 / omega`` and ``(pi/2 - theta_0) / omega`` are extrapolated the same
    way. ``n_nodes`` is a lower bound: it is raised to the count needed to
    resolve the packets on the evaluation grids. If the individual estimates differ by more than ``rel_tol`` an
    :class:`ExtrapolationWarning` is issued and ``converged`` is False.
    """
    if kind not in ("full", "tr", "ref"):
        raise ValueError(f"unknown kind {kind!r}")
    if omega_list is None:
        omega_list = default_omegas(spec, barrier.units)
    omega_list = [float(w) for w in omega_list]
    if len(omega_list) < 2:
        raise ValueError("need at least two omega values")
    if any(w <= 0 for w in omega_list):
        raise ValueError("omega values must be positive (zero cannot be extrapolated from)")
    if t_late is None:
        t_late = late_time(barrier, spec)
    x0 = packet_xgrid(barrier, spec, t_max=0.0) if x is None else x
    x1 = packet_xgrid(barrier, spec, t_min=t_late, t_max=t_late) if x is None else x
    k = build_kgrid(spec, eps_k, n_nodes).nodes
    need = max(phase_spread(barrier, spec, k, t, xx) for t, xx in ((0.0, x0), (t_late, x1)))
    need = int(math.ceil(need / PHASE_PER_NODE))
    kgrid = build_kgrid(spec, eps_k, max(n_nodes, 32 * -(-need // 32)))

    def run(w):
        sp = SpinorPacket(barrier, spec, w, kgrid=kgrid, ode_settings=ode_settings)
        s0 = sp.spin_expectations(kind, 0.0, x0)
        s1 = sp.spin_expectations(kind, t_late, x1)
        return AngleSeries(omega=w, theta0=s0.theta, phi0=s0.phi, theta_late=s1.theta, phi_late=s1.phi)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            series = list(ex.map(run, omega_list))
    else:
        series = [run(w) for w in omega_list]

    est = [s.dphi / s.omega for s in series]
    tau = richardson(omega_list, est)
    tau0 = richardson(omega_list, [s.phi0 / s.omega for s in series])
    tauz = richardson(omega_list, [(0.5 * math.pi - s.theta0) / s.omega for s in series])
    spread = (max(est) - min(est)) / max(abs(tau), 1e-300)
    converged = spread <= rel_tol
    if not converged:
        warnings.warn(f"precession estimates {est} differ by {spread:.2%}; extrapolation unreliable",
                      ExtrapolationWarning, stacklevel=2)
    return PrecessionResult(kind=kind, series=tuple(series), tau=tau, tau0=tau0, tauz=tauz,
                            spread=spread, converged=converged, t_late=t_late,
                            estimates=tuple(est))
