"""Characteristic times at fixed wavenumber.

Dwell times of the two subensembles are the barrier-region probability of the
transmission (reflection) wave function divided by its incident flux
``T hbar k / m`` (``R hbar k / m``); the reflection integral stops at the
midpoint. Closed forms for the rectangular barrier are provided next to the
quadratures, together with the clock offsets ``tau_0``/``tau_z`` and the
comparison times of the whole ensemble (Smith, Bohm, stationary phase).

Closed forms are written in terms of ``z = kappa d`` with the removable
singularities at ``z -> 0`` factored out, so they stay accurate through the
``E = V0`` degeneracy.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .barrier import Barrier, RectangularBarrier, Regime, UnitsContext, kappa_of
from .quadrature import adaptive_simpson
from .stationary import (StationaryDecomposition, scattering_state, stationary_decompose,
                         tunneling_params)

#: Sign in the over-barrier dwell formulas, fixed by :func:`fit_beta` against
#: the quadrature oracles (it comes out +1 on both F-branches).
BETA = 1.0

T_FLOOR = 1e-300


class TimingError(ArithmeticError):
    pass


# removable-singularity helpers, all even in z -----------------------------------------

def _series(z, coeffs):
    z2 = z * z
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * z2 + c
    return acc


_F = math.factorial
_S_COEF = [1.0 / _F(2 * n + 3) for n in range(6)]
_C_COEF = [2.0 * n / _F(2 * n + 1) for n in range(1, 7)]


def _sinhc(z):
    return math.sinh(z) / z if z else 1.0


def _sinc(z):
    return math.sin(z) / z if z else 1.0


def _S_h(z):
    """(sinh z - z)/z^3"""
    return _series(z, _S_COEF) if abs(z) < 0.1 else (math.sinh(z) - z) / z**3


def _S_t(z):
    """(z - sin z)/z^3"""
    return _series(z, [c * (-1) ** n for n, c in enumerate(_S_COEF)]) if abs(z) < 0.1 \
        else (z - math.sin(z)) / z**3


def _C_h(z):
    """(z cosh z - sinh z)/z^3"""
    return _series(z, _C_COEF) if abs(z) < 0.1 else (z * math.cosh(z) - math.sinh(z)) / z**3


def _C_t(z):
    """(sin z - z cos z)/z^3"""
    return _series(z, [c * (-1) ** n for n, c in enumerate(_C_COEF)]) if abs(z) < 0.1 \
        else (math.sin(z) - z * math.cos(z)) / z**3


def _setup(barrier: RectangularBarrier, k: float):
    if not isinstance(barrier, RectangularBarrier):
        raise TypeError("closed forms need a RectangularBarrier")
    if k <= 0:
        raise ValueError("k must be positive")
    kap, regime = kappa_of(barrier, k)
    u = barrier.units
    return kap, regime, kap * barrier.d, barrier.d, barrier.kappa0_sq, u.mass / u.hbar


# ---------------------------------------------------------------------------
# rectangular closed forms
# ---------------------------------------------------------------------------

def dwell_tr_rect(barrier: RectangularBarrier, k: float, beta: float = BETA) -> float:
    """Transmission dwell time of a rectangular barrier."""
    kap, regime, z, d, k0s, m_h = _setup(barrier, k)
    if regime is Regime.OVER:
        if beta == 1.0:
            br = d * (1 + _sinc(z)) + k * k * d**3 * _S_t(z)
        else:
            br = ((kap**2 + k * k) * z - beta * k0s * math.sin(z)) / kap**3
    else:
        # UNDER, and the z = 0 limit of both branches
        br = d * (1 + _sinhc(z)) + k * k * d**3 * _S_h(z)
    return m_h / (2 * k) * br


def dwell_ref_rect(barrier: RectangularBarrier, k: float, beta: float = BETA) -> float:
    """Reflection dwell time of a rectangular barrier.

    Stays finite at resonances, where ``R -> 0`` and the quadrature route is
    undefined.
    """
    kap, regime, z, d, k0s, m_h = _setup(barrier, k)
    if regime is Regime.OVER:
        den = 1 + beta * k0s * (0.5 * d) ** 2 * _sinc(0.5 * z) ** 2
        return m_h * k * d**3 * _S_t(z) / den
    den = 1 + k0s * (0.5 * d) ** 2 * _sinhc(0.5 * z) ** 2
    return m_h * k * d**3 * _S_h(z) / den


def _offset_parts(barrier, k):
    kap, regime, z, d, k0s, m_h = _setup(barrier, k)
    if regime is Regime.OVER:
        num = d * (_sinc(z) + math.cos(z)) + k * k * d**3 * _C_t(z)
        sc = _sinc(z)
    else:
        num = d * (_sinhc(z) + math.cosh(z)) + k * k * d**3 * _C_h(z)
        sc = _sinhc(z)
    den = 4 * k * k + k0s**2 * d * d * sc * sc
    return num, den, sc, regime, kap, z, d, k0s, m_h


def tau0_rect(barrier: RectangularBarrier, k: float, beta: float = BETA,
              printed: bool = False) -> float:
    """Initial azimuthal clock reading per unit Larmor frequency.

    By default both regimes use the analytic continuation of the
    under-barrier expression in ``E``. ``printed=True`` evaluates the
    published over-barrier line literally (with ``beta``); for ``beta = 1``
    that line is the negative of the continued one.
    """
    num, den, sc, regime, kap, z, d, k0s, m_h = _offset_parts(barrier, k)
    if printed and regime is Regime.OVER:
        return (2 * m_h * k / kap * (beta * k0s * z * math.cos(z) - (kap**2 + k * k) * math.sin(z))
                / (4 * k * k * kap * kap + k0s**2 * math.sin(z) ** 2))
    return 2 * m_h * k * num / den


def tauz_rect(barrier: RectangularBarrier, k: float, beta: float = BETA,
              printed: bool = False) -> float:
    """Initial polar tilt per unit Larmor frequency (see :func:`tau0_rect`)."""
    num, den, sc, regime, kap, z, d, k0s, m_h = _offset_parts(barrier, k)
    if printed and regime is Regime.OVER:
        return (m_h * k0s / kap**2
                * (k0s * z * math.cos(z) - beta * (kap**2 + k * k) * math.sin(z))
                / (4 * k * k * kap * kap + k0s**2 * math.sin(z) ** 2) * math.sin(z))
    return m_h * k0s * num * d * sc / den


def dwell_bohm_rect(barrier: RectangularBarrier, k: float) -> float:
    """Closed-form Bohmian transmission dwell time (under-barrier)."""
    kap, regime, z, d, k0s, m_h = _setup(barrier, k)
    if regime is not Regime.UNDER:
        raise ValueError("closed form only for E < V0")
    return m_h / (4 * k * kap**3) * (2 * z * (kap**2 - k * k) + k0s * math.sinh(2 * z))


# ---------------------------------------------------------------------------
# quadrature routes
# ---------------------------------------------------------------------------

def _density(state, which):
    def f(x):
        return np.abs(state.evaluate(x)[which]) ** 2
    return f


def dwell_tr_numeric(decomposition: StationaryDecomposition, units: UnitsContext | None = None,
                     rtol: float = 1e-8) -> float:
    st = decomposition.state
    bar = st.barrier
    units = units or bar.units
    T = st.params.T
    if T < T_FLOOR:
        raise TimingError(f"transmission probability {T:.3e} underflows")
    f = _density(st, 1)
    occ = adaptive_simpson(f, bar.a, bar.x_c, rtol) + adaptive_simpson(f, bar.x_c, bar.b, rtol)
    return float(occ) / (T * units.velocity(st.k))


def dwell_ref_numeric(decomposition: StationaryDecomposition, units: UnitsContext | None = None,
                      rtol: float = 1e-8) -> float:
    st = decomposition.state
    bar = st.barrier
    units = units or bar.units
    R = st.params.R
    if R < T_FLOOR:
        raise TimingError("no reflection at this k (resonance); reflection dwell time undefined")
    occ = adaptive_simpson(_density(st, 2), bar.a, bar.x_c, rtol)
    return float(occ) / (R * units.velocity(st.k))


def dwell_smith(barrier: Barrier, k: float, rtol: float = 1e-8) -> float:
    """Barrier occupancy of the full stationary state over the incident flux."""
    st = scattering_state(barrier, k)
    f = _density(st, 0)
    occ = adaptive_simpson(f, barrier.a, barrier.x_c, rtol) + adaptive_simpson(f, barrier.x_c, barrier.b, rtol)
    return float(occ) / barrier.units.velocity(k)


def dwell_bohm(barrier: Barrier, k: float, rtol: float = 1e-8) -> float:
    T = tunneling_params(barrier, k).T
    if T < T_FLOOR:
        raise TimingError(f"transmission probability {T:.3e} underflows")
    return dwell_smith(barrier, k, rtol) / T


def free_flight_time(barrier: Barrier, k: float) -> float:
    return barrier.d / barrier.units.velocity(k)


def phase_time(barrier: Barrier, k: float, dk: float | None = None) -> float:
    """Stationary-phase transmission time ``hbar dJ/dE``.

    ``J`` carries the free phase ``k d``, so this is the full traversal time
    (``m d / hbar k`` without a barrier). Subtract :func:`free_flight_time`
    for the delay relative to free motion.
    """
    if dk is None:
        dk = 1e-4 * k
    if k - dk <= 0:
        raise ValueError("need k - dk > 0")
    jp = tunneling_params(barrier, k + dk).J
    jm = tunneling_params(barrier, k - dk).J
    dJ = (jp - jm + math.pi) % (2 * math.pi) - math.pi
    return barrier.units.mass / (barrier.units.hbar * k) * dJ / (2 * dk)


# ---------------------------------------------------------------------------
# beta
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaFit:
    """Per-branch values of the over-barrier sign, keyed by ``F`` (0 or pi)."""

    tr: dict
    ref: dict
    spread: float

    def is_unit(self, tol: float = 1e-5) -> bool:
        vals = list(self.tr.values()) + list(self.ref.values())
        return all(abs(abs(v) - 1) <= tol for v in vals) and self.spread <= tol


def fit_beta(barrier: RectangularBarrier, ks) -> BetaFit:
    """Solve the over-barrier dwell formulas for ``beta`` at each ``k`` using
    the quadrature values, and average per ``F`` branch.

    Points where ``sin(kappa d)`` (resp. ``sin(kappa d / 2)``) nearly vanishes
    carry no information about ``beta`` and are skipped.
    """
    samples_tr: dict = {}
    samples_ref: dict = {}
    for k in ks:
        kap, regime = kappa_of(barrier, k)
        if regime is not Regime.OVER:
            continue
        z = kap * barrier.d
        k0s = barrier.kappa0_sq
        m_h = barrier.units.mass / barrier.units.hbar
        dec = stationary_decompose(barrier, k, xgrid=[barrier.a, barrier.b])
        F = dec.params.F
        if abs(math.sin(z)) > 0.1:
            t = dwell_tr_numeric(dec)
            beta = ((kap**2 + k * k) * z - t * 2 * k * kap**3 / m_h) / (k0s * math.sin(z))
            samples_tr.setdefault(F, []).append(beta)
        if abs(math.sin(0.5 * z)) > 0.1 and dec.params.R > 1e-12:
            t = dwell_ref_numeric(dec)
            beta = ((m_h * k / kap) * (z - math.sin(z)) / t - kap**2) / (k0s * math.sin(0.5 * z) ** 2)
            samples_ref.setdefault(F, []).append(beta)
    spread = 0.0
    for s in list(samples_tr.values()) + list(samples_ref.values()):
        spread = max(spread, float(np.ptp(s)))
    return BetaFit(tr={F: float(np.mean(v)) for F, v in samples_tr.items()},
                   ref={F: float(np.mean(v)) for F, v in samples_ref.items()},
                   spread=spread)


# ---------------------------------------------------------------------------
# bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CharacteristicTimes:
    k: float
    T: float
    tau_dwell_tr: float
    tau_dwell_ref: float
    tau_0: float
    tau_z: float
    tau_smith: float
    tau_bohm: float
    tau_phase: float
    tau_phase_excess: float
    beta: float = BETA

    def as_dict(self):
        return asdict(self)


def characteristic_times(barrier: Barrier, k: float, beta: float = BETA,
                         dk: float | None = None) -> CharacteristicTimes:
    """All times at one ``k``.

    Rectangular barriers use the closed forms for the subensemble dwell times
    and clock offsets; sampled barriers use quadrature for the dwell times and
    the small-field spinor extraction for ``tau_0``/``tau_z``.
    """
    params = tunneling_params(barrier, k)
    if isinstance(barrier, RectangularBarrier):
        t_tr = dwell_tr_rect(barrier, k, beta)
        t_ref = dwell_ref_rect(barrier, k, beta)
        t0 = tau0_rect(barrier, k, beta)
        tz = tauz_rect(barrier, k, beta)
    else:
        from .larmor import stationary_clock_offsets
        dec = stationary_decompose(barrier, k, xgrid=[barrier.a, barrier.b])
        t_tr = dwell_tr_numeric(dec)
        t_ref = dwell_ref_numeric(dec) if params.R > T_FLOOR else 0.0
        t0, tz = stationary_clock_offsets(barrier, k)
    smith = dwell_smith(barrier, k)
    if params.T < T_FLOOR:
        raise TimingError(f"transmission probability {params.T:.3e} underflows")
    ph = phase_time(barrier, k, dk)
    return CharacteristicTimes(k=k, T=params.T, tau_dwell_tr=t_tr, tau_dwell_ref=t_ref,
                               tau_0=t0, tau_z=tz, tau_smith=smith, tau_bohm=smith / params.T,
                               tau_phase=ph, tau_phase_excess=ph - free_flight_time(barrier, k),
                               beta=beta)
