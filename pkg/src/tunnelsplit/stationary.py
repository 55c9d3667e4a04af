"""Stationary scattering on a symmetric barrier and its transmission/reflection split.

Inside the barrier the wave function is expanded on an odd solution ``u`` and an
even solution ``v`` of the Schrodinger equation (both functions of
``xi = x - x_c``). Matching at the barrier edges gives everything else in terms
of the two complex numbers

    Q = u'(d/2) + i k u(d/2),    P = v'(d/2) + i k v(d/2).

The reflection wave function keeps only the odd interior component, so it
vanishes at the midpoint; it is truncated to zero for ``x >= x_c`` and the
transmission wave function is what remains of the full one.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .barrier import (Barrier, RectangularBarrier, Regime, SampledSymmetricBarrier,
                      TunnelingParams, UnitsContext, kappa_of)


class SingularMatchingError(ArithmeticError):
    pass


class DecompositionError(RuntimeError):
    pass


class ODEFailure(RuntimeError):
    def __init__(self, message: str, position: float):
        super().__init__(f"{message} (at x = {position!r})")
        self.position = position


@dataclass(frozen=True)
class ODESettings:
    method: str = "RK45"
    rtol: float = 1e-10
    atol: float = 1e-12


DEFAULT_ODE = ODESettings()


# ---------------------------------------------------------------------------
# interior basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BarrierBasis:
    """Odd/even interior solutions sampled on ``[x_c, b]``.

    ``u(0) = 0``, ``v(0) = 1``; ``u'(0) = 1`` for integrated bases (Wronskian 1)
    and ``u'(0) = kappa`` for the analytic rectangular one (Wronskian kappa).
    """

    k: float
    grid: np.ndarray
    u: np.ndarray
    du: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    W: float
    _eval: object = field(repr=False)

    def evaluate(self, xi):
        """``(u, u', v', v')`` at offsets ``xi`` from the midpoint (any sign)."""
        xi = np.asarray(xi, dtype=float)
        s = np.sign(xi)
        u, du, v, dv = self._eval(np.abs(xi))
        return s * u, du, v, s * dv

    def edge(self):
        return self.u[-1], self.du[-1], self.v[-1], self.dv[-1]


def _rect_evaluator(kap: float, regime: Regime):
    if regime is Regime.UNDER:
        def ev(xi):
            with np.errstate(over="ignore"):
                return (np.sinh(kap * xi), kap * np.cosh(kap * xi),
                        np.cosh(kap * xi), kap * np.sinh(kap * xi))
        return ev, kap
    if regime is Regime.OVER:
        def ev(xi):
            return (np.sin(kap * xi), kap * np.cos(kap * xi),
                    np.cos(kap * xi), -kap * np.sin(kap * xi))
        return ev, kap

    def ev(xi):
        return xi.copy(), np.ones_like(xi), np.ones_like(xi), np.zeros_like(xi)
    return ev, 1.0


def _ode_evaluator(barrier: SampledSymmetricBarrier, k: float, settings: ODESettings):
    u_ = barrier.units
    E = u_.energy(k)
    c = 2.0 * u_.mass / u_.hbar**2
    xs = barrier.grid
    vs = barrier.values
    x_c = barrier.x_c
    h = 0.5 * barrier.d

    def rhs(xi, y):
        q = c * (np.interp(x_c + xi, xs, vs) - E)
        return [y[1], q * y[0], y[3], q * y[2]]

    sol = solve_ivp(rhs, (0.0, h), [0.0, 1.0, 1.0, 0.0], method=settings.method,
                    rtol=settings.rtol, atol=settings.atol, dense_output=True)
    if sol.status != 0 or sol.t[-1] < h:
        raise ODEFailure(f"basis integration failed: {sol.message}", x_c + float(sol.t[-1]))
    dense = sol.sol
    end = sol.y[:, -1]

    def ev(xi):
        xi = np.atleast_1d(xi)
        y = dense(xi)
        # the interpolant is exact at the final node; use the solver's value there
        at_end = xi == h
        if np.any(at_end):
            y[:, at_end] = end[:, None]
        return y[0], y[1], y[2], y[3]

    return ev, 1.0


_BASIS_CACHE: dict = {}


def solve_basis(barrier: Barrier, k: float, ode_settings: ODESettings = DEFAULT_ODE,
                n_grid: int = 65) -> BarrierBasis:
    """Odd and even interior solutions at energy ``E(k)``.

    Rectangular barriers use ``sinh/cosh`` (``sin/cos`` above the barrier,
    ``xi`` and ``1`` at ``E = V0``); sampled barriers are integrated from the
    midpoint with an adaptive Runge-Kutta scheme.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    key = (barrier.key, abs(k), ode_settings)
    cached = _BASIS_CACHE.get(key)
    if cached is not None:
        return cached
    if isinstance(barrier, RectangularBarrier):
        kap, regime = kappa_of(barrier, k)
        ev, W = _rect_evaluator(kap, regime)
    elif isinstance(barrier, SampledSymmetricBarrier):
        ev, W = _ode_evaluator(barrier, abs(k), ode_settings)
    else:
        raise TypeError(f"unsupported barrier type {type(barrier).__name__}")
    grid = np.linspace(0.0, 0.5 * barrier.d, n_grid)
    u, du, v, dv = (np.asarray(a, dtype=float) for a in ev(grid))
    basis = BarrierBasis(k=abs(k), grid=barrier.x_c + grid, u=u, du=du, v=v, dv=dv,
                         W=W, _eval=ev)
    _BASIS_CACHE[key] = basis
    return basis


def clear_cache():
    _BASIS_CACHE.clear()


# ---------------------------------------------------------------------------
# boundary matching
# ---------------------------------------------------------------------------

def boundary_QP(basis: BarrierBasis, k: float) -> tuple[complex, complex]:
    u, du, v, dv = basis.edge()
    return complex(du, k * u), complex(dv, k * v)


def outgoing_amplitudes(Q: complex, P: complex) -> tuple[complex, complex]:
    if not (cmath.isfinite(Q) and cmath.isfinite(P)):
        raise SingularMatchingError("interior solution overflows at the barrier edge (barrier too opaque)")
    if abs(Q) < 1e-300 or abs(P) < 1e-300:
        raise SingularMatchingError(f"degenerate boundary data Q={Q!r}, P={P!r}")
    q = Q / Q.conjugate()
    p = P / P.conjugate()
    return 0.5 * (q - p), -0.5 * (q + p)


def params_from_amplitudes(a_out: complex, b_out: complex, Q: complex, P: complex,
                           k: float) -> TunnelingParams:
    """``T = |a_out|^2``, ``J = arg a_out`` and ``F`` from the sign of ``Re(Q P*)``.

    The sign rule (``F = 0`` iff ``Re(QP*) >= 0``) holds for ``k > 0`` with a
    positive Wronskian; negative ``k`` uses ``F(-k) = pi - F(k)``.
    """
    T = abs(a_out) ** 2
    J = cmath.phase(a_out)
    re = (Q * P.conjugate()).real
    F = 0.0 if re >= 0 else math.pi
    if k < 0:
        F = math.pi - F
    return TunnelingParams(k=k, T=T, J=J, F=F)


def incoming_splits(a_out: complex, b_out: complex) -> tuple[complex, complex]:
    """Incoming amplitudes ``(A_in_tr, A_in_ref)`` of the two sub-processes."""
    A_ref = b_out * (b_out.conjugate() - a_out.conjugate())
    A_tr = a_out.conjugate() * (a_out + b_out)
    return A_tr, A_ref


@dataclass(frozen=True)
class BoundaryAmplitudes:
    Q: complex
    P: complex
    a_out: complex
    b_out: complex
    A_in_tr: complex
    A_in_ref: complex
    a_full: complex
    b_full: complex
    a_tr_l: complex
    a_tr_r: complex
    b_tr: complex
    a_ref: complex
    b_ref: complex  # even part of the matched reflection solution; zero in exact arithmetic


def match_boundaries(barrier: Barrier, basis: BarrierBasis, k: float) -> BoundaryAmplitudes:
    Q, P = boundary_QP(basis, k)
    a_out, b_out = outgoing_amplitudes(Q, P)
    A_tr, A_ref = incoming_splits(a_out, b_out)
    W = basis.W
    eika = cmath.exp(1j * k * barrier.a)
    a_full = -P.conjugate() * a_out * eika / W
    b_full = Q.conjugate() * a_out * eika / W
    a_ref = (P * A_ref + P.conjugate() * b_out) * eika / W
    b_ref = (Q * A_ref + Q.conjugate() * b_out) * eika / W
    a_tr_l = P * A_tr * eika / W
    return BoundaryAmplitudes(Q=Q, P=P, a_out=a_out, b_out=b_out, A_in_tr=A_tr,
                              A_in_ref=A_ref, a_full=a_full, b_full=b_full,
                              a_tr_l=a_tr_l, a_tr_r=a_full, b_tr=b_full,
                              a_ref=a_ref, b_ref=b_ref)


# ---------------------------------------------------------------------------
# wave functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScatteringState:
    """Stationary solution at fixed ``k`` with its transmission/reflection split."""

    barrier: Barrier
    k: float
    basis: BarrierBasis
    amps: BoundaryAmplitudes
    params: TunnelingParams

    @property
    def units(self) -> UnitsContext:
        return self.barrier.units

    def evaluate(self, x):
        """Values and derivatives of ``(full, tr, ref)`` at ``x``.

        Returns six complex arrays ``psi_full, psi_tr, psi_ref, d_full, d_tr, d_ref``.
        At ``x = x_c`` the one-sided derivatives of ``tr``/``ref`` are taken
        from the right.
        """
        x = np.asarray(x, dtype=float)
        bar, k, A = self.barrier, self.k, self.amps
        a, b, x_c, d = bar.a, bar.b, bar.x_c, bar.d
        full = np.zeros(x.shape, complex)
        dfull = np.zeros(x.shape, complex)
        ref = np.zeros(x.shape, complex)
        dref = np.zeros(x.shape, complex)

        left = x < a
        right = x > b
        mid = ~(left | right)

        if np.any(left):
            xl = x[left]
            inc = np.exp(1j * k * xl)
            out = A.b_out * np.exp(1j * k * (2 * a - xl))
            full[left] = inc + out
            dfull[left] = 1j * k * (inc - out)
            ref[left] = A.A_in_ref * inc + out
            dref[left] = 1j * k * (A.A_in_ref * inc - out)
        if np.any(right):
            xr = x[right]
            w = A.a_out * np.exp(1j * k * (xr - d))
            full[right] = w
            dfull[right] = 1j * k * w
        if np.any(mid):
            xm = x[mid]
            u, du, v, dv = self.basis.evaluate(xm - x_c)
            full[mid] = A.a_full * u + A.b_full * v
            dfull[mid] = A.a_full * du + A.b_full * dv
            lm = xm < x_c
            r_val = np.where(lm, A.a_ref * u + A.b_ref * v, 0.0)
            r_der = np.where(lm, A.a_ref * du + A.b_ref * dv, 0.0)
            ref[mid] = r_val
            dref[mid] = r_der
        return full, full - ref, ref, dfull, dfull - dref, dref

    def ref_at_midpoint(self) -> complex:
        """Value of the matched (untruncated) reflection solution at ``x_c``."""
        u, du, v, dv = self.basis.evaluate(np.array([0.0]))
        return complex(self.amps.a_ref * u[0] + self.amps.b_ref * v[0])


_STATE_CACHE: dict = {}


def scattering_state(barrier: Barrier, k: float,
                     ode_settings: ODESettings = DEFAULT_ODE) -> ScatteringState:
    key = (barrier.key, k, ode_settings)
    st = _STATE_CACHE.get(key)
    if st is None:
        basis = solve_basis(barrier, k, ode_settings)
        amps = match_boundaries(barrier, basis, k)
        params = params_from_amplitudes(amps.a_out, amps.b_out, amps.Q, amps.P, k)
        st = ScatteringState(barrier=barrier, k=k, basis=basis, amps=amps, params=params)
        _STATE_CACHE[key] = st
    return st


def tunneling_params(barrier: Barrier, k: float,
                     ode_settings: ODESettings = DEFAULT_ODE) -> TunnelingParams:
    """``(T, J, F)`` from boundary matching, valid for any symmetric barrier."""
    return scattering_state(barrier, k, ode_settings).params


def probability_flux(psi, dpsi, units: UnitsContext):
    return units.hbar / units.mass * np.imag(np.conj(psi) * dpsi)


def default_xgrid(barrier: Barrier, k: float, n: int = 2048, padding: float | None = None):
    """Uniform-ish grid of about ``n`` points with ``a``, ``x_c``, ``b`` on nodes.

    The default padding is four wavelengths on each side.
    """
    if padding is None:
        padding = 4 * 2 * math.pi / abs(k)
    lo, hi = barrier.a - padding, barrier.b + padding
    h = (hi - lo) / (n - 1)
    from .quadrature import aligned_grid
    return aligned_grid([lo, barrier.a, barrier.x_c, barrier.b, hi], h)


def stationary_full(barrier: Barrier, k: float, xgrid,
                    ode_settings: ODESettings = DEFAULT_ODE) -> np.ndarray:
    return scattering_state(barrier, k, ode_settings).evaluate(xgrid)[0]


@dataclass(frozen=True, eq=False)
class StationaryDecomposition:
    k: float
    x: np.ndarray
    psi_full: np.ndarray
    psi_tr: np.ndarray
    psi_ref: np.ndarray
    flux_full: np.ndarray
    flux_tr: np.ndarray
    flux_ref: np.ndarray
    state: ScatteringState

    @property
    def params(self) -> TunnelingParams:
        return self.state.params

    @property
    def barrier(self) -> Barrier:
        return self.state.barrier


def stationary_decompose(barrier: Barrier, k: float, xgrid=None,
                         ode_settings: ODESettings = DEFAULT_ODE,
                         midpoint_tol: float = 1e-10) -> StationaryDecomposition:
    """Sample ``psi_full``, ``psi_tr``, ``psi_ref`` and their fluxes on ``xgrid``.

    Raises
    ------
    DecompositionError
        If the matched reflection solution does not vanish at ``x_c`` to
        ``midpoint_tol`` relative to ``max |psi_full|``.
    """
    st = scattering_state(barrier, k, ode_settings)
    if xgrid is None:
        xgrid = default_xgrid(barrier, k)
    x = np.asarray(xgrid, dtype=float)
    full, tr, ref, dfull, dtr, dref = st.evaluate(x)
    scale = max(float(np.max(np.abs(full))), 1.0)
    r_c = abs(st.ref_at_midpoint())
    if r_c > midpoint_tol * scale:
        raise DecompositionError(
            f"reflection wave function does not vanish at x_c: |psi_ref(x_c)| = {r_c:.3e}")
    u = barrier.units
    return StationaryDecomposition(
        k=k, x=x, psi_full=full, psi_tr=tr, psi_ref=ref,
        flux_full=probability_flux(full, dfull, u),
        flux_tr=probability_flux(tr, dtr, u),
        flux_ref=probability_flux(ref, dref, u),
        state=st)
