"""Gaussian wave packets built from the stationary solutions.

Every packet is a quadrature sum over the k-grid,

    psi_kind(x, t) = (2 pi)^(-1/2) sum_j w_j A_in(k_j) psi_kind(x; k_j) exp(-i E_j t / hbar),

with ``kind`` one of ``full``, ``tr`` or ``ref``. The stationary solutions are
computed once per node and reused for every time. Spatial integrals use
composite Simpson on a grid that has ``a``, ``x_c`` and ``b`` as nodes.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .barrier import Barrier, UnitsContext
from .quadrature import QuadratureError, aligned_grid, gauss_legendre, piecewise_simpson
from .stationary import ODESettings, DEFAULT_ODE, scattering_state
from .times import dwell_ref_rect, dwell_tr_rect, dwell_ref_numeric, dwell_tr_numeric, T_FLOOR

KINDS = ("full", "tr", "ref")
_KIND_INDEX = {"full": 0, "tr": 1, "ref": 2}


class PacketError(RuntimeError):
    pass


class ResolutionWarning(RuntimeWarning):
    pass


#: Largest spread (radians) of the phase ``k (x - x0) - E t / hbar`` across the
#: k-support per Gauss-Legendre node that still integrates accurately.
PHASE_PER_NODE = 3.5


@dataclass(frozen=True)
class GaussianSpec:
    """``A_in(k) = c exp(-l0^2 (k - k0)^2) exp(-i k x0)`` with ``int |A_in|^2 dk = 1``.

    ``l0`` is the rms width of ``|psi_in(x)|^2`` at ``t = 0``.
    """

    k0: float
    l0: float
    x0: float = 0.0

    def __post_init__(self):
        if not (self.k0 > 0 and self.l0 > 0):
            raise ValueError("k0 and l0 must be positive")

    @property
    def norm_const(self) -> float:
        return (2.0 * self.l0**2 / math.pi) ** 0.25

    def amplitude(self, k):
        k = np.asarray(k, dtype=float)
        return self.norm_const * np.exp(-self.l0**2 * (k - self.k0) ** 2 - 1j * k * self.x0)

    def weight(self, k):
        """Spectral weight ``|A_in(k)|^2 - |A_in(-k)|^2``."""
        return np.abs(self.amplitude(k)) ** 2 - np.abs(self.amplitude(-np.asarray(k))) ** 2

    def width_at(self, t: float, units: UnitsContext) -> float:
        return self.l0 * math.sqrt(1.0 + (units.hbar * t / (2 * units.mass * self.l0**2)) ** 2)


@dataclass(frozen=True)
class KGrid:
    nodes: np.ndarray
    weights: np.ndarray
    eps_k: float

    @property
    def positive(self) -> np.ndarray:
        return self.nodes > 0


def build_kgrid(spec: GaussianSpec, eps_k: float = 1e-8, n_nodes: int = 128) -> KGrid:
    """Gauss-Legendre grid over ``|A_in(k)| >= eps_k max|A_in|``.

    When the support reaches ``k < 0`` the grid is split at ``k = 0`` into two
    panels, so integrals over ``k > 0`` alone stay exact.
    """
    if n_nodes < 64:
        raise ValueError("n_nodes must be at least 64")
    if not 0 < eps_k < 1:
        raise ValueError("eps_k must lie in (0, 1)")
    half = math.sqrt(math.log(1.0 / eps_k)) / spec.l0
    lo, hi = spec.k0 - half, spec.k0 + half
    if not hi > lo:
        raise PacketError("empty spectral support")
    if spec.k0 * spec.l0 < 2:
        warnings.warn(f"k0*l0 = {spec.k0 * spec.l0:.3g} < 2: negative-k components are not perturbative",
                      stacklevel=2)
    if lo < 0:
        n_neg = max(16, int(round(n_nodes * (-lo) / (hi - lo))))
        n_pos = n_nodes - n_neg
        kn, wn = gauss_legendre(lo, 0.0, n_neg)
        kp, wp = gauss_legendre(0.0, hi, n_pos)
        nodes, weights = np.concatenate([kn, kp]), np.concatenate([wn, wp])
    else:
        nodes, weights = gauss_legendre(lo, hi, n_nodes)
    return KGrid(nodes=nodes, weights=weights, eps_k=eps_k)


def packet_xgrid(barrier: Barrier, spec: GaussianSpec, t_max: float, h: float | None = None,
                 t_min: float = 0.0, n_sigma: float = 10.0) -> np.ndarray:
    """Grid holding the incident, transmitted and reflected packets for
    ``t_min <= t <= t_max``, plus the barrier.

    The default spacing ``0.05 / k_max`` keeps the Simpson error of the
    incident/reflected interference below ~1e-9 of the norm.
    """
    u = barrier.units
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        kg = build_kgrid(spec)
    k_hi = float(np.max(np.abs(kg.nodes)))
    k_lo = max(float(np.min(kg.nodes)), 0.0)
    if h is None:
        h = 0.05 / k_hi
    v_lo, v_hi = u.velocity(k_lo), u.velocity(k_hi)
    w = n_sigma * max(spec.width_at(t_min, u), spec.width_at(t_max, u))
    x0 = spec.x0
    lo = min(x0 + v_lo * t_min, x0 + v_hi * t_min, barrier.a) - w
    if x0 + v_hi * t_max + w > barrier.a:           # reflected packet may exist by t_max
        lo = min(lo, 2 * barrier.a - x0 - v_hi * t_max - w)
    hi = max(x0 + v_hi * t_max, barrier.b) + w
    return aligned_grid([lo, barrier.a, barrier.x_c, barrier.b, hi], h)



def phase_spread(barrier: Barrier, spec: GaussianSpec, k, t: float, x) -> float:
    """Spread over the k-support of the plane-wave phases making up the
    packet at ``(x, t)``: ``K`` times the largest group delay
    ``|x - x0 - v t|`` of the incident or ``|2a - x - x0 - v t|`` of the
    reflected wave."""
    x = np.asarray(x, dtype=float)
    if not x.size:
        return 0.0
    k = np.asarray(k, dtype=float)
    K = float(k.max() - k.min())
    x0, a2 = spec.x0, 2 * barrier.a
    u = barrier.units
    worst = 0.0
    for v in (u.velocity(float(k.min())), u.velocity(float(k.max()))):
        for y in (x.min(), x.max()):
            worst = max(worst, abs(y - x0 - v * t), abs(a2 - y - x0 - v * t))
    return K * worst

class ScatteringPacket:
    """A Gaussian packet scattering on ``barrier``, with its transmission and
    reflection parts.

    Parameters
    ----------
    barrier, spec : the scattering setup.
    kgrid : optional; defaults to :func:`build_kgrid` with ``n_nodes``.
    threads : workers used to solve the per-node stationary problems. Results
        do not depend on it.
    """

    def __init__(self, barrier: Barrier, spec: GaussianSpec, kgrid: KGrid | None = None,
                 n_nodes: int = 128, eps_k: float = 1e-8, threads: int = 1,
                 ode_settings: ODESettings = DEFAULT_ODE):
        self.barrier = barrier
        self.spec = spec
        self.units = barrier.units
        self.kgrid = kgrid if kgrid is not None else build_kgrid(spec, eps_k, n_nodes)
        self.ode_settings = ode_settings
        ks = [float(k) for k in self.kgrid.nodes]
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                self.states = list(ex.map(lambda k: scattering_state(barrier, k, ode_settings), ks))
        else:
            self.states = [scattering_state(barrier, k, ode_settings) for k in ks]
        self.k = self.kgrid.nodes
        self.E = self.units.energy(self.k)
        self.A = spec.amplitude(self.k)
        self.T_k = np.array([s.params.T for s in self.states])
        self._base = self.kgrid.weights * self.A / math.sqrt(2 * math.pi)
        self._mats: dict = {}

    # -- coefficients -----------------------------------------------------

    def coefficients(self, t: float) -> np.ndarray:
        return self._base * np.exp(-1j * self.E * t / self.units.hbar)

    def _matrices(self, x: np.ndarray, derivatives: bool = False):
        key = (x.size, float(x[0]), float(x[-1]), hash(x.tobytes()), derivatives)
        mats = self._mats.get(key)
        if mats is None:
            n = 6 if derivatives else 3
            mats = [np.empty((self.k.size, x.size), complex) for _ in range(n)]
            for j, st in enumerate(self.states):
                vals = st.evaluate(x)
                for i in range(n):
                    mats[i][j] = vals[i]
            self._mats[key] = mats
        return mats

    def clear(self):
        self._mats.clear()

    def phase_spread(self, t: float, x) -> float:
        return phase_spread(self.barrier, self.spec, self.k, t, x)

    def min_nodes(self, t: float, x) -> int:
        return int(math.ceil(self.phase_spread(t, x) / PHASE_PER_NODE))

    def fields(self, t: float, x, derivatives: bool = False):
        """``(full, tr, ref)`` at time ``t`` (plus their x-derivatives)."""
        x = np.asarray(x, dtype=float)
        need = self.min_nodes(t, x)
        if need > self.k.size:
            warnings.warn(f"{self.k.size} k-nodes under-resolve t={t:.4g} on this grid; "
                          f"use at least {need}", ResolutionWarning, stacklevel=2)
        c = self.coefficients(t)
        if x.size * self.k.size <= 4_000_000:
            return tuple(c @ m for m in self._matrices(x, derivatives))
        # large grids: stream over nodes in fixed order
        n = 6 if derivatives else 3
        out = [np.zeros(x.size, complex) for _ in range(n)]
        for cj, st in zip(c, self.states):
            vals = st.evaluate(x)
            for i in range(n):
                out[i] += cj * vals[i]
        return tuple(out)

    def evolve(self, kind: str, t: float, x) -> np.ndarray:
        return self.fields(t, x)[_KIND_INDEX[kind]]

    # -- asymptotes --------------------------------------------------------

    def asymptote(self, which: str, t: float, x, derivatives: bool = False):
        """Free-evolved in- or out-asymptote.

        ``which`` is ``"in"``, ``"out"``, ``"out_tr"`` or ``"out_ref"``. The
        reflected part is integrated on the mirrored grid, where it reads
        ``A_in(k) b_out(k) exp(ik(2a - x))``.
        """
        x = np.asarray(x, dtype=float)
        c = self.coefficients(t)
        ph = np.exp(1j * np.outer(self.k, x))
        kx = 1j * self.k[:, None]
        parts = []
        if which == "in":
            parts.append((c[:, None] * ph, kx))
        if which in ("out", "out_tr"):
            a_out = np.array([s.amps.a_out for s in self.states])
            e = np.exp(-1j * self.k * self.barrier.d)
            parts.append(((c * a_out * e)[:, None] * ph, kx))
        if which in ("out", "out_ref"):
            b_out = np.array([s.amps.b_out for s in self.states])
            e = np.exp(2j * self.k * self.barrier.a)
            parts.append(((c * b_out * e)[:, None] * np.conj(ph), -kx))
        if not parts:
            raise ValueError(f"unknown asymptote {which!r}")
        psi = sum(p.sum(axis=0) for p, _ in parts)
        if not derivatives:
            return psi
        dpsi = sum((p * f).sum(axis=0) for p, f in parts)
        return psi, dpsi

    # -- integrals ---------------------------------------------------------

    @property
    def breaks(self):
        return (self.barrier.a, self.barrier.x_c, self.barrier.b)

    def integrate(self, y, x):
        return piecewise_simpson(y, x, self.breaks)

    def spectral_norms(self) -> tuple[float, float]:
        """``(T_avg, R_avg)`` from the spectral weight over ``k > 0``."""
        pos = self.kgrid.positive
        w = self.kgrid.weights[pos] * self.spec.weight(self.k[pos])
        T = float(np.sum(w * self.T_k[pos]))
        R = float(np.sum(w * (1.0 - self.T_k[pos])))
        return T, R

    def spatial_norm(self, kind: str, t: float, x) -> float:
        psi = self.evolve(kind, t, x)
        return float(self.integrate(np.abs(psi) ** 2, x))

    def cross_overlap(self, t: float, x) -> complex:
        """``<psi_tr | psi_ref>`` at time ``t``."""
        _, tr, ref = self.fields(t, x)
        return complex(self.integrate(np.conj(tr) * ref, x))


def subensemble_norms(packet: ScatteringPacket, kind: str, t: float, x) -> float:
    return packet.spatial_norm(kind, t, x)


def cross_overlap(packet: ScatteringPacket, t: float, x) -> complex:
    return packet.cross_overlap(t, x)


@dataclass(frozen=True)
class Moments:
    mean_x: float
    mean_p: float
    spread: float
    mean_x2: float
    norm: float


def moments(psi, dpsi, x, units: UnitsContext, breaks=()) -> Moments:
    rho = np.abs(psi) ** 2
    n = float(piecewise_simpson(rho, x, breaks))
    mx = float(piecewise_simpson(x * rho, x, breaks)) / n
    mx2 = float(piecewise_simpson(x * x * rho, x, breaks)) / n
    mp = units.hbar * float(piecewise_simpson(np.imag(np.conj(psi) * dpsi), x, breaks)) / n
    return Moments(mean_x=mx, mean_p=mp, spread=math.sqrt(max(mx2 - mx * mx, 0.0)),
                   mean_x2=mx2, norm=n)


def packet_moments(packet: ScatteringPacket, kind: str, t: float, x) -> Moments:
    """Position/momentum moments of the renormalized ``kind`` packet.

    ``kind`` may also be ``"in"`` for the free incident asymptote.
    """
    x = np.asarray(x, dtype=float)
    if kind == "in":
        psi, dpsi = packet.asymptote("in", t, x, derivatives=True)
    else:
        vals = packet.fields(t, x, derivatives=True)
        i = _KIND_INDEX[kind]
        psi, dpsi = vals[i], vals[i + 3]
    return moments(psi, dpsi, x, packet.units, packet.breaks)


# ---------------------------------------------------------------------------
# packet Larmor times
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LarmorTime:
    tau: float
    norm: float
    window: tuple = ()


def larmor_time_spectral(packet: ScatteringPacket, kind: str) -> LarmorTime:
    """Spectral average of the stationary dwell times over ``k > 0``."""
    if kind not in ("tr", "ref"):
        raise ValueError("kind must be 'tr' or 'ref'")
    pos = packet.kgrid.positive
    if not np.any(pos):
        raise PacketError("no positive-k support")
    w = packet.kgrid.weights[pos] * packet.spec.weight(packet.k[pos])
    T = packet.T_k[pos]
    from .barrier import RectangularBarrier
    rect = isinstance(packet.barrier, RectangularBarrier)
    taus = []
    for st in np.asarray(packet.states, dtype=object)[pos]:
        if rect:
            taus.append(dwell_tr_rect(packet.barrier, st.k) if kind == "tr"
                        else dwell_ref_rect(packet.barrier, st.k))
        else:
            from .stationary import stationary_decompose
            dec = stationary_decompose(packet.barrier, st.k, xgrid=[packet.barrier.a, packet.barrier.b])
            taus.append(dwell_tr_numeric(dec) if kind == "tr" else dwell_ref_numeric(dec))
    taus = np.array(taus)
    prob = T if kind == "tr" else 1.0 - T
    norm = float(np.sum(w * prob))
    if norm < T_FLOOR:
        raise PacketError(f"subensemble norm {norm:.3e} underflows")
    return LarmorTime(tau=float(np.sum(w * prob * taus)) / norm, norm=norm)


def barrier_occupancy(packet: ScatteringPacket, kind: str, times, h: float = 0.01) -> np.ndarray:
    """``int |psi_kind(x, t)|^2 dx`` over the barrier (``[a, x_c]`` for reflection)."""
    bar = packet.barrier
    hi = bar.b if kind == "tr" else bar.x_c
    xb = aligned_grid([bar.a, bar.x_c, bar.b] if kind == "tr" else [bar.a, bar.x_c], h)
    mat = packet._matrices(xb)[_KIND_INDEX[kind]]
    times = np.atleast_1d(np.asarray(times, dtype=float))
    C = packet._base[None, :] * np.exp(-1j * np.outer(times, packet.E) / packet.units.hbar)
    psi = C @ mat
    rho = np.abs(psi) ** 2
    return np.array([piecewise_simpson(r, xb, (bar.x_c,)) for r in rho]) if hi == bar.b else \
        np.array([piecewise_simpson(r, xb, ()) for r in rho])


def larmor_time_timeintegral(packet: ScatteringPacket, kind: str, t_window=None,
                             eps_t: float = 1e-10, rtol: float = 1e-7,
                             max_extensions: int = 12) -> LarmorTime:
    """Time integral of the barrier occupancy divided by the subensemble norm.

    The window is widened (doubling its half-length about the centre) until
    the occupancy at both ends is below ``eps_t`` times the norm; the time
    integral uses composite Simpson, refined until ``rtol``.
    """
    norm = larmor_time_spectral(packet, kind).norm
    u = packet.units
    bar = packet.barrier
    if t_window is None:
        v0 = u.velocity(packet.spec.k0)
        tc = (bar.x_c - packet.spec.x0) / v0
        half = 0.5 * tc
        t_window = (tc - half, tc + half)
    t0, t1 = map(float, t_window)
    for _ in range(max_extensions):
        ends = barrier_occupancy(packet, kind, [t0, t1])
        if np.all(ends < eps_t * norm):
            break
        c, half = 0.5 * (t0 + t1), (t1 - t0)
        t0, t1 = c - half, c + half
    else:
        raise PacketError(f"barrier occupancy does not decay within t in [{t0:.4g}, {t1:.4g}]")

    n = 256
    prev = None
    while n <= 2**16:
        ts = np.linspace(t0, t1, n + 1)
        occ = barrier_occupancy(packet, kind, ts)
        from scipy.integrate import simpson
        cur = float(simpson(occ, x=ts))
        if prev is not None and abs(cur - prev) <= rtol * abs(cur):
            return LarmorTime(tau=cur / norm, norm=norm, window=(t0, t1))
        prev = cur
        n *= 2
    raise QuadratureError("time integral of the barrier occupancy did not converge")
