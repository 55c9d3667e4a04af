"""Barrier potentials, unit conventions and closed-form rectangular tunneling parameters.

Two barrier representations are supported, both symmetric about the midpoint
``x_c = (a + b) / 2`` and identically zero outside ``[a, b]``:

* :class:`RectangularBarrier` -- height ``V0`` on ``[a, a + d]``.
* :class:`SampledSymmetricBarrier` -- uniform samples of ``V(x)`` on ``[a, b]``,
  linearly interpolated between nodes.

The tunneling parameters ``(T, J, F)`` parameterize the transfer matrix: the
transmitted amplitude is ``sqrt(T) exp(iJ)`` and the reflected one
``sqrt(R) exp(i(J - F - pi/2))``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np


@dataclass(frozen=True)
class UnitsContext:
    """Action and mass units; everything else is derived from these."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError(f"hbar and mass must be positive, got {self.hbar}, {self.mass}")

    def energy(self, k):
        return (self.hbar * k) ** 2 / (2.0 * self.mass)

    def velocity(self, k):
        return self.hbar * k / self.mass


NATURAL = UnitsContext()


class Regime(Enum):
    UNDER = "under"
    OVER = "over"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class RectangularBarrier:
    """Rectangular barrier of height ``V0`` on ``[a, a + d]``.

    ``V0`` may be zero (free motion) or negative (a well); the latter only
    arises from spin-shifted barriers in the Larmor-clock setup.
    """

    V0: float
    a: float
    d: float
    units: UnitsContext = NATURAL

    def __post_init__(self):
        if not math.isfinite(self.V0):
            raise ValueError("V0 must be finite")
        if not self.a > 0:
            raise ValueError(f"left edge a must be positive, got {self.a}")
        if not self.d > 0:
            raise ValueError(f"width d must be positive, got {self.d}")

    @property
    def b(self) -> float:
        return self.a + self.d

    @property
    def x_c(self) -> float:
        return self.a + 0.5 * self.d

    @property
    def s(self) -> float:
        return 2.0 * self.a + self.d

    @property
    def kappa0_sq(self) -> float:
        """``2 m V0 / hbar**2``; negative for a well."""
        return 2.0 * self.units.mass * self.V0 / self.units.hbar**2

    @property
    def kappa0(self) -> float:
        return math.sqrt(self.kappa0_sq)

    @property
    def key(self) -> tuple:
        return ("rect", self.V0, self.a, self.d, self.units.hbar, self.units.mass)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), self.V0, 0.0)

    def with_height(self, V0: float) -> "RectangularBarrier":
        return RectangularBarrier(V0=V0, a=self.a, d=self.d, units=self.units)


@dataclass(frozen=True, eq=False)
class SampledSymmetricBarrier:
    """Symmetric barrier given by ``n`` uniform samples on ``[a, a + d]``.

    Parameters
    ----------
    a, d : float
        Left edge and width.
    values : array_like
        Potential at ``np.linspace(a, a + d, len(values))``.
    symmetry_rtol : float
        Relative tolerance of the mirror-symmetry check.
    """

    a: float
    d: float
    values: np.ndarray
    units: UnitsContext = NATURAL
    symmetry_rtol: float = 1e-12
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not self.a > 0:
            raise ValueError(f"left edge a must be positive, got {self.a}")
        if not self.d > 0:
            raise ValueError(f"width d must be positive, got {self.d}")
        if vals.ndim != 1 or vals.size < 3:
            raise ValueError("need at least 3 potential samples")
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential samples must be finite")
        scale = max(float(np.max(np.abs(vals))), np.finfo(float).tiny)
        asym = float(np.max(np.abs(vals - vals[::-1])))
        if asym > self.symmetry_rtol * scale:
            raise ValueError(f"potential is not symmetric about x_c (max deviation {asym:.3e})")
        digest = hashlib.sha1(vals.tobytes()).hexdigest()
        object.__setattr__(self, "_key", ("sampled", self.a, self.d, digest,
                                           self.units.hbar, self.units.mass))

    @classmethod
    def from_function(cls, func, a: float, d: float, n: int = 2001, **kwargs):
        """Sample ``func`` on ``n`` uniform nodes of ``[a, a + d]`` and symmetrize exactly."""
        x = np.linspace(a, a + d, n)
        vals = np.asarray(func(x), dtype=float)
        vals = 0.5 * (vals + vals[::-1])
        return cls(a=a, d=d, values=vals, **kwargs)

    @property
    def b(self) -> float:
        return self.a + self.d

    @property
    def x_c(self) -> float:
        return self.a + 0.5 * self.d

    @property
    def s(self) -> float:
        return 2.0 * self.a + self.d

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.values.size)

    @property
    def key(self) -> tuple:
        return self._key

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.a) & (x <= self.b)
        return np.where(inside, np.interp(x, self.grid, self.values), 0.0)

    def shifted(self, delta: float) -> "SampledSymmetricBarrier":
        return SampledSymmetricBarrier(a=self.a, d=self.d, values=self.values + delta,
                                       units=self.units, symmetry_rtol=self.symmetry_rtol)

    def __eq__(self, other):
        return isinstance(other, SampledSymmetricBarrier) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


Barrier = Union[RectangularBarrier, SampledSymmetricBarrier]


@dataclass(frozen=True)
class TunnelingParams:
    k: float
    T: float
    J: float
    F: float

    @property
    def R(self) -> float:
        return 1.0 - self.T

    @property
    def a_out(self) -> complex:
        return math.sqrt(self.T) * complex(math.cos(self.J), math.sin(self.J))

    @property
    def b_out(self) -> complex:
        ph = self.J - self.F - 0.5 * math.pi
        return math.sqrt(max(self.R, 0.0)) * complex(math.cos(ph), math.sin(ph))


def potential_at(barrier: Barrier, x):
    """Potential at ``x``; zero outside ``[a, b]``."""
    return barrier.potential(x)


def kappa_of(barrier: RectangularBarrier, k: float) -> tuple[float, Regime]:
    """``sqrt(2m|V0 - E|)/hbar`` together with the energy regime.

    The regime is decided on the exact comparison ``E < V0``; ``E == V0``
    reports :attr:`Regime.DEGENERATE` with ``kappa = 0``.
    """
    u = barrier.units
    k = abs(k)
    E = u.energy(k)
    if E == barrier.V0:
        return 0.0, Regime.DEGENERATE
    # k^2 - kappa0^2 avoids the rounding in (V0 - E) when both are large.
    kap = math.sqrt(abs(barrier.kappa0_sq - k * k))
    return kap, (Regime.UNDER if E < barrier.V0 else Regime.OVER)


def _sinhc(z):
    return math.sinh(z) / z if z != 0.0 else 1.0


def _sinc(z):
    return math.sin(z) / z if z != 0.0 else 1.0


def rect_tunneling_params(barrier: RectangularBarrier, k: float) -> TunnelingParams:
    """Closed-form ``(T, J, F)`` for a rectangular barrier.

    The quantities ``vartheta_(+-) * sinh(kappa d)`` are evaluated as
    ``(k^2 +- kappa^2)/(2k) * d * sinh(kappa d)/(kappa d)`` so the
    ``E -> V0`` limit is continuous. For ``E >= V0`` the phase ``J`` is taken on
    the branch of ``arg(a_out)``, i.e. ``atan2(vartheta_+ sin, cos)`` instead of the
    principal ``arctan(vartheta_+ tan)``. Negative ``k`` follows the parity
    rules ``T(-k) = T(k)``, ``J(-k) = -J(k)``, ``F(-k) = pi - F(k)``.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    kk = abs(k)
    kap, regime = kappa_of(barrier, kk)
    d = barrier.d
    z = kap * d
    if regime is Regime.UNDER:
        th_plus_s = (kk * kk + kap * kap) / (2 * kk) * d * _sinhc(z)      # vartheta_+ sinh(z)
        th_minus_t = (kk * kk - kap * kap) / (2 * kk) * d * _sinhc(z) / math.cosh(z)
        T = 1.0 / (1.0 + th_plus_s**2)
        J = math.atan(th_minus_t)
        F = 0.0
    else:
        th_minus_s = (kk * kk - kap * kap) / (2 * kk) * d * _sinc(z)      # vartheta_- sin(z)
        th_plus_s = (kk * kk + kap * kap) / (2 * kk) * d * _sinc(z)
        T = 1.0 / (1.0 + th_minus_s**2)
        J = math.atan2(th_plus_s, math.cos(z))
        F = 0.0 if th_minus_s >= 0 else math.pi
    if k < 0:
        return TunnelingParams(k=k, T=T, J=-J, F=math.pi - F)
    return TunnelingParams(k=k, T=T, J=J, F=F)
