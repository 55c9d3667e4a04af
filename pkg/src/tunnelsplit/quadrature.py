"""Quadrature helpers shared by the stationary, timing and packet code."""

from __future__ import annotations

import numpy as np
from scipy.integrate import simpson


class QuadratureError(RuntimeError):
    pass


def aligned_grid(breaks, h_max: float) -> np.ndarray:
    """Piecewise-uniform grid with every breakpoint on a node.

    Each segment ``[breaks[i], breaks[i+1]]`` gets an even number of
    intervals of width at most ``h_max`` so composite Simpson can be applied
    segment by segment.
    """
    breaks = np.asarray(breaks, dtype=float)
    if np.any(np.diff(breaks) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    pieces = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = int(np.ceil((hi - lo) / h_max))
        n += n % 2
        n = max(n, 2)
        seg = np.linspace(lo, hi, n + 1)
        pieces.append(seg if not pieces else seg[1:])
    return np.concatenate(pieces)


def piecewise_simpson(y, x, breaks=()) -> complex | float:
    """Composite Simpson of ``y(x)`` with separate panels between breakpoints.

    Breakpoints outside ``[x[0], x[-1]]`` are ignored; those inside must be
    grid nodes.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    cuts = [0]
    for bp in breaks:
        if x[0] < bp < x[-1]:
            idx = int(np.searchsorted(x, bp))
            if x[idx] != bp:
                raise QuadratureError(f"breakpoint {bp} is not a grid node")
            cuts.append(idx)
    cuts.append(x.size - 1)
    total = 0.0
    for i0, i1 in zip(cuts[:-1], cuts[1:]):
        if i1 > i0:
            total = total + simpson(y[i0:i1 + 1], x=x[i0:i1 + 1])
    return total


def adaptive_simpson(func, lo: float, hi: float, rtol: float = 1e-8,
                     n0: int = 64, max_doublings: int = 14) -> float:
    """Composite Simpson on ``[lo, hi]``, doubling the node count until two
    successive estimates agree to ``rtol``."""
    if hi <= lo:
        return 0.0
    n = n0
    prev = simpson(func(np.linspace(lo, hi, n + 1)), dx=(hi - lo) / n)
    for _ in range(max_doublings):
        n *= 2
        cur = simpson(func(np.linspace(lo, hi, n + 1)), dx=(hi - lo) / n)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise QuadratureError(f"Simpson did not converge to rtol={rtol} on [{lo}, {hi}]")


def gauss_legendre(lo: float, hi: float, n: int):
    """Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    t, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w
