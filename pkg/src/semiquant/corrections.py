"""Closed-form maps between the leading level shift and the full correction.

All maps are stateless pure functions of floats.  Overflow is avoided by
building the square roots with ``math.hypot``; the resummed map then needs no
asymptotic branch and stays exact to rounding for any input magnitude.
"""

from __future__ import annotations

import math

from .errors import BadCount, BadParams, BadRatio, DegenerateDenominator, SeriesDiverges
from .potentials import ClassFiveSpec

__all__ = [
    "delta1_closed",
    "delta_class",
    "delta_series",
    "delta_two_param",
    "sturmian_t",
    "small_parameter_b",
]


def delta1_closed(spec: ClassFiveSpec, beta: float) -> float:
    """Leading shift of a class member: beta * a2 / (8 A).

    Invariant under V -> V - C and s -> s + const, so it depends only on the
    curvature pair (a2, A).
    """
    if not (spec.A > 0.0):
        raise BadParams("delta1_closed: A must be positive")
    if beta <= 0.0:
        raise BadParams("delta1_closed: beta must be positive")
    return beta * spec.a2 / (8.0 * spec.A)


def delta_class(delta1: float) -> float:
    """Resummed correction 2*d1 / (1 + sqrt(1 + 16 d1^2)).

    Odd, strictly increasing, bounded by 1/2 in absolute value; the bound is
    approached as |d1| -> inf.  Exact for every class member.
    """
    return 2.0 * delta1 / (1.0 + math.hypot(1.0, 4.0 * delta1))


def delta_series(delta1: float, order: int) -> float:
    """Truncated expansion of :func:`delta_class`: d1 at order 1, d1 - 4 d1^3
    at order 3.  The cubic term only exists while 16 d1^2 < 1."""
    if order == 1:
        return delta1
    if order == 3:
        if 16.0 * delta1 * delta1 >= 1.0:
            raise SeriesDiverges(f"expansion impossible: 16*delta1^2 = {16 * delta1 * delta1!r} >= 1")
        return delta1 - 4.0 * delta1 ** 3
    raise BadParams(f"order must be 1 or 3, got {order!r}")


def delta_two_param(delta1: float, t: float) -> float:
    """Two-parameter correction 2*d1 / (1 + t + sqrt((1-t)^2 + 16 d1^2)).

    Reduces to :func:`delta_class` at t = 0.  For real inputs the denominator
    is >= 2, so the degenerate branch is defensive only.
    """
    den = 1.0 + t + math.hypot(1.0 - t, 4.0 * delta1)
    if abs(den) <= 1e-14:
        raise DegenerateDenominator(f"denominator {den!r} at delta1={delta1!r}, t={t!r}")
    return 2.0 * delta1 / den


def sturmian_t(phi_edge: float, delta1: float, k: float) -> float:
    """Deviation parameter t = 8 * Phi(U) * |delta1(U)| / k(r) - 1.

    Vanishes identically on the solvable class, where the edge phase and the
    leading shift are locked together by 8 * Phi * |delta1| = k.
    """
    if not (0.0 < k <= 1.0):
        raise BadRatio(f"shape factor k={k!r} outside (0, 1]")
    if phi_edge < 0.0:
        raise BadParams(f"edge phase must be non-negative, got {phi_edge!r}")
    return 8.0 * phi_edge * abs(delta1) / k - 1.0


def small_parameter_b(N: int) -> float:
    """Dimensionless small parameter 1 / (8 (N - 1/2)) for N bound states
    (N = 1 when only the ground state exists)."""
    if N < 1:
        raise BadCount(f"bound-state count must be >= 1, got {N!r}")
    return 1.0 / (8.0 * (N - 0.5))
