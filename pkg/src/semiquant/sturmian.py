"""Threshold machinery: at which well strength does a new bound state appear?

A family fixes the well shape (asymmetry ratio r with W/U = r^2, length
scale) and sweeps the strength U.  The nascent state sits exactly at the
continuum edge eps = U, where the phase has the closed form
Phi(U) = scale * sqrt(U) * k(r) / beta with the shape factor
k(r) = 1 - sqrt((r-1)/(r+1)).

For class members the edge phase and the leading shift are locked together,
8 * Phi(U) * |delta1(U)| = k(r), which turns the quantization condition at
the edge into an explicit quadratic for Phi (``threshold_condition``) and
makes the refined two-parameter correction exact (``refined_delta_U`` with
t = 0).  Off-class families fall back to the same lock with an O(t) error.

Convention: k is held fixed along a sweep (fixed r); fixed-W sweeps, where k
drifts with U, are exposed only as a derived report in the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from scipy.optimize import brentq

from .corrections import delta_two_param, sturmian_t
from .errors import BadRatio, NonConvergence, NoRealRoot, TailNonConvergent
from .potentials import PotentialModel, Well, catalog
from .quadrature import tanh_sinh, _find_crossing

import numpy as np

__all__ = [
    "SturmianFamily",
    "ThresholdResult",
    "class_family",
    "perturbed_family",
    "shape_factor_k",
    "phase_at_edge",
    "threshold_condition",
    "threshold_U",
    "refined_delta_U",
]


@dataclass(frozen=True)
class SturmianFamily:
    """Fixed-shape well family swept in strength U.

    ``generator(U)`` must return a model with V(+inf) = U and a sole
    parabolic minimum V = 0; ``r`` is the asymmetry ratio (W/U = r^2) and
    ``scale`` the length scale.  ``is_class_five`` selects the closed-form
    edge phase and leading shift.
    """

    generator: Callable[[float], PotentialModel]
    r: float
    scale: float = 1.0
    is_class_five: bool = True
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ThresholdResult:
    n: int
    U_n: float
    method: str  # condition21 | refined | oracle
    residual: float


def class_family(r: float, scale: float = 1.0) -> SturmianFamily:
    """Exactly-solvable family V = U s^2 with flow (1+s)(r-s)/scale."""
    if r < 1.0:
        raise BadRatio(f"need r >= 1, got {r!r}")
    return SturmianFamily(
        generator=lambda U: catalog("sturmian_family", U=U, r=r, scale=scale),
        r=r, scale=scale, is_class_five=True,
        meta={"family": "sturmian_family"})


def perturbed_family(r: float, scale: float = 1.0, eta: float = 0.1) -> SturmianFamily:
    """Off-class deviation of :func:`class_family` (quartic shape mixing)."""
    if r < 1.0:
        raise BadRatio(f"need r >= 1, got {r!r}")
    fam = SturmianFamily(
        generator=lambda U: catalog("perturbed_sturmian", U=U, r=r, scale=scale, eta=eta),
        r=r, scale=scale, is_class_five=(eta == 0.0),
        meta={"family": "perturbed_sturmian", "eta": eta})
    return fam


def shape_factor_k(r: float) -> float:
    """Asymmetry shape factor k(r) = 1 - sqrt((r-1)/(r+1)), in (0, 1]."""
    if r < 1.0:
        raise BadRatio(f"need r >= 1 (W/U = r^2 >= 1), got {r!r}")
    return 1.0 - math.sqrt((r - 1.0) / (r + 1.0))


def effective_ratio(model: PotentialModel) -> float:
    """Asymmetry ratio sqrt(W/U) measured from the model's asymptotes."""
    asym = model.asymptotics
    if not isinstance(asym, Well):
        raise BadRatio("edge machinery needs a two-sided well")
    if math.isinf(asym.W):
        return math.inf
    return math.sqrt(asym.W / asym.U)


# ---------------------------------------------------------------------------
# edge phase
# ---------------------------------------------------------------------------


def _tail_estimate(model: PotentialModel, U: float, side: int):
    """Exponential closure of the edge-phase integral beyond the cut.

    Fits g(x) = U - V ~ c * exp(-kappa |x|) over the last decade of the
    approach (g between 1e-9 U and 1e-10 U) and integrates sqrt(g) to
    infinity.  Raises TailNonConvergent when the approach is visibly not
    exponential there.
    """
    def g(x):
        return U - float(model.evaluate(x))

    def cross(frac):
        x = model.x_min + side * 1.0
        step = 1.0
        for _ in range(300):
            if g(x) < frac * U:
                break
            x += side * step
            step *= 1.3
        else:
            raise TailNonConvergent("asymptote never approached to the cut fraction")
        inner = model.x_min if abs(x - side * 1.0 - model.x_min) < 1e-12 else x - side * step / 1.3
        return brentq(lambda t: g(t) - frac * U, min(inner, x), max(inner, x), rtol=1e-13)

    x1 = cross(1e-9)
    x2 = cross(1e-10)
    dx = abs(x2 - x1)
    if dx <= 0:
        raise TailNonConvergent("degenerate tail sampling")
    kappa = math.log(10.0) / dx
    # mid-decade check: a true exponential passes within a few percent
    xm = 0.5 * (x1 + x2)
    expected = 1e-9 * U * math.exp(-kappa * abs(xm - x1))
    ratio = g(xm) / expected
    if not (0.7 < ratio < 1.4):
        raise TailNonConvergent(
            f"approach to the asymptote is not exponential (mid-decade ratio {ratio!r})")
    tail = 2.0 * math.sqrt(g(x2)) / kappa
    return x2, tail


def phase_at_edge(family: SturmianFamily, U: float, beta: float, *,
                  force_numeric: bool = False) -> float:
    """Phase Phi at the continuum edge eps = U.

    Class families use the closed form scale * sqrt(U) * k(r) / beta; other
    families integrate sqrt(U - V) up to the cut where U - V < 1e-10 U and
    close the integral with a fitted exponential tail.
    """
    if U <= 0:
        raise BadRatio(f"strength must be positive, got {U!r}")
    if family.is_class_five and not force_numeric:
        return family.scale * math.sqrt(U) * shape_factor_k(family.r) / beta

    model = family.generator(U)
    asym = model.asymptotics
    span = U - model.v_min

    # high side: genuine turning point when W > U, tail otherwise
    if asym.W > U + 1e-9 * span:
        x_left = _find_crossing(model, U, -1)
        tail_left = 0.0
    else:
        x_left, tail_left = _tail_estimate(model, U, -1)
    x_right, tail_right = _tail_estimate(model, U, +1)

    ev = model.evaluate

    def f(x):
        return np.sqrt(np.maximum(U - np.asarray(ev(x), dtype=float), 0.0))

    val, err, ok = tanh_sinh(f, x_left, x_right, rel=1e-12)
    if not ok:
        raise NonConvergence(f"edge-phase integral error {err!r} above target")
    return (val + tail_left + tail_right) / (math.pi * beta)


# ---------------------------------------------------------------------------
# threshold predictions
# ---------------------------------------------------------------------------


def threshold_condition(n: int, k: float, beta: float = 1.0) -> float:
    """Edge phase at the n-th threshold from the quadratic closure.

    Substituting the class lock delta1 = -k/(8 Phi) into the quantization
    condition at the edge gives 8 Phi^2 - 8 (n + 1/2) Phi + k = 0; the larger
    root is the phase at which the n-th state appears.  No real root means no
    positive threshold (the ground state of a symmetric well exists for any
    strength).
    """
    if n < 0:
        raise NoRealRoot(f"need n >= 0, got {n!r}")
    if not (0.0 < k <= 1.0):
        raise BadRatio(f"shape factor k={k!r} outside (0, 1]")
    half = n + 0.5
    disc = half * half - 0.5 * k
    if disc < 0.0:
        raise NoRealRoot(
            f"discriminant {64.0 * disc!r} < 0: no positive threshold for n={n}, k={k}")
    return 0.5 * (half + math.sqrt(disc))


def refined_delta_U(phi_edge: float, delta1_edge: float, k: float) -> float:
    """Two-parameter correction at the edge, with t built from the class lock.

    Exact for class members (t = 0 there), reduces to delta1 for small
    |delta1|, and tends to -1/2 + Phi as Phi -> 0 with k = 1.
    """
    t = sturmian_t(phi_edge, delta1_edge, k)
    return delta_two_param(delta1_edge, t)


def _delta1_edge_closed(family: SturmianFamily, U: float, beta: float) -> float:
    # class members: delta1 = beta * a2 / (8 A) with a2 = -1/scale, A = sqrt(U)
    return -beta / (8.0 * family.scale * math.sqrt(U))


def threshold_U(family: SturmianFamily, n: int, beta: float,
                method: str = "refined") -> ThresholdResult:
    """Predicted strength of the n-th threshold.

    method='condition21': invert the quadratic closure through the edge
    phase.  method='refined': solve Phi(U) = n + 1/2 + delta(U) with the
    two-parameter correction; off-class families fall back to the class lock
    delta1 = -k/(8 Phi) with t = 0, an O(t) approximation.
    """
    k = shape_factor_k(family.r)
    if method == "condition21":
        phi_star = threshold_condition(n, k, beta)
        if family.is_class_five:
            u = (beta * phi_star / (k * family.scale)) ** 2
            residual = abs(phase_at_edge(family, u, beta) - phi_star)
        else:
            u = _solve_phase_equals(family, beta, phi_star,
                                    seed=(beta * phi_star / (k * family.scale)) ** 2)
            residual = abs(phase_at_edge(family, u, beta) - phi_star)
        return ThresholdResult(n=n, U_n=float(u), method="condition21", residual=residual)

    if method != "refined":
        raise NonConvergence(f"unknown threshold method {method!r}")

    def g(U):
        if family.is_class_five:
            phi = family.scale * math.sqrt(U) * k / beta
            d1 = _delta1_edge_closed(family, U, beta)
        else:
            phi = phase_at_edge(family, U, beta)
            d1 = -k / (8.0 * phi)
        return phi - (n + 0.5) - refined_delta_U(phi, d1, k)

    # seed the bracket from the quadratic closure when it exists
    try:
        phi_star = threshold_condition(n, k, beta)
        u_seed = (beta * phi_star / (k * family.scale)) ** 2
    except NoRealRoot:
        if n == 0 and k >= 1.0:
            raise
        u_seed = beta * beta / (family.scale * family.scale)
    lo, hi = 0.5 * u_seed, 2.0 * u_seed
    for _ in range(80):
        if g(lo) < 0.0:
            break
        lo *= 0.5
    else:
        raise NonConvergence("could not bracket the threshold from below")
    for _ in range(80):
        if g(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise NonConvergence("could not bracket the threshold from above")
    u = brentq(g, lo, hi, rtol=1e-12)
    return ThresholdResult(n=n, U_n=float(u), method="refined", residual=abs(g(u)))


def _solve_phase_equals(family: SturmianFamily, beta: float, phi_star: float,
                        seed: float) -> float:
    def h(U):
        return phase_at_edge(family, U, beta) - phi_star

    lo, hi = 0.5 * seed, 2.0 * seed
    for _ in range(80):
        if h(lo) < 0.0:
            break
        lo *= 0.5
    else:
        raise NonConvergence("edge phase never fell below the target")
    for _ in range(80):
        if h(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise NonConvergence("edge phase never exceeded the target")
    return float(brentq(h, lo, hi, rtol=1e-12))
