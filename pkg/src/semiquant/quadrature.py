"""Turning points and the endpoint-singular integrals of the quantization rule.

Both integrals (the action phase and the moment behind the leading level
shift) have algebraic singularities at the classical turning points.  They
are computed with a double-exponential (tanh-sinh) variable transformation:
node positions are generated as distances from the interval endpoints, so the
map stays accurate where the integrand varies fastest, and the trapezoid step
is halved until the level-to-level difference meets the error target.

The moment integral I(eps) = int (V')^2 / sqrt(eps - V) dx is evaluated
through its integrated-by-parts form 2 * int V'' sqrt(eps - V) dx, which has
the same value but only a bounded sqrt-type endpoint singularity; the raw
1/sqrt form hits a double-precision noise floor near the turning points that
would swamp the second energy derivative taken on top of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import EdgeEnergy, NoTurningPoint, QuadratureNonConvergence, StencilOutOfRange
from .potentials import Confining, PotentialModel, Well

__all__ = [
    "PhasePoint",
    "tanh_sinh",
    "turning_points",
    "action_phase",
    "singular_moment",
    "delta1_numeric",
    "gamma_numeric",
    "energy_scale",
    "stencil_step",
]

_EPS = float(np.finfo(float).eps)
_BRENT_RTOL = 4.0 * _EPS


@dataclass(frozen=True)
class PhasePoint:
    """Action phase at one energy: phi = (1/(pi*beta)) * int sqrt(eps - V) dx."""

    epsilon: float
    phi: float
    x_minus: float
    x_plus: float
    quad_error: float


# ---------------------------------------------------------------------------
# tanh-sinh rule
# ---------------------------------------------------------------------------

_T_MAX = 4.0
_BASE_H = 0.5
_MAX_LEVEL = 11


@lru_cache(maxsize=None)
def _nodes(level: int):
    """New nodes introduced at a refinement level, as unit-interval data.

    Returns (d, w): distance of the abscissa from the near endpoint in units
    of the half-width, and the transformed trapezoid weight (without the step
    factor h).  Level 0 holds the coarse grid including t = 0.
    """
    h = _BASE_H / (1 << level)
    if level == 0:
        ts = np.arange(0.0, _T_MAX + 1e-12, h)
    else:
        ts = np.arange(h, _T_MAX + 1e-12, 2.0 * h)
    w = 0.5 * np.pi * np.sinh(ts)
    em = np.exp(-2.0 * w)
    d = 2.0 * em / (1.0 + em)                       # 1 - tanh(w), exact near 0
    weight = 0.5 * np.pi * np.cosh(ts) * 4.0 * em / (1.0 + em) ** 2
    return ts, d, weight


def tanh_sinh(f, a: float, b: float, *, rel: float = 1e-12, abs_tol: float = 0.0,
              max_level: int = _MAX_LEVEL):
    """Integrate f over [a, b] with endpoint-tolerant tanh-sinh quadrature.

    f must accept numpy arrays.  Non-finite integrand values (possible only
    within a few ulp of an endpoint) contribute zero; the true mass there is
    below double precision for integrable singularities.

    Returns (value, err_estimate, converged); convergence means
    err <= rel * (1 + |value|) + abs_tol.
    """
    half = 0.5 * (b - a)
    if half == 0.0:
        return 0.0, 0.0, True

    raw = 0.0            # sum of w * f over all nodes placed so far
    prev = math.nan
    value = math.nan
    err = math.inf
    for level in range(max_level + 1):
        ts, d, w = _nodes(level)
        if level == 0:
            xr = b - half * d
            xl = a + half * d
            fr = np.asarray(f(xr), dtype=float)
            fl = np.asarray(f(xl), dtype=float)
            fr[~np.isfinite(fr)] = 0.0
            fl[~np.isfinite(fl)] = 0.0
            # t = 0 is shared by both half-axes; count it once
            raw = w[0] * fr[0] + np.dot(w[1:], fr[1:] + fl[1:])
        else:
            xr = b - half * d
            xl = a + half * d
            fr = np.asarray(f(xr), dtype=float)
            fl = np.asarray(f(xl), dtype=float)
            fr[~np.isfinite(fr)] = 0.0
            fl[~np.isfinite(fl)] = 0.0
            raw = raw + np.dot(w, fr + fl)
        h = _BASE_H / (1 << level)
        value = half * h * raw
        if level > 0:
            err = abs(value - prev)
            if err <= rel * (1.0 + abs(value)) + abs_tol:
                return value, err, True
        prev = value
    return value, err, False


# ---------------------------------------------------------------------------
# turning points
# ---------------------------------------------------------------------------


def _second_derivative_fn(model: PotentialModel):
    if model.second_derivative is not None:
        return model.second_derivative
    de = model.derivative

    def fd(x):
        x = np.asarray(x, dtype=float)
        u = 1e-6 * np.maximum(1.0, np.abs(x))
        return (de(x + u) - de(x - u)) / (2.0 * u)

    return fd


def _curvature_length(model: PotentialModel, eref: float) -> float:
    """Harmonic estimate of the turning-point distance at energy eref."""
    v2 = float(np.asarray(_second_derivative_fn(model)(model.x_min)))
    depth = max(eref - model.v_min, 1e-12)
    if not math.isfinite(v2) or v2 <= 0.0:
        return 1.0
    return math.sqrt(2.0 * depth / v2)


def _find_crossing(model: PotentialModel, eps: float, side: int) -> float:
    """Root of V(x) = eps on one side of the minimum (side=+1 right, -1 left).

    Scans 256 log-spaced probes outward from x_min so exponentially flat
    tails are bracketed, then refines with a bracketing root solve.
    """
    base = model.x_min
    ell = _curvature_length(model, eps)
    d = np.geomspace(1e-8 * ell, 1e8 * ell, 256)
    bound = model.x_hi if side > 0 else model.x_lo
    if math.isinf(bound):
        xs = base + side * d
    else:
        # squeeze the probe ladder into the finite domain, clustering at the wall
        xs = base + (bound - base) * (d / ell) / (1.0 + d / ell)
    fs = np.asarray(model.evaluate(xs), dtype=float) - eps
    pos = np.nonzero(fs >= 0.0)[0]
    if pos.size == 0:
        raise NoTurningPoint(f"no classical turning point on side {side:+d} at eps={eps!r}")
    k = int(pos[0])
    lo = base if k == 0 else float(xs[k - 1])
    hi = float(xs[k])
    if lo == hi:
        return lo
    root = brentq(lambda t: float(model.evaluate(t)) - eps, min(lo, hi), max(lo, hi),
                  rtol=_BRENT_RTOL, xtol=1e-15 * max(1.0, abs(hi)))
    return float(root)


def turning_points(model: PotentialModel, epsilon: float):
    """Classical turning points (x_minus, x_plus) of V(x) = epsilon.

    Requires v_min < epsilon, and epsilon strictly below the lowest finite
    asymptote; energies at the asymptote must go through the edge-phase
    routine instead.
    """
    if epsilon <= model.v_min:
        raise NoTurningPoint(f"epsilon={epsilon!r} is at or below the minimum {model.v_min!r}")
    if isinstance(model.asymptotics, Well):
        edge = model.edge_energy()
        if epsilon >= edge - 1e-12 * max(1.0, edge - model.v_min):
            raise EdgeEnergy(f"epsilon={epsilon!r} sits at the asymptote {edge!r}")
    x_plus = _find_crossing(model, epsilon, +1)
    x_minus = _find_crossing(model, epsilon, -1)
    return x_minus, x_plus


# ---------------------------------------------------------------------------
# phase and moment integrals
# ---------------------------------------------------------------------------


def _default_rel(model: PotentialModel, analytic: float, interpolated: float) -> float:
    # piecewise-cubic interpolants are only C1, which caps the convergence of
    # the transformed trapezoid well above the analytic-model target
    return interpolated if model.meta.get("interpolated") else analytic


def action_phase(model: PotentialModel, epsilon: float, beta: float, *,
                 rel: float = None) -> PhasePoint:
    """Dimensionless phase (1/(pi*beta)) * int sqrt(eps - V) dx between turning points."""
    if beta <= 0:
        raise StencilOutOfRange("beta must be positive")
    if rel is None:
        rel = _default_rel(model, 1e-10, 1e-8)
    a, b = turning_points(model, epsilon)
    ev = model.evaluate

    def f(x):
        return np.sqrt(np.maximum(epsilon - np.asarray(ev(x), dtype=float), 0.0))

    val, err, ok = tanh_sinh(f, a, b, rel=rel)
    if not ok:
        raise QuadratureNonConvergence(
            f"phase integral at eps={epsilon!r}: error {err!r} above target")
    scale = 1.0 / (math.pi * beta)
    return PhasePoint(epsilon=epsilon, phi=val * scale, x_minus=a, x_plus=b,
                      quad_error=err * scale)


def singular_moment(model: PotentialModel, epsilon: float, *, rel: float = None) -> float:
    """The moment I(eps) = int (V')^2 / sqrt(eps - V) dx between turning points.

    Evaluated via the equivalent regularized form 2 * int V'' sqrt(eps - V) dx
    (integration by parts; the boundary term vanishes at the turning points),
    which keeps the absolute error within 1e-9 * (1 + |I|) for analytic
    models.  Interpolated models have discontinuous V'' and get a looser bar.
    """
    if rel is None:
        rel = _default_rel(model, 1e-11, 1e-7)
    ceiling = _default_rel(model, 1e-9, 1e-4)
    a, b = turning_points(model, epsilon)
    ev = model.evaluate

    if model.meta.get("interpolated"):
        # interpolants have jumpy V'' that ruins the regularized form; the
        # raw 1/sqrt integrand only has derivative kinks and fares better
        de = model.derivative

        def f(x):
            x = np.asarray(x, dtype=float)
            g = epsilon - np.asarray(ev(x), dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.asarray(de(x), dtype=float) ** 2 / np.sqrt(np.maximum(g, 0.0))
            out[~np.isfinite(out)] = 0.0
            return out

        val, err, ok = tanh_sinh(f, a, b, rel=rel)
        factor = 1.0
    else:
        d2 = _second_derivative_fn(model)

        def f(x):
            x = np.asarray(x, dtype=float)
            return np.asarray(d2(x), dtype=float) * np.sqrt(
                np.maximum(epsilon - np.asarray(ev(x), dtype=float), 0.0))

        val, err, ok = tanh_sinh(f, a, b, rel=rel)
        factor = 2.0

    out = factor * val
    if not ok and factor * err > ceiling * (1.0 + abs(out)):
        raise QuadratureNonConvergence(
            f"moment integral at eps={epsilon!r}: error {factor * err!r} above target")
    return out


def energy_scale(model: PotentialModel, beta: float) -> float:
    """Characteristic energy: well depth, or the ground-level estimate for
    confining potentials."""
    if isinstance(model.asymptotics, Well):
        return model.edge_energy() - model.v_min
    v2 = float(np.asarray(_second_derivative_fn(model)(model.x_min)))
    return beta * math.sqrt(max(v2, 1e-12) / 2.0)


def stencil_step(model: PotentialModel, epsilon: float, beta: float) -> float:
    """Energy step used to differentiate the moment integral at epsilon."""
    scale = energy_scale(model, beta)
    h = 1e-3 * max(abs(epsilon), scale)
    if model.meta.get("interpolated"):
        # interpolation noise in the moment integral is amplified by 1/h^2;
        # a table supports no finer energy resolution than a few percent
        h = max(h, 0.04 * scale)
    return h


def _stencil_window(model: PotentialModel, epsilon: float, beta: float, margin: float):
    h = stencil_step(model, epsilon, beta)
    lo, hi = model.v_min, model.edge_energy()
    if not (lo < epsilon - margin * h and epsilon + margin * h < hi):
        raise StencilOutOfRange(
            f"eps={epsilon!r} +- {margin}h with h={h!r} leaves ({lo!r}, {hi!r})")
    return h


def delta1_numeric(model: PotentialModel, epsilon: float, beta: float, *,
                   return_error: bool = False):
    """Leading level shift (beta/(24 pi)) * d^2 I / d eps^2 by finite differences.

    Second derivative from a 5-point central stencil with step
    h = 1e-3 * max(|eps|, energy scale) plus one Richardson halving.
    Differentiating under the integral instead would make the endpoint
    singularity non-integrable, hence the finite differences.
    """
    h = _stencil_window(model, epsilon, beta, margin=2.0)

    cache = {}

    def moment(e):
        if e not in cache:
            cache[e] = singular_moment(model, e)
        return cache[e]

    def d2(step):
        return (-moment(epsilon - 2 * step) + 16.0 * moment(epsilon - step)
                - 30.0 * moment(epsilon) + 16.0 * moment(epsilon + step)
                - moment(epsilon + 2 * step)) / (12.0 * step * step)

    d_h = d2(h)
    d_h2 = d2(h / 2)
    extrap = (16.0 * d_h2 - d_h) / 15.0
    value = beta / (24.0 * math.pi) * extrap
    if return_error:
        err = beta / (24.0 * math.pi) * abs(extrap - d_h2)
        return value, err
    return value


def gamma_numeric(model: PotentialModel, epsilon: float, beta: float) -> float:
    """Energy derivative of the leading shift; identically zero exactly on the
    solvable class, so a nonzero value measures the deviation from it."""
    h = _stencil_window(model, epsilon, beta, margin=3.0)
    up = delta1_numeric(model, epsilon + h, beta)
    dn = delta1_numeric(model, epsilon - h, beta)
    return (up - dn) / (2.0 * h)
