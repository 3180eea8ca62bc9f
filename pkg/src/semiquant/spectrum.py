"""Solve the quantization condition Phi(eps) = n + 1/2 + delta for the levels.

Four correction modes form a ladder: ``Leading`` (delta = 0), ``FirstOrder``
(delta = delta1), ``ClassExact`` (the resummed map, exact on the solvable
class), and ``TwoParameter(t)`` (the two-small-parameter refinement).  The
leading shift delta1 comes from the closed form when the model carries its
class representation and from quadrature otherwise; the choice is recorded on
each level.

Levels are independent of each other and may be solved concurrently; all
inputs are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from . import oracle as _oracle
from .corrections import delta1_closed, delta_class, delta_two_param
from .errors import NonMonotoneCondition, NoSuchLevel
from .potentials import Confining, PotentialModel, Well
from .quadrature import action_phase, delta1_numeric, energy_scale, stencil_step

__all__ = [
    "Leading",
    "FirstOrder",
    "ClassExact",
    "TwoParameter",
    "LevelResult",
    "solve_level",
    "solve_spectrum",
    "count_bound_states",
    "compare_modes",
    "CompareRow",
    "ComparisonReport",
    "parse_mode",
    "DEFAULT_CONFINING_CAP",
]

DEFAULT_CONFINING_CAP = 16

_SCAN_POINTS = 64
_TINY_FRAC = 1e-9


@dataclass(frozen=True)
class Leading:
    label = "leading"


@dataclass(frozen=True)
class FirstOrder:
    label = "first-order"


@dataclass(frozen=True)
class ClassExact:
    label = "class-exact"


@dataclass(frozen=True)
class TwoParameter:
    t: float
    label = "two-param"


Mode = Union[Leading, FirstOrder, ClassExact, TwoParameter]


def parse_mode(name: str, t: float = 0.0) -> Mode:
    name = name.strip().lower()
    if name == "leading":
        return Leading()
    if name in ("first-order", "first_order", "first"):
        return FirstOrder()
    if name in ("class-exact", "class_exact", "class"):
        return ClassExact()
    if name in ("two-param", "two_param", "two-parameter"):
        return TwoParameter(t=t)
    raise ValueError(f"unknown mode {name!r}")


@dataclass(frozen=True)
class LevelResult:
    n: int
    epsilon: float
    mode: str
    delta_used: float
    residual: float
    delta1_source: str  # closed-form | numeric | none


def _delta1_source(model: PotentialModel, beta: float):
    """Callable eps -> delta1 plus a tag saying where it comes from."""
    if model.class_five is not None:
        d1 = delta1_closed(model.class_five, beta)
        return (lambda eps: d1), "closed-form"

    def d1_numeric(eps):
        # the stencil needs eps +- 2h inside the well; near the edge evaluate
        # at the closest admissible energy (delta1 depends weakly on eps)
        h = stencil_step(model, eps, beta)
        lo = model.v_min + 2.5 * h
        hi = model.edge_energy() - 2.5 * h
        return delta1_numeric(model, min(max(eps, lo), max(hi, lo)), beta)

    return d1_numeric, "numeric"


def _delta_of(mode: Mode, d1: float) -> float:
    if isinstance(mode, Leading):
        return 0.0
    if isinstance(mode, FirstOrder):
        return d1
    if isinstance(mode, ClassExact):
        return delta_class(d1)
    return delta_two_param(d1, mode.t)


def _search_window(model: PotentialModel, n: int, mode: Mode, beta: float, g):
    """Bracket [lo, hi] with g(lo) < 0 < g(hi), or raise NoSuchLevel."""
    scale = energy_scale(model, beta)
    tiny = _TINY_FRAC * scale
    lo = model.v_min + tiny
    if isinstance(model.asymptotics, Well):
        hi = model.edge_energy() - tiny
        if g(hi) <= 0.0:
            raise NoSuchLevel(f"well holds no level n={n} in mode {mode.label}")
        return lo, hi
    # confining: grow the window until the condition turns positive
    hi = model.v_min + 2.0 * scale * (n + 1.0)
    for _ in range(80):
        if g(hi) > 0.0:
            return lo, hi
        hi = model.v_min + 2.0 * (hi - model.v_min)
    raise NoSuchLevel(f"condition never satisfied up to eps={hi!r}")


def solve_level(model: PotentialModel, n: int, mode: Mode, beta: float) -> LevelResult:
    """Energy of the n-th level under the chosen correction mode.

    Scans the condition g(eps) = Phi(eps) - (n + 1/2 + delta(eps)) on 64
    points, demands a single sign change (more than one is reported as
    NonMonotoneCondition, never silently resolved), and refines the root to
    relative 1e-12 in eps.
    """
    if n < 0:
        raise NoSuchLevel(f"need n >= 0, got {n!r}")
    d1_of, src = _delta1_source(model, beta)

    if isinstance(mode, Leading):
        def g(eps):
            return action_phase(model, eps, beta).phi - (n + 0.5)
    else:
        def g(eps):
            return action_phase(model, eps, beta).phi - (n + 0.5 + _delta_of(mode, d1_of(eps)))

    lo, hi = _search_window(model, n, mode, beta, g)
    grid = np.linspace(lo, hi, _SCAN_POINTS)
    vals = np.array([g(e) for e in grid])
    signs = np.sign(vals)
    crossings = [i for i in range(len(grid) - 1)
                 if signs[i] != signs[i + 1] and signs[i] != 0]
    if len(crossings) == 0:
        raise NoSuchLevel(f"no sign change for level n={n} in mode {mode.label}")
    if len(crossings) > 1:
        raise NonMonotoneCondition(
            f"condition changes sign {len(crossings)} times for n={n}; refusing to pick a root")
    i = crossings[0]
    eps = brentq(g, grid[i], grid[i + 1], rtol=1e-14, xtol=1e-300)
    d1 = 0.0 if isinstance(mode, Leading) else d1_of(eps)
    delta_used = _delta_of(mode, d1)
    residual = abs(action_phase(model, eps, beta).phi - (n + 0.5 + delta_used))
    return LevelResult(n=n, epsilon=float(eps), mode=mode.label,
                       delta_used=delta_used, residual=residual,
                       delta1_source="none" if isinstance(mode, Leading) else src)


def solve_spectrum(model: PotentialModel, mode: Mode, beta: float,
                   max_levels: Optional[int] = None):
    """All levels n = 0, 1, ... in increasing energy.

    Finite for wells; confining potentials are capped (default
    ``DEFAULT_CONFINING_CAP``).
    """
    if max_levels is None:
        max_levels = 10 ** 6 if isinstance(model.asymptotics, Well) else DEFAULT_CONFINING_CAP
    out = []
    for n in range(max_levels):
        try:
            out.append(solve_level(model, n, mode, beta))
        except NoSuchLevel:
            break
    return out


def count_bound_states(model: PotentialModel, mode: Mode, beta: float,
                       max_levels: Optional[int] = None) -> int:
    """Number of levels the condition admits (the cap, for confining wells)."""
    return len(solve_spectrum(model, mode, beta, max_levels=max_levels))


@dataclass(frozen=True)
class CompareRow:
    n: int
    mode: str
    beta_factor: float
    epsilon: float
    epsilon_oracle: float
    abs_error: float
    rel_error: float


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple
    slopes: dict  # (n, mode_label) -> fitted log-log error slope vs beta


def _oracle_levels(model: PotentialModel, beta: float, max_levels):
    if model.exact_spectrum is not None:
        return _oracle.closed_form_spectrum(model, beta, max_levels=max_levels)
    return _oracle.grid_eigensolve(model, beta)


def compare_modes(model: PotentialModel, beta: float, modes: Sequence[Mode], *,
                  beta_factors: Sequence[float] = (1.0,),
                  max_levels: Optional[int] = None) -> ComparisonReport:
    """Per-level error of each mode against the oracle, optionally swept in beta.

    With several beta factors the log-log error slope is fitted per (level,
    mode) over the levels bound at every factor; slopes are omitted where the
    error sits at the solver floor (< 1e-12).
    """
    rows = []
    per_key = {}
    for fac in beta_factors:
        b = beta * fac
        ora = _oracle_levels(model, b, max_levels)
        for mode in modes:
            levels = solve_spectrum(model, mode, b, max_levels=max_levels)
            for lv in levels[:len(ora)]:
                target = ora[lv.n]
                err = abs(lv.epsilon - target)
                rows.append(CompareRow(
                    n=lv.n, mode=mode.label, beta_factor=fac,
                    epsilon=lv.epsilon, epsilon_oracle=target,
                    abs_error=err,
                    rel_error=err / max(abs(target), 1e-300)))
                per_key.setdefault((lv.n, mode.label), []).append((fac, err))

    slopes = {}
    if len(beta_factors) > 1:
        for key, pts in per_key.items():
            if len(pts) != len(beta_factors):
                continue
            if any(e < 1e-12 for _, e in pts):
                continue
            xs = np.log([p[0] for p in pts])
            ys = np.log([p[1] for p in pts])
            slopes[key] = float(np.polyfit(xs, ys, 1)[0])
    return ComparisonReport(rows=tuple(rows), slopes=slopes)
