"""One-dimensional potential wells.

Three constructors are exposed:

* :func:`build_class_five` builds a well from the six coefficients of the
  auxiliary-flow representation ``V = A^2 s^2 + B s + C`` where the
  coordinate function obeys the quadratic flow ``ds/dx = a2 s^2 + a1 s + a0``.
  Every standard exactly-solvable well (harmonic, Morse, tanh^2, ...) is a
  member of this class.
* :func:`catalog` instantiates named families with physical parameters.
* :func:`from_table` interpolates numeric ``(x, V)`` samples with a
  shape-preserving monotone cubic, so no spurious turning points appear.

Models are immutable after construction; ``evaluate``, ``derivative`` and
``second_derivative`` are pure and accept floats or numpy arrays, so they are
safe to call from many threads at once.

Orientation convention: for two-sided wells the higher asymptote W sits at
x -> -inf and the lower asymptote U at x -> +inf (W >= U >= v_min).
Constructors mirror the axis when a family arrives flipped and record the
fact in ``meta['mirrored']``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (
    BadParams,
    BranchEscape,
    MultiWell,
    NonMonotoneX,
    NoWell,
    TooFewSamples,
    UnknownFamily,
)

__all__ = [
    "Well",
    "Confining",
    "ClassFiveSpec",
    "PotentialModel",
    "build_class_five",
    "catalog",
    "from_table",
    "from_table_file",
    "check_derivative_consistency",
    "CATALOG_FAMILIES",
]

_INF = math.inf

# Discriminant within this absolute band of zero resolves to the rational
# branch (repeated flow root).
_D_TIE = 1e-12


@dataclass(frozen=True)
class Well:
    """Finite asymptotes: V(+inf) = U and V(-inf) = W >= U.

    W may be ``math.inf`` for wells that rise without bound on one side
    (Morse-like shapes); the bound spectrum then lives below U.
    """

    U: float
    W: float


@dataclass(frozen=True)
class Confining:
    """V grows without bound on both sides (possibly at finite walls)."""


Asymptotics = Union[Well, Confining]


@dataclass(frozen=True)
class ClassFiveSpec:
    """Coefficients of ``V = A^2 s^2 + B s + C``, ``ds/dx = a2 s^2 + a1 s + a0``.

    ``s0`` is the value of s at the reference point and selects the branch of
    the flow when several coexist (e.g. inside vs outside the root interval).
    ``branch`` is filled in by the builder.
    """

    A: float
    B: float
    C: float
    a2: float
    a1: float
    a0: float
    s0: float = 0.0
    branch: str = ""

    @property
    def discriminant(self) -> float:
        return self.a1 * self.a1 - 4.0 * self.a2 * self.a0

    def sigma(self, s):
        """Flow right-hand side ds/dx evaluated at s."""
        return self.a2 * s * s + self.a1 * s + self.a0


@dataclass(frozen=True)
class PotentialModel:
    """An evaluatable single well.

    ``exact_spectrum(n, beta)`` returns the n-th closed-form level or None
    when the family holds fewer than n+1 bound states.
    """

    evaluate: Callable
    derivative: Callable
    asymptotics: Asymptotics
    v_min: float
    x_min: float
    x_lo: float = -_INF
    x_hi: float = _INF
    second_derivative: Optional[Callable] = None
    class_five: Optional[ClassFiveSpec] = None
    exact_spectrum: Optional[Callable[[int, float], Optional[float]]] = None
    meta: dict = field(default_factory=dict)

    def edge_energy(self) -> float:
        """Lowest finite asymptote for wells, inf for confining potentials."""
        if isinstance(self.asymptotics, Well):
            return min(self.asymptotics.U, self.asymptotics.W)
        return _INF


def _scalarize(f):
    """Wrap an array-native closure so scalars come back as floats."""

    def g(x):
        arr = np.asarray(x, dtype=float)
        out = np.asarray(f(arr), dtype=float)
        if arr.ndim == 0:
            return float(out)
        return out

    return g


# ---------------------------------------------------------------------------
# closed-form solutions of the quadratic flow
# ---------------------------------------------------------------------------

_EXP_CLIP = 300.0  # exp argument bound; keeps A^2 s^2 finite while s is saturated


def _solve_flow(a2, a1, a0, s0, s_star):
    """Integrate ds/dx = a2 s^2 + a1 s + a0 in closed form.

    Returns ``(s_func, x_lo, x_hi, s_left, s_right, branch)`` where s_func is
    array-native, normalised so s(0) = s_star (the potential vertex), and
    s_left/s_right are the s-limits at the domain ends (may be +-inf for
    finite-x walls).  s0 only selects the branch.
    """
    if a2 == 0.0 and a1 == 0.0:
        if a0 == 0.0:
            raise BranchEscape("flow is stationary everywhere: s is constant")

        def s_lin(x):
            return s_star + a0 * x

        lim = math.copysign(_INF, a0)
        return s_lin, -_INF, _INF, -lim, lim, "linear"

    if a2 == 0.0:
        q = -a0 / a1
        if s0 == q:
            raise BranchEscape("s0 sits on the stationary point of the flow")
        if (s_star - q) * (s0 - q) <= 0.0:
            raise NoWell("potential vertex lies off the selected exponential branch")
        p = s_star - q

        def s_exp(x):
            return q + p * np.exp(np.clip(a1 * x, -_EXP_CLIP, _EXP_CLIP))

        far = math.copysign(_INF, p)
        if a1 > 0:
            return s_exp, -_INF, _INF, q, far, "exponential"
        return s_exp, -_INF, _INF, far, q, "exponential"

    disc = a1 * a1 - 4.0 * a2 * a0
    if abs(disc) <= _D_TIE:
        s_r = -a1 / (2.0 * a2)
        if s0 == s_r:
            raise BranchEscape("s0 sits on the repeated root of the flow")
        if (s_star - s_r) * (s0 - s_r) <= 0.0:
            raise NoWell("potential vertex lies off the selected rational branch")
        c = 1.0 / (a2 * (s_star - s_r))

        def s_rat(x):
            return s_r + 1.0 / (a2 * (c - x))

        wall_lim = math.copysign(_INF, s_star - s_r)
        if c > 0:
            return s_rat, -_INF, c, s_r, wall_lim, "rational"
        return s_rat, c, _INF, wall_lim, s_r, "rational"

    if disc > 0.0:
        sq = math.sqrt(disc)
        roots = sorted(((-a1 - sq) / (2.0 * a2), (-a1 + sq) / (2.0 * a2)))
        s_lo, s_hi = roots
        if s0 == s_lo or s0 == s_hi:
            raise BranchEscape("s0 sits on a root of the flow")
        delta = s_hi - s_lo
        rho = a2 * delta
        if s_lo < s0 < s_hi:
            # bounded branch between the roots
            if not (s_lo < s_star < s_hi):
                raise NoWell("potential vertex lies outside the root interval")
            le0 = math.log((s_hi - s_star) / (s_star - s_lo))

            def s_tanh(x):
                e = np.exp(np.clip(rho * x + le0, -_EXP_CLIP, _EXP_CLIP))
                return s_lo + delta / (1.0 + e)

            if rho > 0:
                return s_tanh, -_INF, _INF, s_hi, s_lo, "tanh"
            return s_tanh, -_INF, _INF, s_lo, s_hi, "tanh"

        # unbounded branch outside the roots; blows up at a finite wall
        upper = s0 > s_hi
        if upper and not s_star > s_hi:
            raise NoWell("potential vertex lies off the selected branch")
        if not upper and not s_star < s_lo:
            raise NoWell("potential vertex lies off the selected branch")
        e0 = (s_star - s_hi) / (s_star - s_lo)
        le0 = math.log(e0)
        x_wall = -le0 / rho

        def s_coth(x):
            e = np.exp(np.clip(rho * x + le0, -_EXP_CLIP, _EXP_CLIP))
            return s_lo + delta / (1.0 - e)

        wall_lim = _INF if upper else -_INF
        far_lim = s_hi if upper else s_lo
        # domain is the side of the wall containing x = 0
        if x_wall > 0:
            return s_coth, -_INF, x_wall, far_lim, wall_lim, "coth"
        return s_coth, x_wall, _INF, wall_lim, far_lim, "coth"

    # disc < 0: no real roots, s sweeps the whole line over one period
    w = math.sqrt(-disc) / (2.0 * abs(a2))
    rho = a2 * w
    m = -a1 / (2.0 * a2)
    c = -math.atan((s_star - m) / w) / rho
    half = 0.5 * math.pi / abs(rho)

    def s_tan(x):
        return m + w * np.tan(rho * (np.asarray(x) - c))

    lim = math.copysign(_INF, rho)
    return s_tan, c - half, c + half, -lim, lim, "circular"


def _mirror_model(model: PotentialModel) -> PotentialModel:
    """Reflect x -> -x, preserving the class-five representation.

    Under the reflection the representation stays in the class with
    coefficients (A, -B, C, a2, -a1, a0) and coordinate -s(-x); in particular
    a2/A, and with it the closed-form level shift, is unchanged.
    """
    ev, de, d2 = model.evaluate, model.derivative, model.second_derivative

    def m_ev(x):
        return ev(-np.asarray(x, dtype=float))

    def m_de(x):
        return -np.asarray(de(-np.asarray(x, dtype=float)))

    m_d2 = None
    if d2 is not None:
        def m_d2(x):  # noqa: E306
            return d2(-np.asarray(x, dtype=float))

    asym = model.asymptotics
    if isinstance(asym, Well):
        asym = Well(U=asym.W, W=asym.U)

    spec = model.class_five
    if spec is not None:
        spec = replace(spec, B=-spec.B, a1=-spec.a1, s0=-spec.s0)

    meta = dict(model.meta)
    meta["mirrored"] = not meta.get("mirrored", False)
    s_func = meta.get("s_func")
    if s_func is not None:
        meta["s_func"] = lambda x: -np.asarray(s_func(-np.asarray(x, dtype=float)))
    sig = meta.get("sigma_coeffs")
    if sig is not None:
        meta["sigma_coeffs"] = (sig[0], -sig[1], sig[2])

    return replace(
        model,
        evaluate=_scalarize(m_ev),
        derivative=_scalarize(m_de),
        second_derivative=_scalarize(m_d2) if m_d2 is not None else None,
        asymptotics=asym,
        x_min=-model.x_min,
        x_lo=-model.x_hi,
        x_hi=-model.x_lo,
        class_five=spec,
        meta=meta,
    )


def _orient(model: PotentialModel) -> PotentialModel:
    """Mirror so that V(-inf) >= V(+inf)."""
    asym = model.asymptotics
    if isinstance(asym, Well) and asym.U > asym.W:
        return _mirror_model(model)
    return model


def build_class_five(spec: ClassFiveSpec) -> PotentialModel:
    """Construct the potential defined by a :class:`ClassFiveSpec`.

    The branch of the flow is selected by the sign of the discriminant
    D = a1^2 - 4 a2 a0 (|D| <= 1e-12 resolves to the rational branch) and by
    the position of s0 relative to the flow's stationary points.  The x-axis
    is shifted so the potential minimum sits at x = 0 and mirrored so the
    higher asymptote is on the left.

    Raises NoWell when the branch carries no interior minimum and
    BranchEscape when s0 degenerates the flow to a constant.
    """
    A, B, C = spec.A, spec.B, spec.C
    a2, a1, a0 = spec.a2, spec.a1, spec.a0
    if not (A > 0.0) or not all(map(math.isfinite, (A, B, C, a2, a1, a0, spec.s0))):
        raise BadParams("require finite coefficients and A > 0")

    s_star = -B / (2.0 * A * A)
    s_func, x_lo, x_hi, s_left, s_right, branch = _solve_flow(a2, a1, a0, spec.s0, s_star)

    two_a2 = 2.0 * A * A

    def ev(x):
        s = s_func(x)
        return A * A * s * s + B * s + C

    def de(x):
        s = s_func(x)
        return (two_a2 * s + B) * (a2 * s * s + a1 * s + a0)

    def d2(x):
        s = s_func(x)
        sig = a2 * s * s + a1 * s + a0
        return sig * (two_a2 * sig + (two_a2 * s + B) * (2.0 * a2 * s + a1))

    def _vlim(s):
        if math.isinf(s):
            return _INF
        return A * A * s * s + B * s + C

    v_left, v_right = _vlim(s_left), _vlim(s_right)
    v_min = C - B * B / (4.0 * A * A)

    if math.isinf(v_left) and math.isinf(v_right):
        asym: Asymptotics = Confining()
    else:
        asym = Well(U=v_right, W=v_left)

    out_spec = replace(spec, s0=s_star, branch=branch)
    model = PotentialModel(
        evaluate=_scalarize(ev),
        derivative=_scalarize(de),
        second_derivative=_scalarize(d2),
        asymptotics=asym,
        v_min=v_min,
        x_min=0.0,
        x_lo=x_lo,
        x_hi=x_hi,
        class_five=out_spec,
        meta={
            "branch": branch,
            "mirrored": False,
            "s_func": s_func,
            "sigma_coeffs": (a2, a1, a0),
        },
    )
    return _orient(model)


# ---------------------------------------------------------------------------
# named families
# ---------------------------------------------------------------------------


def _harmonic(omega: float = 1.0) -> PotentialModel:
    """V = omega^2 x^2; levels 2*beta*omega*(n + 1/2)."""
    if omega <= 0:
        raise BadParams("harmonic: omega must be positive")
    model = build_class_five(ClassFiveSpec(A=omega, B=0.0, C=0.0, a2=0.0, a1=0.0, a0=1.0, s0=0.0))

    def levels(n, beta):
        return 2.0 * beta * omega * (n + 0.5)

    return replace(model, exact_spectrum=levels,
                   meta={**model.meta, "family": "harmonic", "params": {"omega": omega}})


def _morse(D: float = 20.0, alpha: float = 1.0) -> PotentialModel:
    """V = D (1 - exp(-alpha x))^2; finitely many levels below U = D."""
    if D <= 0 or alpha <= 0:
        raise BadParams("morse: D and alpha must be positive")
    model = build_class_five(
        ClassFiveSpec(A=math.sqrt(D), B=-2.0 * D, C=D, a2=0.0, a1=-alpha, a0=0.0, s0=1.0)
    )

    def levels(n, beta):
        lam = math.sqrt(D) / (beta * alpha)
        if n >= lam - 0.5:
            return None
        return 2.0 * beta * alpha * math.sqrt(D) * (n + 0.5) - (beta * alpha * (n + 0.5)) ** 2

    return replace(model, exact_spectrum=levels,
                   meta={**model.meta, "family": "morse", "params": {"D": D, "alpha": alpha}})


def _poschl_teller(V0: float = 6.0, alpha: float = 1.0) -> PotentialModel:
    """V = V0 tanh^2(alpha x); levels V0 - (beta*alpha)^2 (lam-1-n)^2."""
    if V0 <= 0 or alpha <= 0:
        raise BadParams("poschl_teller: V0 and alpha must be positive")
    model = build_class_five(
        ClassFiveSpec(A=math.sqrt(V0), B=0.0, C=0.0, a2=-alpha, a1=0.0, a0=alpha, s0=0.0)
    )

    def levels(n, beta):
        ba = beta * alpha
        lam = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * V0 / (ba * ba)))
        if n >= lam - 1.0:
            return None
        return V0 - (ba * (lam - 1.0 - n)) ** 2

    return replace(model, exact_spectrum=levels,
                   meta={**model.meta, "family": "poschl_teller", "params": {"V0": V0, "alpha": alpha}})


def _sturmian_family(U: float, r: float = 1.0, scale: float = 1.0) -> PotentialModel:
    """Asymmetric well V = U s^2 with flow (1+s)(r-s)/scale.

    Asymptote ratio is W/U = r^2 >= 1; r = 1 reproduces the symmetric
    tanh^2 well.  The minimum is parabolic with V = 0.
    """
    if U <= 0:
        raise BadParams("sturmian_family: U must be positive")
    if r < 1.0:
        raise BadParams("sturmian_family: need r >= 1 (W/U = r^2 >= 1)")
    if scale <= 0:
        raise BadParams("sturmian_family: scale must be positive")
    model = build_class_five(
        ClassFiveSpec(A=math.sqrt(U), B=0.0, C=0.0,
                      a2=-1.0 / scale, a1=(r - 1.0) / scale, a0=r / scale, s0=0.0)
    )
    return replace(model, meta={**model.meta, "family": "sturmian_family",
                                "params": {"U": U, "r": r, "scale": scale}})


def _perturbed_sturmian(U: float, r: float = 1.0, scale: float = 1.0, eta: float = 0.1) -> PotentialModel:
    """Off-class deviation of the asymmetric well.

    V = U (s^2 + eta s^4) / (1 + eta) with the same coordinate s as the
    class member, so V(+inf) = U is preserved and eta mixes a quartic shape
    deviation into the well.  Not a member of the exactly-solvable class.
    """
    if not (0.0 <= eta <= 0.5):
        raise BadParams("perturbed_sturmian: eta must lie in [0, 0.5]")
    base = _sturmian_family(U, r, scale)
    spec = base.class_five
    a2, a1, a0 = base.meta["sigma_coeffs"]
    s_func = base.meta["s_func"]
    norm = 1.0 + eta

    def ev(x):
        s = s_func(np.asarray(x, dtype=float))
        s2 = s * s
        return U * (s2 + eta * s2 * s2) / norm

    def de(x):
        s = s_func(np.asarray(x, dtype=float))
        sig = a2 * s * s + a1 * s + a0
        return U * (2.0 * s + 4.0 * eta * s ** 3) * sig / norm

    def d2(x):
        s = s_func(np.asarray(x, dtype=float))
        sig = a2 * s * s + a1 * s + a0
        sig_x = (2.0 * a2 * s + a1) * sig
        return U * ((2.0 + 12.0 * eta * s * s) * sig * sig
                    + (2.0 * s + 4.0 * eta * s ** 3) * sig_x) / norm

    w_eta = U * (r * r + eta * r ** 4) / norm
    return PotentialModel(
        evaluate=_scalarize(ev),
        derivative=_scalarize(de),
        second_derivative=_scalarize(d2),
        asymptotics=Well(U=U, W=w_eta),
        v_min=0.0,
        x_min=0.0,
        x_lo=base.x_lo,
        x_hi=base.x_hi,
        class_five=None,
        meta={"family": "perturbed_sturmian",
              "params": {"U": U, "r": r, "scale": scale, "eta": eta},
              "mirrored": base.meta.get("mirrored", False),
              "s_func": s_func,
              "sigma_coeffs": (a2, a1, a0)},
    )


CATALOG_FAMILIES = {
    "harmonic": _harmonic,
    "morse": _morse,
    "poschl_teller": _poschl_teller,
    "sturmian_family": _sturmian_family,
    "perturbed_sturmian": _perturbed_sturmian,
}


def catalog(name: str, **params) -> PotentialModel:
    """Instantiate a named potential family.

    Known names: harmonic(omega), morse(D, alpha), poschl_teller(V0, alpha),
    sturmian_family(U, r, scale), perturbed_sturmian(U, r, scale, eta).
    """
    try:
        builder = CATALOG_FAMILIES[name]
    except KeyError:
        raise UnknownFamily(f"unknown family {name!r}; known: {sorted(CATALOG_FAMILIES)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise BadParams(f"{name}: {exc}") from None


# ---------------------------------------------------------------------------
# tabulated potentials
# ---------------------------------------------------------------------------


def from_table(samples) -> PotentialModel:
    """Build a well from (x, V) samples.

    Uses shape-preserving monotone cubic interpolation per monotone segment,
    which cannot overshoot and therefore cannot create spurious turning
    points.  The potential is continued by its endpoint values outside the
    table, and the endpoint values define the asymptotes.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise BadParams("samples must be an (N, 2) array of (x, V) pairs")
    if arr.shape[0] < 8:
        raise TooFewSamples(f"need at least 8 samples, got {arr.shape[0]}")
    x, v = arr[:, 0], arr[:, 1]
    if np.any(np.diff(x) <= 0):
        raise NonMonotoneX("x values must be strictly increasing")

    interp = PchipInterpolator(x, v, extrapolate=False)
    d1 = interp.derivative()
    d2 = interp.derivative(2)
    x0, x1 = float(x[0]), float(x[-1])

    def ev(t):
        return interp(np.clip(t, x0, x1))

    def de(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= x0) & (t <= x1)
        return np.where(inside, d1(np.clip(t, x0, x1)), 0.0)

    def dd(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= x0) & (t <= x1)
        return np.where(inside, d2(np.clip(t, x0, x1)), 0.0)

    # locate the minimum and check unimodality on a dense grid
    grid = np.linspace(x0, x1, 4001)
    vg = interp(grid)
    i = int(np.argmin(vg))
    if i == 0 or i == len(grid) - 1:
        raise NoWell("tabulated potential has no interior minimum")
    dmin = d1(grid[i - 1])
    dmax = d1(grid[i + 1])
    if dmin < 0 < dmax:
        x_min = float(brentq(lambda t: float(d1(t)), grid[i - 1], grid[i + 1],
                             rtol=4 * np.finfo(float).eps))
    else:
        x_min = float(grid[i])
    v_min = float(interp(x_min))

    dg = d1(grid)
    tol = 1e-10 * float(np.max(np.abs(dg)))
    signs = np.sign(dg[np.abs(dg) > tol])
    flips = int(np.count_nonzero(np.diff(signs) != 0))
    if flips > 1:
        raise MultiWell(f"interpolant has {flips} derivative sign changes; expected a single well")

    model = PotentialModel(
        evaluate=_scalarize(ev),
        derivative=_scalarize(de),
        second_derivative=_scalarize(dd),
        asymptotics=Well(U=float(v[-1]), W=float(v[0])),
        v_min=v_min,
        x_min=x_min,
        x_lo=-_INF,
        x_hi=_INF,
        class_five=None,
        meta={"family": "table", "mirrored": False, "interpolated": True,
              "x_range": (x0, x1), "n_samples": int(arr.shape[0])},
    )
    return _orient(model)


def from_table_file(path) -> PotentialModel:
    """Read a two-column whitespace table ('#' comments) and build the well."""
    data = np.loadtxt(path, comments="#", dtype=float, ndmin=2)
    if data.shape[1] != 2:
        raise BadParams(f"{path}: expected two columns (x, V), got {data.shape[1]}")
    return from_table(data)


def check_derivative_consistency(model: PotentialModel, xs, rel_tol: float = 1e-6) -> float:
    """Max relative deviation of ``derivative`` from a central difference.

    Returns the measured maximum; raises nothing (callers assert).
    """
    xs = np.asarray(xs, dtype=float)
    h = 1e-6 * np.maximum(1.0, np.abs(xs))
    num = (model.evaluate(xs + h) - model.evaluate(xs - h)) / (2.0 * h)
    ana = model.derivative(xs)
    scale = np.maximum(1.0, np.abs(ana))
    return float(np.max(np.abs(num - ana) / scale))
