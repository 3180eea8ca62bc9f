"""Command-line front end.

Four subcommands: ``spectrum`` (levels of one well under one correction
mode), ``thresholds`` (strengths at which new bound states appear, with the
oracle column), ``validate`` (the invariant suite as a pass/fail table) and
``compare`` (per-level error of several modes against the oracle, with an
optional beta sweep).

Reports are written as CSV or JSON with a fixed column order and numbers at
15 significant digits (see docs/format.md), so repeated runs of the same
command are byte-identical.  Exit codes: 0 success, 1 configuration error,
2 computation failure.  SEMIQUANT_THREADS caps worker threads for
independent thresholds; output order never depends on it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import oracle as O
from . import sturmian as ST
from .corrections import (
    delta1_closed,
    delta_class,
    delta_series,
    delta_two_param,
    small_parameter_b,
    sturmian_t,
)
from .errors import NoRealRoot, SemiquantError
from .potentials import (
    ClassFiveSpec,
    build_class_five,
    catalog,
    check_derivative_consistency,
    from_table_file,
)
from .quadrature import delta1_numeric, gamma_numeric, action_phase
from .spectrum import parse_mode, solve_spectrum, compare_modes

SPECTRUM_COLUMNS = ["n", "epsilon", "mode", "delta_used", "residual",
                    "delta1_source", "epsilon_oracle", "abs_error", "rel_error"]
THRESHOLD_COLUMNS = ["n", "k", "b", "t", "U_condition21", "U_refined", "U_oracle",
                     "rel_err_condition21", "rel_err_refined", "note"]
COMPARE_COLUMNS = ["kind", "n", "mode", "beta_factor", "epsilon", "epsilon_oracle",
                   "abs_error", "rel_error", "slope"]
VALIDATE_COLUMNS = ["name", "target", "measured", "status"]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the CLI contract reserves 2
    # for computation failures and 1 for configuration problems
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("SEMIQUANT_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    w = _max_workers()
    if w <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# model / family construction from flags
# ---------------------------------------------------------------------------

_CATALOG_ALIASES = {
    "sturmian": "sturmian_family",
    "perturbed-sturmian": "perturbed_sturmian",
}


def _catalog_kwargs(name: str, args) -> dict:
    if name == "harmonic":
        return {"omega": args.omega}
    if name == "morse":
        return {"D": args.D, "alpha": args.alpha}
    if name == "poschl_teller":
        return {"V0": args.V0 if args.V0 is not None else args.U, "alpha": args.alpha}
    if name == "sturmian_family":
        return {"U": args.U, "r": args.r, "scale": args.scale}
    if name == "perturbed_sturmian":
        return {"U": args.U, "r": args.r, "scale": args.scale, "eta": args.eta}
    raise SemiquantError(f"unknown family {name!r}")


def _build_model(args):
    selectors = [s for s in (args.catalog, args.table, args.class_five) if s]
    if len(selectors) != 1:
        raise SystemExit(_config_error(
            "exactly one of --catalog, --table, --class-five must be given"))
    if args.table:
        return from_table_file(args.table)
    if args.class_five:
        parts = [float(p) for p in args.class_five.split(",")]
        if len(parts) not in (6, 7):
            raise ValueError("--class-five needs A,B,C,a2,a1,a0[,s0]")
        if len(parts) == 6:
            parts.append(0.0)
        return build_class_five(ClassFiveSpec(*parts[:3], *parts[3:6], s0=parts[6]))
    name = args.catalog.replace("-", "_")
    name = _CATALOG_ALIASES.get(args.catalog, name)
    if args.catalog == "tanh2":
        return catalog("poschl_teller", V0=args.U, alpha=1.0)
    return catalog(name, **_catalog_kwargs(name, args))


def _build_family(args) -> ST.SturmianFamily:
    name = _CATALOG_ALIASES.get(args.catalog, (args.catalog or "").replace("-", "_"))
    if args.catalog == "tanh2" or (name == "sturmian_family" and args.eta == 0.0):
        return ST.class_family(r=1.0 if args.catalog == "tanh2" else args.r,
                               scale=1.0 if args.catalog == "tanh2" else args.scale)
    if name == "sturmian_family":
        return ST.class_family(r=args.r, scale=args.scale)
    if name == "perturbed_sturmian":
        return ST.perturbed_family(r=args.r, scale=args.scale, eta=args.eta)
    raise SemiquantError(
        f"thresholds need a strength-swept family (sturmian, perturbed-sturmian, tanh2); got {args.catalog!r}")


def _config_error(msg: str) -> int:
    sys.stderr.write(f"semiquant: config error: {msg}\n")
    return 1


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.15g}"
    return str(v)


def _round15(v):
    if isinstance(v, float):
        return float(f"{v:.15g}")
    return v


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return _round15(obj)


def _write_report(args, columns, rows, invariants=None):
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func",) and v is not None}
    invariants = invariants or []
    if args.format == "json":
        payload = {
            "config": _jsonify(config),
            "rows": [_jsonify({c: r.get(c) for c in columns}) for r in rows],
            "invariant_results": [_jsonify(i) for i in invariants],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        table = rows if rows or not invariants else invariants
        cols = columns if rows or not invariants else VALIDATE_COLUMNS
        lines = [",".join(cols)]
        for r in table:
            lines.append(",".join(_fmt(r.get(c)) for c in cols))
        text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    try:
        model = _build_model(args)
        mode = parse_mode(args.mode, t=args.t)
    except (SemiquantError, ValueError, OSError) as exc:
        return _config_error(str(exc))

    try:
        levels = solve_spectrum(model, mode, args.beta, max_levels=args.max_levels)
        oracle_vals = None
        if args.oracle == "grid" or (args.oracle == "auto" and model.exact_spectrum is not None):
            if model.exact_spectrum is not None and args.oracle != "grid":
                oracle_vals = O.closed_form_spectrum(model, args.beta,
                                                     max_levels=args.max_levels)
            else:
                oracle_vals = O.grid_eigensolve(model, args.beta)
        rows = []
        for lv in levels:
            row = {"n": lv.n, "epsilon": lv.epsilon, "mode": lv.mode,
                   "delta_used": lv.delta_used, "residual": lv.residual,
                   "delta1_source": lv.delta1_source,
                   "epsilon_oracle": None, "abs_error": None, "rel_error": None}
            if oracle_vals is not None and lv.n < len(oracle_vals):
                t = oracle_vals[lv.n]
                row["epsilon_oracle"] = t
                row["abs_error"] = abs(lv.epsilon - t)
                row["rel_error"] = abs(lv.epsilon - t) / max(abs(t), 1e-300)
            rows.append(row)
    except SemiquantError as exc:
        sys.stderr.write(f"semiquant: computation failed: {exc}\n")
        return 2
    _write_report(args, SPECTRUM_COLUMNS, rows)
    return 0


def _threshold_row(family, n, beta, want_oracle):
    k = ST.shape_factor_k(family.r)
    row = {"n": n, "k": k, "b": small_parameter_b(n + 1), "t": None,
           "U_condition21": None, "U_refined": None, "U_oracle": None,
           "rel_err_condition21": None, "rel_err_refined": None, "note": None}
    try:
        row["U_condition21"] = ST.threshold_U(family, n, beta, method="condition21").U_n
    except NoRealRoot:
        row["note"] = "no positive threshold"
        return row
    try:
        ref = ST.threshold_U(family, n, beta, method="refined")
        row["U_refined"] = ref.U_n
        phi = ST.phase_at_edge(family, ref.U_n, beta)
        d1 = (-beta / (8.0 * family.scale * math.sqrt(ref.U_n))
              if family.is_class_five else -k / (8.0 * phi))
        row["t"] = sturmian_t(phi, d1, k)
    except NoRealRoot:
        row["note"] = "no positive threshold"
    if want_oracle and n >= 1:
        row["U_oracle"] = O.threshold_U_oracle(family, n, beta).U_n
        if row["U_condition21"] is not None:
            row["rel_err_condition21"] = abs(row["U_condition21"] - row["U_oracle"]) / row["U_oracle"]
        if row["U_refined"] is not None:
            row["rel_err_refined"] = abs(row["U_refined"] - row["U_oracle"]) / row["U_oracle"]
    return row


def _fixed_w_row(args, n, beta):
    """Derived report: sweep with W held fixed, so k drifts with U."""
    W = args.fixed_w

    def k_of(U):
        return ST.shape_factor_k(math.sqrt(W / U))

    def g(U):
        k = k_of(U)
        phi = args.scale * math.sqrt(U) * k / beta
        d1 = -beta / (8.0 * args.scale * math.sqrt(U))
        return phi - (n + 0.5) - ST.refined_delta_U(phi, d1, k)

    from scipy.optimize import brentq
    lo, hi = 1e-6 * W, W * (1.0 - 1e-12)
    if g(lo) > 0 or g(hi) < 0:
        return {"n": n, "k": None, "b": small_parameter_b(n + 1), "t": None,
                "U_condition21": None, "U_refined": None, "U_oracle": None,
                "rel_err_condition21": None, "rel_err_refined": None,
                "note": "no threshold below W"}
    u = brentq(g, lo, hi, rtol=1e-12)
    return {"n": n, "k": k_of(u), "b": small_parameter_b(n + 1), "t": 0.0,
            "U_condition21": None, "U_refined": u, "U_oracle": None,
            "rel_err_condition21": None, "rel_err_refined": None,
            "note": f"fixed W={_fmt(W)}"}


def cmd_thresholds(args) -> int:
    try:
        family = _build_family(args)
    except (SemiquantError, ValueError) as exc:
        return _config_error(str(exc))
    try:
        ns = list(range(0, args.n_max + 1))
        if args.fixed_w is not None:
            rows = _pmap(lambda n: _fixed_w_row(args, n, args.beta), ns)
        else:
            rows = _pmap(lambda n: _threshold_row(family, n, args.beta,
                                                  not args.no_oracle), ns)
    except SemiquantError as exc:
        sys.stderr.write(f"semiquant: computation failed: {exc}\n")
        return 2
    _write_report(args, THRESHOLD_COLUMNS, rows)
    return 0


def cmd_compare(args) -> int:
    try:
        model = _build_model(args)
        modes = [parse_mode(m, t=args.t) for m in args.modes.split(",")]
    except (SemiquantError, ValueError, OSError) as exc:
        return _config_error(str(exc))
    try:
        factors = (1.0, 0.5, 0.25) if args.beta_sweep else (1.0,)
        rep = compare_modes(model, args.beta, modes, beta_factors=factors,
                            max_levels=args.max_levels)
        rows = [{"kind": "level", "n": r.n, "mode": r.mode, "beta_factor": r.beta_factor,
                 "epsilon": r.epsilon, "epsilon_oracle": r.epsilon_oracle,
                 "abs_error": r.abs_error, "rel_error": r.rel_error, "slope": None}
                for r in rep.rows]
        for (n, mode), slope in sorted(rep.slopes.items()):
            rows.append({"kind": "slope", "n": n, "mode": mode, "beta_factor": None,
                         "epsilon": None, "epsilon_oracle": None, "abs_error": None,
                         "rel_error": None, "slope": slope})
    except SemiquantError as exc:
        sys.stderr.write(f"semiquant: computation failed: {exc}\n")
        return 2
    _write_report(args, COMPARE_COLUMNS, rows)
    return 0


# ---------------------------------------------------------------------------
# validation suite
# ---------------------------------------------------------------------------


def _validation_members():
    return [
        ("harmonic", catalog("harmonic")),
        ("morse", catalog("morse", D=20.0, alpha=1.0)),
        ("tanh2_U6", catalog("poschl_teller", V0=6.0, alpha=1.0)),
        ("r3_U4", catalog("sturmian_family", U=4.0, r=3.0)),
    ]


def _check(name, target, measured, ok, expected_fail=False):
    status = "pass" if ok else ("expected-fail" if expected_fail else "fail")
    return {"name": name, "target": target, "measured": measured, "status": status}


def run_validation():
    """The invariant suite behind ``semiquant validate``."""
    checks = []
    members = _validation_members()

    for name, m in members:
        xs = np.linspace(m.x_min - 3.0, m.x_min + 3.0, 41)
        dev = check_derivative_consistency(m, xs)
        checks.append(_check(f"derivative_consistency[{name}]", "< 1e-6", dev, dev < 1e-6))

    for name, m in members:
        s = m.meta["s_func"]
        a2, a1, a0 = m.meta["sigma_coeffs"]
        xs = np.linspace(-4.0, 4.0, 100)
        sv = np.asarray(s(xs))
        h = 1e-6
        sd = (np.asarray(s(xs + h)) - np.asarray(s(xs - h))) / (2 * h)
        resid = np.max(np.abs(sd - (a2 * sv ** 2 + a1 * sv + a0)) / (1.0 + np.abs(sd)))
        checks.append(_check(f"flow_ode_residual[{name}]", "< 1e-8", float(resid), resid < 1e-8))

    for name, m in members:
        lo, hi = m.v_min, m.edge_energy()
        span = min(hi - lo, 40.0)
        worst = 0.0
        for frac in (0.25, 0.5, 0.75):
            eps = lo + frac * span
            num = delta1_numeric(m, eps, 1.0)
            closed = delta1_closed(m.class_five, 1.0)
            worst = max(worst, abs(num - closed) / (1.0 + abs(closed)))
        checks.append(_check(f"delta1_closed_vs_numeric[{name}]", "< 1e-4", worst, worst < 1e-4))

    for name, m in members:
        lo, hi = m.v_min, m.edge_energy()
        span = min(hi - lo, 40.0)
        g = max(abs(gamma_numeric(m, lo + f * span, 1.0)) for f in (0.3, 0.6))
        checks.append(_check(f"gamma_class[{name}]", "< 1e-3", g, g < 1e-3))

    pert = catalog("perturbed_sturmian", U=1.0, r=1.0, scale=1.0, eta=0.2)
    g = abs(gamma_numeric(pert, 0.5, 1.0))
    checks.append(_check("gamma_zero[perturbed_eta0.2]", "< 1e-3 (off-class: expected to fail)",
                         g, g < 1e-3, expected_fail=True))
    checks.append(_check("gamma_detector_fires[perturbed_eta0.2]", ">= 1e-2", g, g >= 1e-2))

    # edge-phase lock: 8 * delta1 * Phi / k = -1 on a strength grid
    for r in (1.0, 3.0):
        fam = ST.class_family(r=r)
        k = ST.shape_factor_k(r)
        worst = 0.0
        for u in np.linspace(0.5, 20.0, 10):
            d1 = -1.0 / (8.0 * math.sqrt(u))
            phi = ST.phase_at_edge(fam, u, 1.0)
            worst = max(worst, abs(8.0 * d1 * phi / k + 1.0))
        checks.append(_check(f"edge_lock_identity[r={r:g}]", "< 1e-8", worst, worst < 1e-8))

    rng = np.random.default_rng(20240817)
    xs = rng.uniform(-10.0, 10.0, 1000)
    worst = max(abs(delta_two_param(x, 0.0) - delta_class(x)) for x in xs)
    checks.append(_check("two_param_t0_identity", "< 1e-12", worst, worst < 1e-12))

    worst = 0.0
    for x in (1e-1, 1e-2):
        worst = max(worst, abs(delta_class(x) - delta_series(x, 3)) / x ** 5)
    checks.append(_check("series_consistency", "<= 100 * x^5", worst, worst <= 100.0))

    cs = []
    for phi in (0.1, 0.05, 0.025):
        d = ST.refined_delta_U(phi, -1.0 / (8.0 * phi), 1.0)
        cs.append(abs(d + 0.5 - phi) / phi ** 2)
    ok = cs[1] <= 2.0 * cs[0] and cs[2] <= 2.0 * cs[0]
    checks.append(_check("shallow_limit_quadratic", "C stable within factor 2", max(cs), ok))

    worst = 0.0
    for name, m in members:
        if m.exact_spectrum is None:
            continue
        cap = 5 if name == "harmonic" else None
        cf = O.closed_form_spectrum(m, 1.0, max_levels=cap)
        gr = O.grid_eigensolve(m, 1.0, O.GridSolveConfig(levels_wanted=cap or 12))
        worst = max(worst, max(abs(a - b) for a, b in zip(cf, gr[:len(cf)])))
    checks.append(_check("oracle_self_consistency", "< 1e-6", worst, worst < 1e-6))

    return checks


def cmd_validate(args) -> int:
    try:
        checks = run_validation()
    except SemiquantError as exc:
        sys.stderr.write(f"semiquant: computation failed: {exc}\n")
        return 2
    _write_report(args, VALIDATE_COLUMNS, [], invariants=checks)
    failed = [c for c in checks if c["status"] == "fail"]
    return 0 if not failed else 2


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, with_model=True):
    if with_model:
        p.add_argument("--catalog", help="family name (harmonic, morse, poschl_teller, "
                                         "tanh2, sturmian, perturbed-sturmian)")
        p.add_argument("--table", help="two-column (x, V) text file, '#' comments")
        p.add_argument("--class-five", dest="class_five",
                       help="comma list A,B,C,a2,a1,a0[,s0]")
        p.add_argument("--U", type=float, default=6.0, help="well strength")
        p.add_argument("--r", type=float, default=1.0, help="asymmetry ratio (W/U = r^2)")
        p.add_argument("--scale", type=float, default=1.0, help="length scale")
        p.add_argument("--eta", type=float, default=0.1, help="off-class shape deviation")
        p.add_argument("--V0", type=float, default=None, help="tanh^2 depth")
        p.add_argument("--alpha", type=float, default=1.0, help="inverse length (morse/tanh^2)")
        p.add_argument("--D", type=float, default=20.0, help="morse depth")
        p.add_argument("--omega", type=float, default=1.0, help="harmonic frequency")
    p.add_argument("--beta", type=float, default=1.0, help="quantum scale parameter")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="write the report here instead of stdout")


def main(argv=None) -> int:
    parser = _Parser(prog="semiquant",
                     description="Corrected semiclassical spectra and bound-state thresholds")
    parser.add_argument("--version", action="version", version=f"semiquant {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("spectrum", help="bound levels of one well")
    _add_common(p)
    p.add_argument("--mode", default="class-exact",
                   choices=("leading", "first-order", "class-exact", "two-param"))
    p.add_argument("--t", type=float, default=0.0, help="deviation parameter for two-param")
    p.add_argument("--max-levels", type=int, default=None)
    p.add_argument("--oracle", choices=("none", "auto", "grid"), default="auto")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("thresholds", help="strengths where new bound states appear")
    _add_common(p)
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--fixed-w", type=float, default=None,
                   help="derived report: hold W fixed so k drifts with U")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("compare", help="mode errors against the oracle")
    _add_common(p)
    p.add_argument("--modes", default="leading,first-order,class-exact")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--beta-sweep", action="store_true",
                   help="also run at beta x 1/2 and x 1/4 and fit error slopes")
    p.add_argument("--max-levels", type=int, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="run the invariant suite")
    _add_common(p, with_model=False)
    p.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
