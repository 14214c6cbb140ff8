"""Command-line front end; tables go out as CSV."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import fraclap, kernels, operators, solver
from .model import BallPotError, FracParams, ParameterError

log = logging.getLogger("ballpot")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NONCONVERGED = 3
EXIT_REGIME = 4

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
               "debug": logging.DEBUG}


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in str(text).replace(";", ",").split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


# option name -> (type, default); argparse defaults are None so that flags,
# config entries and these defaults can be layered in that order
OPTIONS = {
    "alpha": (float, 1.0),
    "dim": (int, 3),
    "gamma": (float, None),
    "m": (int, 256),
    "delta_min": (float, 1e-6),
    "tol": (float, solver.DEFAULT_TOL),
    "damping": (float, solver.DEFAULT_DAMPING),
    "max_iter": (int, solver.DEFAULT_MAX_ITER),
    "cap": (int, solver.DEFAULT_EXHAUSTION_CAP),
    "method": (str, "newton"),
    "out": (str, None),
    "eval": (_float_list, None),
    "x": (float, 0.0),
    "t": (float, 0.5),
    "beta": (float, None),
    "lam": (float, None),
    "g": (float, 1.0),
    "f_const": (float, None),
    "f_beta": (float, None),
    "f_scale": (float, 1.0),
    "gammas": (_float_list, None),
    "fit": (lambda s: str(s).lower() in ("1", "true", "yes", "on"), False),
}


@dataclass
class RunConfig:
    command: str
    kind: str | None
    alpha: float
    dim: int
    gamma: float | None
    m: int
    delta_min: float
    tol: float
    damping: float
    max_iter: int
    cap: int
    method: str
    out: str | None
    extra: dict = field(default_factory=dict)

    def params(self) -> FracParams:
        return FracParams(self.dim, self.alpha)

    def validate(self):
        self.params()
        if self.m < 64:
            raise ParameterError("grid size m must be at least 64")
        if not 0.0 < self.delta_min < 0.5:
            raise ParameterError("delta-min must lie in (0, 1/2)")
        if not self.tol > 0.0:
            raise ParameterError("tol must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ParameterError("damping must lie in (0, 1]")
        if self.max_iter < 1:
            raise ParameterError("max-iter must be positive")
        if self.cap < 4:
            raise ParameterError("exhaustion cap must be at least 4")
        if self.method not in ("newton", "picard"):
            raise ParameterError("method must be newton or picard")
        if self.gamma is not None and not self.gamma > 0.0:
            raise ParameterError("gamma must be positive")


def read_config(path: str) -> dict:
    """Flat key=value file; '#' starts a comment, dashes in keys are read as underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "lambda":
                key = "lam"
            if key not in OPTIONS:
                raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


# ----------------------------------------------------------------------------
# parser

def _common(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--m", type=int, help="grid size")
    p.add_argument("--delta-min", type=float, help="1 - r of the outermost node")
    p.add_argument("--tol", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--cap", type=int, help="exhaustion cap")
    p.add_argument("--method", choices=["newton", "picard"])
    p.add_argument("--out", help="CSV destination (default stdout)")
    p.add_argument("--config", help="key=value file; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ballpot", description=(
        "Fractional Laplacian potentials and semilinear blow-up problems on the unit ball."))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="normalization constants")
    _common(p)

    p = sub.add_parser("kernel", help="Green, Poisson or Martin kernel along a ray")
    p.add_argument("kind", choices=["green", "poisson", "martin"])
    p.add_argument("--eval", type=_float_list, help="radii r, comma-separated")
    p.add_argument("--x", type=float, help="radius of the pole (green, poisson)")
    p.add_argument("--t", type=float, help="ball radius (poisson)")
    _common(p)

    p = sub.add_parser("fraclap", help="fractional Laplacian of (1-|x|^2)^-beta")
    p.add_argument("--beta", type=float)
    p.add_argument("--eval", type=_float_list)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--closed", dest="which", action="store_const", const="closed")
    g.add_argument("--quad", dest="which", action="store_const", const="quad")
    g.add_argument("--both", dest="which", action="store_const", const="both")
    _common(p)

    p = sub.add_parser("potential", help="Green potential of delta^-lambda")
    p.add_argument("--lambda", dest="lam", type=float)
    _common(p)

    p = sub.add_parser("solve", help="semilinear problems")
    p.add_argument("kind", choices=["dirichlet", "moderate", "blowup"])
    p.add_argument("--t", type=float, help="ball radius (dirichlet)")
    p.add_argument("--f-const", type=float, help="constant exterior data (dirichlet)")
    p.add_argument("--f-beta", type=float, help="exterior data f-scale (1-r^2)^-f-beta (dirichlet)")
    p.add_argument("--f-scale", type=float)
    p.add_argument("--g", type=float, help="boundary datum (moderate)")
    _common(p)

    p = sub.add_parser("regimes", help="existence regimes for (alpha, gamma)")
    _common(p)

    p = sub.add_parser("rates", help="blow-up exponent table over a gamma grid")
    p.add_argument("--gammas", type=_float_list)
    p.add_argument("--fit", action="store_const", const="true", help="solve and fit each entry")
    _common(p)
    return parser


def resolve(ns: argparse.Namespace) -> RunConfig:
    """Layer flags over the config file over built-in defaults."""
    cfg = read_config(ns.config) if getattr(ns, "config", None) else {}
    vals = {}
    for key, (conv, default) in OPTIONS.items():
        given = getattr(ns, key, None)
        if given is not None:
            vals[key] = given
        elif key in cfg:
            try:
                vals[key] = conv(cfg[key])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ParameterError(f"config value for {key!r}: {exc}") from exc
        else:
            vals[key] = default
    which = getattr(ns, "which", None)
    core = {k: vals.pop(k) for k in ("alpha", "dim", "gamma", "m", "delta_min", "tol", "damping",
                                     "max_iter", "cap", "method", "out")}
    vals["which"] = which or "both"
    rc = RunConfig(ns.command, getattr(ns, "kind", None), extra=vals, **core)
    rc.validate()
    return rc


# ----------------------------------------------------------------------------
# output

def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class Table:
    def __init__(self):
        self.buf = io.StringIO()
        self.w = csv.writer(self.buf, lineterminator="\n")

    def row(self, *vals):
        self.w.writerow([fmt(v) for v in vals])

    def text(self) -> str:
        return self.buf.getvalue()


def _need(rc: RunConfig, key: str, flag: str):
    v = rc.gamma if key == "gamma" else rc.extra.get(key)
    if v is None:
        raise ParameterError(f"{flag} is required for {rc.command}")
    return v


# ----------------------------------------------------------------------------
# commands

def cmd_constants(rc: RunConfig, out: Table) -> int:
    p = rc.params()
    c = p.constants
    out.row("dim", "alpha", "c_int", "c_pois", "kappa_green", "omega_sphere", "omega_ring")
    out.row(p.dim, p.alpha, c.c_int, c.c_pois, c.kappa_green, c.omega_sphere, c.omega_ring)
    return EXIT_OK


def cmd_kernel(rc: RunConfig, out: Table) -> int:
    p = rc.params()
    radii = _need(rc, "eval", "--eval")
    x, t = rc.extra["x"], rc.extra["t"]
    out.row("r", "delta", "value")
    e1 = np.eye(p.dim)[0]
    for r in radii:
        if rc.kind == "green":
            if not (0.0 <= r < 1.0 and 0.0 <= x < 1.0):
                raise ParameterError("green kernel needs radii in [0, 1)")
            v = kernels.green_origin(p, r) if x == 0.0 else kernels.green_ball(p, x * e1, r * e1)
        elif rc.kind == "poisson":
            v = kernels.poisson_kernel(p, t, x * e1, r * e1)
        else:
            v = kernels.martin_kernel(p, r * e1, e1)
        out.row(r, 1.0 - r, float(v))
    return EXIT_OK


def cmd_fraclap(rc: RunConfig, out: Table) -> int:
    p = rc.params()
    prof = fraclap.PowerProfile(_need(rc, "beta", "--beta"))
    prof.check(p)
    radii = rc.extra["eval"] or [0.1 * k for k in range(10)]
    which = rc.extra["which"]
    cols = {"closed": ["closed"], "quad": ["quad"], "both": ["quad", "closed"]}[which]
    out.row("r", "delta", *cols, "exact")
    for r in radii:
        vals = []
        for c in cols:
            if c == "quad":
                vals.append(fraclap.fraclap_radial_quad(p, prof, r))
            else:
                vals.append(fraclap.fraclap_power_closed(p, prof, r))
        out.row(r, 1.0 - r, *vals, fraclap.fraclap_power_exact(p, prof, r))
    return EXIT_OK


def cmd_potential(rc: RunConfig, out: Table) -> int:
    p = rc.params()
    lam = _need(rc, "lam", "--lambda")
    op = operators.green_operator(p, rc.m, rc.delta_min)
    rep = operators.delta_power_diagnostic(p, lam, op)
    if not rep.finite:
        print(f"ballpot: G(delta^-{lam:g}) is {rep.label} (increment ratio {rep.increment_ratio:.6g})",
              file=sys.stderr)
        return EXIT_NONCONVERGED
    out.row("r", "delta", "value")
    for r, d, v in zip(rep.profile.grid.nodes, rep.profile.grid.delta, rep.profile.values):
        out.row(r, d, v)
    return EXIT_OK


def _report_block(out: Table, rep: solver.SolveReport, extra: dict):
    fit = rep.boundary_exponent
    out.row("key", "value")
    out.row("residual", rep.residual)
    out.row("iterations", rep.iterations)
    out.row("converged", rep.converged)
    out.row("exponent", fit.exponent if fit else "nan")
    out.row("stderr", fit.stderr if fit else "nan")
    out.row("sandwich_ok", rep.sandwich_ok if rep.sandwich_ok is not None else "nan")
    for k, v in extra.items():
        out.row(k, v)
    out.row("r", "delta", "u", "lower", "upper")
    grid = rep.profile.grid
    nan = np.full(grid.size, np.nan)
    lower = rep.lower if rep.lower is not None else nan
    upper = rep.upper if rep.upper is not None else nan
    for row in zip(grid.nodes, grid.delta, rep.profile.values, lower, upper):
        out.row(*row)


def cmd_solve(rc: RunConfig, out: Table) -> int:
    p = rc.params()
    gamma = _need(rc, "gamma", "--gamma")
    op = operators.green_operator(p, rc.m, rc.delta_min)
    x = rc.extra
    if rc.kind == "dirichlet":
        if (x["f_const"] is None) == (x["f_beta"] is None):
            raise ParameterError("dirichlet needs exactly one of --f-const, --f-beta")
        f = (operators.ExteriorData.constant(x["f_const"]) if x["f_const"] is not None
             else operators.power_exterior(x["f_beta"], x["f_scale"]))
        rep = solver.solve_dirichlet(p, x["t"], f, gamma, op, rc.tol, rc.damping, rc.max_iter, rc.method)
        extra = {"t": x["t"]}
    elif rc.kind == "moderate":
        rep = solver.solve_moderate(p, gamma, x["g"], op, rc.tol, rc.damping, rc.max_iter, rc.method)
        extra = {"g": x["g"], "expected_exponent": 0.5 * p.alpha - 1.0}
    else:
        rep = solver.solve_blowup(p, gamma, op, rc.tol, rc.max_iter, rc.cap, method=rc.method)
        extra = {k: rep.meta[k] for k in ("beta", "K", "c1", "c2", "monotone", "expected_exponent")}
    _report_block(out, rep, extra)
    if not rep.converged:
        print(f"ballpot: solve {rc.kind} did not converge (residual {rep.residual:.3g})", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_regimes(rc: RunConfig, out: Table) -> int:
    reg = solver.classify(rc.alpha, _need(rc, "gamma", "--gamma"))
    out.row("moderate", reg.moderate.value)
    out.row("blowup", reg.blowup.value)
    return EXIT_OK


def cmd_rates(rc: RunConfig, out: Table) -> int:
    p = rc.params()
    gammas = _need(rc, "gammas", "--gammas")
    do_fit = rc.extra["fit"]
    op = operators.green_operator(p, rc.m, rc.delta_min) if do_fit else None
    out.row("gamma", "moderate", "blowup", "expected_exponent", "fitted_exponent", "stderr")
    status = EXIT_OK
    for g in gammas:
        reg = solver.classify(p, g)
        expected = p.alpha / (1.0 - g) if g > 1.0 else float("nan")
        fitted = stderr = float("nan")
        if do_fit and reg.blowup is solver.Existence.EXISTS:
            rep = solver.solve_blowup(p, g, op, rc.tol, rc.max_iter, rc.cap, method=rc.method)
            fitted, stderr = rep.boundary_exponent.exponent, rep.boundary_exponent.stderr
            if not rep.converged:
                status = EXIT_NONCONVERGED
        out.row(g, reg.moderate.value, reg.blowup.value, expected, fitted, stderr)
    return status


COMMANDS = {"constants": cmd_constants, "kernel": cmd_kernel, "fraclap": cmd_fraclap,
            "potential": cmd_potential, "solve": cmd_solve, "regimes": cmd_regimes,
            "rates": cmd_rates}


def _setup_logging():
    level = _LOG_LEVELS.get(os.environ.get("BALLPOT_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("ballpot").setLevel(level)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        rc = resolve(ns)
        table = Table()
        code = COMMANDS[rc.command](rc, table)
    except solver.RegimeError as exc:
        print(f"ballpot: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except solver.ConvergenceError as exc:
        print(f"ballpot: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ParameterError, OSError) as exc:
        print(f"ballpot: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BallPotError as exc:
        print(f"ballpot: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    text = table.text()
    if rc.out:
        with open(rc.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
