"""
Semilinear problems Delta^{alpha/2} u = u^gamma on balls, radial case.

All three solvers work with the integral form

    u + G_D(u^gamma) = Rhs,

where Rhs is the harmonic extension H_D f of exterior data (Dirichlet
problem), the Martin integral of a constant boundary datum (moderate blow-up),
or, for genuine blow-up, the limit of Dirichlet problems on an exhausting
sequence of balls with a supersolution as exterior data.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import fraclap, operators
from .model import BallPotError, FracParams, ParameterError
from .operators import ExteriorData, GreenOperator, PowerFit, RadialGrid, RadialProfile
from .quad import SingularIntegrand, integrate

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_DAMPING = 0.5
DEFAULT_MAX_ITER = 500
DEFAULT_EXHAUSTION_CAP = 100000
C_MARGIN = 1.05


class RegimeError(BallPotError):
    """The requested problem has no solution, or lies in a range left open."""


class ConvergenceError(BallPotError):
    """Fixed-point iteration stopped without meeting its tolerance."""


class Existence(enum.Enum):
    EXISTS = "exists"
    NONE = "none"
    OPEN = "open"


@dataclass(frozen=True)
class Regime:
    alpha: float
    gamma: float
    moderate: Existence
    blowup: Existence


def critical_exponent(alpha: float) -> float:
    return (2.0 + alpha) / (2.0 - alpha)


def classify(params: FracParams | float, gamma: float) -> Regime:
    """Existence regime of the moderate and genuine blow-up problems for (alpha, gamma)."""
    alpha = params.alpha if isinstance(params, FracParams) else float(params)
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    crit = critical_exponent(alpha)
    moderate = Existence.EXISTS if gamma < crit else Existence.NONE
    if 1.0 + alpha < gamma < crit:
        blowup = Existence.EXISTS
    elif gamma < 1.0 + 0.5 * alpha:
        blowup = Existence.NONE
    else:
        blowup = Existence.OPEN
    return Regime(alpha, gamma, moderate, blowup)


@dataclass
class SolveReport:
    profile: RadialProfile
    residual: float
    iterations: int
    converged: bool
    boundary_exponent: PowerFit | None = None
    sandwich_ok: bool | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


# ----------------------------------------------------------------------------
# the discrete fixed-point problem u + s G(u^gamma) = rhs

def _solve_integral_equation(op: GreenOperator, rhs, gamma, scale, q, u0=None, tol=DEFAULT_TOL,
                             damping=DEFAULT_DAMPING, max_iter=DEFAULT_MAX_ITER, method="newton"):
    """Solve u + scale * G(u^gamma) = rhs for u >= 0 on the operator grid.

    ``q`` is the boundary exponent used to extend u^gamma past the last node
    (u^gamma ~ delta^q).  Returns (u, residual, iterations, converged).
    """
    rhs = np.asarray(rhs, dtype=float)
    tail = op.tail(q) if q + 0.5 * op.params.alpha > -1.0 else None
    w = op.weights.copy()
    if tail is not None:
        w[:, -1] += tail
    w *= scale
    norm = max(float(np.max(np.abs(rhs))), 1e-300)

    def residual_vec(u):
        return u + w @ np.power(u, gamma) - rhs

    u = np.maximum(rhs if u0 is None else np.asarray(u0, dtype=float), 0.0).copy()
    res = residual_vec(u)
    it = 0
    for it in range(1, max_iter + 1):
        if method == "newton":
            jac = np.eye(u.size) + w * (gamma * np.power(u, gamma - 1.0))[None, :]
            step = np.linalg.solve(jac, -res)
            lam = 1.0
            best = float(np.max(np.abs(res)))
            # backtrack to keep u >= 0 and decrease the residual
            while True:
                trial = u + lam * step
                if np.all(trial >= 0.0):
                    tr = residual_vec(trial)
                    if float(np.max(np.abs(tr))) < best or lam < 1e-6:
                        break
                lam *= 0.5
                if lam < 1e-12:
                    trial = np.maximum(u + step, 0.0)
                    tr = residual_vec(trial)
                    break
            u, res = trial, tr
        elif method == "picard":
            target = np.maximum(rhs - w @ np.power(u, gamma), 0.0)
            u = (1.0 - damping) * u + damping * target
            res = residual_vec(u)
        else:
            raise ParameterError(f"unknown method {method!r}")
        if float(np.max(np.abs(res))) <= tol * norm:
            break
    resid = float(np.max(np.abs(res)))
    return u, resid, it, resid <= tol * norm


def _clip_exponent(q: float, alpha: float) -> float:
    return max(q, -1.0 - 0.5 * alpha + 1e-3)


# ----------------------------------------------------------------------------
# Dirichlet problem on B_t

def solve_dirichlet(params: FracParams, t: float, f: ExteriorData, gamma: float,
                    op: GreenOperator | None = None, tol: float = DEFAULT_TOL,
                    damping: float = DEFAULT_DAMPING, max_iter: int = DEFAULT_MAX_ITER,
                    method: str = "newton", u0=None, strict: bool = False) -> SolveReport:
    """u + G_{B_t}(u^gamma) = H_{B_t} f on B_t, u = f outside.

    The profile lives on the grid of ``op`` scaled by t; its ``delta`` array
    holds the distance to the unit sphere.  With ``strict`` a
    ConvergenceError is raised instead of returning a flagged report.
    """
    if not 0.0 < t <= 1.0:
        raise ParameterError("ball radius t must lie in (0, 1]")
    if not gamma > 0.0:
        raise ParameterError("gamma must be positive")
    op = op or operators.green_operator(params)
    unit = op.grid
    x = t * unit.nodes
    hf = np.array([operators.harmonic_apply(params, t, f, xi, x_gap=t * di)
                   for xi, di in zip(x, unit.delta)])
    if not np.all(np.isfinite(hf)):
        raise BallPotError("harmonic extension of the exterior data diverges")
    if np.all(hf == 0.0):
        u, resid, it, ok = np.zeros_like(hf), 0.0, 0, True
    else:
        # bounded exterior data near the sphere |y| = t: u is bounded there
        u, resid, it, ok = _solve_integral_equation(op, hf, gamma, t**params.alpha, 0.0, u0, tol,
                                                    damping, max_iter, method)
    if not ok:
        log.warning("solve_dirichlet: residual %.3g after %d iterations", resid, it)
        if strict:
            raise ConvergenceError(f"Dirichlet iteration did not converge (residual {resid:.3g})")
    grid = RadialGrid(x, 1.0 - t + t * unit.delta)
    prof = RadialProfile(grid, u, 0.0, {"t": t, "rhs": hf})
    return SolveReport(prof, resid, it, ok, meta={"t": t, "rhs_norm": float(np.max(np.abs(hf)))})


def evaluate_dirichlet(params: FracParams, report: SolveReport, f: ExteriorData, gamma: float,
                       x, op: GreenOperator | None = None) -> np.ndarray:
    """Evaluate a Dirichlet solution at arbitrary radii x < t via u = H f - G(u^gamma)."""
    op = op or operators.green_operator(params)
    t = report.meta["t"]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x >= t):
        raise ParameterError("evaluation radii must lie inside B_t")
    hf = np.array([operators.harmonic_apply(params, t, f, xi, x_gap=(1.0 - xi) - (1.0 - t)) for xi in x])
    g = op.apply_at(np.power(report.profile.values, gamma), 1.0 - x / t, 0.0)
    return hf - t**params.alpha * g


# ----------------------------------------------------------------------------
# moderate blow-up

def martin_rhs(params: FracParams, g: float, grid: RadialGrid) -> np.ndarray:
    """Martin integral of the constant g, normalized so that delta^{1-alpha/2} M g -> g."""
    from .kernels import martin_trace_constant
    return g * operators.martin_one(params, grid.nodes) / martin_trace_constant(params)


def solve_moderate(params: FracParams, gamma: float, g: float = 1.0, op: GreenOperator | None = None,
                   tol: float = DEFAULT_TOL, damping: float = DEFAULT_DAMPING,
                   max_iter: int = DEFAULT_MAX_ITER, method: str = "newton", u0=None,
                   fit_window: int = 20) -> SolveReport:
    """u + G_B(u^gamma) = M g on B with boundary trace delta^{1-alpha/2} u -> g."""
    reg = classify(params, gamma)
    if reg.moderate is not Existence.EXISTS:
        raise RegimeError(
            f"no nonnegative moderate solution for gamma = {gamma} >= (2+alpha)/(2-alpha) = "
            f"{critical_exponent(params.alpha):.6g}")
    if not g > 0.0:
        raise ParameterError("boundary datum g must be positive")
    op = op or operators.green_operator(params)
    grid = op.grid
    rhs = martin_rhs(params, g, grid)
    q = _clip_exponent(gamma * (0.5 * params.alpha - 1.0), params.alpha)
    if isinstance(u0, str):
        u0 = {"rhs": rhs, "zero": np.zeros_like(rhs)}[u0]
    u, resid, it, ok = _solve_integral_equation(op, rhs, gamma, 1.0, q, u0, tol, damping, max_iter, method)
    prof = RadialProfile(grid, u, 0.5 * params.alpha - 1.0, {"rhs": rhs})
    fit = operators.fit_power_law(grid.delta, u, fit_window)
    trace = grid.delta ** (1.0 - 0.5 * params.alpha) * u
    return SolveReport(prof, resid, it, ok, fit, meta={
        "rhs_norm": float(np.max(np.abs(rhs))), "trace": trace, "g": g})


# ----------------------------------------------------------------------------
# genuine blow-up

def measure_lemma_constant(params: FracParams, beta: float, radii=None) -> tuple[float, float]:
    """Extremes over ``radii`` of Delta^{alpha/2} theta_beta / theta_beta^gamma, by PV quadrature.

    With gamma = 1 + alpha/beta this ratio is Delta theta (1 - r^2)^{alpha+beta}.
    """
    if radii is None:
        radii = np.concatenate([np.linspace(0.0, 0.9, 10), [0.95, 0.99, 0.999]])
    prof = fraclap.PowerProfile(beta)
    vals = [fraclap.fraclap_radial_quad(params, prof, float(r)) * (1.0 - r * r) ** (params.alpha + beta)
            for r in radii]
    return float(min(vals)), float(max(vals))


def _exhaustion_sequence(cap: int):
    n, out = 4, []
    while n < cap:
        out.append(n)
        n *= 4
    out.append(cap)
    return out


def solve_blowup(params: FracParams, gamma: float, op: GreenOperator | None = None,
                 tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                 exhaustion_cap: int = DEFAULT_EXHAUSTION_CAP, out_grid: RadialGrid | None = None,
                 check_radii=None, method: str = "newton", fit_window: int = 20) -> SolveReport:
    """Blow-up solution as the decreasing limit of Dirichlet problems on B_n, radius 1 - 1/n.

    The exterior data are the supersolution v = K theta_beta, beta = alpha/(gamma-1),
    with K^{gamma-1} = C_MARGIN * max(c2, 1/c1), where [c1, c2] is the measured
    range of Delta theta_beta / theta_beta^gamma.
    """
    reg = classify(params, gamma)
    if reg.blowup is Existence.NONE:
        raise RegimeError(f"no nonnegative blow-up solution for gamma = {gamma} < 1 + alpha/2")
    if reg.blowup is Existence.OPEN:
        raise RegimeError(
            f"gamma = {gamma} lies in a range where existence of blow-up solutions is open "
            "(1 + alpha/2 <= gamma <= 1 + alpha or gamma >= (2+alpha)/(2-alpha)); no attempt is made")
    a = params.alpha
    beta = a / (gamma - 1.0)
    c1, c2 = measure_lemma_constant(params, beta)
    big_c = C_MARGIN * max(c2, 1.0 / c1)
    k = big_c ** (1.0 / (gamma - 1.0))
    sup = operators.power_exterior(beta, k)
    op = op or operators.green_operator(params)
    if out_grid is None:
        # keep every output node at least 10/n from the last exhaustion sphere
        out_grid = RadialGrid.geometric(96, 10.0 / exhaustion_cap)
    if out_grid.delta[-1] <= 1.0 / exhaustion_cap:
        raise ParameterError("output grid reaches beyond the last exhaustion ball")
    theta_out = (out_grid.delta * (2.0 - out_grid.delta)) ** (-beta)
    if check_radii is None:
        check_radii = np.array([0.0, 0.5, 0.9])

    seq = _exhaustion_sequence(exhaustion_cap)
    sandwich_ok = True
    monotone_ok = True
    converged = True
    worst = 0.0
    iters = 0
    prev_check = None
    history = []
    for n in seq:
        t = 1.0 - 1.0 / n
        rep = solve_dirichlet(params, t, sup, gamma, op, tol, max_iter=max_iter, method=method)
        converged &= rep.converged
        worst = max(worst, rep.residual / max(rep.meta["rhs_norm"], 1e-300))
        iters += rep.iterations
        x = rep.profile.grid.nodes
        th = (rep.profile.grid.delta * (2.0 - rep.profile.grid.delta)) ** (-beta)
        lo_ok = np.all(rep.profile.values >= th / k * (1.0 - 1e-8))
        hi_ok = np.all(rep.profile.values <= k * th * (1.0 + 1e-8))
        sandwich_ok &= bool(lo_ok and hi_ok)
        chk = evaluate_dirichlet(params, rep, sup, gamma, check_radii[check_radii < t], op)
        if prev_check is not None:
            m = min(chk.size, prev_check.size)
            monotone_ok &= bool(np.all(chk[:m] <= prev_check[:m] + 1e-8 * np.abs(prev_check[:m])))
        prev_check = chk
        history.append({"n": n, "t": t, "residual": rep.residual, "check": chk})
        log.info("exhaustion n=%d residual=%.3g", n, rep.residual)
        last = rep
    vals = evaluate_dirichlet(params, last, sup, gamma, out_grid.nodes, op)
    fit = operators.fit_power_law(out_grid.delta, vals, fit_window)
    lower, upper = theta_out / k, k * theta_out
    sandwich_ok &= bool(np.all(vals >= lower * (1.0 - 1e-8)) and np.all(vals <= upper * (1.0 + 1e-8)))
    prof = RadialProfile(out_grid, vals, fit.exponent, {"beta": beta})
    return SolveReport(prof, worst, iters, converged and monotone_ok, fit, sandwich_ok, lower, upper,
                       meta={"beta": beta, "K": k, "C": big_c, "c1": c1, "c2": c2,
                             "monotone": monotone_ok, "history": history,
                             "expected_exponent": a / (1.0 - gamma)})


# ----------------------------------------------------------------------------
# nonexistence

@dataclass
class NonexistenceReport:
    mode: str
    gamma: float
    alpha: float
    divergent: bool
    values: np.ndarray
    radii: np.ndarray
    explanation: str
    meta: dict = field(default_factory=dict)


def exhaustion_potential(params: FracParams, gamma: float, t: float, g: float = 1.0) -> float:
    """G_{B_t}((M g)^gamma)(0), with M g the normalized Martin integral of the constant g."""
    from .kernels import green_origin, martin_trace_constant
    a, n = params.alpha, params.dim
    om = params.constants.omega_sphere
    c = g * om / martin_trace_constant(params)

    # G_{B_t} f(0) = t^alpha int_0^1 omega rho^{N-1} G_B(0, rho) f(t rho) drho;
    # 1 - t rho = (1 - t) + t (1 - rho) keeps the near-boundary layer accurate
    def core(s, lo, hi):
        one_m = (1.0 - t) + t * hi
        m = c * (one_m * (1.0 + t * s)) ** (0.5 * a - 1.0)
        return om * s ** (n - 1) * green_origin(params, s) * m**gamma

    val = integrate(SingularIntegrand(core, 0.0, 1.0, a - 1.0, 0.5 * a, offsets=True), 1e-10)
    return t**a * val


def nonexistence_probe(params: FracParams, mode: str, gamma: float, g: float = 1.0,
                       decades=range(1, 6)) -> NonexistenceReport:
    """Numerical form of the nonexistence arguments.

    ``moderate``: the exhaustion potentials G_{B_t}((M g)^gamma)(0) for
    t = 1 - 10^{-k}, classified by whether their increments contract.
    ``blowup``: a solution would satisfy u <= c delta^{-1}, so G(u^gamma) is
    dominated by G(delta^{-gamma}), which is finite when gamma < 1 + alpha/2,
    whereas a blow-up solution forces G(u^gamma) = inf.
    """
    a = params.alpha
    if mode == "moderate":
        radii = np.array([0.5] + [1.0 - 10.0 ** (-k) for k in decades])
        vals = np.array([exhaustion_potential(params, gamma, t, g) for t in radii])
        inc = np.diff(vals[1:])
        ratio = float(inc[-1] / inc[-2])
        monotone = bool(np.all(np.diff(vals) > 0.0))
        divergent = monotone and ratio >= 1.0 - 1e-3
        lam = gamma * (1.0 - 0.5 * a)
        text = (f"potential of (Mg)^gamma ~ delta^-{lam:.6g} at the origin over B_t, t -> 1: "
                f"growth factor {vals[-1] / vals[0]:.6g} relative to t = 0.5, last increment ratio "
                f"{ratio:.6g}; {'divergent' if divergent else 'convergent'} "
                f"(threshold 1 + alpha/2 = {1.0 + 0.5 * a:.6g})")
        return NonexistenceReport(mode, gamma, a, divergent, vals, radii, text,
                                  {"increment_ratio": ratio, "lambda": lam, "monotone": monotone})
    if mode == "blowup":
        diag = operators.delta_power_diagnostic(params, gamma)
        vals = operators.origin_partial_potentials(params, gamma, [10.0 ** (-k) for k in range(2, 10)])
        thr = 1.0 + 0.5 * a
        text = (f"a solution satisfies u <= c delta^-1, so G(u^gamma) <= c G(delta^-{gamma:.6g}); "
                f"lambda = {gamma:.6g} {'<' if gamma < thr else '>='} 1 + alpha/2 = {thr:.6g}, "
                f"potential {diag.label}, contradicting G(u^gamma) = inf"
                if diag.finite else
                f"lambda = {gamma:.6g} >= 1 + alpha/2: G(delta^-lambda) diverges, no contradiction")
        return NonexistenceReport(mode, gamma, a, not diag.finite, vals,
                                  np.array([1.0 - 10.0 ** (-k) for k in range(2, 10)]), text,
                                  {"lambda": gamma, "finite": diag.finite, "limit": float(vals[-1])})
    raise ParameterError(f"unknown mode {mode!r}")


def fit_boundary_exponent(u: RadialProfile, k: int = 20) -> PowerFit:
    """Least-squares slope of log u against log delta over the outermost k nodes."""
    return operators.fit_power_law(u.grid.delta, u.values, k)
