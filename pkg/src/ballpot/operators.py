"""
Green potential, harmonic measure and Martin integral of radial data on the unit ball.

Radial functions are passed as callables ``f(rho, delta)`` where ``delta`` is
1 - rho computed without cancellation; vectorized callables are much faster.
Discrete profiles live on a :class:`RadialGrid` graded geometrically toward
the boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import stats

from . import kernels
from .model import FracParams, ParameterError
from .quad import SingularIntegrand, gauss_legendre, integrate

log = logging.getLogger(__name__)

INF = float("inf")


# ----------------------------------------------------------------------------
# exterior data and harmonic measure

@dataclass(frozen=True)
class ExteriorData:
    """Radial data on the complement of B_t.

    ``inner(rho, delta)`` gives the values on t < rho < 1 and behaves like
    delta**inner_exponent as delta -> 0; the data equal the constant ``outer``
    on rho >= 1.  ``inner=None`` means zero inside B.
    """

    inner: Callable | None = None
    inner_exponent: float = 0.0
    outer: float = 0.0

    @classmethod
    def constant(cls, c: float) -> "ExteriorData":
        return cls(lambda rho, delta: np.full_like(np.asarray(rho, dtype=float), c), 0.0, c)


def _harmonic_weight(params: FracParams, t: float, x: float, x_gap: float):
    """Return w(rho, rho - t) with H f(x) = int_t^inf w f drho, from the closed-form sphere average."""
    a = params.alpha
    pref = 2.0 * math.sin(0.5 * math.pi * a) / math.pi * (x_gap * (t + x)) ** (0.5 * a)

    def w(rho, gap):
        return pref * rho * (gap * (rho + t)) ** (-0.5 * a) / ((gap + x_gap) * (rho + x))

    return w


def harmonic_apply(params: FracParams, t: float, f: ExteriorData, x: float,
                   rel_tol: float = 1e-10, angular: str = "exact", x_gap: float | None = None) -> float:
    """Harmonic measure of B_t applied to radial exterior data, at radius x < t.

    ``angular="exact"`` uses the closed-form average of |x - y|^{-N} over
    spheres; ``angular="quadrature"`` integrates the Poisson kernel in the
    polar angle instead (slower, used as a cross-check).  ``x_gap`` = t - x
    may be passed when known more accurately than the float subtraction.
    """
    if not (0.0 < t <= 1.0 and 0.0 <= x < t):
        raise ParameterError("harmonic_apply needs 0 <= x < t <= 1")
    if angular not in ("exact", "quadrature"):
        raise ParameterError(f"unknown angular mode {angular!r}")
    if x_gap is None:
        x_gap = t - x
    a = params.alpha
    total = 0.0
    if f.inner is not None and t < 1.0:
        if angular == "exact":
            w = _harmonic_weight(params, t, x, x_gap)

            def core(rho, gap, delta):
                return w(rho, gap) * f.inner(rho, delta)
        else:
            def core(rho, gap, delta):
                rho = np.asarray(rho, dtype=float)
                dens = rho ** (params.dim - 1) * kernels.poisson_sphere(params, t, x, rho, gap, x_gap)
                return dens * f.inner(rho, delta)
        total += integrate(SingularIntegrand(core, t, 1.0, -0.5 * a, f.inner_exponent, offsets=True),
                           rel_tol)
    if f.outer != 0.0 and angular == "quadrature":
        # rho = 1/v on (1, inf), Poisson kernel integrated over each sphere by polar quadrature
        n = params.dim

        def tail_q(v, lo, hi):
            gap = hi / v + (1.0 - t)
            return v ** (-n - 1.0) * kernels.poisson_sphere(params, t, x, 1.0 / v, gap, x_gap)

        val = integrate(SingularIntegrand(tail_q, 0.0, 1.0, a - 1.0, -0.5 * a if t == 1.0 else 0.0,
                                          offsets=True), rel_tol)
        total += f.outer * val
    elif f.outer != 0.0:
        # rho = 1/v on (1, inf)
        pref = 2.0 * math.sin(0.5 * math.pi * a) / math.pi * (x_gap * (t + x)) ** (0.5 * a)

        def tail(v):
            return v ** (a - 1.0) * (1.0 - t * t * v * v) ** (-0.5 * a) / (1.0 - x * x * v * v)

        lo_exp = a - 1.0
        right_exp = -0.5 * a if t == 1.0 else 0.0
        if t == 1.0:
            def tail_off(v, lo, hi):
                # 1 - x v = (1 - v) + v (1 - x) when t = 1
                return v ** (a - 1.0) * (hi * (1.0 + v)) ** (-0.5 * a) / ((hi + v * x_gap) * (1.0 + x * v))
            val = integrate(SingularIntegrand(tail_off, 0.0, 1.0, lo_exp, right_exp, offsets=True), rel_tol)
        else:
            val = integrate(SingularIntegrand(tail, 0.0, 1.0, lo_exp, 0.0), rel_tol)
        total += f.outer * pref * val
    return total


def harmonic_origin(params: FracParams, t: float, f: ExteriorData, rel_tol: float = 1e-10) -> float:
    """H_{B_t} f(0) = (2 sin(pi alpha/2)/pi) t^alpha int_t^inf f(rho) / (rho (rho^2 - t^2)^{alpha/2}) drho."""
    return harmonic_apply(params, t, f, 0.0, rel_tol)


def power_exterior(beta: float, scale: float = 1.0) -> ExteriorData:
    """scale * (1 - rho^2)^{-beta} on rho < 1, zero outside."""
    return ExteriorData(lambda rho, delta: scale * (delta * (2.0 - delta)) ** (-beta), -beta, 0.0)


# ----------------------------------------------------------------------------
# grids and profiles

@dataclass(frozen=True)
class RadialGrid:
    """Radii r_0 = 0 < ... < r_{M-1} < 1 with 1 - r_i geometric near the boundary."""

    nodes: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        if self.nodes.size < 64:
            raise ParameterError("a radial grid needs at least 64 nodes")
        if not np.all(np.diff(self.nodes) > 0):
            raise ParameterError("grid nodes must increase strictly")

    @property
    def size(self) -> int:
        return self.nodes.size

    @classmethod
    def geometric(cls, m: int = 256, delta_min: float = 1e-6, n_inner: int | None = None,
                  radius: float = 1.0) -> "RadialGrid":
        """Uniform inner block on [0, 1/2) then 1 - r geometric from 1/2 down to ``delta_min``.

        With ``radius`` < 1 the grid is scaled to the ball B_radius and
        ``delta`` is still the distance to the unit sphere.
        """
        if m < 64:
            raise ParameterError("a radial grid needs at least 64 nodes")
        if not 0.0 < delta_min < 0.5:
            raise ParameterError("delta_min must lie in (0, 1/2)")
        if n_inner is None:
            n_inner = max(8, m // 8)
        inner = np.linspace(0.0, 0.5, n_inner, endpoint=False)
        outer_delta = 0.5 * (2.0 * delta_min) ** (np.arange(m - n_inner) / (m - n_inner - 1.0))
        rel_delta = np.concatenate([1.0 - inner, outer_delta])
        nodes = radius * (1.0 - rel_delta)
        delta = 1.0 - radius + radius * rel_delta
        return cls(nodes, delta)


@dataclass
class RadialProfile:
    """Values of a radial function on a grid; zero outside the unit ball.

    ``boundary_exponent`` p, if set, extends the profile beyond the last node
    by u(r) = u_last (delta/delta_last)^p.
    """

    grid: RadialGrid
    values: np.ndarray
    boundary_exponent: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes.shape:
            raise ParameterError("profile values must match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("profile values must be finite")


# ----------------------------------------------------------------------------
# Green potential

_GL8_T, _GL8_W = gauss_legendre(8)
_GL20_T, _GL20_W = gauss_legendre(20)
_FAR = 4.0
_GRADE = 0.2
_ADJ_LEVELS = 14


def green_radial_kernel(params: FracParams, x, rho, gap=None, rho_delta=None, x_delta=None):
    """K(x, rho) = rho^{N-1} int_{|y|=rho} G_B(x e1, y) dsigma(y); G f(x) = int_0^1 K f drho."""
    rho = np.asarray(rho, dtype=float)
    return rho ** (params.dim - 1) * kernels.green_sphere(params, x, rho, gap, rho_delta, x_delta)


def _panel_singular_exponent(params: FracParams) -> float:
    # sphere average of |x-y|^{alpha-N} across rho = x: |rho-x|^{alpha-1}, log at alpha = 1
    return min(params.alpha - 1.0, -0.25) if params.alpha <= 1.0 else 0.0


class GreenOperator:
    """Product-integration discretization of G_B on a radial grid.

    Profiles are interpolated linearly between nodes and extended beyond the
    last node by a power of delta, so

        (G f)(r_i) = sum_j W_ij f_j + f_last * T_i(q),   f ~ f_last (delta/delta_last)^q.

    The weights are nonnegative, so the discrete operator is order preserving.
    By scaling, G_{B_t} f(t r_i) = t^alpha (G f(t .))(r_i).
    """

    def __init__(self, params: FracParams, grid: RadialGrid, rel_tol: float = 1e-9):
        self.params = params
        self.grid = grid
        self.rel_tol = rel_tol
        self.weights = self._build_weights()
        self._tails: dict[float, np.ndarray] = {}

    def _build_weights(self):
        p = self.params
        r = self.grid.nodes
        m = r.size
        sing = _panel_singular_exponent(p)
        w = np.zeros((m, m))
        for i in range(m):
            w[i] = self._row(r[i], self.grid.delta[i], sing)
        return w

    def _row(self, x, xd, sing):
        m = self.grid.size
        rho, gap, rd, wt, col, frac = _point_rule(self.grid, xd, sing)
        k = green_radial_kernel(self.params, np.full(rho.shape, x), rho, gap, rd, xd) * wt
        # hat functions: panel j contributes (1 - frac) to node j and frac to node j + 1
        return (np.bincount(col, k * (1.0 - frac), minlength=m)
                + np.bincount(col + 1, k * frac, minlength=m))

    def _tail_at(self, x, xd, q, singular_left):
        p = self.params
        d_last = self.grid.delta[-1]
        e = q + 0.5 * p.alpha
        if e <= -1.0:
            return INF
        base = xd - d_last

        def core(s, lo, hi):
            return green_radial_kernel(p, np.full(s.shape, x), s, base + lo, hi, xd) * (hi / d_last) ** q

        left = _panel_singular_exponent(p) if singular_left else 0.0
        return integrate(SingularIntegrand(core, 1.0 - d_last, 1.0, left, e, offsets=True),
                         self.rel_tol, 1e-300)

    def apply_at(self, values, x_delta, boundary_exponent: float = 0.0) -> np.ndarray:
        """Nystrom evaluation of G f at the radii 1 - x_delta (off-grid points allowed)."""
        values = np.asarray(values, dtype=float)
        sing = _panel_singular_exponent(self.params)
        out = []
        for xd in np.atleast_1d(np.asarray(x_delta, dtype=float)):
            if xd < self.grid.delta[-1]:
                raise ParameterError("evaluation point lies beyond the last grid node")
            val = self._row(1.0 - xd, xd, sing) @ values
            if values[-1] != 0.0:
                val += values[-1] * self._tail_at(1.0 - xd, xd, boundary_exponent,
                                                  xd == self.grid.delta[-1])
            out.append(val)
        return np.array(out)

    def tail(self, q: float) -> np.ndarray:
        """T_i(q) = int over (r_last, 1) of K(r_i, rho) (delta/delta_last)^q; +inf if divergent."""
        key = round(float(q), 12)
        if key in self._tails:
            return self._tails[key]
        p = self.params
        e = q + 0.5 * p.alpha
        d_last = self.grid.delta[-1]
        r = self.grid.nodes
        if e <= -1.0:
            out = np.full(r.size, INF)
        else:
            dl = self.grid.delta
            out = np.array([self._tail_at(r[i], dl[i], q, i == r.size - 1) for i in range(r.size)])
        self._tails[key] = out
        return out

    def apply(self, values, boundary_exponent: float = 0.0) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        out = self.weights @ values
        if values[-1] != 0.0:
            out = out + values[-1] * self.tail(boundary_exponent)
        return out


def _graded_panel(width, levels: int, sing: float):
    """Composite 8-point rule on (0, width) graded toward 0; returns (offset, weight).

    With ``sing`` < 0 the innermost subpanel is flattened for an
    offset**sing singularity.
    """
    edges = width * _GRADE ** np.arange(levels + 1)[::-1]      # increasing, last = width
    lo_edges, hi_edges = edges[:-1], edges[1:]
    sub = hi_edges - lo_edges
    offs = [(lo_edges[:, None] + sub[:, None] * _GL8_T).ravel()]
    wts = [(sub[:, None] * _GL8_W).ravel()]
    h0 = edges[0]
    if sing < 0.0:
        k = 1.0 / (1.0 + sing)
        offs.append(h0 * _GL8_T**k)
        wts.append(h0 * k * _GL8_T ** (k - 1.0) * _GL8_W)
    else:
        offs.append(h0 * _GL8_T)
        wts.append(h0 * _GL8_W)
    return np.concatenate(offs), np.concatenate(wts)


def _point_rule(grid: RadialGrid, xd: float, sing: float):
    """Quadrature against the hat basis for evaluation at the radius 1 - xd.

    Returns rho, rho - x, 1 - rho, weights, panel index and hat fraction.
    Everything is computed from boundary distances, so nodes near the sphere
    keep full relative accuracy.  A panel containing x is split there.
    """
    dl = grid.delta
    d_lo, d_hi = dl[:-1], dl[1:]           # panel j spans delta in (d_hi, d_lo)
    width = d_lo - d_hi
    below = d_hi >= xd                     # panel lies at smaller radius than x
    above = d_lo <= xd
    inside = ~(below | above)
    dist = np.where(below, d_hi - xd, np.where(above, xd - d_lo, 0.0))
    far = (dist >= _FAR * width) & ~inside
    jf = np.nonzero(far)[0]
    rd = d_lo[jf, None] - width[jf, None] * _GL8_T
    parts = [(rd.ravel(), (xd - rd).ravel(), (width[jf, None] * _GL8_W).ravel(),
              np.repeat(jf, 8), np.tile(_GL8_T, jf.size))]

    def graded(j, d, span, from_below):
        # sub-interval of panel j of length span, graded toward x at distance d
        if d == 0.0:
            levels, ps = _ADJ_LEVELS, sing
        else:
            levels, ps = max(1, int(np.ceil(np.log(span / d) / np.log(1.0 / _GRADE))) + 2), 0.0
        off, wt = _graded_panel(span, levels, ps)
        if from_below:
            rd_j = xd + d + off
            gap = -(d + off)
        else:
            rd_j = xd - d - off
            gap = d + off
        frac = (d_lo[j] - rd_j) / width[j]
        parts.append((rd_j, gap, wt, np.full(off.size, j), frac))

    for j in np.nonzero(~far)[0]:
        if inside[j]:
            graded(j, 0.0, d_lo[j] - xd, True)
            graded(j, 0.0, xd - d_hi[j], False)
        else:
            graded(j, dist[j], width[j], bool(below[j]))
    rd, gap, wt, col, frac = (np.concatenate(z) for z in zip(*parts))
    return 1.0 - rd, gap, rd, wt, col, frac


def local_exponent(grid: RadialGrid, values, k: int = 4) -> float:
    """Slope of log|u| vs log delta over the last k nodes (0 if u vanishes there)."""
    v = np.abs(np.asarray(values[-k:], dtype=float))
    if np.any(v <= 0.0):
        return 0.0
    return float(np.polyfit(np.log(grid.delta[-k:]), np.log(v), 1)[0])


def green_apply(params: FracParams, f, x: float, rel_tol: float = 1e-8,
                boundary_exponent: float = 0.0) -> float:
    """G_B f(x) for a radial callable f(rho, delta), by direct quadrature in rho.

    Returns +inf when f blows up at the boundary like delta^q with
    q <= -1 - alpha/2 (the radial Green kernel vanishes like delta^{alpha/2}).
    """
    if not 0.0 <= x < 1.0:
        raise ParameterError("green_apply needs 0 <= x < 1")
    a = params.alpha
    if boundary_exponent + 0.5 * a <= -1.0:
        return INF
    sing = _panel_singular_exponent(params)

    def core(s, lo, hi):
        return green_radial_kernel(params, np.full(s.shape, x), s, -hi) * f(s, 1.0 - s)

    def core_out(s, lo, hi):
        return green_radial_kernel(params, np.full(s.shape, x), s, lo, hi) * f(s, hi)

    tol = 0.1 * rel_tol
    if x == 0.0:
        return integrate(SingularIntegrand(core_out, 0.0, 1.0, a - 1.0, boundary_exponent + 0.5 * a,
                                           offsets=True), tol)
    inner = integrate(SingularIntegrand(core, 0.0, x, 0.0, sing, offsets=True), tol)
    outer = integrate(SingularIntegrand(core_out, x, 1.0, sing, boundary_exponent + 0.5 * a,
                                        offsets=True), tol)
    return inner + outer


@lru_cache(maxsize=16)
def green_operator(params: FracParams, m: int = 256, delta_min: float = 1e-6) -> GreenOperator:
    """Cached operator on the default geometric grid."""
    return GreenOperator(params, RadialGrid.geometric(m, delta_min))


# ----------------------------------------------------------------------------
# Martin integral

def martin_one(params: FracParams, x):
    """int over the unit sphere of (1-x^2)^{alpha/2} |x e1 - z|^{-N} dsigma(z), by polar quadrature."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x >= 1.0)):
        raise ParameterError("martin_one needs 0 <= x < 1")
    c = params.constants
    ang = kernels.sphere_integral(lambda d2, *_: d2 ** (-0.5 * params.dim), x, 1.0,
                                  params.dim, c.omega_ring, 1.0 - x)
    return (1.0 - x * x) ** (0.5 * params.alpha) * ang


def martin_one_closed(params: FracParams, x):
    """omega_N (1 - x^2)^{alpha/2 - 1}."""
    x = np.asarray(x, dtype=float)
    return params.constants.omega_sphere * (1.0 - x * x) ** (0.5 * params.alpha - 1.0)


# ----------------------------------------------------------------------------
# power-law diagnostics

@dataclass(frozen=True)
class PowerFit:
    exponent: float
    stderr: float
    prefactor: float


def fit_power_law(delta, values, k: int = 20) -> PowerFit:
    """Least-squares slope of log u against log delta over the last k samples."""
    d = np.asarray(delta, dtype=float)[-k:]
    v = np.asarray(values, dtype=float)[-k:]
    if d.size < 3:
        raise ParameterError("need at least three samples to fit an exponent")
    if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
        raise ParameterError("power-law fit needs positive finite values")
    xs, ys = np.log(d), np.log(v)
    res = stats.linregress(xs, ys)
    return PowerFit(float(res.slope), float(res.stderr), float(np.exp(res.intercept)))


@dataclass
class DeltaPowerReport:
    lam: float
    finite: bool
    label: str
    increment_ratio: float
    profile: RadialProfile | None
    weighted_trace: float
    fit: PowerFit | None


def origin_partial_potentials(params: FracParams, lam: float, eps_list) -> np.ndarray:
    """int over |y| < 1 - eps of G_B(0, y) delta(y)^{-lam} dy, for each eps."""
    a = params.alpha
    om = params.constants.omega_sphere
    out = []
    for eps in eps_list:
        def core(s, lo, hi, eps=eps):
            return om * s ** (params.dim - 1) * kernels.green_origin(params, s) * (hi + eps) ** (-lam)

        out.append(integrate(SingularIntegrand(core, 0.0, 1.0 - eps, a - 1.0, 0.0, offsets=True), 1e-10))
    return np.array(out)


def delta_power_diagnostic(params: FracParams, lam: float, operator: GreenOperator | None = None,
                           decades=range(2, 10), with_profile: bool = True) -> DeltaPowerReport:
    """Classify h = G_B(delta^{-lam}) as finite or divergent and describe its boundary behaviour.

    The classification is numerical: partial potentials at the origin over
    the balls of radius 1 - 10^{-k} are compared decade by decade, and h is
    declared finite when the increments contract.  ``with_profile=False``
    skips the grid evaluation and returns the classification only.
    """
    eps = [10.0 ** (-k) for k in decades]
    partial = origin_partial_potentials(params, lam, eps)
    inc = np.diff(partial)
    ratio = float(inc[-1] / inc[-2]) if inc[-2] != 0.0 else 0.0
    growing = bool(np.all(inc > 0.0))
    finite = ratio < 1.0 - 1e-3 or not growing
    if finite:
        label = "finite"
    else:
        label = "divergent" if ratio > 1.0 + 1e-3 else "divergent (numerical)"
    profile, trace, fit = None, INF, None
    if finite and with_profile:
        op = operator or green_operator(params)
        grid = op.grid
        vals = op.apply(grid.delta ** (-lam), -lam)
        profile = RadialProfile(grid, vals)
        w = grid.delta ** (1.0 - 0.5 * params.alpha) * vals
        trace = float(np.max(np.abs(w[-5:])))
        fit = fit_power_law(grid.delta, vals)
        profile.boundary_exponent = fit.exponent
    return DeltaPowerReport(lam, finite, label, ratio, profile, trace, fit)
