"""
Closed-form kernels of the fractional Laplacian on balls centred at the origin.

Points are given either as full coordinates (arrays with last axis of length
N) or, for the radial helpers, as radii; the radial helpers integrate the
kernel over a sphere with the polar-angle measure, which is what every
rotation-invariant potential reduces to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .model import FracParams, ParameterError
from .quad import SingularIntegrand, gauss_legendre, integrate
from .specfun import beta_fn

INF = float("inf")

_GL_T, _GL_W = gauss_legendre(10)
_PANEL_RATIO = 4.0
_CHUNK = 8192


def _norm(x):
    return np.sqrt(np.sum(np.square(x), axis=-1))


# ----------------------------------------------------------------------------
# sphere integration in polar angle

def sphere_integral(kernel, x, rho, dim: int, omega_ring: float, gap=None, rho_delta=None,
                    x_delta=None):
    """Integral over the sphere |y| = rho of ``kernel(d2, x, rho, 1 - rho, 1 - x)``, d2 = |x e1 - y|^2.

    ``x`` and ``rho`` broadcast against each other; ``gap``, if given, is
    rho - x computed without cancellation, and ``rho_delta``, ``x_delta``
    likewise 1 - rho and 1 - x.  The polar angle is split
    into geometrically graded panels toward theta = 0 whenever rho is close to
    x, resolving the near-singularity at angular scale |x - rho| / sqrt(x rho).
    """
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    gap = rho - x if gap is None else np.asarray(gap, dtype=float)
    rd = 1.0 - rho if rho_delta is None else np.asarray(rho_delta, dtype=float)
    xd = 1.0 - x if x_delta is None else np.asarray(x_delta, dtype=float)
    x, rho, gap, rd, xd = np.broadcast_arrays(x, rho, gap, rd, xd)
    shape = x.shape
    x, rho, gap, rd, xd = x.ravel(), rho.ravel(), gap.ravel(), rd.ravel(), xd.ravel()
    out = np.empty(x.size)
    for lo in range(0, x.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        out[sl] = _sphere_chunk(kernel, x[sl], rho[sl], np.abs(gap[sl]), rd[sl], xd[sl], dim)
    return omega_ring * out.reshape(shape)


def _sphere_chunk(kernel, x, rho, d, rd, xd, dim):
    xr = x * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(xr > 0.0, d / np.sqrt(xr), np.inf)
    # coincident radii (scale 0): the kernel is at worst weakly singular; grade down to 1e-12
    theta_lo = np.minimum(0.25 * scale, np.pi)
    theta_lo = np.where(theta_lo > 0.0, theta_lo, 1e-12)
    npan = np.ones(x.size, dtype=int)
    graded = theta_lo < np.pi
    npan[graded] = 2 + np.ceil(
        np.log(np.pi / theta_lo[graded]) / np.log(_PANEL_RATIO)).astype(int)
    out = np.zeros(x.size)
    for p in np.unique(npan):
        idx = np.nonzero(npan == p)[0]
        if p == 1:
            edges = np.tile([0.0, np.pi], (idx.size, 1))
        else:
            tl = theta_lo[idx][:, None]
            j = np.arange(p)[None, :] / (p - 1.0)
            edges = np.concatenate([np.zeros((idx.size, 1)), tl * (np.pi / tl) ** j], axis=1)
        width = np.diff(edges, axis=1)                                  # (n, P)
        theta = edges[:, :-1, None] + width[:, :, None] * _GL_T        # (n, P, q)
        xi = x[idx][:, None, None]
        ri = rho[idx][:, None, None]
        d2 = d[idx][:, None, None] ** 2 + 4.0 * xi * ri * np.sin(0.5 * theta) ** 2
        vals = kernel(d2, xi, ri, rd[idx][:, None, None], xd[idx][:, None, None]) * np.sin(theta) ** (dim - 2)
        out[idx] = np.sum(vals * width[:, :, None] * _GL_W, axis=(1, 2))
    return out


# ----------------------------------------------------------------------------
# Green function of the unit ball

def _green_tail_integral_vec(params: FracParams, big_r):
    """int_0^R s^{a/2-1} (1+s)^{-N/2} ds via the regularized incomplete beta function."""
    a = 0.5 * params.alpha
    b = 0.5 * (params.dim - params.alpha)
    big_r = np.asarray(big_r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = big_r / (1.0 + big_r)
        z = np.where(np.isinf(big_r), 1.0, z)
    return beta_fn(a, b) * betainc(a, b, z)


def green_integral(params: FracParams, big_r: float, rel_tol: float = 1e-12) -> float:
    """int_0^R s^{alpha/2-1} (1+s)^{-N/2} ds by singular quadrature."""
    a = 0.5 * params.alpha
    n = params.dim
    if big_r <= 0.0:
        return 0.0
    head = integrate(SingularIntegrand(lambda s: s ** (a - 1.0) * (1.0 + s) ** (-0.5 * n),
                                       0.0, min(big_r, 1.0), a - 1.0, 0.0), rel_tol)
    if big_r <= 1.0:
        return head
    # s = 1/v on (1, R): v^{(N-alpha)/2 - 1} (1+v)^{-N/2}, smooth on (1/R, 1)
    tail = integrate(SingularIntegrand(
        lambda v: v ** (0.5 * (n - params.alpha) - 1.0) * (1.0 + v) ** (-0.5 * n),
        1.0 / big_r, 1.0), rel_tol)
    return head + tail


def green_ball(params: FracParams, x, y, rel_tol: float = 1e-12) -> float:
    """Green function of the unit ball at full-coordinate points x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # canonical order so that G(x, y) and G(y, x) follow the same arithmetic
    if tuple(y) < tuple(x):
        x, y = y, x
    nx2 = float(np.dot(x, x))
    ny2 = float(np.dot(y, y))
    if nx2 >= 1.0 or ny2 >= 1.0:
        return 0.0
    d2 = float(np.dot(x - y, x - y))
    if d2 == 0.0:
        return INF
    big_r = (1.0 - nx2) * (1.0 - ny2) / d2
    c = params.constants
    return c.kappa_green * d2 ** (0.5 * (params.alpha - params.dim)) * green_integral(params, big_r, rel_tol)


def green_scaled(params: FracParams, t: float, x, y) -> float:
    """Green function of the ball of radius t, by scaling the unit-ball one."""
    if not 0.0 < t <= 1.0:
        raise ParameterError("ball radius must lie in (0, 1]")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return t ** (params.alpha - params.dim) * green_ball(params, x / t, y / t)


def green_from_d2(params: FracParams, d2, x, rho, rho_delta=None, x_delta=None):
    """Vectorized unit-ball Green function given |x-y|^2 and the radii |x|, |y|."""
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    rd = 1.0 - rho if rho_delta is None else rho_delta
    xd = 1.0 - x if x_delta is None else x_delta
    with np.errstate(divide="ignore", invalid="ignore"):
        big_r = np.clip(xd * (2.0 - xd), 0.0, None) * np.clip(rd * (2.0 - rd), 0.0, None) / d2
        val = params.constants.kappa_green * d2 ** (0.5 * (params.alpha - params.dim)) \
            * _green_tail_integral_vec(params, big_r)
    return np.where((x >= 1.0) | (rho >= 1.0), 0.0, val)


def green_sphere(params: FracParams, x, rho, gap=None, rho_delta=None, x_delta=None):
    """Integral of G_B(x e1, y) over the sphere |y| = rho.

    ``gap`` = rho - x, ``rho_delta`` = 1 - rho and ``x_delta`` = 1 - x may be
    passed when known more accurately than the float subtraction.
    """
    c = params.constants
    return sphere_integral(lambda d2, xi, ri, di, xdi: green_from_d2(params, d2, xi, ri, di, xdi),
                           x, rho, params.dim, c.omega_ring, gap, rho_delta, x_delta)


def green_origin(params: FracParams, rho):
    """G_B(0, y) for |y| = rho, closed form via the incomplete beta function."""
    rho = np.asarray(rho, dtype=float)
    return green_from_d2(params, rho * rho, 0.0, rho)


def green_origin_radial(params: FracParams, rho: float, rel_tol: float = 1e-12) -> float:
    """2 kappa rho^{alpha-N} int_rho^1 s^{N-1-alpha} (1-s^2)^{alpha/2-1} ds.

    Exact reduction of the Green function at the origin to a 1-D integral
    (substitute 1 + s = 1/sigma^2 in the defining integral).
    """
    n, a = params.dim, params.alpha
    if rho >= 1.0:
        return 0.0
    f = SingularIntegrand(
        lambda s, lo, hi: s ** (n - 1.0 - a) * (hi * (1.0 + s)) ** (0.5 * a - 1.0),
        rho, 1.0, 0.0, 0.5 * a - 1.0, offsets=True)
    return 2.0 * params.constants.kappa_green * rho ** (a - n) * integrate(f, rel_tol)


def green_origin_abel_form(params: FracParams, rho: float, rel_tol: float = 1e-12) -> float:
    """2 kappa int_rho^1 s^{1-N} (1-s^2)^{alpha/2-1} ds.

    This is the radial form that makes G_{B_t}v(0) an Abel integral in t.  It
    coincides with the Green function at the origin only for N = 1; for
    N >= 3 it differs from ``green_origin`` by a non-constant factor
    (1/rho when N = 3, alpha = 1).
    """
    n, a = params.dim, params.alpha
    if rho >= 1.0:
        return 0.0
    f = SingularIntegrand(
        lambda s, lo, hi: s ** (1.0 - n) * (hi * (1.0 + s)) ** (0.5 * a - 1.0),
        rho, 1.0, 0.0, 0.5 * a - 1.0, offsets=True)
    return 2.0 * params.constants.kappa_green * integrate(f, rel_tol)


# ----------------------------------------------------------------------------
# Poisson, Martin and Riesz kernels

def poisson_kernel(params: FracParams, t: float, x, y) -> float:
    """Density of the harmonic measure of B_t: |x| < t < |y|."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx2 = float(np.dot(x, x))
    ny2 = float(np.dot(y, y))
    if not nx2 < t * t:
        raise ParameterError("poisson_kernel needs |x| < t")
    if not ny2 > t * t:
        raise ParameterError("poisson_kernel needs |y| > t")
    c = params.constants
    d = float(np.sqrt(np.dot(x - y, x - y)))
    return c.c_pois * ((t * t - nx2) / (ny2 - t * t)) ** (0.5 * params.alpha) * d ** (-params.dim)


def inverse_power_sphere(params: FracParams, x, rho, power: float, gap=None):
    """Integral of |x e1 - y|^{-power} over the sphere |y| = rho (polar quadrature); gap = rho - x."""
    c = params.constants
    return sphere_integral(lambda d2, xi, ri, *_: d2 ** (-0.5 * power), x, rho, params.dim, c.omega_ring, gap)


def inverse_power_sphere_exact(params: FracParams, x, rho):
    """Closed form of ``inverse_power_sphere`` for power = N: omega max(x,rho)^{2-N} / |rho^2 - x^2|."""
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    big = np.maximum(x, rho)
    return params.constants.omega_sphere * big ** (2.0 - params.dim) / np.abs(rho * rho - x * x)


def poisson_sphere(params: FracParams, t: float, x, rho, gap=None, x_gap=None):
    """Poisson kernel of B_t integrated over the sphere |y| = rho > t, for |x| = x < t.

    ``gap`` = rho - t and ``x_gap`` = t - x may be passed when known exactly.
    """
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    gap = rho - t if gap is None else np.asarray(gap, dtype=float)
    x_gap = t - x if x_gap is None else x_gap
    c = params.constants
    a = params.alpha
    ang = inverse_power_sphere(params, x, rho, params.dim, gap + x_gap)
    return c.c_pois * ((x_gap * (t + x)) / (gap * (rho + t))) ** (0.5 * a) * ang


def martin_kernel(params: FracParams, x, z) -> float:
    """(1-|x|^2)^{alpha/2} / |x-z|^N for |x| < 1 and |z| = 1."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if abs(float(np.dot(z, z)) - 1.0) > 1e-12:
        raise ParameterError("martin_kernel needs a boundary point |z| = 1")
    nx2 = float(np.dot(x, x))
    if nx2 >= 1.0:
        raise ParameterError("martin_kernel needs |x| < 1")
    d = float(np.sqrt(np.dot(x - z, x - z)))
    return (1.0 - nx2) ** (0.5 * params.alpha) / d**params.dim


def martin_trace_constant(params: FracParams) -> float:
    """Limit of delta^{1-alpha/2} times the Martin integral of the constant 1: omega 2^{alpha/2-1}."""
    return params.constants.omega_sphere * 2.0 ** (0.5 * params.alpha - 1.0)


def riesz_constant(params: FracParams) -> float:
    """C_{N,-alpha} = Gamma((N-alpha)/2) / (2^alpha pi^{N/2} Gamma(alpha/2))."""
    from math import gamma, pi
    n, a = params.dim, params.alpha
    return gamma(0.5 * (n - a)) / (2.0**a * pi ** (0.5 * n) * gamma(0.5 * a))


def riesz_kernel(params: FracParams, x, y) -> float:
    """Green function of the whole space, C |x-y|^{alpha-N}; +inf at x = y."""
    d = float(_norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if d == 0.0:
        return INF
    return riesz_constant(params) * d ** (params.alpha - params.dim)


# ----------------------------------------------------------------------------
# two-sided Green estimates

@dataclass
class GreenBoundsReport:
    """Extremes over a sample of the ratios behind the standard Green estimates.

    Upper bounds hold with a finite constant when the ``max_*`` ratios are
    finite; the lower bound for separated pairs holds when ``min_lower`` is
    positive.  ``spread_two_sided`` is max/min of G divided by the two-sided
    comparison function; it is finite exactly when that approximation holds.
    """

    n_pairs: int
    max_riesz: float
    max_boundary: float
    max_one_sided: float
    max_separated: float
    min_lower: float
    spread_two_sided: float
    ok: bool


def check_green_bounds(params: FracParams, pairs, separation: float | None = None) -> GreenBoundsReport:
    """Evaluate the Green estimate ratios over ``pairs`` of interior points.

    ``separation`` is the r of the bound for pairs at distance >= r; by
    default the smallest pair distance in the sample.
    """
    n, a = params.dim, params.alpha
    riesz, bnd, one, sep, lower, two = [], [], [], [], [], []
    dists = []
    for x, y in pairs:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = green_ball(params, x, y)
        d = float(_norm(x - y))
        dx, dy = 1.0 - float(_norm(x)), 1.0 - float(_norm(y))
        if not (d > 0 and dx > 0 and dy > 0):
            raise ParameterError("pairs must be distinct interior points")
        dists.append(d)
        riesz.append(g * d ** (n - a))
        bnd.append(g * d**n / (dx * dy) ** (0.5 * a))
        one.append(g * d ** (n - 0.5 * a) / dy ** (0.5 * a))
        if d > 0.5 * max(dx, dy):
            lower.append(g * d**n / (dx * dy) ** (0.5 * a))
        comp = d ** (a - n) * (dx * dy) ** (0.5 * a) / (d * d + dx * dy) ** (0.5 * a)
        two.append(g / comp)
    r = min(dists) if separation is None else separation
    for (x, y), d in zip(pairs, dists):
        if d >= r:
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            dx, dy = 1.0 - float(_norm(x)), 1.0 - float(_norm(y))
            sep.append(green_ball(params, x, y) * r**n / (dx * dy) ** (0.5 * a))
    rep = GreenBoundsReport(
        n_pairs=len(dists),
        max_riesz=max(riesz),
        max_boundary=max(bnd),
        max_one_sided=max(one),
        max_separated=max(sep) if sep else 0.0,
        min_lower=min(lower) if lower else INF,
        spread_two_sided=max(two) / min(two),
        ok=False,
    )
    vals = [rep.max_riesz, rep.max_boundary, rep.max_one_sided, rep.max_separated,
            rep.min_lower, rep.spread_two_sided]
    rep.ok = all(np.isfinite(v) and v > 0 for v in vals)
    return rep
