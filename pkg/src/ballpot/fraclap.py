"""
Fractional Laplacian of radial functions supported in the unit ball.

For theta_beta(x) = (1 - |x|^2)^{-beta} 1_B(x) three evaluations are offered:

* ``fraclap_radial_quad``: the singular integral reduced to one radial
  principal-value integral against the sphere average
  A(r, rho) = int_{S^{N-1}} |r e1 - rho w|^{-N-alpha} dsigma(w);
* ``fraclap_power_closed``: the phi-expression obtained by Abel inversion of
  the mean-value identity at the origin, with fitted constants;
* ``fraclap_power_exact``: the hypergeometric closed form for the whole
  family (1 - |x|^2)_+^p, used as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import rgamma

from . import operators
from .model import BallPotError, FracParams, ParameterError
from .quad import SingularIntegrand, integrate
from .specfun import beta_fn, hyp2f1

FIT_T = 0.5
CHECK_T = 0.8
FIT_TOL = 1e-6


class FittingError(BallPotError):
    """The fitted lemma constant fails its second-point validation."""


@dataclass(frozen=True)
class PowerProfile:
    """theta_beta(x) = (1 - |x|^2)^{-beta} on B, zero outside."""

    beta: float

    def check(self, params: FracParams):
        if not -0.5 * params.alpha < self.beta < 1.0:
            raise ParameterError(f"beta must lie in (-alpha/2, 1), got {self.beta}")

    def __call__(self, rho, delta):
        return (delta * (2.0 - delta)) ** (-self.beta)

    def difference(self, r: float, rho, gap, delta):
        """theta(rho) - theta(r) given the signed gap rho - r and delta = 1 - rho."""
        # log of (1-rho^2)/(1-r^2): log1p form near the diagonal, exact delta form near the boundary
        x = -gap * (rho + r) / (1.0 - r * r)
        q = np.where(np.abs(x) < 0.5, np.log1p(np.clip(x, -0.5, 0.5)),
                     np.log(delta * (2.0 - delta)) - np.log1p(-r * r))
        return (1.0 - r * r) ** (-self.beta) * np.expm1(-self.beta * q)


@dataclass(frozen=True)
class FittedConstants:
    c_ab: float
    c_a: float
    ratio: float


# ----------------------------------------------------------------------------
# sphere average A(r, rho)

def _angular(params: FracParams, small: float, big: float, gap: float) -> float:
    """A(r, rho) with small = min(r, rho), big = max(r, rho), gap = big - small > 0."""
    n, a = params.dim, params.alpha
    om = params.constants.omega_sphere
    z = (small / big) ** 2
    one_minus_z = gap * (big + small) / (big * big)
    f = hyp2f1(-0.5 * a, 0.5 * (n - a) - 1.0, 0.5 * n, min(z, 1.0 - 1e-16))
    return om * big ** (-n - a) * one_minus_z ** (-1.0 - a) * f


def angular_average(params: FracParams, r: float, rho: float) -> float:
    """int over the unit sphere of |r e1 - rho w|^{-N-alpha}; r != rho."""
    if r == rho:
        return math.inf
    return _angular(params, min(r, rho), max(r, rho), abs(rho - r))


def _tail_kernel(params: FracParams, r: float) -> float:
    """int_1^inf rho^{N-1} A(r, rho) drho = int_0^1 v^{alpha-1} A(r v, 1) dv."""
    a = params.alpha

    def core(v):
        return np.array([vi ** (a - 1.0) * _angular(params, r * vi, 1.0, 1.0 - r * vi) for vi in v])

    if r == 0.0:
        return params.constants.omega_sphere / a
    return integrate(SingularIntegrand(core, 0.0, 1.0, a - 1.0, 0.0), 1e-12)


# ----------------------------------------------------------------------------
# fractional Laplacian by singular quadrature

def fraclap_radial_quad(params: FracParams, u, r: float, rel_tol: float = 1e-10,
                        boundary_exponent: float = 0.0) -> float:
    """c_{N,alpha} PV int (u(y) - u(x)) |y - x|^{-N-alpha} dy for radial u vanishing off B.

    ``u(rho, delta)`` is the profile on (0, 1) with delta = 1 - rho; it may
    blow up like delta**boundary_exponent.  A ``difference(r, rho, gap, delta)``
    method on u, if present, is used for u(rho) - u(r).  For a
    :class:`PowerProfile` the exponent is taken from it.
    """
    if not 0.0 <= r < 1.0:
        raise ParameterError("fraclap_radial_quad needs 0 <= r < 1")
    n, a = params.dim, params.alpha
    if isinstance(u, PowerProfile):
        u.check(params)
        boundary_exponent = min(0.0, -u.beta)
    right_exp = min(0.0, boundary_exponent)
    ur = float(u(r, 1.0 - r))
    diff = getattr(u, "difference", None)
    if diff is None:
        def diff(r_, rho, gap, delta):
            return u(rho, delta) - ur

    def vec(fun):
        return lambda s, *rest: np.array([fun(*args) for args in zip(s, *rest)])

    if r == 0.0:
        om = params.constants.omega_sphere

        def origin(rho, lo, hi):
            return om * diff(0.0, rho, rho, hi) * rho ** (-1.0 - a)

        inner = integrate(SingularIntegrand(vec(origin), 0.0, 1.0, 1.0 - a, right_exp, offsets=True),
                          rel_tol)
        return params.constants.c_int * (inner - ur * _tail_kernel(params, 0.0))

    h = min(r, 1.0 - r)
    hits_boundary = (1.0 - r) <= r

    def paired(tau, lo, hi):
        up = r + tau
        down = r - tau
        d_up = hi if hits_boundary else 1.0 - up
        g_up = diff(r, up, tau, d_up) * up ** (n - 1) * _angular(params, r, up, tau)
        g_dn = diff(r, down, -tau, 1.0 - down) * down ** (n - 1) * _angular(params, down, r, tau)
        return g_up + g_dn

    total = integrate(SingularIntegrand(vec(paired), 0.0, h, 1.0 - a,
                                        right_exp if hits_boundary else 0.0, offsets=True), rel_tol)
    if hits_boundary and 2.0 * r - 1.0 > 0.0:
        def below(rho, lo, hi):
            gap = r - rho
            return diff(r, rho, -gap, 1.0 - rho) * rho ** (n - 1) * _angular(params, rho, r, gap)

        total += integrate(SingularIntegrand(vec(below), 0.0, 2.0 * r - 1.0, 0.0, 0.0, offsets=True),
                           rel_tol)
    elif not hits_boundary:
        def above(rho, lo, hi):
            gap = rho - r
            return diff(r, rho, gap, hi) * rho ** (n - 1) * _angular(params, r, rho, gap)

        total += integrate(SingularIntegrand(vec(above), 2.0 * r, 1.0, 0.0, right_exp, offsets=True),
                           rel_tol)
    return params.constants.c_int * (total - ur * _tail_kernel(params, r))


# ----------------------------------------------------------------------------
# closed forms for power profiles

def lemma_constant_exact(params: FracParams, beta: float) -> float:
    """C(alpha, beta) = (sin(alpha pi/2)/pi) B(1 - beta, 1 - alpha/2)."""
    a = params.alpha
    return math.sin(0.5 * math.pi * a) / math.pi * beta_fn(1.0 - beta, 1.0 - 0.5 * a)


def harmonic_origin_closed(params: FracParams, beta: float, t: float, c_ab: float = 1.0) -> float:
    """c_ab (1-t^2)^{1-beta-alpha/2} F(1-beta-alpha/2, 1-alpha/2; 2-beta-alpha/2; 1-t^2)."""
    a = params.alpha
    e = 1.0 - beta - 0.5 * a
    return c_ab * (1.0 - t * t) ** e * hyp2f1(e, 1.0 - 0.5 * a, e + 1.0, 1.0 - t * t)


@lru_cache(maxsize=256)
def fit_lemma_constants(params: FracParams, beta: float) -> FittedConstants:
    """Fit C(alpha, beta) from H_{B_t} theta_beta(0) at t = 1/2 and validate it at t = 0.8."""
    a = params.alpha
    if not -0.5 * a < beta < 1.0:
        raise ParameterError(f"beta must lie in (-alpha/2, 1), got {beta}")
    if beta == 1.0 - 0.5 * a:
        raise ParameterError("beta = 1 - alpha/2 makes the closed form degenerate")
    data = operators.power_exterior(beta)
    c_ab = operators.harmonic_origin(params, FIT_T, data) / harmonic_origin_closed(params, beta, FIT_T)
    check = operators.harmonic_origin(params, CHECK_T, data)
    pred = harmonic_origin_closed(params, beta, CHECK_T, c_ab)
    if abs(pred / check - 1.0) > FIT_TOL:
        raise FittingError(f"C(alpha, beta) fitted at t={FIT_T} misses t={CHECK_T} by {pred / check - 1:.3g}")
    c = params.constants
    c_a = 2.0 * c.kappa_green * c.omega_sphere
    return FittedConstants(c_ab=c_ab, c_a=c_a, ratio=(a + 2.0 * beta - 2.0) * c_ab / c_a)


def phi(params: FracParams, beta: float, t: float) -> float:
    """N(1-t^2) F(1-beta-a/2, 1-a/2; 1; t^2) + (a(a+2beta)/2) t^2 F(1-beta-a/2, 1-a/2; 2; t^2)."""
    n, a = params.dim, params.alpha
    z = t * t
    e = 1.0 - beta - 0.5 * a
    return (n * (1.0 - z) * hyp2f1(e, 1.0 - 0.5 * a, 1.0, z)
            + 0.5 * a * (a + 2.0 * beta) * z * hyp2f1(e, 1.0 - 0.5 * a, 2.0, z))


def fraclap_power_closed(params: FracParams, profile: PowerProfile, r: float,
                         constants: FittedConstants | None = None) -> float:
    """((alpha+2beta-2) C(alpha,beta)/C(alpha)) (1-r^2)^{-(alpha+beta)} phi(r)."""
    if not 0.0 <= r < 1.0:
        raise ParameterError("fraclap_power_closed needs 0 <= r < 1")
    profile.check(params)
    beta = profile.beta
    a = params.alpha
    if a + 2.0 * beta - 2.0 == 0.0:
        return 0.0
    if constants is None:
        constants = fit_lemma_constants(params, beta)
    return constants.ratio * (1.0 - r * r) ** (-(a + beta)) * phi(params, beta, r)


def fraclap_power_exact(params: FracParams, profile: PowerProfile, r: float) -> float:
    """Closed form of the fractional Laplacian of (1-|x|^2)_+^{-beta}.

    -2^a Gamma((N+a)/2) Gamma(1-beta) / (Gamma(N/2) Gamma(1-beta-a/2))
      * (1-r^2)^{-(a+beta)} F(-a/2, N/2-beta-a/2; N/2; r^2)
    """
    if not 0.0 <= r < 1.0:
        raise ParameterError("fraclap_power_exact needs 0 <= r < 1")
    profile.check(params)
    n, a, beta = params.dim, params.alpha, profile.beta
    pref = -(2.0**a) * math.gamma(0.5 * (n + a)) * math.gamma(1.0 - beta) * rgamma(1.0 - beta - 0.5 * a) \
        / math.gamma(0.5 * n)
    return float(pref * (1.0 - r * r) ** (-(a + beta)) * hyp2f1(-0.5 * a, 0.5 * n - beta - 0.5 * a, 0.5 * n, r * r))


def psi_profile(params: FracParams, beta: float, t: float) -> float:
    """(alpha+2beta-2) C(alpha,beta) t F(beta+alpha/2, alpha/2; 1; t^2)."""
    if not 0.0 <= t < 1.0:
        raise ParameterError("psi_profile needs 0 <= t < 1")
    a = params.alpha
    c_ab = fit_lemma_constants(params, beta).c_ab
    return (a + 2.0 * beta - 2.0) * c_ab * t * hyp2f1(beta + 0.5 * a, 0.5 * a, 1.0, t * t)
