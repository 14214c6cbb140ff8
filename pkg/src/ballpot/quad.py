"""
One-dimensional adaptive quadrature for integrands with endpoint power singularities.

Integrands are evaluated on numpy arrays of nodes (15 at a time), so vectorized
callables are much faster than scalar ones.  A declared endpoint behaviour
``(s - a)**p`` is flattened by the substitution ``s = a + H * w**(1/(1+p))``
before adaptive Gauss-Kronrod refinement.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import BallPotError

DEFAULT_REL_TOL = 1e-9
DEFAULT_PANEL_BUDGET = 20000

# 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes on [-1, 1]
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]
_EPS = np.finfo(float).eps


class IntegrationError(BallPotError):
    """Panel budget exhausted before the error estimate met the tolerance."""

    def __init__(self, message, value, error):
        super().__init__(f"{message} (partial value {value:.6g}, error estimate {error:.3g})")
        self.value = value
        self.error = error


@dataclass(frozen=True)
class SingularIntegrand:
    """Integrand on (a, b) behaving like (s-a)**left_exponent and (b-s)**right_exponent.

    If ``offsets`` is true, ``core`` is called as ``core(s, s - a, b - s)`` with the
    two offsets computed exactly from the substitution variable, which avoids
    cancellation when the endpoint factors are evaluated very close to a or b.
    """

    core: Callable
    a: float
    b: float
    left_exponent: float = 0.0
    right_exponent: float = 0.0
    offsets: bool = False

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got ({self.a}, {self.b})")
        if self.left_exponent <= -1.0 or self.right_exponent <= -1.0:
            raise ValueError("endpoint exponents must exceed -1 for integrability")


def _gk15(fun, lo, hi):
    half = 0.5 * (hi - lo)
    centre = 0.5 * (hi + lo)
    vals = fun(centre + half * _NODES)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    resk = half * np.dot(_WK, vals)
    resg = half * np.dot(_WG15, vals)
    mean = resk / (2.0 * half) if half else 0.0
    resabs = abs(half) * np.dot(_WK, np.abs(vals))
    resasc = abs(half) * np.dot(_WK, np.abs(vals - mean))
    err = abs(resk - resg)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > 1e-290:
        err = max(err, 50.0 * _EPS * resabs)
    return resk, err


def adaptive(fun, lo, hi, rel_tol=DEFAULT_REL_TOL, abs_tol=0.0,
             budget=DEFAULT_PANEL_BUDGET, breakpoints=()):
    """Globally adaptive GK15 over [lo, hi] for a vectorized smooth-ish ``fun``.

    Returns (value, error_estimate).  Raises IntegrationError if ``budget``
    panels are not enough.
    """
    edges = sorted({lo, hi, *[p for p in breakpoints if lo < p < hi]})
    heap = []
    total, total_err = 0.0, 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        v, e = _gk15(fun, x0, x1)
        total += v
        total_err += e
        heapq.heappush(heap, (-e, x0, x1, v))
    npanel = len(heap)
    while total_err > max(rel_tol * abs(total), abs_tol):
        if npanel >= budget:
            raise IntegrationError("quadrature panel budget exhausted", total, total_err)
        e, x0, x1, v = heapq.heappop(heap)
        xm = 0.5 * (x0 + x1)
        if not (x0 < xm < x1):
            # panel cannot be split further in floating point; accept it
            total_err += e  # e is negative: drop its contribution from the estimate
            if not heap:
                break
            continue
        v0, e0 = _gk15(fun, x0, xm)
        v1, e1 = _gk15(fun, xm, x1)
        total += v0 + v1 - v
        total_err += e0 + e1 + e
        heapq.heappush(heap, (-e0, x0, xm, v0))
        heapq.heappush(heap, (-e1, xm, x1, v1))
        npanel += 1
    return total, total_err


def _flattened_half(f: SingularIntegrand, side: str, mid: float):
    a, b = f.a, f.b
    if side == "left":
        p, width = f.left_exponent, mid - a
    else:
        p, width = f.right_exponent, b - mid
    k = 1.0 / (1.0 + p)

    def g(w):
        wk = w**k
        off = width * wk
        jac = width * k * w ** (k - 1.0)
        if side == "left":
            s = a + off
            if f.offsets:
                vals = f.core(s, off, (b - a) - off)
            else:
                vals = f.core(s)
        else:
            s = b - off
            if f.offsets:
                vals = f.core(s, (b - a) - off, off)
            else:
                vals = f.core(s)
        return vals * jac

    return g


def integrate(f: SingularIntegrand, rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = 0.0,
              budget: int = DEFAULT_PANEL_BUDGET) -> float:
    """Integrate ``f.core`` over (a, b) to relative accuracy ``rel_tol``."""
    if not (0.0 < rel_tol <= 1e-2):
        raise ValueError("rel_tol must lie in (0, 1e-2]")
    mid = 0.5 * (f.a + f.b)
    left, el = adaptive(_flattened_half(f, "left", mid), 0.0, 1.0, rel_tol, 0.5 * abs_tol, budget)
    right, er = adaptive(_flattened_half(f, "right", mid), 0.0, 1.0, rel_tol, 0.5 * abs_tol, budget)
    return left + right


def integrate_pv(f: Callable, center: float, a: float, b: float,
                 rel_tol: float = DEFAULT_REL_TOL, abs_tol: float = 1e-300,
                 pair_exponent: float = 0.0, budget: int = DEFAULT_PANEL_BUDGET) -> float:
    """Principal value of the integral of ``f`` over (a, b) with a singularity at ``center``.

    Nodes are paired symmetrically, ``f(center + tau) + f(center - tau)``, on
    ``0 < tau < h`` with ``h = min(center - a, b - center)``; the leftover
    one-sided piece is integrated directly.  ``pair_exponent`` declares the
    behaviour of the paired integrand as tau -> 0 (0 for 1/(s-c) type kernels).
    """
    if not a < center < b:
        raise ValueError("center must lie strictly inside (a, b)")
    h = min(center - a, b - center)

    def paired(tau):
        # snap to representable nodes that are exactly symmetric about center
        plus = center + tau
        tau_eff = plus - center
        return f(plus) + f(center - tau_eff)

    value = integrate(SingularIntegrand(paired, 0.0, h, pair_exponent, 0.0),
                      rel_tol, abs_tol, budget)
    if center - a > h * (1 + 1e-15):
        value += adaptive(f, a, center - h, rel_tol, abs_tol, budget)[0]
    elif b - center > h * (1 + 1e-15):
        value += adaptive(f, center + h, b, rel_tol, abs_tol, budget)[0]
    return value


def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w
