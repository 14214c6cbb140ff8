"""
Gauss hypergeometric function F(a, b; c; z) for real parameters and 0 <= z < 1.

The defining series is summed for z <= 1/2.  For z > 1/2 the z -> 1 - z
connection formula is used (after an Euler transformation when c - a - b < 0);
when c - a - b is (nearly) an integer the two Gamma-prefactors have cancelling
poles, and the value is extrapolated from well-conditioned neighbouring b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import rgamma

from .model import BallPotError

SERIES_TOL = 1e-15
MAX_TERMS = 10000
_NEAR_INTEGER = 1e-3


class HypergeometricRangeError(BallPotError, ValueError):
    """Argument outside [0, 1) or c a non-positive integer."""


@dataclass(frozen=True)
class Hyp2F1Args:
    a: float
    b: float
    c: float
    z: float

    def __post_init__(self):
        if self.c <= 0 and float(self.c).is_integer():
            raise HypergeometricRangeError(f"c = {self.c} is a non-positive integer")
        if not (0.0 <= self.z < 1.0):
            raise HypergeometricRangeError(f"z = {self.z} outside [0, 1)")


def _series(a, b, c, z):
    term, total = 1.0, 1.0
    for n in range(MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if term == 0.0:
            return total
        # remaining term ratios are bounded by the current one once n exceeds |a|,|b|,|c|
        ratio = abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2.0))) * z
        if n + 1 > max(abs(a), abs(b), abs(c)) and ratio < 1.0:
            if abs(term) * ratio / (1.0 - ratio) <= SERIES_TOL * abs(total):
                return total
    raise HypergeometricRangeError(
        f"series for F({a}, {b}; {c}; {z}) did not converge in {MAX_TERMS} terms")


def _connection(a, b, c, z):
    s = c - a - b
    w = 1.0 - z
    first = math.gamma(c) * math.gamma(s) * rgamma(c - a) * rgamma(c - b)
    second = math.gamma(c) * math.gamma(-s) * rgamma(a) * rgamma(b)
    out = 0.0
    if first != 0.0:
        out += first * _series(a, b, 1.0 - s, w)
    if second != 0.0:
        out += second * w**s * _series(c - a, c - b, 1.0 + s, w)
    return out


def _is_polynomial(a, b):
    return (a <= 0 and float(a).is_integer()) or (b <= 0 and float(b).is_integer())


def _hyp2f1(a, b, c, z):
    if z == 0.0 or a == 0.0 or b == 0.0:
        return 1.0
    if z <= 0.5 or _is_polynomial(a, b):
        return _series(a, b, c, z)
    s = c - a - b
    if s < 0.0:
        return (1.0 - z) ** s * _hyp2f1(c - a, c - b, c, z)
    if abs(s - round(s)) > _NEAR_INTEGER:
        return _connection(a, b, c, z)
    # c - a - b near an integer: F is analytic in b, so sample the connection
    # formula at b +- k h (k = 1..4), where it is well conditioned, and
    # extrapolate the symmetric averages to h -> 0 as a polynomial in h^2
    h = 4.0 * _NEAR_INTEGER
    xs = [(k * h) ** 2 for k in range(1, 5)]
    ys = [0.5 * (_connection(a, b + k * h, c, z) + _connection(a, b - k * h, c, z))
          for k in range(1, 5)]
    return _neville_at_zero(xs, ys)


def _neville_at_zero(xs, ys):
    p = list(ys)
    n = len(xs)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i])
    return p[0]


def hyp2f1(a, b=None, c=None, z=None) -> float:
    """F(a, b; c; z).  Accepts either four floats or a :class:`Hyp2F1Args`."""
    if isinstance(a, Hyp2F1Args):
        args = a
    else:
        args = Hyp2F1Args(float(a), float(b), float(c), float(z))
    return float(_hyp2f1(args.a, args.b, args.c, args.z))


def hyp2f1_derivative(a, b, c, z) -> float:
    """d/dz F(a, b; c; z) = (a b / c) F(a+1, b+1; c+1; z)."""
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b / c * hyp2f1(a + 1.0, b + 1.0, c + 1.0, z)


def contiguous_c(a, b=None, c=None, z=None) -> float:
    """(z d/dz + c) F(a, b; c+1; z); equals c F(a, b; c; z)."""
    if isinstance(a, Hyp2F1Args):
        a, b, c, z = a.a, a.b, a.c, a.z
    Hyp2F1Args(a, b, c + 1.0, z)
    return z * hyp2f1_derivative(a, b, c + 1.0, z) + c * hyp2f1(a, b, c + 1.0, z)


def beta_fn(p: float, q: float) -> float:
    return math.exp(math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q))
