"""Problem parameters and normalization constants for the fractional Laplacian on balls."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property


class BallPotError(Exception):
    """Base class for all errors raised by ballpot."""


class ParameterError(BallPotError, ValueError):
    """Invalid dimension, stability index or exponent."""


@dataclass(frozen=True)
class FracParams:
    """Dimension ``dim`` (N >= 3) and stability index ``alpha`` in (0, 2)."""

    dim: int
    alpha: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 3:
            raise ParameterError(f"dim must be an integer >= 3, got {self.dim!r}")
        if not (0.0 < self.alpha < 2.0):
            raise ParameterError(f"alpha must lie in (0, 2), got {self.alpha!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "alpha", float(self.alpha))

    @cached_property
    def constants(self) -> "Constants":
        return compute_constants(self)


@dataclass(frozen=True)
class Constants:
    c_int: float
    c_pois: float
    kappa_green: float
    omega_sphere: float
    # surface area of S^{N-2}; the polar-angle measure on S^{N-1} is omega_ring * sin^{N-2}(theta) dtheta
    omega_ring: float


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere S^{dim-1} in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def compute_constants(params: FracParams) -> Constants:
    n, a = params.dim, params.alpha
    c_int = (
        2.0**a * math.pi ** (-n / 2.0) / abs(math.gamma(-a / 2.0)) * math.gamma((n + a) / 2.0)
    )
    c_pois = math.pi ** (-1.0 - n / 2.0) * math.gamma(n / 2.0) * math.sin(math.pi * a / 2.0)
    kappa = math.gamma(n / 2.0) / (2.0**a * math.pi ** (n / 2.0) * math.gamma(a / 2.0) ** 2)
    return Constants(
        c_int=c_int,
        c_pois=c_pois,
        kappa_green=kappa,
        omega_sphere=sphere_area(n),
        omega_ring=sphere_area(n - 1),
    )
