"""Fractional Laplacian potentials and semilinear blow-up problems on the unit ball."""

from .model import BallPotError, Constants, FracParams, ParameterError, compute_constants
from .specfun import hyp2f1
from .kernels import green_ball, green_origin, martin_kernel, poisson_kernel
from .operators import (ExteriorData, GreenOperator, RadialGrid, RadialProfile, delta_power_diagnostic,
                        green_operator, harmonic_apply)
from .fraclap import PowerProfile, fraclap_power_exact, fraclap_radial_quad
from .solver import (ConvergenceError, Existence, RegimeError, classify, nonexistence_probe, solve_blowup,
                     solve_dirichlet, solve_moderate)

__version__ = "0.1.0"
