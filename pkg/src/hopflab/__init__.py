"""hopf-lab: numerical verification of boundary growth and Lipschitz estimates
for degenerate fully nonlinear elliptic equations |Du|^alpha F(D^2 u) = f."""

from .operators import EllipticParams, OperatorSpec, apply_F, degenerate_op, pucci_minus, pucci_plus
from .barrier import BarrierSpec, barrier_constants, barrier_eval, certify_barrier
from .grid import Annulus, Ball, CartesianGrid2D, GridFunction, RadialGrid, lp_norm
from .solver import BVPProblem, Solution, SolverConfig, solve_flame, solve_radial

__version__ = "0.1.0"

__all__ = [
    "EllipticParams", "OperatorSpec", "apply_F", "degenerate_op", "pucci_minus", "pucci_plus",
    "BarrierSpec", "barrier_constants", "barrier_eval", "certify_barrier",
    "Annulus", "Ball", "CartesianGrid2D", "GridFunction", "RadialGrid", "lp_norm",
    "BVPProblem", "Solution", "SolverConfig", "solve_flame", "solve_radial",
]
