"""Solver for (phi(u'))' = f(t, u, u') with u'(0) = u(0), u'(T) = b u'(0)."""
from .bounds import BoundReport, compute_bounds
from .degree import DegreeQuery, PlanarMap, brouwer_degree, build_G
from .dsl import load_problem, parse_expression, shipped_problem
from .estimator import BVPSolver
from .exceptions import (BoundViolation, BudgetExceeded, NoConvergence, NonFinite, NotInjective,
                         OutsideRange, ValidationError, ZeroOnBoundary)
from .function_space import C1GridFunction, Grid
from .homeomorphism import BoundaryMap, Homeomorphism
from .operators import ProblemSpec, apply_Gamma, apply_M1, apply_M_lambda, apply_Z, residual
from .solver import SolveReport, SolverConfig, solve, solve_homotopy, solve_schauder, verify

__version__ = "0.1.0"
