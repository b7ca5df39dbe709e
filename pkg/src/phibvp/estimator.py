"""scikit-learn style wrapper around the solvers.

``fit`` takes a problem (a :class:`ProblemSpec`, a problem-file path or the
file text) and solves it; ``predict`` evaluates the solution at arbitrary
times by cubic Hermite interpolation of the value and derivative samples.

    >>> from phibvp import BVPSolver, shipped_problem
    >>> est = BVPSolver(n=256).fit(shipped_problem("example5_1"))
    >>> est.certificate_
    'DEGREE_CERTIFIED'
"""
from __future__ import annotations

from dataclasses import fields

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .dsl import load_problem
from .operators import ProblemSpec
from .solver import SolverConfig, solve


def _check_times(t, T):
    t = check_array(np.atleast_1d(np.asarray(t, dtype=float)), ensure_2d=False, dtype=float)
    if t.ndim != 1:
        raise ValueError(f"expected a 1-D array of times, got shape {t.shape}")
    if np.any(t < 0) or np.any(t > T):
        raise ValueError(f"times must lie in [0, {T}]")
    return t


class BVPSolver(BaseEstimator):
    """Estimator whose hyperparameters are the solver settings.

    Attributes set by ``fit``: ``problem_``, ``report_``, ``solution_``,
    ``degree_``, ``certificate_``, ``bounds_``.
    """

    def __init__(self, mode="auto", n=512, gamma=0.5, anderson_memory=3, lambda_steps=8,
                 tol_fp=1e-8, tol_res=1e-5, tol_bc=1e-8, max_iters=500, seed=0, max_starts=8):
        self.mode = mode
        self.n = n
        self.gamma = gamma
        self.anderson_memory = anderson_memory
        self.lambda_steps = lambda_steps
        self.tol_fp = tol_fp
        self.tol_res = tol_res
        self.tol_bc = tol_bc
        self.max_iters = max_iters
        self.seed = seed
        self.max_starts = max_starts

    def _config(self) -> SolverConfig:
        return SolverConfig(**{f.name: getattr(self, f.name) for f in fields(SolverConfig)})

    def fit(self, X, y=None):
        """Solve problem ``X``; ``y`` is ignored."""
        spec = X if isinstance(X, ProblemSpec) else load_problem(X)[0]
        report = solve(spec, self._config())
        self.problem_ = spec
        self.report_ = report
        self.solution_ = report.solution
        self.degree_ = report.degree
        self.certificate_ = report.certificate
        self.bounds_ = report.bounds
        u = report.solution
        self._spline = CubicHermiteSpline(u.grid.nodes, u.u, u.du)
        return self

    def predict(self, t):
        """u(t) for times ``t`` in [0, T]."""
        check_is_fitted(self, "solution_")
        return self._spline(_check_times(t, self.solution_.grid.T))

    def predict_derivative(self, t):
        """u'(t), the derivative of the interpolant."""
        check_is_fitted(self, "solution_")
        return self._spline.derivative()(_check_times(t, self.solution_.grid.T))

    def score(self, X=None, y=None):
        """Negative maximal ODE residual of the fitted solution (higher is better)."""
        check_is_fitted(self, "report_")
        return -self.report_.ode_residual
