"""Fixed-point solvers and the existence-certificate pipeline.

Three routes, keyed by the sign of b and by the available hypotheses:

* ``general_b`` / ``b_one_ward``: continuation in lambda through the family
  M(lambda, .), seeded at lambda = 0 from zeros of the planar map G, with the
  Brouwer degree of G on the a priori ball as certificate.
* ``b_negative_schauder`` / ``b_minus_one_odd``: iteration of Gamma inside the
  ball it maps into itself.

Fixed-point iteration is damped and Anderson-accelerated. Convergence is not
guaranteed by the existence theory; failures surface as :class:`NoConvergence`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bounds import BoundReport, bound_beta, compute_bounds, working_radius
from .degree import DegreeQuery, brouwer_degree, build_G, planar_roots
from .exceptions import BoundViolation, NoConvergence, NonFinite, NotInjective, OutsideRange
from .function_space import C1GridFunction, Grid, mean_Q, nemytskii, norm_C1
from .operators import OPERATORS, ProblemSpec, residual

log = logging.getLogger(__name__)

MODES = ("auto", "general_b", "b_negative_schauder", "b_one_ward", "b_minus_one_odd")
DEGREE_CERTIFIED = "DEGREE_CERTIFIED"
SCHAUDER_MODE = "SCHAUDER_MODE"
RESIDUAL_ONLY = "RESIDUAL_ONLY"


@dataclass
class SolverConfig:
    mode: str = "auto"
    n: int = 512
    gamma: float = 0.5
    anderson_memory: int = 3
    lambda_steps: int = 8
    tol_fp: float = 1e-8
    tol_res: float = 1e-5
    tol_bc: float = 1e-8
    max_iters: int = 500
    seed: int = 0
    max_starts: int = 8

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.anderson_memory < 0 or self.lambda_steps < 1 or self.max_iters < 1:
            raise ValueError("anderson_memory >= 0, lambda_steps >= 1 and max_iters >= 1 required")
        if min(self.tol_fp, self.tol_res, self.tol_bc) <= 0:
            raise ValueError("tolerances must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")


@dataclass
class FixedPointTrace:
    iterations: int
    history: list
    converged: bool
    restarts: int = 0


@dataclass
class Verdict:
    passed: bool
    bc1: float
    bc2: float
    ode: float
    mean_lhs: float
    mean_rhs: float
    messages: list = field(default_factory=list)

    @property
    def mean_gap(self) -> float:
        return abs(self.mean_lhs - self.mean_rhs)

    def __str__(self):
        head = "PASS" if self.passed else "FAIL"
        return (f"{head} bc1={self.bc1:.3e} bc2={self.bc2:.3e} ode={self.ode:.3e} "
                f"mean_identity={self.mean_lhs:.12g} vs {self.mean_rhs:.12g}")


@dataclass
class SolveReport:
    solution: C1GridFunction
    fp_residual: float
    bc_residuals: tuple
    ode_residual: float
    iterations: int
    lambda_path: list
    degree: Optional[int]
    bounds: BoundReport
    certificate: str
    mode: str
    rho: Optional[float] = None
    seed_root: Optional[tuple] = None
    verdict: Optional[Verdict] = None
    notes: list = field(default_factory=list)

    @property
    def norm(self) -> float:
        return norm_C1(self.solution)

    def as_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "certificate": self.certificate,
            "degree": self.degree,
            "rho": self.rho,
            "norm_C1": self.norm,
            "fp_residual": self.fp_residual,
            "bc1_residual": self.bc_residuals[0],
            "bc2_residual": self.bc_residuals[1],
            "ode_residual": self.ode_residual,
            "iterations": self.iterations,
            "n": self.solution.grid.n,
            "T": self.solution.grid.T,
            "verify": "PASS" if self.verdict and self.verdict.passed else "FAIL",
            "lambda_path": ";".join(f"{lam:.6g}:{it}" for lam, it in self.lambda_path),
        }
        if self.seed_root is not None:
            d["seed_root"] = f"{self.seed_root[0]:.17g},{self.seed_root[1]:.17g}"
        for k, v in self.bounds.as_dict().items():
            d[f"bounds.{k}"] = v
        if self.notes:
            d["notes"] = " | ".join(self.notes)
        return d


def _c1_norm_vec(vec: np.ndarray, m: int) -> float:
    return float(np.max(np.abs(vec[:m])) + np.max(np.abs(vec[m:])))


def fixed_point_defect(spec: ProblemSpec, grid: Grid, operator_kind: str, lam: float,
                       u: C1GridFunction) -> float:
    """||u - Op(u)||_1."""
    return norm_C1(u - OPERATORS[operator_kind](spec, grid, lam, u))


def solve_fixed_point(spec: ProblemSpec, config: SolverConfig, operator_kind: str, lam: float,
                      initial: C1GridFunction,
                      on_image: Optional[Callable[[C1GridFunction], None]] = None):
    """Find u = Op(u) by damped Anderson mixing.

    The returned function is an operator image Op(x), so it carries the
    operator's exact value/derivative structure; it is accepted once both
    ||x - Op(x)||_1 and ||Op(x) - Op(Op(x))||_1 are within ``tol_fp``.
    ``on_image`` sees every operator image (used for ball checks).

    Returns:
        (solution, FixedPointTrace)

    Raises:
        NotInjective: Gamma with b >= 0.
        NoConvergence: carrying the best image and the residual history.
    """
    if operator_kind not in OPERATORS:
        raise ValueError(f"unknown operator {operator_kind!r}")
    if operator_kind == "Gamma" and spec.b >= 0:
        raise NotInjective(f"Gamma needs b < 0, got b = {spec.b}")
    grid = initial.grid
    op = OPERATORS[operator_kind]
    m = grid.n + 1
    gamma = config.gamma
    mem = config.anderson_memory
    tol = config.tol_fp

    def G(vec):
        img = op(spec, grid, lam, C1GridFunction.from_vector(grid, vec))
        if on_image is not None:
            on_image(img)
        return img.to_vector()

    x = initial.to_vector()
    g = G(x)
    f = g - x
    res = _c1_norm_vec(f, m)
    history = [res]
    best = (res, g)
    dX, dF = [], []
    restarts = 0
    it = 0
    while it < config.max_iters:
        if res <= tol:
            # accept the image g if it is itself a fixed point to tolerance
            g2 = G(g)
            res2 = _c1_norm_vec(g2 - g, m)
            if res2 <= tol:
                return (C1GridFunction.from_vector(grid, g),
                        FixedPointTrace(it, history + [res2], True, restarts))
        it += 1
        if dF and mem > 0:
            Fm = np.column_stack(dF)
            Xm = np.column_stack(dX)
            scale = np.linalg.norm(Fm, axis=0)
            scale[scale == 0] = 1.0
            theta = np.linalg.lstsq(Fm / scale, f, rcond=1e-12)[0] / scale
            x_new = x + gamma * f - (Xm + gamma * Fm) @ theta
        else:
            x_new = x + gamma * f
        try:
            g_new = G(x_new)
        except (OutsideRange, NonFinite):
            # extrapolation left the operator's domain: fall back to a short damped step
            dX.clear()
            dF.clear()
            restarts += 1
            step = gamma
            for _ in range(30):
                step *= 0.5
                x_new = x + step * f
                try:
                    g_new = G(x_new)
                    break
                except (OutsideRange, NonFinite):
                    continue
            else:
                raise NoConvergence("iterates keep leaving the operator's domain",
                                    best=C1GridFunction.from_vector(grid, best[1]), history=history, lam=lam)
        f_new = g_new - x_new
        res_new = _c1_norm_vec(f_new, m)
        history.append(res_new)
        if not np.isfinite(res_new):
            raise NoConvergence("non-finite residual", best=C1GridFunction.from_vector(grid, best[1]),
                                history=history, lam=lam)
        if mem > 0:
            dX.append(x_new - x)
            dF.append(f_new - f)
            if len(dF) > mem:
                dX.pop(0)
                dF.pop(0)
        x, g, f, res = x_new, g_new, f_new, res_new
        if res < best[0]:
            best = (res, g)
        elif res > 1e4 * best[0] and best[0] < np.inf:
            # divergent extrapolation: restart from the best image
            x = best[1].copy()
            g = G(x)
            f = g - x
            res = _c1_norm_vec(f, m)
            dX.clear()
            dF.clear()
            restarts += 1
    raise NoConvergence(f"no convergence in {config.max_iters} iterations (best {best[0]:.3e})",
                        best=C1GridFunction.from_vector(grid, best[1]), history=history, lam=lam)


def verify(spec: ProblemSpec, grid: Grid, u: C1GridFunction, tol_bc: float = 1e-8,
           tol_res: float = 1e-5) -> Verdict:
    """Check boundary conditions, the ODE residual and the mean-value identity.

    The identity Q N(u) = B(u'(0))/T is equivalent to u'(T) = b u'(0) for exact
    solutions; on the grid it holds up to quadrature and solver error and is
    held to ``tol_res``.
    """
    bc1, bc2, ode = residual(spec, grid, u)
    lhs = mean_Q(grid, nemytskii(spec.f, u))
    rhs = float(spec.boundary_map(float(u.du[0]))) / spec.T
    msgs = []
    if bc1 > tol_bc:
        msgs.append(f"u'(0) != u(0): {bc1:.3e} > {tol_bc:.1e}")
    if bc2 > tol_bc:
        msgs.append(f"u'(T) != b u'(0): {bc2:.3e} > {tol_bc:.1e}")
    if ode > tol_res:
        msgs.append(f"ODE residual {ode:.3e} > {tol_res:.1e}")
    if abs(lhs - rhs) > tol_res:
        msgs.append(f"mean identity gap {abs(lhs - rhs):.3e} > {tol_res:.1e}")
    return Verdict(not msgs, bc1, bc2, ode, lhs, rhs, msgs)


def resolve_mode(spec: ProblemSpec, config: SolverConfig) -> str:
    if config.mode != "auto":
        return config.mode
    if spec.b < 0 and spec.h is not None:
        return "b_minus_one_odd" if spec.b == -1 and spec.phi.odd else "b_negative_schauder"
    if spec.b == 1 and spec.has_thresholds and spec.c is not None:
        return "b_one_ward"
    return "general_b"


def _finish(spec, grid, config, u, operator_kind, lam, mode, bounds, certificate, *, degree=None,
            rho=None, iterations=0, lambda_path=(), seed_root=None, notes=()) -> SolveReport:
    bc1, bc2, ode = residual(spec, grid, u)
    verdict = verify(spec, grid, u, config.tol_bc, config.tol_res)
    return SolveReport(solution=u, fp_residual=fixed_point_defect(spec, grid, operator_kind, lam, u),
                       bc_residuals=(bc1, bc2), ode_residual=ode, iterations=iterations,
                       lambda_path=list(lambda_path), degree=degree, bounds=bounds,
                       certificate=certificate, mode=mode, rho=rho, seed_root=seed_root,
                       verdict=verdict, notes=list(notes))


def _continue_lambda(spec, grid, config, start: C1GridFunction):
    """Track a fixed point of M(lambda, .) from lambda = 0 to 1 with warm starts.

    A failed step is retried from the last converged lambda with the step
    halved, at most four times.
    """
    path = []
    total = 0
    u, tr = solve_fixed_point(spec, config, "M_lambda", 0.0, start)
    total += tr.iterations
    path.append((0.0, tr.iterations))
    lam = 0.0
    step = 1.0 / config.lambda_steps
    halvings = 0
    while lam < 1.0:
        target = min(1.0, lam + step)
        try:
            u_new, tr = solve_fixed_point(spec, config, "M_lambda", target, u)
        except (NoConvergence, OutsideRange, NonFinite) as exc:
            if halvings >= 4:
                if isinstance(exc, NoConvergence):
                    exc.lam = target
                    raise
                raise NoConvergence(f"continuation failed at lambda={target:.6g}: {exc}",
                                    best=u, lam=target) from exc
            step *= 0.5
            halvings += 1
            continue
        total += tr.iterations
        path.append((target, tr.iterations))
        u, lam = u_new, target
    return u, path, total


def solve_homotopy(spec: ProblemSpec, config: Optional[SolverConfig] = None) -> SolveReport:
    """Solve by lambda-continuation and attach the degree certificate when possible.

    Raises:
        ZeroOnBoundary: G vanishes on the boundary of the working ball.
        NoConvergence: no seed could be continued to a verified lambda = 1 solution.
        BoundViolation: a verified solution lies outside the certified ball.
    """
    config = config or SolverConfig()
    spec = spec.normalized()
    mode = resolve_mode(spec, config)
    if mode not in ("general_b", "b_one_ward"):
        mode = "general_b" if config.mode == "auto" else mode
    if mode not in ("general_b", "b_one_ward"):
        raise ValueError(f"solve_homotopy does not run mode {mode!r}")
    if mode == "b_one_ward" and spec.b != 1:
        raise ValueError("mode b_one_ward needs b = 1")
    grid = Grid(spec.T, config.n)
    bounds = compute_bounds(spec, grid)
    rho = working_radius(spec, bounds)
    notes = list(bounds.notes)

    G = build_G(spec, grid)
    degree = None
    if rho is not None:
        degree = brouwer_degree(G, DegreeQuery(rho=rho))
        log.info("degree of G on B(0, %.6g) = %d", rho, degree)
        if degree == 0:
            notes.append("degree of G is 0 on the working ball: no existence certificate")
    search = rho if rho is not None else 10.0
    roots = planar_roots(G, search, max_roots=config.max_starts)
    seeds = [((float(r[0]), float(r[1])), C1GridFunction.affine(grid, r[0], r[1])) for r in roots]
    if not seeds:
        notes.append("G has no zero found in the search disc; seeding from u = 0")
        seeds = [(None, C1GridFunction.zeros(grid))]

    last_exc = None
    for root, start in seeds:
        try:
            u, path, iters = _continue_lambda(spec, grid, config, start)
        except (NoConvergence, OutsideRange, NonFinite) as exc:
            log.info("seed %s failed: %s", root, exc)
            last_exc = exc
            continue
        verdict = verify(spec, grid, u, config.tol_bc, config.tol_res)
        if not verdict.passed:
            last_exc = NoConvergence("converged iterate fails verification: " + "; ".join(verdict.messages),
                                     best=u, lam=1.0)
            continue
        norm = norm_C1(u)
        certified_ball = rho is not None and bounds.rho_min is not None and rho >= bounds.rho_min
        if rho is not None and norm >= rho:
            raise BoundViolation(f"||u||_1 = {norm:.6g} >= rho = {rho:.6g}", norm=norm, radius=rho)
        if degree not in (None, 0) and certified_ball:
            certificate = DEGREE_CERTIFIED
        else:
            certificate = RESIDUAL_ONLY
            if degree is None:
                notes.append("no a priori ball available: residual check only")
            elif not certified_ball:
                notes.append("rho is below the a priori radius: residual check only")
            if spec.b == 1 and degree in (None, 0):
                notes.append("solution may be non-unique")
        return _finish(spec, grid, config, u, "M_lambda", 1.0, mode, bounds, certificate, degree=degree,
                       rho=rho, iterations=iters, lambda_path=path, seed_root=root, notes=notes)
    if isinstance(last_exc, NoConvergence):
        raise last_exc
    raise NoConvergence(f"all seeds failed: {last_exc}", lam=None)


def solve_schauder(spec: ProblemSpec, config: Optional[SolverConfig] = None) -> SolveReport:
    """Iterate Gamma from 0 inside the closed ball of radius beta (2 + T).

    Every Gamma image is checked against the ball.

    Raises:
        NotInjective: b >= 0.
        ValueError: no dominating bound h supplied, or mode preconditions unmet.
        BoundViolation: an image leaves the ball (h does not dominate f).
        NoConvergence: iteration or verification failed.
    """
    config = config or SolverConfig()
    spec = spec.normalized()
    if spec.b >= 0:
        raise NotInjective(f"Schauder mode needs b < 0, got b = {spec.b}")
    if spec.h is None:
        raise ValueError("Schauder mode needs a dominating bound h with |f| <= h")
    mode = resolve_mode(spec, config)
    if mode not in ("b_negative_schauder", "b_minus_one_odd"):
        mode = "b_negative_schauder"
    if mode == "b_minus_one_odd" and not (spec.b == -1 and spec.phi.odd):
        raise ValueError("mode b_minus_one_odd needs b = -1 and an odd phi")
    grid = Grid(spec.T, config.n)
    bounds = compute_bounds(spec, grid)
    radius = bound_beta(spec.phi, bounds.h_l1, spec.T)
    slack = 1e-9 + 1e-12 * radius

    def check_ball(img):
        nrm = norm_C1(img)
        if nrm > radius + slack:
            raise BoundViolation(f"Gamma image has ||.||_1 = {nrm:.6g} > {radius:.6g}; "
                                 "h does not dominate f", norm=nrm, radius=radius)

    u, tr = solve_fixed_point(spec, config, "Gamma", 1.0, C1GridFunction.zeros(grid), on_image=check_ball)
    report = _finish(spec, grid, config, u, "Gamma", 1.0, mode, bounds, SCHAUDER_MODE, rho=radius,
                     iterations=tr.iterations, lambda_path=[], notes=bounds.notes)
    if not report.verdict.passed:
        raise NoConvergence("Gamma fixed point fails verification: " + "; ".join(report.verdict.messages),
                            best=u, history=tr.history)
    return report


def solve(spec: ProblemSpec, config: Optional[SolverConfig] = None) -> SolveReport:
    """Dispatch to :func:`solve_schauder` or :func:`solve_homotopy` by mode."""
    config = config or SolverConfig()
    mode = resolve_mode(spec.normalized(), config)
    if mode in ("b_negative_schauder", "b_minus_one_odd"):
        return solve_schauder(spec, config)
    return solve_homotopy(spec, config)
