"""Fixed-point operators for (phi(u'))' = f(t, u, u'), u'(0) = u(0), u'(T) = b u'(0).

Each operator returns a :class:`C1GridFunction` whose derivative track is the
inner phi^{-1}[...] expression sampled at the nodes and whose value track is
its cumulative trapezoid integral plus the scalar offset. The derivative track
is never obtained by differentiating values.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .exceptions import NotInjective, ValidationError
from .function_space import C1GridFunction, Grid, integrate_H, mean_Q, nemytskii
from .homeomorphism import BoundaryMap, Homeomorphism


@dataclass(frozen=True)
class ProblemSpec:
    """One instance of the boundary value problem plus optional hypothesis data.

    ``f`` is called as ``f(t, x, y)`` with numpy arrays; ``h`` and ``c`` as
    ``h(t)``. ``h`` dominates |f| and ``c`` bounds f from below. ``M1 < M2`` are
    the derivative thresholds of the sign hypothesis and ``rho`` an optional
    ball radius for the degree computation.
    """

    phi: Homeomorphism
    b: float
    T: float
    f: Callable
    h: Optional[Callable] = None
    c: Optional[Callable] = None
    M1: Optional[float] = None
    M2: Optional[float] = None
    rho: Optional[float] = None
    name: str = field(default="problem", compare=False)

    def __post_init__(self):
        if not np.isfinite(self.b) or self.b == 0:
            raise ValidationError("problem.b", "b must be a nonzero real")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValidationError("problem.T", "T must be positive")
        if (self.M1 is None) != (self.M2 is None):
            raise ValidationError("hypotheses", "M1 and M2 must be given together")
        if self.M1 is not None and not self.M1 < self.M2:
            raise ValidationError("hypotheses.M1", f"need M1 < M2, got {self.M1} >= {self.M2}")
        if self.rho is not None and not self.rho > 0:
            raise ValidationError("hypotheses.rho", "rho must be positive")

    @property
    def boundary_map(self) -> BoundaryMap:
        return BoundaryMap(self.phi, self.b, self.T)

    @property
    def has_thresholds(self) -> bool:
        return self.M1 is not None

    def normalized(self) -> "ProblemSpec":
        """Equivalent problem with increasing phi: (-phi(u'))' = -f when phi decreases."""
        if self.phi.increasing:
            return self
        f = self.f
        return replace(self, phi=self.phi.normalized(), f=lambda t, x, y: -np.asarray(f(t, x, y)))


def _check_grid(spec: ProblemSpec, grid: Grid):
    if not np.isclose(grid.T, spec.T, rtol=0, atol=1e-14 * spec.T):
        raise ValueError(f"grid length {grid.T} does not match problem T = {spec.T}")


def apply_M_lambda(spec: ProblemSpec, grid: Grid, lam: float, u: C1GridFunction) -> C1GridFunction:
    """M(lam, u), the fixed-point operator of the lam-family of problems.

    M(lam, u) = Q N(u) - B(u0)/T + H(phi^{-1}[phi(u0) + lam H(N(u) - Q N(u)) + t B(u0)/T]) + u0
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    _check_grid(spec, grid)
    t = grid.nodes
    w = nemytskii(spec.f, u)
    q = mean_Q(grid, w)
    u0 = float(u.u[0])
    beta = spec.boundary_map(u0)
    inner = spec.phi.eval(u0) + lam * (integrate_H(grid, w) - q * t) + t * (beta / spec.T)
    dv = spec.phi.invert(inner)
    v = (q - beta / spec.T + u0) + integrate_H(grid, dv)
    return C1GridFunction(grid, v, dv)


def apply_M1(spec: ProblemSpec, grid: Grid, u: C1GridFunction) -> C1GridFunction:
    """M_1(u) = M(1, u); its fixed points are exactly the solutions."""
    return apply_M_lambda(spec, grid, 1.0, u)


def apply_Z(spec: ProblemSpec, grid: Grid, lam: float, u: C1GridFunction) -> C1GridFunction:
    """Z(lam, u) = u0 + Q N(u) - B(u0)/T + H(phi^{-1}[lam t B(u0)/T + phi(u0)]).

    Z(1, .) coincides with M(0, .).
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    _check_grid(spec, grid)
    t = grid.nodes
    w = nemytskii(spec.f, u)
    q = mean_Q(grid, w)
    u0 = float(u.u[0])
    beta = spec.boundary_map(u0)
    dv = spec.phi.invert(lam * t * (beta / spec.T) + spec.phi.eval(u0))
    v = (u0 + q - beta / spec.T) + integrate_H(grid, dv)
    return C1GridFunction(grid, v, dv)


def apply_Gamma(spec: ProblemSpec, grid: Grid, u: C1GridFunction) -> C1GridFunction:
    """Gamma(u) = (D_phi D)^{-1} N(u), defined for b < 0.

    With S = int_0^T N(u) and s0 = B^{-1}(S), the output has derivative
    phi^{-1}[phi(s0) + H(N(u))] and value s0 + H(derivative), so that
    v'(0) = v(0) = s0 and phi(v'(T)) = phi(b s0).

    Raises:
        NotInjective: if b >= 0.
    """
    if spec.b >= 0:
        raise NotInjective(f"Gamma needs b < 0, got b = {spec.b}")
    _check_grid(spec, grid)
    w = nemytskii(spec.f, u)
    Hw = integrate_H(grid, w)
    s0 = float(spec.boundary_map.inverse(Hw[-1]))
    dv = spec.phi.invert(spec.phi.eval(s0) + Hw)
    dv[0] = s0
    v = s0 + integrate_H(grid, dv)
    return C1GridFunction(grid, v, dv)


def residual_profile(spec: ProblemSpec, grid: Grid, u: C1GridFunction) -> np.ndarray:
    """Nodewise |d/dt phi(u') - f(t, u, u')|.

    The derivative of the phi(u') samples uses second-order centred
    differences inside and second-order one-sided stencils at the ends.
    """
    _check_grid(spec, grid)
    flux = np.asarray(spec.phi.eval(u.du), dtype=float)
    dflux = np.gradient(flux, grid.h, edge_order=2)
    return np.abs(dflux - nemytskii(spec.f, u))


def residual(spec: ProblemSpec, grid: Grid, u: C1GridFunction) -> tuple[float, float, float]:
    """(|u'(0) - u(0)|, |u'(T) - b u'(0)|, max nodal ODE defect)."""
    bc1 = abs(u.du[0] - u.u[0])
    bc2 = abs(u.du[-1] - spec.b * u.du[0])
    return float(bc1), float(bc2), float(np.max(residual_profile(spec, grid, u)))


OPERATORS = {
    "M_lambda": lambda spec, grid, lam, u: apply_M_lambda(spec, grid, lam, u),
    "Z_lambda": lambda spec, grid, lam, u: apply_Z(spec, grid, lam, u),
    "Gamma": lambda spec, grid, lam, u: apply_Gamma(spec, grid, u),
}
