"""Brouwer degree of planar maps on discs, by adaptive winding-number accumulation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import BudgetExceeded, ZeroOnBoundary
from .function_space import C1GridFunction, Grid, mean_Q, nemytskii
from .operators import ProblemSpec

INITIAL_POINTS = 64
MAX_POINTS = 2**20


@dataclass(frozen=True)
class PlanarMap:
    """A map g(x, y) -> (gx, gy)."""

    func: Callable[[float, float], tuple]
    name: str = "G"

    def __call__(self, x: float, y: float) -> np.ndarray:
        return np.asarray(self.func(x, y), dtype=float)


@dataclass(frozen=True)
class DegreeQuery:
    """Disc of radius ``rho`` around ``center``.

    ``eps_boundary=None`` selects the scale-aware default
    1e-9 * (1 + max |G| over the initial boundary samples).
    """

    rho: float
    center: tuple = (0.0, 0.0)
    eps_boundary: Optional[float] = None
    max_points: int = MAX_POINTS
    initial_points: int = INITIAL_POINTS

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.eps_boundary is not None and not self.eps_boundary > 0:
            raise ValueError("eps_boundary must be positive")


def build_G(spec: ProblemSpec, grid: Grid) -> PlanarMap:
    """G(x, y) = (B(x)/T - (1/T) int_0^T f(t, x + y t, y) dt, y - x).

    The integral is the trapezoid mean over ``grid``, the same quadrature the
    operators use.
    """
    B = spec.boundary_map
    T = spec.T

    def G(x, y):
        aff = C1GridFunction.affine(grid, x, y)
        return (B(float(x)) / T - mean_Q(grid, nemytskii(spec.f, aff)), y - x)

    return PlanarMap(G, name="G")


def _angle(a: np.ndarray, b: np.ndarray) -> float:
    # signed angle from a to b, in (-pi, pi]
    return math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])


def brouwer_degree(planar: PlanarMap, query: DegreeQuery) -> int:
    """Winding number of ``planar`` along the counterclockwise boundary circle.

    Arcs whose image turns by pi/2 or more are bisected until every angular
    increment is below pi/2; the increments then sum to 2 pi times an integer.

    Raises:
        ZeroOnBoundary: if |G| drops below the boundary threshold at a sample,
            or an arc cannot be resolved before its parameter length underflows.
        BudgetExceeded: if more than ``query.max_points`` samples are needed.
    """
    cx, cy = query.center
    rho = query.rho

    def point(s):
        return planar(cx + rho * math.cos(s), cy + rho * math.sin(s))

    m = query.initial_points
    params = [2.0 * math.pi * k / m for k in range(m)]
    values = [point(s) for s in params]
    if not all(np.all(np.isfinite(v)) for v in values):
        raise ZeroOnBoundary("map is not finite on the boundary circle")
    eps = query.eps_boundary
    if eps is None:
        eps = 1e-9 * (1.0 + max(float(np.hypot(*v)) for v in values))
    for s, v in zip(params, values):
        if np.hypot(*v) < eps:
            raise ZeroOnBoundary(f"|G| < {eps:.3g} at boundary angle {s:.6g}")

    total = 0.0
    used = m
    params.append(2.0 * math.pi)
    values.append(values[0])
    for k in range(m):
        stack = [(params[k], values[k], params[k + 1], values[k + 1])]
        while stack:
            s0, v0, s1, v1 = stack.pop()
            d = _angle(v0, v1)
            if abs(d) < 0.5 * math.pi:
                total += d
                continue
            sm = 0.5 * (s0 + s1)
            if not s0 < sm < s1 or s1 - s0 < 1e-15:
                raise ZeroOnBoundary(f"unresolvable turn of G near boundary angle {s0:.6g}")
            vm = point(sm)
            used += 1
            if used > query.max_points:
                raise BudgetExceeded(f"more than {query.max_points} boundary samples needed")
            if not np.all(np.isfinite(vm)) or np.hypot(*vm) < eps:
                raise ZeroOnBoundary(f"|G| < {eps:.3g} at boundary angle {sm:.6g}")
            # pop order keeps accumulation left to right
            stack.append((sm, vm, s1, v1))
            stack.append((s0, v0, sm, vm))
    winding = total / (2.0 * math.pi)
    deg = int(round(winding))
    if abs(winding - deg) > 1e-6:
        raise ZeroOnBoundary(f"winding {winding:.6g} is not an integer")
    return deg


def planar_roots(planar: PlanarMap, rho: float, *, starts_per_axis: int = 5, max_roots: int = 8,
                 tol: float = 1e-11, max_iter: int = 60) -> list[np.ndarray]:
    """Zeros of ``planar`` found by damped Newton from a grid of starts in the disc.

    The Jacobian is a central finite difference with step 1e-6 * scale. Roots
    are deduplicated and returned sorted by distance from the origin.
    """
    starts = [np.zeros(2)]
    ax = np.linspace(-rho, rho, starts_per_axis + 2)[1:-1]
    for x in ax:
        for y in ax:
            if x * x + y * y < rho * rho:
                starts.append(np.array([x, y]))
    roots: list[np.ndarray] = []
    for z in starts:
        r = _newton2(planar, z, tol, max_iter)
        if r is None or not np.all(np.isfinite(r)):
            continue
        if any(np.linalg.norm(r - q) <= 1e-7 * (1.0 + np.linalg.norm(q)) for q in roots):
            continue
        roots.append(r)
    roots.sort(key=lambda q: (float(np.linalg.norm(q)), float(q[0]), float(q[1])))
    return roots[:max_roots]


def _newton2(planar: PlanarMap, z: np.ndarray, tol: float, max_iter: int) -> Optional[np.ndarray]:
    z = np.array(z, dtype=float)
    try:
        g = planar(*z)
    except (ArithmeticError, ValueError):
        return None
    scale = 1.0 + float(np.linalg.norm(g))
    for _ in range(max_iter):
        gn = float(np.linalg.norm(g))
        if gn <= tol * scale:
            return z
        step = 1e-6 * (1.0 + float(np.max(np.abs(z))))
        J = np.empty((2, 2))
        try:
            for j in range(2):
                e = np.zeros(2)
                e[j] = step
                J[:, j] = (planar(*(z + e)) - planar(*(z - e))) / (2 * step)
            dz = np.linalg.solve(J, -g)
        except (ArithmeticError, ValueError, np.linalg.LinAlgError):
            return None
        t = 1.0
        while t > 1e-6:
            cand = z + t * dz
            try:
                gc = planar(*cand)
            except (ArithmeticError, ValueError):
                gc = None
            if gc is not None and np.all(np.isfinite(gc)) and np.linalg.norm(gc) < (1 - 1e-4 * t) * gn:
                z, g = cand, gc
                break
            t *= 0.5
        else:
            return z if np.linalg.norm(g) <= tol * scale else None
    return z if np.linalg.norm(g) <= tol * scale else None
