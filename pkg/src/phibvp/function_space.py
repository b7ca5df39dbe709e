"""Uniform grids on [0, T], sampled C^1 functions and the linear operators on them.

All quadrature is the composite trapezoid rule, applied cumulatively so the
indefinite integral is available at every node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import NonFinite

DEFAULT_N = 512


@dataclass(frozen=True)
class Grid:
    """Uniform grid t_i = i T / n, i = 0..n."""

    T: float
    n: int = DEFAULT_N

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.n + 1) * (self.T / self.n)
        t[-1] = self.T
        t.flags.writeable = False
        return t

    @property
    def h(self) -> float:
        return self.T / self.n

    def __len__(self):
        return self.n + 1


@dataclass
class C1GridFunction:
    """Values ``u`` and derivative samples ``du`` of a C^1 function on ``grid``."""

    grid: Grid
    u: np.ndarray
    du: np.ndarray = field(default=None)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.du is None:
            self.du = np.zeros_like(self.u)
        self.du = np.asarray(self.du, dtype=float)
        m = self.grid.n + 1
        if self.u.shape != (m,) or self.du.shape != (m,):
            raise ValueError(f"expected {m} samples for u and du, got {self.u.shape} and {self.du.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> "C1GridFunction":
        return cls(grid, np.zeros(grid.n + 1), np.zeros(grid.n + 1))

    @classmethod
    def from_callables(cls, grid: Grid, u, du) -> "C1GridFunction":
        t = grid.nodes
        return cls(grid, np.broadcast_to(u(t), t.shape).copy(), np.broadcast_to(du(t), t.shape).copy())

    @classmethod
    def affine(cls, grid: Grid, x: float, y: float) -> "C1GridFunction":
        """The function t -> x + y t, the planar identification (x, y) ~ x + y t."""
        t = grid.nodes
        return cls(grid, x + y * t, np.full_like(t, y))

    @classmethod
    def from_vector(cls, grid: Grid, vec: np.ndarray) -> "C1GridFunction":
        m = grid.n + 1
        return cls(grid, vec[:m].copy(), vec[m:].copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.du])

    def __sub__(self, other: "C1GridFunction") -> "C1GridFunction":
        return C1GridFunction(self.grid, self.u - other.u, self.du - other.du)


def nemytskii(f, v: C1GridFunction) -> np.ndarray:
    """Samples of t -> f(t, u(t), u'(t)) on the grid of ``v``.

    Raises:
        NonFinite: if f returns NaN or infinity at some node.
    """
    t = v.grid.nodes
    with np.errstate(all="ignore"):
        w = np.asarray(f(t, v.u, v.du), dtype=float)
    w = np.broadcast_to(w, t.shape).astype(float, copy=True)
    if not np.all(np.isfinite(w)):
        i = int(np.flatnonzero(~np.isfinite(w))[0])
        raise NonFinite(f"f is not finite at t={t[i]:.6g} (u={v.u[i]:.6g}, u'={v.du[i]:.6g})")
    return w


def integrate_H(grid: Grid, v) -> np.ndarray:
    """Cumulative trapezoid integral H(v)(t_i) = int_0^{t_i} v."""
    v = np.asarray(v, dtype=float)
    out = np.empty(grid.n + 1)
    out[0] = 0.0
    np.cumsum(0.5 * grid.h * (v[1:] + v[:-1]), out=out[1:])
    return out


def mean_Q(grid: Grid, v) -> float:
    """Mean value (1/T) int_0^T v."""
    return float(integrate_H(grid, v)[-1] / grid.T)


def eval_P(v: C1GridFunction) -> float:
    """Point evaluation u(0)."""
    return float(v.u[0])


def norm_C1(v: C1GridFunction) -> float:
    """||u||_inf + ||u'||_inf over the nodes."""
    return float(np.max(np.abs(v.u)) + np.max(np.abs(v.du)))


def norm_L1(grid: Grid, v) -> float:
    return float(integrate_H(grid, np.abs(np.asarray(v, dtype=float)))[-1])


def neg_part_l1(grid: Grid, v) -> float:
    """||v^-||_{L^1} with v^- = max(-v, 0)."""
    return float(integrate_H(grid, np.maximum(-np.asarray(v, dtype=float), 0.0))[-1])


def sample_t(g, grid: Grid) -> np.ndarray:
    """Evaluate a function of t only on the grid nodes, broadcasting constants."""
    t = grid.nodes
    return np.broadcast_to(np.asarray(g(t), dtype=float), t.shape).astype(float, copy=True)
