"""A priori bounds on solutions and the radii they induce.

Every formula has the shape  k * (2 + T)  with  k = max |phi^{-1}(+-z)|
for some level z built from L = max(|phi(M1)|, |phi(M2)|) and an L^1 norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .function_space import C1GridFunction, Grid, integrate_H, neg_part_l1, norm_L1, sample_t
from .homeomorphism import Homeomorphism
from .operators import ProblemSpec

RHO_SAFETY = 1.05


def _sym_inverse(phi: Homeomorphism, z: float) -> float:
    return max(abs(phi.invert(z)), abs(phi.invert(-z)))


def bound_L(phi: Homeomorphism, M1: float, M2: float) -> float:
    if not M1 < M2:
        raise ValueError(f"need M1 < M2, got {M1}, {M2}")
    return max(abs(phi.eval(M2)), abs(phi.eval(M1)))


def bound_R1(phi: Homeomorphism, L: float, h_l1: float, T: float) -> float:
    """a (2 + T) with a = max |phi^{-1}(+-(L + 2||h||_1))|; radius for the lambda-family."""
    return _sym_inverse(phi, L + 2.0 * h_l1) * (2.0 + T)


def bound_R2(phi: Homeomorphism, L: float, h_l1: float, T: float) -> float:
    """Same as :func:`bound_R1` with a single ||h||_1; radius for the Z-family."""
    return _sym_inverse(phi, L + h_l1) * (2.0 + T)


def bound_r(phi: Homeomorphism, M1: float, M2: float, c_neg_l1: float) -> float:
    """Derivative bound ||u'||_inf < r for b = 1, from a lower bound f >= c."""
    return _sym_inverse(phi, bound_L(phi, M1, M2) + 2.0 * c_neg_l1)


def bound_beta(phi: Homeomorphism, h_l1: float, T: float) -> float:
    """beta (2 + T): radius of the ball that Gamma maps into itself when b < 0."""
    return _sym_inverse(phi, h_l1) * (2.0 + T)


@dataclass
class BoundReport:
    L: Optional[float] = None
    R1: Optional[float] = None
    R2: Optional[float] = None
    r: Optional[float] = None
    r_radius: Optional[float] = None
    beta_radius: Optional[float] = None
    h_l1: Optional[float] = None
    c_neg_l1: Optional[float] = None
    notes: list = field(default_factory=list)

    @property
    def radii(self) -> dict:
        pairs = {"R1": self.R1, "R2": self.R2, "r(2+T)": self.r_radius, "beta(2+T)": self.beta_radius}
        return {k: v for k, v in pairs.items() if v is not None}

    @property
    def rho_min(self) -> Optional[float]:
        radii = self.radii
        return max(radii.values()) if radii else None

    def as_dict(self) -> dict:
        return {"L": self.L, "R1": self.R1, "R2": self.R2, "r": self.r, "r_radius": self.r_radius,
                "beta_radius": self.beta_radius, "h_l1": self.h_l1, "c_neg_l1": self.c_neg_l1,
                "rho_min": self.rho_min}


def compute_bounds(spec: ProblemSpec, grid: Grid) -> BoundReport:
    """Every bound whose hypotheses the problem supplies.

    R1/R2 need M1, M2 and h; r needs M1, M2, c and b = 1; beta needs h and
    b < 0. L^1 norms are trapezoid sums on ``grid``.
    """
    rep = BoundReport()
    phi = spec.phi
    if spec.h is not None:
        rep.h_l1 = norm_L1(grid, sample_t(spec.h, grid))
    if spec.c is not None:
        rep.c_neg_l1 = neg_part_l1(grid, sample_t(spec.c, grid))
    if spec.has_thresholds:
        rep.L = bound_L(phi, spec.M1, spec.M2)
        if rep.h_l1 is not None:
            rep.R1 = bound_R1(phi, rep.L, rep.h_l1, spec.T)
            rep.R2 = bound_R2(phi, rep.L, rep.h_l1, spec.T)
        if rep.c_neg_l1 is not None:
            if spec.b == 1:
                rep.r = bound_r(phi, spec.M1, spec.M2, rep.c_neg_l1)
                rep.r_radius = rep.r * (2.0 + spec.T)
            else:
                rep.notes.append("lower bound c is only used when b = 1")
    if rep.h_l1 is not None and spec.b < 0:
        rep.beta_radius = bound_beta(phi, rep.h_l1, spec.T)
    return rep


def working_radius(spec: ProblemSpec, report: BoundReport) -> Optional[float]:
    """The user's rho if given, else 1.05 * rho_min (None when no bound applies)."""
    if spec.rho is not None:
        return float(spec.rho)
    if report.rho_min is not None and report.rho_min > 0:
        return RHO_SAFETY * report.rho_min
    return None


@dataclass
class SignProbeReport:
    upper_min_abs: float
    upper_signs: set
    lower_min_abs: float
    lower_signs: set
    probes: int
    falsified: bool

    @property
    def verdict(self) -> str:
        return "FALSIFIED" if self.falsified else "NOT_FALSIFIED"


def _random_profile(rng: np.random.Generator, t: np.ndarray, T: float) -> np.ndarray:
    k = np.arange(1, 5)
    a = rng.normal(size=4) / k
    ph = rng.uniform(0, 2 * np.pi, size=4)
    g = np.sum(a[:, None] * np.sin(np.pi * k[:, None] * t[None, :] / T + ph[:, None]), axis=0)
    g -= g.min()
    return g / max(float(g.max()), 1e-300)


def check_sign_hypothesis(spec: ProblemSpec, grid: Grid, probe_count: int = 200, seed: int = 0,
                          radius: Optional[float] = None, zero_tol: float = 1e-12) -> SignProbeReport:
    """Probe the sign hypothesis on random C^1 functions; a falsification test, not a proof.

    For functions with u' >= M2 everywhere (and separately u' <= M1) the
    quantity int_0^T f(t, u, u') - B(u'(0)) must never vanish. A zero (within
    ``zero_tol`` relative) or a sign change inside either family falsifies it,
    since each family is connected.
    """
    if not spec.has_thresholds:
        raise ValueError("the sign probe needs M1 and M2")
    rng = np.random.default_rng(seed)
    t = grid.nodes
    R = radius if radius is not None else max(10.0, 2.0 * max(abs(spec.M1), abs(spec.M2)))
    B = spec.boundary_map

    def family(side):
        vals = []
        for _ in range(probe_count):
            amp = rng.uniform(0.0, R)
            g = _random_profile(rng, t, spec.T)
            du = spec.M2 + amp * g if side > 0 else spec.M1 - amp * g
            u0 = rng.uniform(-R, R)
            u = C1GridFunction(grid, u0 + integrate_H(grid, du), du)
            with np.errstate(all="ignore"):
                w = np.broadcast_to(np.asarray(spec.f(t, u.u, u.du), dtype=float), t.shape)
            if not np.all(np.isfinite(w)):
                continue
            vals.append(float(integrate_H(grid, w)[-1] - B(float(du[0]))))
        return np.asarray(vals)

    up, lo = family(+1), family(-1)

    def summarize(v):
        if v.size == 0:
            return np.inf, set(), False
        scale = 1.0 + float(np.max(np.abs(v)))
        signs = {int(s) for s in np.sign(v)}
        bad = bool(np.any(np.abs(v) <= zero_tol * scale)) or len(signs) > 1
        return float(np.min(np.abs(v))), signs, bad

    um, us, ub = summarize(up)
    lm, ls, lb = summarize(lo)
    return SignProbeReport(um, us, lm, ls, int(up.size + lo.size), ub or lb)
