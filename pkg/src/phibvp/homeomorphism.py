"""Scalar homeomorphisms phi with phi(0) = 0 and the boundary map B(x) = phi(bx) - phi(x).

Every homeomorphism is vectorised over numpy arrays: ``eval`` and ``invert``
accept scalars or arrays and return the same shape. Inverses use a closed form
when one is known and a bracketed bisection refined by Newton steps otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import NotInjective, OutsideRange

TOL_CLOSED = 1e-12
TOL_BISECT = 1e-10
_BRACKET_CAP = 2.0**60


def _scalar_or_array(like, value):
    if np.ndim(like) == 0:
        return float(value)
    return value


def solve_monotone(func: Callable, z, increasing: bool = True, rtol: float = TOL_BISECT):
    """Solve ``func(x) = z`` elementwise for a strictly monotone ``func``.

    The bracket starts at [-1, 1] and doubles until it encloses the target,
    giving up at 2**60. Bisection shrinks it to ``rtol`` relative width and two
    safeguarded Newton steps (finite-difference slope, clipped to the bracket)
    polish the result.

    Raises:
        OutsideRange: if no bracket up to 2**60 contains a target value.
    """
    z = np.asarray(z, dtype=float)
    if not increasing:
        return solve_monotone(lambda x: -func(x), -z, True, rtol)
    zf = np.atleast_1d(z).ravel()
    if not np.all(np.isfinite(zf)):
        raise OutsideRange("cannot invert a non-finite value")
    lo = -np.ones_like(zf)
    hi = np.ones_like(zf)

    while True:
        need = func(lo) > zf
        if not need.any():
            break
        if np.any(np.abs(lo[need]) >= _BRACKET_CAP):
            raise OutsideRange(f"value {zf[need][0]!r} below the range of the map")
        lo[need] *= 2.0
    while True:
        need = func(hi) < zf
        if not need.any():
            break
        if np.any(np.abs(hi[need]) >= _BRACKET_CAP):
            raise OutsideRange(f"value {zf[need][0]!r} above the range of the map")
        hi[need] *= 2.0

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all(hi - lo <= rtol * (1.0 + np.abs(mid))):
            break
        below = func(mid) < zf
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)

    for _ in range(2):
        step = 1e-7 * (1.0 + np.abs(x))
        slope = (func(x + step) - func(x - step)) / (2.0 * step)
        ok = np.isfinite(slope) & (slope > 0)
        cand = x - np.where(ok, (func(x) - zf) / np.where(ok, slope, 1.0), 0.0)
        x = np.clip(cand, lo, hi)

    # func(0) = 0 for every map inverted here; keep zero targets exact
    x = np.where(zf == 0.0, np.where((lo <= 0) & (hi >= 0), 0.0, x), x)
    return x.reshape(z.shape)


@dataclass(frozen=True)
class Homeomorphism:
    """Strictly monotone map phi: R -> (lower, upper) with phi(0) = 0.

    Build instances with the classmethod constructors rather than directly.
    """

    kind: str
    func: Callable = field(repr=False)
    inverse: Optional[Callable] = field(default=None, repr=False)
    params: tuple = ()
    odd: bool = False
    lower: float = -math.inf
    upper: float = math.inf
    increasing: bool = True

    @classmethod
    def identity(cls) -> "Homeomorphism":
        return cls("identity", lambda s: np.asarray(s, dtype=float) * 1.0,
                   lambda z: np.asarray(z, dtype=float) * 1.0, odd=True)

    @classmethod
    def p_laplacian(cls, p: float) -> "Homeomorphism":
        """phi(s) = |s|^(p-2) s; p = 4 gives the cubic s**3."""
        p = float(p)
        if not p > 1.0:
            raise ValueError(f"p-Laplacian needs p > 1, got {p}")
        if p == 2.0:
            return cls("p_laplacian", lambda s: np.asarray(s, dtype=float) * 1.0,
                       lambda z: np.asarray(z, dtype=float) * 1.0, params=(p,), odd=True)
        if p == 4.0:
            return cls("p_laplacian", lambda s: np.asarray(s, dtype=float) ** 3, np.cbrt,
                       params=(p,), odd=True)
        q = 1.0 / (p - 1.0)

        def fwd(s):
            s = np.asarray(s, dtype=float)
            return np.abs(s) ** (p - 2.0) * s

        def inv(z):
            z = np.asarray(z, dtype=float)
            return np.sign(z) * np.abs(z) ** q

        return cls("p_laplacian", fwd, inv, params=(p,), odd=True)

    @classmethod
    def bounded_tanh(cls, a: float = 1.0) -> "Homeomorphism":
        """phi(s) = a tanh(s), a homeomorphism onto (-a, a)."""
        a = float(a)
        if not a > 0:
            raise ValueError(f"bounded_tanh needs a > 0, got {a}")
        return cls("bounded_tanh", lambda s: a * np.tanh(s),
                   lambda z: np.arctanh(np.asarray(z, dtype=float) / a),
                   params=(a,), odd=True, lower=-a, upper=a)

    @classmethod
    def bounded_rational(cls, a: float = 1.0) -> "Homeomorphism":
        """phi(s) = a s / sqrt(1 + s^2), the relativistic-type map onto (-a, a)."""
        a = float(a)
        if not a > 0:
            raise ValueError(f"bounded_rational needs a > 0, got {a}")

        def inv(z):
            z = np.asarray(z, dtype=float)
            return z / np.sqrt(a * a - z * z)

        return cls("bounded_rational", lambda s: a * np.asarray(s) / np.sqrt(1.0 + np.square(s)),
                   inv, params=(a,), odd=True, lower=-a, upper=a)

    @classmethod
    def custom(cls, func: Callable, inverse: Optional[Callable] = None, *, odd: bool = False,
               lower: float = -math.inf, upper: float = math.inf,
               name: str = "custom") -> "Homeomorphism":
        """Wrap a user-supplied strictly monotone ``func`` (vectorised, func(0) = 0).

        Without ``inverse`` the map is inverted numerically. A decreasing
        ``func`` is accepted; see :meth:`normalized`.
        """
        probe = np.asarray(func(np.array([-1.0, 1.0])), dtype=float)
        if not probe[1] != probe[0]:
            raise ValueError("custom phi is not strictly monotone on [-1, 1]")
        increasing = bool(probe[1] > probe[0])
        if not increasing:
            lower, upper = min(lower, upper), max(lower, upper)
        return cls(name, func, inverse, odd=odd, lower=lower, upper=upper, increasing=increasing)

    def normalized(self) -> "Homeomorphism":
        """Return an increasing version: -phi when phi is decreasing, else self."""
        if self.increasing:
            return self
        f, g = self.func, self.inverse
        inv = None if g is None else (lambda z: g(-np.asarray(z, dtype=float)))
        return Homeomorphism(self.kind, lambda s: -np.asarray(f(s), dtype=float), inv,
                             self.params, self.odd, -self.upper, -self.lower, True)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lower) or math.isfinite(self.upper)

    def eval(self, x):
        """phi(x), elementwise."""
        return _scalar_or_array(x, np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float))

    __call__ = eval

    def invert(self, z):
        """phi^{-1}(z), elementwise.

        Raises:
            OutsideRange: if some ``z`` is not strictly inside (lower, upper).
        """
        za = np.asarray(z, dtype=float)
        if self.bounded or not np.all(np.isfinite(za)):
            bad = ~((za > self.lower) & (za < self.upper))
            if np.any(bad):
                raise OutsideRange(
                    f"{np.asarray(za)[bad].ravel()[0]!r} is outside the range "
                    f"({self.lower}, {self.upper}) of phi")
        if self.inverse is not None:
            out = np.asarray(self.inverse(za), dtype=float)
        else:
            out = solve_monotone(self.func, za, self.increasing)
        return _scalar_or_array(z, out)

    def validate(self, lattice=None, tol: float = TOL_BISECT) -> None:
        """Check phi(0) = 0, strict monotonicity, round trip and oddness on a lattice.

        Raises:
            ValueError: describing the first failed check.
        """
        if lattice is None:
            lattice = np.concatenate([-np.logspace(-3, 3, 61)[::-1], [0.0], np.logspace(-3, 3, 61)])
        x = np.asarray(lattice, dtype=float)
        y = np.asarray(self.func(x), dtype=float)
        if self.func(np.array([0.0]))[0] != 0.0:
            raise ValueError("phi(0) must be exactly 0")
        dy = np.diff(y) if self.increasing else -np.diff(y)
        # bounded maps may saturate to equal floats far out
        if not (np.all(dy >= 0) and np.all(dy[np.abs(x[1:]) <= 1.0] > 0)):
            raise ValueError("phi is not strictly monotone on the test lattice")
        inside = (y > self.lower) & (y < self.upper)
        # compare in the image, which stays well conditioned where phi saturates
        again = np.asarray(self.func(self.invert(y[inside])), dtype=float)
        if np.any(np.abs(again - y[inside]) > tol * (1.0 + np.abs(y[inside])) * 100):
            raise ValueError("inverse does not round-trip phi on the test lattice")
        if self.odd:
            ym = np.asarray(self.func(-x), dtype=float)
            if np.any(np.abs(ym + y) > tol * (1.0 + np.abs(y))):
                raise ValueError("phi is flagged odd but phi(-x) != -phi(x)")


@dataclass(frozen=True)
class BoundaryMap:
    """B(x) = phi(b x) - phi(x) for a nonzero real b."""

    phi: Homeomorphism
    b: float
    T: float = 1.0

    def __post_init__(self):
        if self.b == 0:
            raise ValueError("b must be nonzero")

    def __call__(self, x):
        x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        return self.phi.eval(self.b * x) - self.phi.eval(x)

    def inverse(self, z):
        """Solve B(x) = z; only defined for b < 0, where B is strictly decreasing.

        Raises:
            NotInjective: if b >= 0.
            OutsideRange: if z is not attained.
        """
        if self.b >= 0:
            raise NotInjective(f"B is not injective for b = {self.b} >= 0")
        phi = self.phi

        def B(x):
            return np.asarray(phi.func(self.b * x), dtype=float) - np.asarray(phi.func(x), dtype=float)

        za = np.asarray(z, dtype=float)
        if self.b == -1.0 and phi.odd and phi.inverse is not None:
            # B(x) = -2 phi(x)
            return _scalar_or_array(z, np.asarray(phi.invert(-0.5 * za), dtype=float))
        return _scalar_or_array(z, solve_monotone(B, za, increasing=not phi.increasing))
