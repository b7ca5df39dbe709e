"""Exception types shared across the package."""


class PhiBVPError(Exception):
    """Base class for all solver errors."""


class OutsideRange(PhiBVPError, ValueError):
    """A value lies outside the image of a homeomorphism or boundary map."""


class NotInjective(PhiBVPError, ValueError):
    """The boundary map B(x) = phi(b x) - phi(x) cannot be inverted (b >= 0)."""


class NonFinite(PhiBVPError, FloatingPointError):
    """A right-hand side produced NaN or infinity."""


class ZeroOnBoundary(PhiBVPError):
    """The planar map vanishes (numerically) on the boundary circle."""


class BudgetExceeded(PhiBVPError):
    """Adaptive boundary subdivision needed more than the allowed points."""


class BoundViolation(PhiBVPError):
    """An iterate or solution violates an a priori bound."""

    def __init__(self, message, norm=None, radius=None):
        super().__init__(message)
        self.norm = norm
        self.radius = radius


class NoConvergence(PhiBVPError):
    """A fixed-point iteration stopped without meeting its tolerance.

    Carries the best iterate seen, the residual history and, for homotopy
    runs, the continuation parameter at which the failure happened.
    """

    def __init__(self, message, best=None, history=None, lam=None):
        super().__init__(message)
        self.best = best
        self.history = list(history) if history is not None else []
        self.lam = lam


class ValidationError(PhiBVPError, ValueError):
    """Invalid problem data; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
