"""Exception types raised across the package."""


class ParameterError(ValueError):
    """Invalid system parameters (N, K, t, theta, mu, ...)."""


class IllegalQueryError(Exception):
    """A database was asked for a sub-message it does not store."""


class PlanInvariantError(AssertionError):
    """The query planner produced a plan that violates its own counting rules."""


class VerificationError(Exception):
    """An end-to-end check failed (wrong decode, cost mismatch, storage mismatch)."""


class EnumerationBoundError(Exception):
    """Exhaustive enumeration would exceed the caller's bound."""
