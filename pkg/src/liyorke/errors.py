"""Exception types shared across modules."""


class DomainError(ValueError):
    """A point lies outside [0, 1] beyond rounding tolerance."""


class NonConvergence(RuntimeError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class MeshMisaligned(ValueError):
    """The mesh lacks a required cell boundary (e.g. at 1/2)."""


class EmptyWindow(ValueError):
    """A fitting window contains no usable points."""


class NonPositiveValues(ValueError):
    """Log-log fit requested on values that are not strictly positive."""


class BoxOverflow(ValueError):
    """The separation box does not fit inside [1/2, 1]."""
