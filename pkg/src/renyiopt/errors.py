"""Exception types shared across the package.

The CLI maps these onto exit codes: input-side problems (parsing, shape,
parameter and invariant violations) exit with 3, numerical failures with 4.
"""

from __future__ import annotations


class ShapeError(ValueError):
    """An array does not have the required shape or dimensions."""


class ParameterError(ValueError):
    """A scalar parameter is outside its admissible range."""


class DomainError(ValueError):
    """An eigenvalue lies outside the domain of a scalar function."""


class InvariantViolation(ValueError):
    """A constructed value would violate one of its documented invariants."""


class ParseError(ValueError):
    """A serialized instance or trace file cannot be parsed."""


class NumericalError(RuntimeError):
    """A numerical routine failed (non-convergence, non-finite data)."""

    def __init__(self, message: str, dim: int | None = None):
        super().__init__(message)
        self.dim = dim


class BoundaryError(RuntimeError):
    """An operation was evaluated at (or stepped to) a rank-deficient state."""
