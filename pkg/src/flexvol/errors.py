"""Exception types shared across the package."""

from __future__ import annotations


class FlexvolError(Exception):
    """Base class for all package errors."""


class ArgumentError(FlexvolError, ValueError):
    """Malformed arguments: wrong sizes, bad index sets, invalid options."""


class DomainError(FlexvolError, ValueError):
    """A matrix, point or path lies outside the domain an operation requires."""


class NumericError(FlexvolError, RuntimeError):
    """A numerical procedure failed to converge or lost track of a branch.

    ``best`` carries whatever partial result was available at failure time
    and ``history`` any diagnostic trail (residuals, step sizes).
    """

    def __init__(self, message: str, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = history if history is not None else []
