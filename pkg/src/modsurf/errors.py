"""Exception hierarchy shared by all modules.

The CLI maps these to exit codes: validation problems to 2, unmet
tolerances to 3 and resource exhaustion to 4.
"""

from __future__ import annotations


class ModsurfError(Exception):
    """Base class for package errors."""

    exit_code = 1


class DomainError(ModsurfError, ValueError):
    """An argument lies outside the supported domain."""

    exit_code = 2


class PoleError(DomainError):
    """Evaluation requested at a pole."""


class ToleranceNotMet(ModsurfError):
    """A numerical routine could not reach the requested tolerance.

    ``best`` carries the best available estimate and ``error`` its error
    estimate, so callers may still report a flagged partial result.
    """

    exit_code = 3

    def __init__(self, message: str, best=None, error: float | None = None, stage: str | None = None):
        super().__init__(message)
        self.best = best
        self.error = error
        self.stage = stage


class ResourceError(ModsurfError):
    """Iteration caps, memory or input data limits were exceeded."""

    exit_code = 4
