"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: :class:`HypothesisError` means the
analysis does not apply to the given problem (exit 2), :class:`NumericalError`
means a computation failed (exit 1) and :class:`ProblemError` flags a bad
input file or invocation.
"""

from __future__ import annotations


class ResonanceError(Exception):
    """Base class for all errors raised by this package."""


class ProblemError(ResonanceError, ValueError):
    """Malformed problem definition or invalid argument."""


class HypothesisError(ResonanceError):
    """The hypotheses of the requested result do not hold."""


class PreconditionError(HypothesisError):
    """An operation was called on input outside its domain (e.g. wrong case)."""


class NumericalError(ResonanceError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy answer."""


class IntegrationError(NumericalError):
    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} at t={t!r}")
        self.t = t


class SingularMatrixError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual
