"""Exception types shared across the package."""

from __future__ import annotations


class SpecDensError(Exception):
    """Base class for everything this package raises on purpose."""


class InvalidInputError(SpecDensError, ValueError):
    """Malformed or structurally inconsistent caller input."""


class DomainError(SpecDensError, ValueError):
    """Argument lies outside the mathematical domain of the function."""


class AccuracyError(SpecDensError, RuntimeError):
    """An adaptive scheme hit its iteration cap before reaching its target."""


class SingularJetError(SpecDensError, ArithmeticError):
    """Reciprocal of a truncated Taylor series whose constant term vanishes."""


class NumericalFailureError(SpecDensError, RuntimeError):
    """A density evaluation produced a non-finite or absurdly large result.

    Carries a ``diagnostics`` dict (evaluation point, step sizes, raw
    intermediate values) so failures can be reported without re-running.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NearSingularError(SpecDensError, RuntimeError):
    """A sampled matrix was too ill-conditioned to invert reliably."""


class InsufficientSamplesError(SpecDensError, RuntimeError):
    """Every Monte Carlo sample was discarded; no estimate exists."""


class GeometryMismatchError(SpecDensError, ValueError):
    """Two density profiles do not share a scan geometry."""
