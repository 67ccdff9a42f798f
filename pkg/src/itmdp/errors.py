"""Exception types shared across the package."""

from __future__ import annotations


class ItmdpError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ItmdpError):
    """A parameter set or model violates a structural constraint.

    Carries the individual violation messages so callers (and the CLI)
    can print them one per line.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SchemaError(ItmdpError):
    """An input document is malformed (missing keys, wrong shapes, bad types)."""


class MultichainError(ItmdpError):
    """The policy-induced chain has more than one recurrent class.

    Average cost is initial-state dependent in that case, so a single
    lambda does not exist and evaluation refuses to pick one.
    """


class ConvergenceError(ItmdpError):
    """An iterative solver hit its iteration cap before meeting tolerance."""

    def __init__(self, message, span=None, iterations=None):
        self.span = span
        self.iterations = iterations
        super().__init__(message)


class ImpossibleObservationError(ItmdpError):
    """An observation has zero likelihood under the predicted belief.

    Raised instead of renormalizing from zero: it signals a mismatch
    between the observation model and the data fed to the filter.
    """
