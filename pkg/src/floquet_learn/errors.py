"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
input/configuration problems (``ValueError`` subclasses) and numerical
failures (``NumericalError``).
"""

from __future__ import annotations


class FloquetLearnError(Exception):
    """Base class for all errors raised by this package."""


class NumericalError(FloquetLearnError, ArithmeticError):
    """A numerical routine failed or produced an inconsistent result."""


class NotHermitian(FloquetLearnError, ValueError):
    pass


class DimensionMismatch(FloquetLearnError, ValueError):
    pass


class UnknownAxis(FloquetLearnError, ValueError):
    pass


class UnsupportedOrder(FloquetLearnError, ValueError):
    pass


class TooFewPhases(FloquetLearnError, ValueError):
    pass


class DegenerateNormalization(FloquetLearnError, ValueError):
    """The initial state already sits at the infinite-temperature energy."""


class AnsatzDegenerate(FloquetLearnError, ValueError):
    """Ansatz operators are linearly dependent for the requested spin size."""


class SpanFailure(NumericalError):
    """A Floquet-Magnus term does not lie in the span of the ansatz."""


class QuadratureOrderTooLow(NumericalError):
    pass


class EigSolverFailure(NumericalError):
    pass


class SvdFailure(NumericalError):
    pass


class ConfigError(FloquetLearnError, ValueError):
    """Invalid sweep configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
