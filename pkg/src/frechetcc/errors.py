"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command layer
never has to guess.
"""


class FCCError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidInputError(FCCError, ValueError):
    """Malformed or inconsistent input (shapes, kinds, parameters)."""

    exit_code = 2


class GeometryError(InvalidInputError):
    """Input violates the geometry of its space (non-SPD, antipodal, ...)."""


class ParseError(InvalidInputError):
    """Text input could not be parsed; ``lineno`` points at the bad line."""

    def __init__(self, message, lineno=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)
        self.lineno = lineno
        self.path = path


class DegenerateError(FCCError, ArithmeticError):
    """A statistic is undefined on the given data."""

    exit_code = 3


class DegenerateResponseError(DegenerateError):
    """Sample Fréchet variance of the response is (numerically) zero."""


class DegenerateMeanError(DegenerateError):
    """Fréchet mean is not unique / not defined (e.g. ambient mean at 0)."""


class DegenerateDiagnosticError(DegenerateError):
    """Studentized diagnostic has zero scale."""


class ConvergenceError(DegenerateError):
    """Iterative routine did not converge."""

    def __init__(self, message, iterations=None, gradient_norm=None):
        super().__init__(message)
        self.iterations = iterations
        self.gradient_norm = gradient_norm


class NumericError(DegenerateError):
    """Numerical routine failed (e.g. eigen-solver did not converge)."""
