"""Exception hierarchy shared by every module of the package."""


class MrprError(Exception):
    """Base class for all errors raised by :mod:`mrpr`."""


class TopologyError(MrprError, ValueError):
    """Malformed or inconsistent topology description.

    ``line`` carries the 1-based line number of the offending entry when the
    error comes from the file parser.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(MrprError, ValueError):
    """Invalid scenario configuration or command-line input."""


class ContractViolation(MrprError, RuntimeError):
    """An internal invariant was broken (simulator bug, not user error)."""


class QuadratureError(MrprError, ArithmeticError):
    """Numerical integration failed to reach the requested tolerance."""


class DegenerateModelError(MrprError, ArithmeticError):
    """A closed-form expression is undefined for the supplied parameters."""
