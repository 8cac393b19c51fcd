"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: parameter and validation problems exit
with 2, numerical tolerance failures with 3 and integrity failures with 4.
"""


class StableWalkError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParameterError(StableWalkError, ValueError):
    """An argument is outside its admissible range."""

    exit_code = 2


class ValidationError(StableWalkError, ValueError):
    """An input object (angular density, config file) fails validation."""

    exit_code = 2


class ToleranceError(StableWalkError, ArithmeticError):
    """A requested accuracy cannot be certified with the given resources.

    Attributes
    ----------
    estimate :
        Best available estimate, if any.
    achieved :
        Accuracy that was actually reached.
    """

    exit_code = 3

    def __init__(self, message, estimate=None, achieved=None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved = achieved


class QuadratureError(ToleranceError):
    """A quadrature did not converge within its node or panel budget."""


class IntegrityError(StableWalkError, RuntimeError):
    """An internal consistency check failed (corrupted tables, broken invariant)."""

    exit_code = 4
