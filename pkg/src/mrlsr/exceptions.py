"""Exception hierarchy.

``InputError`` covers bad user input (CLI exit code 2), ``NumericalError``
covers numeric failures (CLI exit code 3).
"""


class InputError(ValueError):
    pass


class ZeroBandwidthError(InputError):
    """All inputs coincide, so the automatic bandwidth resolves to zero."""


class NumericalError(ArithmeticError):
    pass


class NonPSDError(NumericalError):
    pass


class DegenerateProblemError(NumericalError):
    pass


class RootFindingError(NumericalError):
    def __init__(self, message, bracket=None, iterations=None):
        super().__init__(message)
        self.bracket = bracket
        self.iterations = iterations
