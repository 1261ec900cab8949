"""Exception hierarchy shared by all modules.

The CLI maps ``ValidationError`` to exit code 2 and ``NumericalError`` to
exit code 3.
"""


class FractonSimError(Exception):
    pass


class ValidationError(FractonSimError, ValueError):
    """Bad input: malformed state, out-of-range parameter, unknown kind."""


class NumericalError(FractonSimError, RuntimeError):
    pass


class ConvergenceError(NumericalError):
    pass


class InfeasibleError(ValidationError):
    """Target (Q, P) lies on or outside the realizable region."""


class NotCrossedError(NumericalError):
    """A relaxation metric never reached its threshold within the run."""
