"""Exception types shared across the package.

The CLI maps :class:`ContractViolation` to exit code 2 and
:class:`NumericError` to exit code 3.
"""


class ContractViolation(ValueError):
    """A caller broke a documented precondition (shapes, empty inputs, ...)."""


class NumericError(ArithmeticError):
    """A simulation or training quantity became non-finite."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DistributionError(ValueError):
    """A parameter distribution could not produce a valid sample."""

    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class TrainingError(NumericError):
    """Training diverged (non-finite loss) at a given step."""

    def __init__(self, message, step=None):
        super().__init__(message, index=step)
        self.step = step


class DiagnosticError(ValueError):
    """A diagnostic could not be computed from the supplied data."""
