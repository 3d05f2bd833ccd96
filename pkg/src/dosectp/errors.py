"""Exception hierarchy shared by the numerical and data-handling modules."""


class DoseCtpError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DoseCtpError, ValueError):
    """An argument lies outside the domain of the operation."""


class DecompositionError(DoseCtpError, ArithmeticError):
    """A correlation matrix could not be factorized (not positive semidefinite)."""


class DataError(DoseCtpError, ValueError):
    """Input data violate the requirements of the one-way model."""


class DegenerateDataError(DataError):
    """All within-group variation is zero, so the pooled variance vanishes."""


class CalibrationError(DoseCtpError, RuntimeError):
    """A root search for a simulation parameter failed to bracket a solution."""
