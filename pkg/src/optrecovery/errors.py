"""Exception hierarchy shared by all modules."""


class RecoveryError(Exception):
    """Base class for errors raised by this package."""


class DomainError(RecoveryError, ValueError):
    """A point or argument lies outside the domain where it is defined."""


class ConfigurationError(RecoveryError, ValueError):
    """Bad construction parameters or configuration file content."""


class InputError(RecoveryError, ValueError):
    """Shapes or lengths of user-supplied data do not match."""


class PreconditionError(RecoveryError):
    """A mathematical premise required for the result does not hold."""


class PositivityError(PreconditionError):
    """An operator that must be positive has a negative kernel sample."""


class InconsistentDataError(PreconditionError):
    """Measured data admit no function from the class."""


class UnsupportedError(RecoveryError, ValueError):
    """Requested case (dimension, slice kind, ...) is not implemented."""


class NumericalError(RecoveryError, ArithmeticError):
    """Non-finite values or non-convergence in a numerical routine."""
