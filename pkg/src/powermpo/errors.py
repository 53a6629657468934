"""Exception hierarchy shared by the solver modules and the CLI."""


class PowerMPOError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PowerMPOError, ValueError):
    """Bad input: malformed instance, inconsistent shapes, out-of-range values."""


class NumericalError(PowerMPOError, ArithmeticError):
    """A numerical procedure produced an unusable result."""


class VanishedOperatorError(NumericalError):
    """The operator norm collapsed to zero under truncation."""


class GaugeError(NumericalError):
    """Conditional probabilities are not normalized; the MPS is not in the expected gauge."""


class ResourceGuardError(PowerMPOError):
    """The requested computation exceeds a configured size guard."""
