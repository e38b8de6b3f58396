"""Exception hierarchy shared by the package and the command line."""


class NTRError(Exception):
    """Base class for all errors raised by :mod:`ntrsurv`."""


class ConfigError(NTRError, ValueError):
    """Invalid configuration value or unknown option."""


class DataError(NTRError, ValueError):
    """Malformed, empty or otherwise unusable survival data."""


class NumericalError(NTRError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge."""
