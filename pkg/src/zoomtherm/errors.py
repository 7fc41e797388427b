"""Exception hierarchy shared by all modules."""


class ZoomthermError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ZoomthermError, ValueError):
    """Invalid map name, parameter or run configuration."""


class PreconditionError(ZoomthermError, ValueError):
    """An operation was called outside the hypotheses it needs."""


class NumericalError(ZoomthermError, RuntimeError):
    """Non-convergence, divergence or another numerical failure."""


class BlowUpError(NumericalError):
    """An enumeration exceeded its configured size guard."""
