"""Exception types raised across the package."""


class ActiveRisError(Exception):
    """Base class for all package errors."""


class GeometryError(ActiveRisError, ValueError):
    """Non-positive radius/distance or inconsistent node counts."""


class ParameterError(ActiveRisError, ValueError):
    """A physical or algorithmic parameter is outside its valid range."""


class DimensionError(ActiveRisError, ValueError):
    """Array shapes disagree with the system dimensions."""


class NumericError(ActiveRisError, ArithmeticError):
    """A linear solve or normalisation could not be carried out."""


class ActionError(ActiveRisError, ValueError):
    """Action vector has the wrong length."""


class EnvironmentStateError(ActiveRisError, RuntimeError):
    """Environment used out of order, e.g. step() before reset()."""


class StaleCacheError(ActiveRisError, RuntimeError):
    """Backward pass attempted with a cache from outdated parameters."""


class ConfigError(ActiveRisError, ValueError):
    """Experiment configuration failed validation."""
