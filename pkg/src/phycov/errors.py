"""Exception types shared across the package."""


class PhycovError(Exception):
    """Base class for all package errors."""


class ParameterError(PhycovError, ValueError):
    """A configuration or argument value violates its contract."""


class InsufficientDataError(PhycovError, ValueError):
    """A series is too short for the requested estimator or synchronization."""


class SimulationError(PhycovError, RuntimeError):
    """A path simulation produced an invalid state (e.g. NaN from a user callable)."""


class NumericError(PhycovError, RuntimeError):
    """A numerical routine failed to reach its target tolerance."""
