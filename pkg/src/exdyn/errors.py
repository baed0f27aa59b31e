"""Exception hierarchy shared across the package."""


class ExchangeError(Exception):
    """Base class for all domain errors raised by this package."""


class ParameterError(ExchangeError, ValueError):
    """A distribution or model parameter is out of its admissible range."""


class CapacityError(ExchangeError, ValueError):
    """A state or operation violates pocket capacities."""


class ConditioningError(ExchangeError, ValueError):
    """A conditional expectation was requested on a zero-mass fiber."""


class ShapeError(ExchangeError, ValueError):
    """Operators act on incompatible spaces or have no common sector range."""


class DescriptorError(ExchangeError, ValueError):
    """A symmetry descriptor is malformed."""


class ModelError(ExchangeError, ValueError):
    """A model specification is inconsistent."""


class MultiplicityError(ExchangeError, RuntimeError):
    """A stationary solve did not find a unique distribution."""


class LumpabilityError(ExchangeError, ValueError):
    """An operator does not preserve lifted functions.

    Carries the failed certificate (with witness) as ``certificate``.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class ConfigError(ExchangeError, ValueError):
    """A run configuration failed to parse or validate."""
