"""Exception types shared across the package."""


class CompetingBanditsError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CompetingBanditsError, ValueError):
    """Malformed or mutually inconsistent inputs."""


class CapacityError(CompetingBanditsError):
    """An exhaustive-enumeration size guard was exceeded."""


class AssumptionError(InputError):
    """A timeline violates the boundedness / minimum-gap assumptions."""


class ConfigError(InputError):
    """An experiment configuration file failed to parse or validate."""
