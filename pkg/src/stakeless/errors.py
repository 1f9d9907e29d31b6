"""Exception types shared across the package."""


class StakelessError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(StakelessError):
    """Malformed or contradictory caller input (bad match set, bad CSV row, ...)."""


class InvalidStateError(StakelessError):
    """A group state that does not match the operation's precondition."""


class InvalidScheduleError(StakelessError):
    """A schedule spec or fixture outside the twelve legal ones."""


class UnsupportedFamilyError(StakelessError):
    """Operation not defined for the requested model family."""


class InvalidParameterError(StakelessError):
    """Numeric parameter outside its admissible range."""


class BootstrapUnstableError(StakelessError):
    """Too many bootstrap resamples failed to converge."""
