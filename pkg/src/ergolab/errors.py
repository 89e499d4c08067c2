"""Exception types shared across the package."""


class ErgolabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ErgolabError, ValueError):
    """An input value lies outside the domain of the requested object.

    Examples: a symbol outside the declared alphabet, an origin that does
    not belong to the system, mismatched system kinds.
    """


class ArgumentError(ErgolabError, ValueError):
    """A structurally invalid argument (bad length, empty schedule, ...)."""


class CapacityError(ErgolabError, OverflowError):
    """A requested computation exceeds a hard capacity limit."""


class DataQualityError(ErgolabError, RuntimeError):
    """Computed witnesses contradict each other beyond numerical slack."""
