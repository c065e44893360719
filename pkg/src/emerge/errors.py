"""Exception types shared across the package."""


class EmergeError(Exception):
    """Base class for package errors."""


class InvalidParameterError(EmergeError, ValueError):
    """An argument violates an operation's precondition."""


class NoHypothesisError(EmergeError):
    """No length-compatible word or no valid segmentation exists."""


class InstanceTooLargeError(EmergeError):
    """Exact enumeration was requested for a support above the size guard."""


class InvariantBreachError(EmergeError):
    """A runtime self-check on internal state failed."""
