"""Shared exception types."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(ValueError):
    """A structural parameter (block number, horizon, cap) is out of range."""


class ConstructionError(RuntimeError):
    """A constructive procedure could not produce a valid object.

    Carries a human-readable diagnostic; never raised silently.
    """
