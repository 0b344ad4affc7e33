"""Errors shared across modules."""


class ResourceLimitError(RuntimeError):
    """A request exceeds a configured size guard."""
