"""Shared exception taxonomy.

Every module raises subclasses of :class:`ContextCanvasError` so the CLI can
map failures onto its exit codes (1 usage, 2 data/schema, 3 backend).
"""


class ContextCanvasError(Exception):
    """Base class for all package errors."""


class DataError(ContextCanvasError):
    """Invalid input data: schemas, graph files, query text."""


class BackendFailure(ContextCanvasError):
    """An external backend (or its mock) could not produce a result."""


class UsageError(ContextCanvasError):
    """Bad invocation: unknown flags, malformed flag values."""
