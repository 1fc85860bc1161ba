from .store import (
    DuplicateName,
    FormatError,
    GraphIoError,
    Node,
    PropertyGraph,
    Relationship,
    UnknownNode,
)

__all__ = [
    "DuplicateName",
    "FormatError",
    "GraphIoError",
    "Node",
    "PropertyGraph",
    "Relationship",
    "UnknownNode",
]
