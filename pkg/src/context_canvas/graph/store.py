"""Embedded in-memory property graph with canonical JSON persistence.

Nodes carry one or more labels plus a property map; relationships are typed,
directed edges between existing nodes. Node ids are dense integers assigned
from 0 and never reused. A ``(label, name)`` index gives O(1) lookup of named
nodes, and names are unique per label.

The on-disk format is a single UTF-8 JSON document::

    {
      "version": 1,
      "nodes": [{"id": 0, "labels": [...], "properties": {...}}, ...],
      "relationships": [{"source": 0, "target": 1, "type": "...",
                         "properties": {...}}, ...]
    }

with nodes ordered by id, labels and property keys sorted, relationships
ordered by (source, type, target), two-space indentation and LF line
endings -- so saving the same graph always produces identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from ..errors import DataError

logger = logging.getLogger(__name__)

FILE_VERSION = 1

PropertyValue = object  # str | int | float | bool | list[str]

Direction = str  # "out" | "in" | "both"
_DIRECTIONS = ("out", "in", "both")


class DuplicateName(DataError):
    """A node with the same (label, name) already exists."""


class UnknownNode(DataError):
    """A node id was referenced that is not present in the graph."""


class GraphIoError(DataError):
    """The graph file could not be read or written."""


class FormatError(DataError):
    """The graph file is malformed.

    ``line`` and ``column`` are set when the underlying JSON failed to parse;
    structural problems carry a JSON-path style location in the message.
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


def _check_property_value(key: str, value: PropertyValue) -> None:
    if isinstance(value, bool):
        return
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise DataError(f"property {key!r}: numbers must be finite, got {value!r}")
        return
    if isinstance(value, str):
        return
    if isinstance(value, list):
        if not all(isinstance(item, str) for item in value):
            raise DataError(f"property {key!r}: lists must contain only text")
        return
    raise DataError(
        f"property {key!r}: unsupported value type {type(value).__name__} "
        "(allowed: text, number, boolean, list of text)"
    )


@dataclass(frozen=True)
class Node:
    id: int
    labels: frozenset[str]
    properties: dict[str, PropertyValue]

    @property
    def name(self) -> Optional[str]:
        value = self.properties.get("name")
        return value if isinstance(value, str) else None

    def snapshot(self) -> dict:
        """Plain-JSON view with deterministic ordering."""
        return {
            "id": self.id,
            "labels": sorted(self.labels),
            "properties": {k: self.properties[k] for k in sorted(self.properties)},
        }


@dataclass(frozen=True)
class Relationship:
    source: int
    target: int
    rel_type: str
    properties: dict[str, PropertyValue] = field(default_factory=dict)

    def key(self) -> tuple[int, str, int]:
        return (self.source, self.rel_type, self.target)

    def snapshot(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "type": self.rel_type,
            "properties": {k: self.properties[k] for k in sorted(self.properties)},
        }


def _valid_rel_type(rel_type: str) -> bool:
    if not rel_type:
        return False
    return all(c.isupper() or c.isdigit() or c == "_" for c in rel_type)


class PropertyGraph:
    """Mutable during construction, then treated as immutable for queries."""

    def __init__(self) -> None:
        self._nodes: dict[int, Node] = {}
        self._relationships: dict[tuple[int, str, int], Relationship] = {}
        self._name_index: dict[tuple[str, str], int] = {}
        self._out: dict[int, list[tuple[int, str, int]]] = {}
        self._in: dict[int, list[tuple[int, str, int]]] = {}
        self._next_id = 0
        self._fingerprint: Optional[str] = None
        self._sorted_rel_keys: Optional[list[tuple[int, str, int]]] = None

    # ------------------------------------------------------------------
    # construction

    def add_node(self, labels: Iterable[str], properties: dict[str, PropertyValue]) -> int:
        labels = frozenset(labels)
        if not labels:
            raise DataError("a node needs at least one label")
        name = properties.get("name")
        if "Character" in labels and not isinstance(name, str):
            raise DataError("a Character node requires a 'name' property")
        for key, value in properties.items():
            _check_property_value(key, value)
        if isinstance(name, str):
            for label in labels:
                existing = self._name_index.get((label, name))
                if existing is not None:
                    raise DuplicateName(f"a {label} node named {name!r} already exists (id {existing})")
        node_id = self._next_id
        self._next_id += 1
        self._nodes[node_id] = Node(node_id, labels, dict(properties))
        self._out[node_id] = []
        self._in[node_id] = []
        if isinstance(name, str):
            for label in labels:
                self._name_index[(label, name)] = node_id
        self._fingerprint = None
        return node_id

    def add_relationship(
        self,
        source: int,
        target: int,
        rel_type: str,
        properties: Optional[dict[str, PropertyValue]] = None,
    ) -> None:
        if source not in self._nodes:
            raise UnknownNode(f"unknown source node id {source}")
        if target not in self._nodes:
            raise UnknownNode(f"unknown target node id {target}")
        if not _valid_rel_type(rel_type):
            raise DataError(f"relationship type must be UPPERCASE_WITH_UNDERSCORES, got {rel_type!r}")
        key = (source, rel_type, target)
        if key in self._relationships:
            return  # duplicate triples are idempotent
        for prop_key, value in (properties or {}).items():
            _check_property_value(prop_key, value)
        self._relationships[key] = Relationship(source, target, rel_type, dict(properties or {}))
        self._out[source].append(key)
        self._in[target].append(key)
        self._fingerprint = None
        self._sorted_rel_keys = None

    # Internal: used by the builder to consume phase-1 annotations. Not part
    # of the query surface; the graph is immutable once construction is done.
    def _remove_properties(self, node_id: int, prefix: str) -> None:
        node = self.node(node_id)
        kept = {k: v for k, v in node.properties.items() if not k.startswith(prefix)}
        if len(kept) != len(node.properties):
            self._nodes[node_id] = Node(node.id, node.labels, kept)
            self._fingerprint = None

    # ------------------------------------------------------------------
    # lookups

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def node(self, node_id: int) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node id {node_id}") from None

    def find(self, label: str, name: str) -> Optional[int]:
        return self._name_index.get((label, name))

    def nodes(self) -> Iterator[Node]:
        """Nodes in id order."""
        for node_id in sorted(self._nodes):
            yield self._nodes[node_id]

    def relationships(self) -> Iterator[Relationship]:
        """Relationships in canonical (source, type, target) order."""
        if self._sorted_rel_keys is None:
            self._sorted_rel_keys = sorted(self._relationships)
        for key in self._sorted_rel_keys:
            yield self._relationships[key]

    def relationship_count(self) -> int:
        return len(self._relationships)

    def relationship(self, key: tuple[int, str, int]) -> Relationship:
        try:
            return self._relationships[key]
        except KeyError:
            raise UnknownNode(f"unknown relationship {key}") from None

    def name_index_items(self) -> Iterator[tuple[tuple[str, str], int]]:
        yield from self._name_index.items()

    def neighbors(
        self,
        node_id: int,
        direction: Direction = "both",
        rel_type_filter: Optional[str] = None,
    ) -> list[tuple[Relationship, Node]]:
        """Adjacent (relationship, other-node) pairs.

        Deterministic order: sorted by (relationship type, other node's name,
        other node's id), outgoing before incoming on ties.
        """
        if direction not in _DIRECTIONS:
            raise DataError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")
        if node_id not in self._nodes:
            raise UnknownNode(f"unknown node id {node_id}")
        pairs: list[tuple[tuple, Relationship, Node]] = []
        if direction in ("out", "both"):
            for key in self._out[node_id]:
                rel = self._relationships[key]
                if rel_type_filter is not None and rel.rel_type != rel_type_filter:
                    continue
                other = self._nodes[rel.target]
                pairs.append(((rel.rel_type, other.name or "", other.id, 0), rel, other))
        if direction in ("in", "both"):
            for key in self._in[node_id]:
                rel = self._relationships[key]
                if rel_type_filter is not None and rel.rel_type != rel_type_filter:
                    continue
                other = self._nodes[rel.source]
                pairs.append(((rel.rel_type, other.name or "", other.id, 1), rel, other))
        pairs.sort(key=lambda item: item[0])
        return [(rel, other) for _, rel, other in pairs]

    # ------------------------------------------------------------------
    # persistence

    def to_document(self) -> dict:
        return {
            "version": FILE_VERSION,
            "nodes": [node.snapshot() for node in self.nodes()],
            "relationships": [rel.snapshot() for rel in self.relationships()],
        }

    def to_bytes(self) -> bytes:
        text = json.dumps(self.to_document(), indent=2, ensure_ascii=False)
        return (text + "\n").encode("utf-8")

    def fingerprint(self) -> str:
        """Content hash of the canonical serialization; cached until mutated."""
        if self._fingerprint is None:
            self._fingerprint = hashlib.sha256(self.to_bytes()).hexdigest()
        return self._fingerprint

    def save(self, path: str | os.PathLike) -> None:
        tmp = f"{path}.tmp.{os.getpid()}"
        try:
            with open(tmp, "wb") as handle:
                handle.write(self.to_bytes())
            os.replace(tmp, path)
        except OSError as exc:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise GraphIoError(f"cannot write graph file {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PropertyGraph":
        try:
            with open(path, "rb") as handle:
                raw = handle.read()
        except OSError as exc:
            raise GraphIoError(f"cannot read graph file {path}: {exc}") from exc
        try:
            document = json.loads(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"graph file is not valid UTF-8: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise FormatError(f"graph file is not valid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
        return cls.from_document(document)

    @classmethod
    def from_document(cls, document: object) -> "PropertyGraph":
        if not isinstance(document, dict):
            raise FormatError("$: expected a JSON object")
        version = document.get("version")
        if version != FILE_VERSION:
            raise FormatError(f"$.version: expected {FILE_VERSION}, got {version!r}")
        nodes = document.get("nodes")
        rels = document.get("relationships")
        if not isinstance(nodes, list):
            raise FormatError("$.nodes: expected an array")
        if not isinstance(rels, list):
            raise FormatError("$.relationships: expected an array")

        graph = cls()
        for index, entry in enumerate(nodes):
            where = f"$.nodes[{index}]"
            if not isinstance(entry, dict):
                raise FormatError(f"{where}: expected an object")
            node_id = entry.get("id")
            labels = entry.get("labels")
            properties = entry.get("properties", {})
            if node_id != index:
                raise FormatError(f"{where}.id: ids must be dense from 0, expected {index}, got {node_id!r}")
            if not isinstance(labels, list) or not labels or not all(isinstance(l, str) for l in labels):
                raise FormatError(f"{where}.labels: expected a non-empty array of strings")
            if not isinstance(properties, dict):
                raise FormatError(f"{where}.properties: expected an object")
            try:
                for key, value in properties.items():
                    _check_property_value(key, value)
            except DataError as exc:
                raise FormatError(f"{where}.properties: {exc}") from exc
            node = Node(node_id, frozenset(labels), dict(properties))
            graph._nodes[node_id] = node
            graph._out[node_id] = []
            graph._in[node_id] = []
            name = node.name
            if name is not None:
                for label in node.labels:
                    # Damaged files may repeat names; keep the first and let
                    # kg.validate report the duplicates.
                    if (label, name) in graph._name_index:
                        logger.warning("duplicate (%s, %s) in graph file; name index keeps the first", label, name)
                    else:
                        graph._name_index[(label, name)] = node_id
        graph._next_id = len(nodes)

        for index, entry in enumerate(rels):
            where = f"$.relationships[{index}]"
            if not isinstance(entry, dict):
                raise FormatError(f"{where}: expected an object")
            source = entry.get("source")
            target = entry.get("target")
            rel_type = entry.get("type")
            properties = entry.get("properties", {})
            if not isinstance(source, int) or source not in graph._nodes:
                raise FormatError(f"{where}.source: unknown node id {source!r}")
            if not isinstance(target, int) or target not in graph._nodes:
                raise FormatError(f"{where}.target: unknown node id {target!r}")
            if not isinstance(rel_type, str) or not _valid_rel_type(rel_type):
                raise FormatError(f"{where}.type: invalid relationship type {rel_type!r}")
            if not isinstance(properties, dict):
                raise FormatError(f"{where}.properties: expected an object")
            key = (source, rel_type, target)
            if key in graph._relationships:
                raise FormatError(f"{where}: duplicate relationship {key}")
            graph._relationships[key] = Relationship(source, target, rel_type, dict(properties))
            graph._out[source].append(key)
            graph._in[target].append(key)
        return graph

    # ------------------------------------------------------------------

    def structurally_equal(self, other: "PropertyGraph") -> bool:
        return self.to_document() == other.to_document()
