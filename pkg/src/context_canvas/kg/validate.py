"""Consistency checks over a built (or loaded) knowledge graph.

The builder guarantees these invariants for graphs it produced; validation
exists for graphs that were edited, merged or loaded from hand-written files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..graph.store import PropertyGraph
from .builder import ASYMMETRIC_INVERSES, PENDING_PREFIX, SYMMETRIC_TYPES

_ATTRIBUTE_EDGE_TYPES = (
    "HAS_APPEARANCE_TRAIT",
    "HAS_PERSONALITY_TRAIT",
    "WIELDS",
    "HAS_STRENGTH",
    "HAS_WEAKNESS",
    "APPEARS_IN",
)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, message: str) -> None:
        self.violations.append(Violation(kind, message))

    def by_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]


def validate(graph: PropertyGraph, stub_reference_threshold: int = 3) -> ValidationReport:
    report = ValidationReport()
    edge_keys = {rel.key() for rel in graph.relationships()}

    def describe(node_id: int) -> str:
        node = graph.node(node_id)
        return node.name or f"#{node_id}"

    for rel in graph.relationships():
        if rel.rel_type in SYMMETRIC_TYPES:
            if (rel.target, rel.rel_type, rel.source) not in edge_keys:
                report.add(
                    "unmirrored_symmetric_edge",
                    f"{rel.rel_type} {describe(rel.source)}->{describe(rel.target)} has no mirrored edge",
                )
        elif rel.rel_type in ASYMMETRIC_INVERSES:
            inverse = ASYMMETRIC_INVERSES[rel.rel_type]
            if (rel.target, inverse, rel.source) not in edge_keys:
                report.add(
                    "missing_inverse_edge",
                    f"{rel.rel_type} {describe(rel.source)}->{describe(rel.target)} has no inverse {inverse} edge",
                )

    for node in graph.nodes():
        if "Character" not in node.labels:
            continue
        if node.properties.get("stub") is True:
            referencing = {
                other.id
                for _, other in graph.neighbors(node.id, "both")
                if "Character" in other.labels
            }
            if len(referencing) > stub_reference_threshold:
                report.add(
                    "overloaded_stub",
                    f"stub {node.name!r} is referenced by {len(referencing)} characters "
                    f"(threshold {stub_reference_threshold}); it likely deserves a record",
                )
        leftovers = sorted(k for k in node.properties if k.startswith(PENDING_PREFIX))
        if leftovers:
            report.add(
                "pending_annotations",
                f"character {node.name!r} still carries phase-1 annotations: {', '.join(leftovers)}",
            )
        seen: dict[tuple[str, str], int] = {}
        for rel, other in graph.neighbors(node.id, "out"):
            if rel.rel_type not in _ATTRIBUTE_EDGE_TYPES:
                continue
            label = min(other.labels)
            key = (label, (other.name or "").casefold())
            seen[key] = seen.get(key, 0) + 1
        for (label, name), count in sorted(seen.items()):
            if count > 1:
                report.add(
                    "duplicate_attribute",
                    f"character {node.name!r} links {count} {label} attribute nodes named {name!r}",
                )
    return report
