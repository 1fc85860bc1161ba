"""AST for the supported query subset, plus a canonical pretty-printer.

The subset covers exactly what the enrichment pipeline emits: MATCH and
OPTIONAL MATCH clauses with at most one relationship hop each, node label and
property-equality filters, and a RETURN list of variables or collect(var).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Literal = Union[str, int, float, bool]


@dataclass(frozen=True)
class NodePattern:
    variable: Optional[str] = None
    label: Optional[str] = None
    properties: tuple[tuple[str, Literal], ...] = ()


@dataclass(frozen=True)
class RelPattern:
    variable: Optional[str] = None
    rel_type: Optional[str] = None
    direction: str = "out"  # "out": (a)-[r]->(b); "in": (a)<-[r]-(b)


@dataclass(frozen=True)
class PatternClause:
    source: NodePattern
    relationship: Optional[RelPattern] = None
    target: Optional[NodePattern] = None
    optional: bool = False

    def node_patterns(self) -> tuple[NodePattern, ...]:
        return (self.source,) if self.target is None else (self.source, self.target)

    def variables(self) -> tuple[str, ...]:
        """Variables bound by this clause, in pattern order."""
        out = []
        for pattern in self.node_patterns():
            if pattern.variable:
                out.append(pattern.variable)
        if self.relationship and self.relationship.variable:
            out.insert(1, self.relationship.variable)
        return tuple(out)


@dataclass(frozen=True)
class ReturnItem:
    variable: str
    collect: bool = False


@dataclass(frozen=True)
class QueryAst:
    clauses: tuple[PatternClause, ...] = ()
    return_items: tuple[ReturnItem, ...] = field(default_factory=tuple)


def _format_literal(value: Literal) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"
    return repr(value)


def _format_node(pattern: NodePattern) -> str:
    text = "(" + (pattern.variable or "")
    if pattern.label:
        text += f":{pattern.label}"
    if pattern.properties:
        props = ", ".join(f"{key}: {_format_literal(value)}" for key, value in pattern.properties)
        text += " {" + props + "}"
    return text + ")"


def _format_rel(pattern: RelPattern) -> str:
    inner = "[" + (pattern.variable or "")
    if pattern.rel_type:
        inner += f":{pattern.rel_type}"
    inner += "]"
    return f"-{inner}->" if pattern.direction == "out" else f"<-{inner}-"


def format_query(ast: QueryAst) -> str:
    """Canonical text form; reparsing it yields a structurally equal AST."""
    parts = []
    for clause in ast.clauses:
        keyword = "OPTIONAL MATCH" if clause.optional else "MATCH"
        text = keyword + " " + _format_node(clause.source)
        if clause.relationship is not None and clause.target is not None:
            text += _format_rel(clause.relationship) + _format_node(clause.target)
        parts.append(text)
    items = ", ".join(
        f"collect({item.variable})" if item.collect else item.variable for item in ast.return_items
    )
    parts.append("RETURN " + items)
    return " ".join(parts)
