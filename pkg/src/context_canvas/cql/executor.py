"""Executor for parsed queries against a :class:`PropertyGraph`.

Semantics follow Cypher's on the supported subset:

* MATCH extends each candidate row with every graph binding that satisfies
  the pattern (bag semantics); rows with no extension are dropped.
* OPTIONAL MATCH left-extends: rows with no extension survive with the
  clause's new variables bound to null.
* Unknown labels, relationship types or property values are not errors --
  they simply match nothing.
* ``collect(v)`` aggregates per group of the non-collected return items,
  dropping nulls; an empty group collects to an empty list.
* Result rows are ordered by the canonical order of their non-collected
  bindings (nodes by id, relationships by (source, type, target), nulls
  last), so output is deterministic for any given graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..graph.store import Node, PropertyGraph
from .ast import NodePattern, PatternClause, QueryAst

_Binding = Optional[tuple]  # ("node", id) | ("rel", (source, type, target))
_Row = dict


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list[object]]

    def to_document(self) -> dict:
        return {"columns": self.columns, "rows": self.rows}


def _node_matches(node: Node, pattern: NodePattern) -> bool:
    if pattern.label is not None and pattern.label not in node.labels:
        return False
    for key, value in pattern.properties:
        if key not in node.properties or node.properties[key] != value:
            return False
    return True


def _clause_extensions(graph: PropertyGraph, row: _Row, clause: PatternClause) -> list[_Row]:
    """All rows extending ``row`` with bindings satisfying ``clause``."""
    src_pat = clause.source
    out: list[_Row] = []

    def bound_node(pattern: NodePattern) -> tuple[bool, Optional[int]]:
        """(is_bound, node_id_or_None); a null binding can never match."""
        if pattern.variable and pattern.variable in row:
            binding = row[pattern.variable]
            if binding is None or binding[0] != "node":
                return True, None
            return True, binding[1]
        return False, None

    if clause.relationship is None:
        is_bound, node_id = bound_node(src_pat)
        if is_bound:
            candidates = [] if node_id is None else [graph.node(node_id)]
        elif src_pat.label is not None and dict(src_pat.properties).get("name") is not None:
            found = graph.find(src_pat.label, dict(src_pat.properties)["name"])
            candidates = [graph.node(found)] if found is not None else []
        else:
            candidates = list(graph.nodes())
        for node in candidates:
            if _node_matches(node, src_pat):
                extended = dict(row)
                if src_pat.variable:
                    extended[src_pat.variable] = ("node", node.id)
                out.append(extended)
        return out

    rel_pat = clause.relationship
    dst_pat = clause.target
    assert dst_pat is not None
    # Normalize to a directed (tail)-[rel]->(head) walk over stored edges.
    tail_pat, head_pat = (src_pat, dst_pat) if rel_pat.direction == "out" else (dst_pat, src_pat)

    rel_bound = rel_pat.variable in row if rel_pat.variable else False
    if rel_bound:
        binding = row[rel_pat.variable]
        if binding is None or binding[0] != "rel":
            return []
        rels = [graph.relationship(binding[1])]
    else:
        rels = list(graph.relationships())

    tail_is_bound, tail_id = bound_node(tail_pat)
    head_is_bound, head_id = bound_node(head_pat)
    if tail_is_bound and tail_id is None:
        return []
    if head_is_bound and head_id is None:
        return []

    for rel in rels:
        if rel_pat.rel_type is not None and rel.rel_type != rel_pat.rel_type:
            continue
        if tail_is_bound and rel.source != tail_id:
            continue
        if head_is_bound and rel.target != head_id:
            continue
        tail_node = graph.node(rel.source)
        head_node = graph.node(rel.target)
        if not _node_matches(tail_node, tail_pat) or not _node_matches(head_node, head_pat):
            continue
        extended = dict(row)
        if tail_pat.variable:
            extended[tail_pat.variable] = ("node", tail_node.id)
        if head_pat.variable:
            extended[head_pat.variable] = ("node", head_node.id)
        if rel_pat.variable:
            extended[rel_pat.variable] = ("rel", rel.key())
        out.append(extended)
    return out


def _binding_sort_key(binding: _Binding) -> tuple:
    if binding is None:
        return (2,)
    kind, payload = binding
    if kind == "node":
        return (0, payload)
    return (1, payload)


def _snapshot(graph: PropertyGraph, binding: _Binding) -> object:
    if binding is None:
        return None
    kind, payload = binding
    if kind == "node":
        return graph.node(payload).snapshot()
    return graph.relationship(payload).snapshot()


def execute(ast: QueryAst, graph: PropertyGraph) -> ResultTable:
    rows: list[_Row] = [{}]
    for clause in ast.clauses:
        next_rows: list[_Row] = []
        for row in rows:
            extensions = _clause_extensions(graph, row, clause)
            if extensions:
                next_rows.extend(extensions)
            elif clause.optional:
                extended = dict(row)
                for variable in clause.variables():
                    if variable not in extended:
                        extended[variable] = None
                next_rows.append(extended)
        rows = next_rows

    plain = [item for item in ast.return_items if not item.collect]
    collected = [item for item in ast.return_items if item.collect]
    columns = [f"collect({item.variable})" if item.collect else item.variable for item in ast.return_items]

    if not collected:
        keyed = sorted(
            rows, key=lambda row: tuple(_binding_sort_key(row.get(item.variable)) for item in plain)
        )
        table_rows = [
            [_snapshot(graph, row.get(item.variable)) for item in ast.return_items] for row in keyed
        ]
        return ResultTable(columns, table_rows)

    groups: dict[tuple, dict] = {}
    order: list[tuple] = []
    for row in rows:
        key = tuple(row.get(item.variable) for item in plain)
        if key not in groups:
            groups[key] = {item.variable: [] for item in collected}
            order.append(key)
        for item in collected:
            binding = row.get(item.variable)
            if binding is not None:
                groups[key][item.variable].append(binding)

    order.sort(key=lambda key: tuple(_binding_sort_key(binding) for binding in key))
    table_rows = []
    for key in order:
        by_variable = dict(zip((item.variable for item in plain), key))
        cells: list[object] = []
        for item in ast.return_items:
            if item.collect:
                cells.append([_snapshot(graph, binding) for binding in groups[key][item.variable]])
            else:
                cells.append(_snapshot(graph, by_variable[item.variable]))
        table_rows.append(cells)
    return ResultTable(columns, table_rows)
