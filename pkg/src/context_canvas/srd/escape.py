"""Plateau escape: diversify context and re-emphasise stuck features.

When the loop stalls, two strategies restructure the prompt for the next
round: (1) pull attribute nodes of the run's characters that the prompt has
not cited yet and append them as fresh context clauses; (2) reorder the
directive list so the features with the lowest stability counts come first.
Locked features stay locked and their directive text is never touched; only
its position may change.
"""

from __future__ import annotations

from typing import Optional

from ..graph.store import PropertyGraph
from .prompt import directive_text
from .types import Directive, SrdState, StructuredPrompt, TargetFeatures

_ATTRIBUTE_EDGES = ("HAS_APPEARANCE_TRAIT", "WIELDS", "HAS_PERSONALITY_TRAIT", "HAS_STRENGTH")


def _fresh_attribute_clauses(state: SrdState, graph: PropertyGraph) -> list[Directive]:
    fresh: list[Directive] = []
    prompt_text = state.current_prompt.serialize().lower()
    for character in state.characters:
        node_id = graph.find("Character", character)
        if node_id is None:
            continue
        for edge_type in _ATTRIBUTE_EDGES:
            for _, other in graph.neighbors(node_id, "out", edge_type):
                name = other.name
                if not name or other.id in state.used_node_ids:
                    continue
                if other.properties.get("trait") == "profile":
                    continue  # scalar profile nodes are already folded into the prompt
                if name.lower() in prompt_text:
                    state.used_node_ids.add(other.id)
                    continue
                description = other.properties.get("description", "")
                spec = f"{name} ({description})" if description else name
                fresh.append(Directive(f"context:{name}", directive_text(spec, state.decay), state.decay))
                state.used_node_ids.add(other.id)
    return fresh


def apply_escape_strategies(
    state: SrdState,
    targets: TargetFeatures,
    graph: Optional[PropertyGraph],
) -> SrdState:
    """Restructure the prompt after a detected plateau; returns the same state
    object with ``current_prompt`` rebuilt and the plateau flag reset."""
    if not state.plateau_detected:
        raise ValueError("escape strategies require a detected plateau")

    fresh = _fresh_attribute_clauses(state, graph) if graph is not None else []
    directives = list(state.current_prompt.directives) + fresh

    feature_keys = set(targets.keys())

    def sort_key(indexed: tuple[int, Directive]) -> tuple:
        index, directive = indexed
        if directive.feature_key in feature_keys:
            return (0, state.tracker.get(directive.feature_key, 0), index)
        return (1, 0, index)

    reordered = [d for _, d in sorted(enumerate(directives), key=sort_key)]
    state.current_prompt = StructuredPrompt(state.current_prompt.base, tuple(reordered))
    state.plateau_detected = False
    return state
