"""The fixed retrieval query and its reshaping into a CharacterContext.

One template covers all per-character retrieval: match the character node,
optionally expand every outgoing relationship, and collect the relationship
and neighbor lists. Executing it and classifying the neighbor pairs by edge
type produces the context structure the enrichment pipeline works with.
"""

from __future__ import annotations

from ..graph.store import PropertyGraph
from ..pipeline.context import CharacterContext
from .executor import execute
from .parser import parse

# Edge vocabulary shared with the knowledge-graph builder.
RELATION_EDGE_TO_KIND = {
    "HAS_SPOUSE": "spouse",
    "HAS_SIBLING": "sibling",
    "HAS_FRIEND": "friend",
    "HAS_ENEMY": "enemy",
    "HAS_TEACHER": "teacher",
    "HAS_DISCIPLE": "disciple",
    "HAS_PARENT": "parent",
    "HAS_CHILD": "child",
}

_SCALAR_TRAITS = ("build", "height", "skin_color", "hair_color", "beard", "clothing")


def _escape(name: str) -> str:
    return name.replace("\\", "\\\\").replace("'", "\\'")


def character_context_query(character_name: str) -> str:
    return (
        f"MATCH (c:Character {{name: '{_escape(character_name)}'}}) "
        "OPTIONAL MATCH (c)-[r]->(related) "
        "RETURN c, collect(r), collect(related)"
    )


def query_by_template(character_name: str, graph: PropertyGraph) -> CharacterContext:
    """Retrieve a character's context; unknown names yield an empty context."""
    table = execute(parse(character_context_query(character_name)), graph)
    context = CharacterContext(character=character_name)
    if not table.rows:
        return context
    character_cell, rel_cells, related_cells = table.rows[0]
    return reshape_context(character_name, character_cell, list(zip(rel_cells, related_cells)))


def reshape_context(
    character_name: str,
    character_cell: dict,
    pairs: list[tuple[dict, dict]],
) -> CharacterContext:
    context = CharacterContext(character=character_name)
    char_props = character_cell["properties"]
    context.sources["character"] = [character_cell["id"]]

    unique_features: list[tuple[str, int]] = []
    scalars: dict[str, tuple[str, int]] = {}
    personality: list[tuple[str, int]] = []
    realm = origin = None
    epics: list[str] = []
    strengths: list[str] = []
    weaknesses: list[str] = []
    note_ids: dict[str, list[int]] = {}

    for rel_cell, node_cell in pairs:
        if rel_cell is None or node_cell is None:
            continue
        rel_type = rel_cell["type"]
        props = node_cell["properties"]
        node_id = node_cell["id"]
        name = props.get("name", "")
        if rel_type == "HAS_APPEARANCE_TRAIT":
            if props.get("trait") == "unique_feature":
                unique_features.append((name, node_id))
            else:
                for key in _SCALAR_TRAITS:
                    if key in props:
                        scalars[key] = (props[key], node_id)
        elif rel_type == "HAS_PERSONALITY_TRAIT":
            personality.append((name, node_id))
        elif rel_type == "WIELDS":
            context.possessions.append((name, props.get("description", "")))
            context.sources[f"possession:{name}"] = [node_id]
        elif rel_type == "PARTICIPATED_IN":
            context.events.append(name)
            context.sources[f"event:{name}"] = [node_id]
        elif rel_type in RELATION_EDGE_TO_KIND:
            kind = RELATION_EDGE_TO_KIND[rel_type]
            summary = props.get("race", "")
            if (kind, name) not in {(k, n) for k, n, _ in context.relationships}:
                context.relationships.append((kind, name, summary))
                context.sources[f"relation:{kind}:{name}"] = [node_id]
        elif rel_type == "LIVES_IN":
            realm = name
            note_ids[f"lives in {name}"] = [node_id]
        elif rel_type == "ORIGINATES_FROM":
            origin = name
            note_ids[f"originates from {name}"] = [node_id]
        elif rel_type == "APPEARS_IN":
            epics.append(name)
            note_ids.setdefault("epics", []).append(node_id)
        elif rel_type == "HAS_STRENGTH":
            strengths.append(name)
            note_ids.setdefault("strengths", []).append(node_id)
        elif rel_type == "HAS_WEAKNESS":
            weaknesses.append(name)
            note_ids.setdefault("weaknesses", []).append(node_id)

    # Attribute order is the emphasis order prompts will use.
    if unique_features:
        context.attributes["unique_features"] = ", ".join(text for text, _ in unique_features)
        context.sources["attr:unique_features"] = [node_id for _, node_id in unique_features]
    for key in _SCALAR_TRAITS:
        if key in scalars:
            context.attributes[key] = scalars[key][0]
            context.sources[f"attr:{key}"] = [scalars[key][1]]
    if isinstance(char_props.get("race"), str) and char_props["race"]:
        context.attributes["race"] = char_props["race"]
        context.sources["attr:race"] = [character_cell["id"]]
    creature = char_props.get("type_of_creature")
    if isinstance(creature, list) and creature:
        context.attributes["creature_type"] = ", ".join(creature)
        context.sources["attr:creature_type"] = [character_cell["id"]]
    if personality:
        context.attributes["personality"] = ", ".join(text for text, _ in personality)
        context.sources["attr:personality"] = [node_id for _, node_id in personality]

    if realm:
        note = f"lives in {realm}"
        context.narrative_notes.append(note)
        context.sources[f"note:{note}"] = note_ids[note]
    if origin:
        note = f"originates from {origin}"
        context.narrative_notes.append(note)
        context.sources[f"note:{note}"] = note_ids[note]
    if epics:
        note = "appears in " + ", ".join(epics)
        context.narrative_notes.append(note)
        context.sources[f"note:{note}"] = note_ids["epics"]
    if strengths:
        note = "known for " + ", ".join(strengths)
        context.narrative_notes.append(note)
        context.sources[f"note:{note}"] = note_ids["strengths"]
    if weaknesses:
        note = "vulnerable to " + ", ".join(weaknesses)
        context.narrative_notes.append(note)
        context.sources[f"note:{note}"] = note_ids["weaknesses"]
    return context
