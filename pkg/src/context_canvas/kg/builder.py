"""Two-phase knowledge-graph construction.

Phase 1 builds one standalone subgraph per character: a central Character
node, attribute nodes (appearance traits, personality, possessions,
strengths, weaknesses, epics, realm, origin) linked with typed edges, and the
record's relationship name lists stored as ``pending_*`` annotations on the
Character node -- never as edges.

Phase 2 consumes the annotations and wires characters together: symmetric
kinds (spouse, sibling, friend, enemy) get the same edge type mirrored in
both directions; asymmetric kinds (teacher/disciple, parent/child) get an
inverse-typed pair. Names without a record become stub Character nodes
flagged ``{"stub": true}`` so the web of relationships stays complete.

Building the same record set twice, in any order, yields byte-identical
saved graphs: records are processed in name order and every node creation is
deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..graph.store import DuplicateName, PropertyGraph
from .records import CharacterRecord, DEFAULT_BEARD, RELATION_LIST_KEYS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RelationPolicy:
    """How one relationship list is encoded as edges.

    Symmetric kinds mirror the same type both ways; asymmetric kinds pair a
    forward type with its inverse.
    """

    forward: str
    inverse: str

    @property
    def symmetric(self) -> bool:
        return self.forward == self.inverse


RELATION_POLICIES: dict[str, RelationPolicy] = {
    "spouses": RelationPolicy("HAS_SPOUSE", "HAS_SPOUSE"),
    "siblings": RelationPolicy("HAS_SIBLING", "HAS_SIBLING"),
    "friends": RelationPolicy("HAS_FRIEND", "HAS_FRIEND"),
    "enemies": RelationPolicy("HAS_ENEMY", "HAS_ENEMY"),
    "teachers": RelationPolicy("HAS_TEACHER", "HAS_DISCIPLE"),
    "disciples": RelationPolicy("HAS_DISCIPLE", "HAS_TEACHER"),
    "parents": RelationPolicy("HAS_PARENT", "HAS_CHILD"),
    "children": RelationPolicy("HAS_CHILD", "HAS_PARENT"),
}

SYMMETRIC_TYPES = frozenset(p.forward for p in RELATION_POLICIES.values() if p.symmetric)
ASYMMETRIC_INVERSES = {"HAS_TEACHER": "HAS_DISCIPLE", "HAS_DISCIPLE": "HAS_TEACHER",
                       "HAS_PARENT": "HAS_CHILD", "HAS_CHILD": "HAS_PARENT"}

PENDING_PREFIX = "pending_"

_INSTRUMENT_WORDS = ("instrument", "veena", "vina", "flute", "drum", "lute", "conch", "lyre")
_VEHICLE_WORDS = ("vehicle", "mount", "steed", "chariot")


def classify_possession(name: str, description: str) -> str:
    """Bucket a possession as weapon, instrument or vehicle from its text."""
    text = f"{name} {description}".lower()
    if any(word in text for word in _VEHICLE_WORDS):
        return "vehicle"
    if any(word in text for word in _INSTRUMENT_WORDS):
        return "instrument"
    return "weapon"


@dataclass
class LinkReport:
    edges: list[tuple[str, str, str]] = field(default_factory=list)  # (source, type, target)
    stubs: list[str] = field(default_factory=list)
    family_tree_mismatches: dict[str, list[str]] = field(default_factory=dict)


def _ensure_attribute_node(graph: PropertyGraph, label: str, name: str, extra: Optional[dict] = None) -> int:
    existing = graph.find(label, name)
    if existing is not None:
        return existing
    properties = {"name": name}
    if extra:
        properties.update(extra)
    return graph.add_node({label}, properties)


def build_phase1(record: CharacterRecord, graph: PropertyGraph) -> int:
    """Create one character's standalone subgraph; returns the character node id."""
    properties: dict = {"name": record.name}
    if record.race:
        properties["race"] = record.race
    if record.type_of_creature:
        properties["type_of_creature"] = record.type_of_creature
    if record.other_names:
        properties["other_names"] = record.other_names
    if record.place_of_death:
        properties["place_of_death"] = record.place_of_death
    if record.age_at_death is not None:
        properties["age_at_death"] = record.age_at_death
    for kind in RELATION_LIST_KEYS:
        names = record.relation_names(kind)
        if names:
            properties[f"{PENDING_PREFIX}{kind}"] = names

    character = graph.add_node({"Character"}, properties)  # raises DuplicateName

    # The defaulted "no beard" alone carries no visual information: a record
    # with nothing else stays a lone Character node.
    scalars = {
        k: v
        for k, v in record.appearance_traits.items()
        if v and not (k == "beard" and v == DEFAULT_BEARD)
    }
    if scalars:
        profile = graph.add_node(
            {"AppearanceTrait"},
            {"name": f"{record.name} appearance", "trait": "profile", **scalars},
        )
        graph.add_relationship(character, profile, "HAS_APPEARANCE_TRAIT")
    for feature in record.unique_features:
        node = _ensure_attribute_node(graph, "AppearanceTrait", feature, {"trait": "unique_feature"})
        graph.add_relationship(character, node, "HAS_APPEARANCE_TRAIT")
    for trait in record.personality_traits:
        node = _ensure_attribute_node(graph, "PersonalityTrait", trait)
        graph.add_relationship(character, node, "HAS_PERSONALITY_TRAIT")
    for weapon in record.weapons_or_instruments:
        node = _ensure_attribute_node(
            graph,
            "Weapon",
            weapon["name"],
            {
                "description": weapon.get("description", ""),
                "category": classify_possession(weapon["name"], weapon.get("description", "")),
            },
        )
        graph.add_relationship(character, node, "WIELDS")
    for strength in record.strengths:
        node = _ensure_attribute_node(graph, "Strength", strength)
        graph.add_relationship(character, node, "HAS_STRENGTH")
    for weakness in record.weaknesses:
        node = _ensure_attribute_node(graph, "Weakness", weakness)
        graph.add_relationship(character, node, "HAS_WEAKNESS")
    for epic in record.appears_in_epics:
        node = _ensure_attribute_node(graph, "Epic", epic)
        graph.add_relationship(character, node, "APPEARS_IN")
    if record.lives_in:
        node = _ensure_attribute_node(graph, "Realm", record.lives_in)
        graph.add_relationship(character, node, "LIVES_IN")
    if record.origin:
        node = _ensure_attribute_node(graph, "Origin", record.origin)
        graph.add_relationship(character, node, "ORIGINATES_FROM")
    return character


def _character_or_stub(graph: PropertyGraph, name: str, report: LinkReport) -> int:
    node_id = graph.find("Character", name)
    if node_id is not None:
        return node_id
    node_id = graph.add_node({"Character"}, {"name": name, "stub": True})
    report.stubs.append(name)
    return node_id


def build_phase2(records: Iterable[CharacterRecord], graph: PropertyGraph) -> LinkReport:
    """Link the phase-1 subgraphs; returns what was created."""
    report = LinkReport()
    for record in sorted(records, key=lambda r: r.name):
        character = graph.find("Character", record.name)
        if character is None:
            raise DuplicateName(
                f"no Character node for record {record.name!r}; run build_phase1 for every record first"
            )
        for kind in RELATION_LIST_KEYS:
            policy = RELATION_POLICIES[kind]
            for other_name in record.relation_names(kind):
                other = _character_or_stub(graph, other_name, report)
                before = graph.relationship_count()
                graph.add_relationship(character, other, policy.forward)
                if graph.relationship_count() > before:
                    report.edges.append((record.name, policy.forward, other_name))
                before = graph.relationship_count()
                graph.add_relationship(other, character, policy.inverse)
                if graph.relationship_count() > before:
                    report.edges.append((other_name, policy.inverse, record.name))
        graph._remove_properties(character, PENDING_PREFIX)
        if record.family_tree_mismatches:
            report.family_tree_mismatches[record.name] = list(record.family_tree_mismatches)
    return report


def link_events(event_specs: Iterable[dict], graph: PropertyGraph) -> None:
    """Create Event nodes and PARTICIPATED_IN edges from each participant."""
    for spec in event_specs:
        name = spec.get("name", "")
        if not isinstance(name, str) or not name.strip():
            continue
        event = _ensure_attribute_node(graph, "Event", name.strip())
        for participant in spec.get("participants", []):
            node_id = graph.find("Character", participant)
            if node_id is None:
                node_id = graph.add_node({"Character"}, {"name": participant, "stub": True})
                logger.info("event %r references unknown character %r; created a stub", name, participant)
            graph.add_relationship(node_id, event, "PARTICIPATED_IN")


def build_graph(
    records: Iterable[CharacterRecord],
    event_specs: Optional[Iterable[dict]] = None,
) -> tuple[PropertyGraph, LinkReport]:
    """Run both phases (and events) over a record set in canonical order."""
    ordered = sorted(records, key=lambda r: r.name)
    graph = PropertyGraph()
    for record in ordered:
        build_phase1(record, graph)
    report = build_phase2(ordered, graph)
    if event_specs is not None:
        link_events(event_specs, graph)
    return graph, report
