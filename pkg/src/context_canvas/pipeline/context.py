"""Reshaped per-character retrieval results.

A :class:`CharacterContext` is what the rest of the pipeline consumes: the
character's attribute texts, its typed relationships, possessions, events and
free-form narrative notes, each traced back to the graph node ids it came
from (the ``sources`` map drives prompt provenance).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CharacterContext:
    character: str
    attributes: dict[str, str] = field(default_factory=dict)
    relationships: list[tuple[str, str, str]] = field(default_factory=list)  # (kind, name, summary)
    possessions: list[tuple[str, str]] = field(default_factory=list)  # (name, description)
    events: list[str] = field(default_factory=list)
    narrative_notes: list[str] = field(default_factory=list)
    sources: dict[str, list[int]] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not (
            self.attributes or self.relationships or self.possessions or self.events or self.narrative_notes
        )

    def to_document(self) -> dict:
        return {
            "character": self.character,
            "attributes": dict(self.attributes),
            "relationships": [list(item) for item in self.relationships],
            "possessions": [list(item) for item in self.possessions],
            "events": list(self.events),
            "narrative_notes": list(self.narrative_notes),
            "sources": {key: list(ids) for key, ids in self.sources.items()},
        }

    @classmethod
    def from_document(cls, document: dict) -> "CharacterContext":
        return cls(
            character=document["character"],
            attributes=dict(document.get("attributes", {})),
            relationships=[tuple(item) for item in document.get("relationships", [])],
            possessions=[tuple(item) for item in document.get("possessions", [])],
            events=list(document.get("events", [])),
            narrative_notes=list(document.get("narrative_notes", [])),
            sources={key: list(ids) for key, ids in document.get("sources", {}).items()},
        )
