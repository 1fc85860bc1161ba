"""Contrastive prompt assembly from retrieved character contexts.

Each character gets its own sub-prompt -- a contrastive cue followed by a
generation clause -- built only from that character's context, so
multi-character prompts never cross-contaminate attributes. Attribute
emphasis order is fixed (unique features first, then build, skin colour,
clothing, possessions, then the rest), and a word cap trims fragments in
reverse priority, so the rarest features survive truncation. The original
user prompt is always appended untouched.

The result is deterministic: byte-identical output for the same base prompt,
contexts and style.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .context import CharacterContext

# (attribute key, priority); lower priority survives truncation longer.
_ATTRIBUTE_PRIORITY = (
    ("unique_features", 0),
    ("build", 1),
    ("skin_color", 2),
    ("clothing", 3),
    ("possessions", 4),
    ("height", 5),
    ("hair_color", 6),
    ("beard", 7),
    ("race", 8),
    ("creature_type", 9),
    ("personality", 10),
)
_NEVER_DROPPED = {"unique_features"}


@dataclass(frozen=True)
class PromptStyle:
    max_words: int = 400
    include_cues: bool = True


@dataclass
class SubPrompt:
    character: str
    description_clause: str
    engagement_clause: str
    contrastive_cue: str

    def text(self) -> str:
        parts = [part for part in (self.contrastive_cue, self.main_clause()) if part]
        return " ".join(parts)

    def main_clause(self) -> str:
        clause = f"Generate an image of {self.character}"
        if self.description_clause:
            clause += f", described as {self.description_clause}"
        if self.engagement_clause:
            clause += f", engaged in {self.engagement_clause}"
        return clause + "."


@dataclass
class EnrichedPrompt:
    base: str
    sub_prompts: list[SubPrompt] = field(default_factory=list)
    final_text: str = ""
    provenance: dict[str, list[int]] = field(default_factory=dict)

    def characters(self) -> list[str]:
        return [sub.character for sub in self.sub_prompts]


@dataclass
class _Fragment:
    key: str
    priority: int
    text: str
    node_ids: list[int]


def _fragments_for(context: CharacterContext) -> list[_Fragment]:
    fragments = []
    for key, priority in _ATTRIBUTE_PRIORITY:
        if key == "possessions":
            if context.possessions:
                text = " and ".join(
                    f"wielding the {name} ({description})" if description else f"wielding the {name}"
                    for name, description in context.possessions
                )
                ids = [i for name, _ in context.possessions for i in context.sources.get(f"possession:{name}", [])]
                fragments.append(_Fragment(key, priority, text, ids))
            continue
        value = context.attributes.get(key)
        if not value:
            continue
        if key in ("build", "height"):
            text = f"{value} {key}" if key not in value.lower() else value
        elif key == "skin_color":
            text = f"{value} skin"
        elif key == "hair_color":
            text = f"{value} hair"
        elif key == "race":
            text = f"of the {value} race"
        elif key == "creature_type":
            text = f"a {value}"
        elif key == "personality":
            text = f"{value} in bearing"
        else:
            text = value
        fragments.append(_Fragment(key, priority, text, list(context.sources.get(f"attr:{key}", []))))
    return fragments


def _engagement_for(context: CharacterContext) -> tuple[str, list[int]]:
    pieces: list[str] = []
    ids: list[int] = []
    for kind, name, _summary in context.relationships:
        pieces.append(f"{kind} of {name}")
        ids.extend(context.sources.get(f"relation:{kind}:{name}", []))
    for event in context.events:
        pieces.append(f"participant in {event}")
        ids.extend(context.sources.get(f"event:{event}", []))
    return ", ".join(pieces), ids


def _cue_for(context: CharacterContext, fragments: list[_Fragment]) -> tuple[str, list[int]]:
    head = [f for f in fragments if f.priority <= 2][:3]
    if not head:
        return "", []
    attrs = ", ".join(f.text for f in head)
    ids = [i for f in head for i in f.node_ids]
    partners = [name for _, name, _ in context.relationships]
    if partners:
        return f"Highlight {attrs}, connected to {', '.join(partners)}.", ids
    return f"Highlight {attrs}.", ids


def compose_enriched_prompt(
    base: str,
    contexts: list[CharacterContext],
    style: Optional[PromptStyle] = None,
) -> EnrichedPrompt:
    style = style or PromptStyle()
    populated = [c for c in contexts if not c.is_empty()]
    per_character: list[dict] = []
    for context in populated:
        fragments = _fragments_for(context)
        engagement, engagement_ids = _engagement_for(context)
        per_character.append(
            {
                "context": context,
                "fragments": fragments,
                "engagement": engagement,
                "engagement_ids": engagement_ids,
                "cue_enabled": style.include_cues,
            }
        )

    def assemble() -> EnrichedPrompt:
        prompt = EnrichedPrompt(base=base)
        parts: list[str] = []
        for entry in per_character:
            context = entry["context"]
            fragments = entry["fragments"]
            description = ", ".join(f.text for f in fragments)
            cue, cue_ids = _cue_for(context, fragments) if entry["cue_enabled"] else ("", [])
            sub = SubPrompt(context.character, description, entry["engagement"], cue)
            prompt.sub_prompts.append(sub)
            if cue:
                prompt.provenance[cue] = sorted(set(cue_ids)) or sorted(set(context.sources.get("character", [])))
            main = sub.main_clause()
            main_ids = {i for f in fragments for i in f.node_ids}
            main_ids.update(entry["engagement_ids"] if entry["engagement"] else [])
            main_ids.update(context.sources.get("character", []))
            prompt.provenance[main] = sorted(main_ids)
            parts.append(sub.text())
        prompt.final_text = " ".join(parts + [base]) if parts else base
        return prompt

    prompt = assemble()
    # Priority-order truncation: drop the least important fragments (highest
    # priority number) across all characters, then cues, then engagement
    # clauses; unique features and the base prompt are never dropped.
    for level in range(10, 0, -1):
        if len(prompt.final_text.split()) <= style.max_words:
            return prompt
        changed = False
        for entry in per_character:
            kept = [f for f in entry["fragments"] if f.priority < level or f.key in _NEVER_DROPPED]
            if len(kept) != len(entry["fragments"]):
                entry["fragments"] = kept
                changed = True
        if changed:
            prompt = assemble()
    if len(prompt.final_text.split()) > style.max_words:
        for entry in per_character:
            entry["cue_enabled"] = False
        prompt = assemble()
    if len(prompt.final_text.split()) > style.max_words:
        for entry in per_character:
            entry["engagement"] = ""
            entry["engagement_ids"] = []
        prompt = assemble()
    return prompt
