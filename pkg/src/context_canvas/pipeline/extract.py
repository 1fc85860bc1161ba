"""Prompt analysis: which characters (direct or via a relation) a prompt names.

Each analysis entry is either a direct subject (``Tumburu in a forest`` ->
``Tumburu``) or a linking character plus relation kind (``Rama's wife`` ->
``(Rama, spouse)``); never both. The deterministic lexicon extractor covers
possessive phrases through a shipped noun-to-relation lexicon and a name
gazetteer taken from the graph; an LLM backend can be plugged in for open
vocabulary and falls back to the lexicon on malformed output.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional, Protocol

from ..errors import DataError
from ..graph.store import PropertyGraph

RELATION_KINDS = (
    "spouse",
    "child",
    "parent",
    "sibling",
    "teacher",
    "disciple",
    "friend",
    "enemy",
    "vehicle",
    "weapon",
    "instrument",
)

_PRONOUNS = ("his", "her", "their", "its")


class NoEntityFound(DataError):
    """The prompt mentions nothing the extractor can anchor retrieval on."""


@dataclass(frozen=True)
class AnalysisEntry:
    main_subject: Optional[str] = None
    linking_character: Optional[str] = None
    relation_kind: Optional[str] = None

    def __post_init__(self):
        direct = self.main_subject is not None
        linked = self.linking_character is not None and self.relation_kind is not None
        if direct == linked:
            raise DataError("an analysis entry is either a direct subject or a (linker, relation) pair")
        if self.relation_kind is not None and self.relation_kind not in RELATION_KINDS:
            raise DataError(f"unknown relation kind {self.relation_kind!r}")


@dataclass(frozen=True)
class PromptAnalysis:
    entries: tuple[AnalysisEntry, ...]


class EntityExtractor(Protocol):
    def extract(self, prompt_text: str) -> list[AnalysisEntry]: ...


def load_relation_lexicon() -> dict[str, str]:
    text = resources.files("context_canvas.pipeline").joinpath("relation_lexicon.json").read_text("utf-8")
    return json.loads(text)


class LexiconExtractor:
    """Deterministic extractor over a name gazetteer and relation lexicon.

    ``focus_character`` resolves pronoun possessives ("his daughter"); without
    one, pronoun phrases are ignored.
    """

    def __init__(
        self,
        character_names: Iterable[str],
        lexicon: Optional[dict[str, str]] = None,
        focus_character: Optional[str] = None,
    ):
        self.names = sorted(set(character_names), key=lambda n: (-len(n), n))
        self.lexicon = lexicon if lexicon is not None else load_relation_lexicon()
        self.focus_character = focus_character

    @classmethod
    def for_graph(cls, graph: PropertyGraph, focus_character: Optional[str] = None) -> "LexiconExtractor":
        names = [node.name for node in graph.nodes() if "Character" in node.labels and node.name]
        return cls(names, focus_character=focus_character)

    def extract(self, prompt_text: str) -> list[AnalysisEntry]:
        found: list[tuple[int, AnalysisEntry]] = []
        consumed_spans: list[tuple[int, int]] = []

        for match in re.finditer(r"\b([A-Z][\w-]*(?:\s+[A-Z][\w-]*)*)[''']s\s+([A-Za-z]+)", prompt_text):
            owner, noun = match.group(1), match.group(2)
            kind = self.lexicon.get(noun.lower())
            if kind is None:
                continue
            found.append((match.start(), AnalysisEntry(None, owner, kind)))
            consumed_spans.append((match.start(1), match.end(1)))

        if self.focus_character:
            pronoun_re = r"\b(" + "|".join(_PRONOUNS) + r")\s+([A-Za-z]+)"
            for match in re.finditer(pronoun_re, prompt_text, re.IGNORECASE):
                kind = self.lexicon.get(match.group(2).lower())
                if kind is None:
                    continue
                found.append((match.start(), AnalysisEntry(None, self.focus_character, kind)))

        for name in self.names:
            for match in re.finditer(re.escape(name), prompt_text, re.IGNORECASE):
                span = (match.start(), match.end())
                if any(span[0] >= s and span[1] <= e for s, e in consumed_spans):
                    continue  # the name is the owner of a possessive phrase
                if _inside_word(prompt_text, span):
                    continue
                found.append((match.start(), AnalysisEntry(name, None, None)))
                break  # one direct mention per name is enough

        found.sort(key=lambda item: item[0])
        entries: list[AnalysisEntry] = []
        for _, entry in found:
            if entry not in entries:
                entries.append(entry)
        return entries


def _inside_word(text: str, span: tuple[int, int]) -> bool:
    before = text[span[0] - 1] if span[0] > 0 else " "
    after = text[span[1]] if span[1] < len(text) else " "
    return before.isalnum() or after.isalnum()


def analyze_prompt(user_prompt: str, extractor: EntityExtractor) -> PromptAnalysis:
    """Run the extractor; raise :class:`NoEntityFound` on an empty result."""
    entries = extractor.extract(user_prompt)
    deduped: list[AnalysisEntry] = []
    for entry in entries:
        if entry not in deduped:
            deduped.append(entry)
    if not deduped:
        raise NoEntityFound(f"no known characters or relation phrases in prompt: {user_prompt!r}")
    return PromptAnalysis(tuple(deduped))
