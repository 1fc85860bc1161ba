"""Character record files: schema validation and loading.

A record file is one JSON object describing a character: identity fields,
an ``appearance_traits`` object, lists of personality traits / weapons /
strengths / weaknesses, a ``relationships`` object with eight name lists,
and an optional nested ``family_tree``. Everything except ``name`` is
optional; a missing ``beard`` defaults to ``"no beard"``.

The nested family tree is not ingested into the graph. It is only
cross-checked against the flat relationship lists, and any names it mentions
that the flat lists do not are reported as mismatches (the flat lists win).
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import DataError

logger = logging.getLogger(__name__)

RELATION_LIST_KEYS = (
    "parents",
    "siblings",
    "spouses",
    "children",
    "friends",
    "enemies",
    "teachers",
    "disciples",
)

APPEARANCE_SCALARS = ("build", "height", "skin_color", "hair_color", "beard", "clothing")

DEFAULT_BEARD = "no beard"


class SchemaError(DataError):
    """A record file violates the schema; names the file, path and rule."""

    def __init__(self, source: str, json_path: str, rule: str):
        self.source = source
        self.json_path = json_path
        self.rule = rule
        super().__init__(f"{source}: {json_path}: {rule}")


@dataclass
class CharacterRecord:
    name: str
    race: str = ""
    type_of_creature: list[str] = field(default_factory=list)
    origin: str = ""
    appears_in_epics: list[str] = field(default_factory=list)
    other_names: list[str] = field(default_factory=list)
    appearance_traits: dict[str, str] = field(default_factory=dict)
    unique_features: list[str] = field(default_factory=list)
    personality_traits: list[str] = field(default_factory=list)
    lives_in: str = ""
    weapons_or_instruments: list[dict[str, str]] = field(default_factory=list)
    strengths: list[str] = field(default_factory=list)
    weaknesses: list[str] = field(default_factory=list)
    relationships: dict[str, list[str]] = field(default_factory=dict)
    family_tree: Optional[dict] = None
    place_of_death: str = ""
    age_at_death: Optional[object] = None
    family_tree_mismatches: list[str] = field(default_factory=list)
    source: str = "<memory>"

    def relation_names(self, kind: str) -> list[str]:
        return self.relationships.get(kind, [])


def _require_str(source: str, path: str, value: object, allow_empty: bool = True) -> str:
    if not isinstance(value, str):
        raise SchemaError(source, path, f"expected text, got {type(value).__name__}")
    if not allow_empty and not value.strip():
        raise SchemaError(source, path, "must not be empty")
    return value


def _str_list(source: str, path: str, value: object) -> list[str]:
    if value is None:
        return []
    if not isinstance(value, list):
        raise SchemaError(source, path, f"expected a list of text, got {type(value).__name__}")
    out = []
    for index, item in enumerate(value):
        out.append(_require_str(source, f"{path}[{index}]", item))
    return [item for item in out if item.strip()]


def _split_features(value: str) -> list[str]:
    parts = [part.strip() for chunk in value.split(";") for part in chunk.split(",")]
    return [part for part in parts if part]


def _family_tree_names(tree: object) -> set[str]:
    """Every name mentioned anywhere in the nested family tree."""
    names: set[str] = set()

    def walk(node: object) -> None:
        if isinstance(node, dict):
            value = node.get("name")
            if isinstance(value, str) and value.strip():
                names.add(value.strip())
            for key, child in node.items():
                if key != "name":
                    walk(child)
        elif isinstance(node, list):
            for child in node:
                walk(child)
        elif isinstance(node, str) and node.strip():
            names.add(node.strip())

    walk(tree)
    return names


def parse_record(document: object, source: str = "<memory>") -> CharacterRecord:
    if not isinstance(document, dict):
        raise SchemaError(source, "$", "expected a JSON object")
    if "name" not in document:
        raise SchemaError(source, "$.name", "required field missing")
    name = _require_str(source, "$.name", document["name"], allow_empty=False).strip()

    appearance_raw = document.get("appearance_traits", {})
    if not isinstance(appearance_raw, dict):
        raise SchemaError(source, "$.appearance_traits", "expected an object")
    appearance: dict[str, str] = {}
    for key in APPEARANCE_SCALARS:
        if key in appearance_raw:
            text = _require_str(source, f"$.appearance_traits.{key}", appearance_raw[key]).strip()
            if text:
                appearance[key] = text
    appearance.setdefault("beard", DEFAULT_BEARD)

    raw_features = appearance_raw.get("unique_features", "")
    if isinstance(raw_features, str):
        unique_features = _split_features(raw_features)
    elif isinstance(raw_features, list):
        # The extraction guidelines call this field a list even though the
        # canonical schema shows text; accept both shapes.
        unique_features = _str_list(source, "$.appearance_traits.unique_features", raw_features)
    else:
        raise SchemaError(source, "$.appearance_traits.unique_features", "expected text or a list of text")

    weapons_raw = document.get("weapons_or_instruments", [])
    if not isinstance(weapons_raw, list):
        raise SchemaError(source, "$.weapons_or_instruments", "expected a list")
    weapons: list[dict[str, str]] = []
    for index, entry in enumerate(weapons_raw):
        where = f"$.weapons_or_instruments[{index}]"
        if not isinstance(entry, dict):
            raise SchemaError(source, where, "expected an object with name/description")
        weapon_name = _require_str(source, f"{where}.name", entry.get("name", ""), allow_empty=False)
        description = _require_str(source, f"{where}.description", entry.get("description", ""))
        weapons.append({"name": weapon_name.strip(), "description": description.strip()})

    relationships_raw = document.get("relationships", {})
    if not isinstance(relationships_raw, dict):
        raise SchemaError(source, "$.relationships", "expected an object")
    relationships: dict[str, list[str]] = {}
    for kind in RELATION_LIST_KEYS:
        names = _str_list(source, f"$.relationships.{kind}", relationships_raw.get(kind))
        for index, other in enumerate(names):
            if other.strip() == name:
                raise SchemaError(
                    source, f"$.relationships.{kind}[{index}]", "relationship lists must not reference the character itself"
                )
        relationships[kind] = [other.strip() for other in names]

    family_tree = document.get("family_tree")
    if family_tree is not None and not isinstance(family_tree, dict):
        raise SchemaError(source, "$.family_tree", "expected an object")

    record = CharacterRecord(
        name=name,
        race=_require_str(source, "$.race", document.get("race", "")).strip(),
        type_of_creature=_str_list(source, "$.type_of_creature", document.get("type_of_creature")),
        origin=_require_str(source, "$.origin", document.get("origin", "")).strip(),
        appears_in_epics=_str_list(source, "$.appears_in_epics", document.get("appears_in_epics")),
        other_names=_str_list(source, "$.other_names", document.get("other_names")),
        appearance_traits=appearance,
        unique_features=unique_features,
        personality_traits=_str_list(source, "$.personality_traits", document.get("personality_traits")),
        lives_in=_require_str(source, "$.lives_in", document.get("lives_in", "")).strip(),
        weapons_or_instruments=weapons,
        strengths=_str_list(source, "$.strengths", document.get("strengths")),
        weaknesses=_str_list(source, "$.weaknesses", document.get("weaknesses")),
        relationships=relationships,
        family_tree=family_tree,
        place_of_death=_require_str(source, "$.place_of_death", document.get("place_of_death", "")).strip(),
        age_at_death=document.get("age_at_death"),
        source=source,
    )

    if family_tree is not None:
        flat = {name} | {other for names in relationships.values() for other in names}
        missing = sorted(_family_tree_names(family_tree) - flat)
        if missing:
            record.family_tree_mismatches = missing
            logger.warning(
                "%s: family_tree names %s are absent from the flat relationship lists; flat lists win",
                source,
                ", ".join(missing),
            )
    return record


def load_record_file(path: str | os.PathLike) -> CharacterRecord:
    source = str(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read record file {source}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(source, "$", f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    return parse_record(document, source)


def load_records(dir_path: str | os.PathLike) -> list[CharacterRecord]:
    """Load every ``*.json`` record in a directory, ordered by filename."""
    directory = Path(dir_path)
    if not directory.is_dir():
        raise DataError(f"record directory not found: {directory}")
    return [load_record_file(path) for path in sorted(directory.glob("*.json"))]


def extraction_instruction(character_name: str = "{character_name}", domain: str = "{domain}") -> str:
    """The record-extraction instruction template, optionally pre-filled.

    This is what an LLM backend receives when records are produced from raw
    source text; scraping itself is out of scope, so the template doubles as
    the schema documentation for hand-written records.
    """
    from importlib import resources

    text = resources.files("context_canvas.kg").joinpath("extraction_template.txt").read_text("utf-8")
    return text.replace("{character_name}", character_name).replace("{domain}", domain)
