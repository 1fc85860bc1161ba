"""Resolving analysis entries to characters and retrieving cached contexts.

Relation resolution walks the graph's typed edges (``(Tumburu, spouse)`` ->
``Rambha``); possession kinds (vehicle, weapon, instrument) resolve through
WIELDS edges using the possession's classified category. An unresolvable
relation raises rather than guessing.

Retrieved contexts are cached to disk keyed by (sorted names, graph content
hash); a cache hit skips re-querying entirely, which the query counter in
:class:`RetrievalStats` makes observable. Writes are atomic
(write-then-rename) so concurrent pipelines cannot corrupt the cache.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..errors import DataError
from ..graph.store import PropertyGraph
from .context import CharacterContext
from .extract import PromptAnalysis

logger = logging.getLogger(__name__)

KIND_TO_EDGE = {
    "spouse": "HAS_SPOUSE",
    "sibling": "HAS_SIBLING",
    "friend": "HAS_FRIEND",
    "enemy": "HAS_ENEMY",
    "teacher": "HAS_TEACHER",
    "disciple": "HAS_DISCIPLE",
    "parent": "HAS_PARENT",
    "child": "HAS_CHILD",
}

_POSSESSION_KINDS = ("vehicle", "weapon", "instrument")


class UnresolvedRelation(DataError):
    def __init__(self, linking_character: str, relation_kind: str):
        self.linking_character = linking_character
        self.relation_kind = relation_kind
        super().__init__(f"cannot resolve {relation_kind!r} of {linking_character!r} from the graph")


@dataclass
class RetrievalStats:
    queries_executed: int = 0
    cache_hits: int = 0


def resolve_relations(analysis: PromptAnalysis, graph: PropertyGraph) -> list[str]:
    """Concrete names for every analysis entry, in prompt order."""
    names: list[str] = []
    for entry in analysis.entries:
        if entry.main_subject is not None:
            names.append(entry.main_subject)
            continue
        linker, kind = entry.linking_character, entry.relation_kind
        node_id = graph.find("Character", linker)
        if node_id is None:
            raise UnresolvedRelation(linker, kind)
        if kind in KIND_TO_EDGE:
            matches = [other.name for _, other in graph.neighbors(node_id, "out", KIND_TO_EDGE[kind]) if other.name]
        elif kind in _POSSESSION_KINDS:
            matches = [
                other.name
                for _, other in graph.neighbors(node_id, "out", "WIELDS")
                if other.name and other.properties.get("category") == kind
            ]
        else:
            raise UnresolvedRelation(linker, kind)
        if not matches:
            raise UnresolvedRelation(linker, kind)
        names.extend(matches)
    seen: list[str] = []
    for name in names:
        if name not in seen:
            seen.append(name)
    return seen


def _cache_key(names: list[str], graph: PropertyGraph) -> str:
    digest = hashlib.sha256()
    digest.update(graph.fingerprint().encode("ascii"))
    for name in sorted(names):
        digest.update(b"\0")
        digest.update(name.encode("utf-8"))
    return digest.hexdigest()[:16]


def retrieve_context(
    names: list[str],
    graph: PropertyGraph,
    cache_dir: Optional[str | os.PathLike] = None,
    stats: Optional[RetrievalStats] = None,
) -> tuple[list[CharacterContext], Path]:
    """Per-name contexts plus the path of the cache file that holds them."""
    stats = stats if stats is not None else RetrievalStats()
    directory = Path(cache_dir) if cache_dir is not None else Path(tempfile.gettempdir()) / "context_canvas_cache"
    directory.mkdir(parents=True, exist_ok=True)
    cache_path = directory / f"ctx-{_cache_key(names, graph)}.json"

    if cache_path.exists():
        try:
            documents = json.loads(cache_path.read_text("utf-8"))
            by_name = {doc["character"]: CharacterContext.from_document(doc) for doc in documents}
            stats.cache_hits += 1
            return [by_name[name] for name in names], cache_path
        except (json.JSONDecodeError, KeyError) as exc:
            logger.warning("ignoring unreadable cache file %s: %s", cache_path, exc)

    from ..cql.template import query_by_template  # deferred: cql.template depends on this package

    contexts: list[CharacterContext] = []
    for name in names:
        context = query_by_template(name, graph)
        stats.queries_executed += 1
        if context.is_empty():
            logger.info("no graph context for %r; continuing with an empty context", name)
        contexts.append(context)

    payload = json.dumps([c.to_document() for c in contexts], indent=2, ensure_ascii=False) + "\n"
    fd, tmp_name = tempfile.mkstemp(dir=directory, prefix=".ctx-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(payload)
        os.replace(tmp_name, cache_path)
    except OSError:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    return contexts, cache_path
