from .compose import EnrichedPrompt, PromptStyle, SubPrompt, compose_enriched_prompt
from .context import CharacterContext
from .extract import (
    AnalysisEntry,
    LexiconExtractor,
    NoEntityFound,
    PromptAnalysis,
    RELATION_KINDS,
    analyze_prompt,
    load_relation_lexicon,
)
from .retrieval import (
    RetrievalStats,
    UnresolvedRelation,
    resolve_relations,
    retrieve_context,
)

__all__ = [
    "AnalysisEntry",
    "CharacterContext",
    "EnrichedPrompt",
    "LexiconExtractor",
    "NoEntityFound",
    "PromptAnalysis",
    "PromptStyle",
    "RELATION_KINDS",
    "RetrievalStats",
    "SubPrompt",
    "UnresolvedRelation",
    "analyze_prompt",
    "compose_enriched_prompt",
    "load_relation_lexicon",
    "resolve_relations",
    "retrieve_context",
]
