"""Weighted alignment scoring and suite aggregation.

Four metrics grade each image in [0, 1]; the overall alignment score is
their weighted sum, with attribute accuracy dominating by default
(weights 0.6 / 0.15 / 0.1 / 0.15). RAG metrics are recorded verbatim from
the judging backend -- they are judgments, not computations -- and only laid
out into a report here.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable

from ..errors import DataError

METRIC_NAMES = ("attribute_accuracy", "context_relevance", "visual_fidelity", "intent_representation")


class WeightError(DataError):
    """Alignment weights must be non-negative and sum to one."""


class EmptySuite(DataError):
    """Suite aggregation needs at least one scored image."""


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise DataError(f"{name} must be in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class ImageScores:
    attribute_accuracy: float
    context_relevance: float
    visual_fidelity: float
    intent_representation: float

    def __post_init__(self):
        for name in METRIC_NAMES:
            _check_unit(name, getattr(self, name))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (
            self.attribute_accuracy,
            self.context_relevance,
            self.visual_fidelity,
            self.intent_representation,
        )

    def to_document(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True)
class AlignmentWeights:
    attribute_accuracy: float = 0.6
    context_relevance: float = 0.15
    visual_fidelity: float = 0.1
    intent_representation: float = 0.15

    def __post_init__(self):
        values = self.as_tuple()
        if any(value < 0 for value in values):
            raise WeightError(f"weights must be non-negative, got {values}")
        if abs(sum(values) - 1.0) > 1e-9:
            raise WeightError(f"weights must sum to 1, got {sum(values)!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (
            self.attribute_accuracy,
            self.context_relevance,
            self.visual_fidelity,
            self.intent_representation,
        )


def overall_alignment(scores: ImageScores, weights: AlignmentWeights = AlignmentWeights()) -> float:
    """Weighted sum of the four metrics."""
    if not isinstance(weights, AlignmentWeights):
        raise WeightError("weights must be an AlignmentWeights instance")
    return sum(s * w for s, w in zip(scores.as_tuple(), weights.as_tuple()))


@dataclass(frozen=True)
class SuiteSummary:
    count: int
    mean_scores: ImageScores
    mean_overall: float

    def to_document(self) -> dict:
        return {
            "count": self.count,
            "mean_scores": self.mean_scores.to_document(),
            "mean_overall": self.mean_overall,
        }


def aggregate_suite(per_image: Iterable[ImageScores], weights: AlignmentWeights = AlignmentWeights()) -> SuiteSummary:
    scores = list(per_image)
    if not scores:
        raise EmptySuite("cannot aggregate an empty suite")
    count = len(scores)
    means = ImageScores(*(sum(s.as_tuple()[i] for s in scores) / count for i in range(4)))
    mean_overall = sum(overall_alignment(s, weights) for s in scores) / count
    # The overall score is linear in the metrics, so both aggregation orders
    # must agree; a divergence means the arithmetic above went wrong.
    assert abs(overall_alignment(means, weights) - mean_overall) < 1e-9
    return SuiteSummary(count, means, mean_overall)


RAG_RETRIEVER_METRICS = ("retrieval_accuracy", "context_precision", "context_recall")
RAG_GENERATOR_METRICS = (
    "faithfulness",
    "coherence",
    "relevance",
    "contrastive_effectiveness",
    "hallucination_score",
)


@dataclass(frozen=True)
class RagScores:
    retrieval_accuracy: float
    context_precision: float
    context_recall: float
    faithfulness: float
    coherence: float
    relevance: float
    contrastive_effectiveness: float
    hallucination_score: float

    def __post_init__(self):
        for field_info in fields(self):
            _check_unit(field_info.name, getattr(self, field_info.name))


def rag_report(scores: RagScores) -> dict:
    """Two-section layout: retriever metrics, then generator metrics."""
    return {
        "retriever": {name: getattr(scores, name) for name in RAG_RETRIEVER_METRICS},
        "generator": {name: getattr(scores, name) for name in RAG_GENERATOR_METRICS},
    }
