from .harness import judge_image, load_rubrics
from .scoring import (
    AlignmentWeights,
    EmptySuite,
    ImageScores,
    RagScores,
    SuiteSummary,
    WeightError,
    aggregate_suite,
    overall_alignment,
    rag_report,
)

__all__ = [
    "AlignmentWeights",
    "EmptySuite",
    "ImageScores",
    "RagScores",
    "SuiteSummary",
    "WeightError",
    "aggregate_suite",
    "judge_image",
    "load_rubrics",
    "overall_alignment",
    "rag_report",
]
