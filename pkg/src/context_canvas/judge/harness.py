"""Judge backend invocation: rubrics in, clamped scores out."""

from __future__ import annotations

import logging
from importlib import resources

from ..backends.base import BackendError, JudgeRequest
from ..pipeline.context import CharacterContext
from .scoring import METRIC_NAMES, ImageScores

logger = logging.getLogger(__name__)


def load_rubrics() -> dict[str, str]:
    """The four metric rubrics, shipped as versioned template files."""
    rubrics = {}
    package = resources.files("context_canvas.judge")
    for name in METRIC_NAMES:
        rubrics[name] = package.joinpath(f"rubrics/{name}.txt").read_text("utf-8")
    return rubrics


def judge_image(image_ref: str, context: CharacterContext, backend) -> ImageScores:
    """Score one image against its character context.

    Backend values outside [0, 1] are clamped (with a warning) rather than
    rejected; a missing metric or an unreachable backend is an error and no
    partial scores are returned.
    """
    request = JudgeRequest(image_ref=image_ref, context=context.to_document(), rubrics=load_rubrics())
    raw = backend.judge(request)
    values = {}
    for name in METRIC_NAMES:
        if name not in raw:
            raise BackendError(f"judge backend response lacks the {name!r} metric")
        value = float(raw[name])
        clamped = min(1.0, max(0.0, value))
        if clamped != value:
            logger.warning("judge backend returned %s=%s; clamped to %s", name, value, clamped)
        values[name] = clamped
    return ImageScores(**values)
