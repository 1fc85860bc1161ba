"""Request/response types and errors shared by all backend implementations.

``image_ref`` is opaque everywhere: a path, a URL or a synthetic token. The
engine never inspects pixels; whatever understands the reference (the
analyzer, the judge, the user) is on the other side of a backend interface,
which is what makes the control logic testable without any model in the
loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import BackendFailure
from ..srd.types import TargetFeatures


class BackendError(BackendFailure):
    """A backend call failed after exhausting its retries."""


class TimeoutError_(BackendError):
    """The backend did not answer within the configured timeout."""


class HttpStatusError(BackendError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        super().__init__(f"backend returned HTTP {status}" + (f": {detail}" if detail else ""))


class ScriptExhausted(BackendError):
    """A scripted mock ran out of canned responses; replays never repeat silently."""


class ExtractionFormatError(BackendError):
    """The entity-extraction backend returned output we cannot parse."""


@dataclass(frozen=True)
class GenerateRequest:
    prompt: str
    seed: int = 0
    guidance_scale: float = 15.0
    size: str = "1024x1024"
    extras: dict = field(default_factory=dict)

    def to_document(self) -> dict:
        return {
            "prompt": self.prompt,
            "seed": self.seed,
            "guidance_scale": self.guidance_scale,
            "size": self.size,
            "extras": dict(self.extras),
        }


@dataclass(frozen=True)
class GenerateResponse:
    image_ref: str
    latency_ms: float = 0.0


@dataclass(frozen=True)
class AnalyzeRequest:
    image_ref: str
    target_features: TargetFeatures

    def to_document(self) -> dict:
        return {
            "image_ref": self.image_ref,
            "target_features": [
                {"key": f.key, "specification": f.specification} for f in self.target_features.features
            ],
        }


@dataclass(frozen=True)
class JudgeRequest:
    image_ref: str
    context: dict
    rubrics: dict[str, str]

    def to_document(self) -> dict:
        return {"image_ref": self.image_ref, "context": self.context, "rubrics": dict(self.rubrics)}


def extract_entities(backend, prompt_text: str):
    """Run a backend's entity extraction and wrap the result as an analysis.

    An empty extraction propagates :class:`NoEntityFound`, mirroring the
    lexicon extractor's contract; malformed backend output raises
    :class:`ExtractionFormatError` so callers can fall back.
    """
    from ..pipeline.extract import NoEntityFound, PromptAnalysis

    entries = backend.extract(prompt_text)
    if not entries:
        raise NoEntityFound(f"extraction backend found no entities in prompt: {prompt_text!r}")
    return PromptAnalysis(tuple(entries))
