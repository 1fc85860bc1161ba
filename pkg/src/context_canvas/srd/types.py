"""State and configuration types for the self-correcting generation loop."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from ..errors import DataError


class ConfigError(DataError):
    """A loop parameter violates its range or consistency constraints."""


class KeyMismatch(DataError):
    """A feature report's keys do not match the target feature keys."""


class LockedFeature(DataError):
    """An adjustment was requested for a feature that is locked."""


@dataclass(frozen=True)
class FeatureSpec:
    """One target feature: a short key plus its visual specification text."""

    key: str
    specification: str


@dataclass(frozen=True)
class TargetFeatures:
    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        keys = [f.key for f in self.features]
        if len(set(keys)) != len(keys):
            raise ConfigError(f"duplicate feature keys: {keys}")
        if any(not f.key for f in self.features):
            raise ConfigError("feature keys must be non-empty")

    def keys(self) -> tuple[str, ...]:
        return tuple(f.key for f in self.features)

    def spec(self, key: str) -> FeatureSpec:
        for feature in self.features:
            if feature.key == key:
                return feature
        raise KeyMismatch(f"unknown feature key {key!r}")

    @classmethod
    def from_pairs(cls, pairs: list) -> "TargetFeatures":
        return cls(tuple(FeatureSpec(str(k), str(s)) for k, s in pairs))


@dataclass(frozen=True)
class FeatureStatus:
    present: bool
    score: float


class FeatureReport:
    """Per-feature analysis of one generated image."""

    def __init__(self, statuses: dict[str, FeatureStatus]):
        self.statuses = dict(statuses)

    @classmethod
    def binary(cls, present_map: dict[str, bool]) -> "FeatureReport":
        return cls({k: FeatureStatus(v, 1.0 if v else 0.0) for k, v in present_map.items()})

    def keys(self) -> set[str]:
        return set(self.statuses)

    def present(self, key: str) -> bool:
        return self.statuses[key].present

    def score(self, key: str) -> float:
        return self.statuses[key].score

    def present_map(self) -> dict[str, bool]:
        return {k: s.present for k, s in self.statuses.items()}

    def satisfied(self) -> set[str]:
        return {k for k, s in self.statuses.items() if s.present}

    def to_document(self) -> dict:
        return {k: {"present": s.present, "score": s.score} for k, s in sorted(self.statuses.items())}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FeatureReport) and self.statuses == other.statuses

    def __repr__(self) -> str:
        return f"FeatureReport({self.statuses!r})"


@dataclass(frozen=True)
class SrdConfig:
    max_iterations: int = 3
    initial_decay: float = 0.9
    stability_threshold: float = 0.8
    gsi_threshold: float = 0.85
    lock_count: int = 2
    plateau_window: int = 3
    plateau_threshold: float = 0.05
    graded: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive")
        if not 0.0 < self.initial_decay <= 1.0:
            raise ConfigError("initial_decay must be in (0, 1]")
        for name in ("stability_threshold", "gsi_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        if self.lock_count < 1:
            raise ConfigError("lock_count must be positive")
        if self.plateau_window < 1:
            raise ConfigError("plateau_window must be positive")
        if self.plateau_window > self.max_iterations:
            raise ConfigError("plateau_window must not exceed max_iterations")
        if self.plateau_threshold < 0:
            raise ConfigError("plateau_threshold must be non-negative")


@dataclass(frozen=True)
class Directive:
    """One prompt clause tied to a feature (or escape-added context)."""

    feature_key: str
    text: str
    weight: float


@dataclass(frozen=True)
class StructuredPrompt:
    base: str
    directives: tuple[Directive, ...] = ()

    def serialize(self) -> str:
        return " ".join([self.base] + [d.text for d in self.directives]) if self.directives else self.base

    def directive_for(self, feature_key: str) -> Optional[Directive]:
        for directive in self.directives:
            if directive.feature_key == feature_key:
                return directive
        return None


@dataclass(frozen=True)
class PromptAdjustment:
    feature_key: str
    directive: Directive


class StopReason(enum.Enum):
    FEATURE_STABLE_EXIT = "feature_stable_exit"
    GSI_EXIT = "gsi_exit"
    MAX_ITERATIONS = "max_iterations"
    PLATEAU_ABORT = "plateau_abort"


@dataclass
class SrdState:
    iteration: int = 0
    tracker: dict[str, int] = field(default_factory=dict)
    prev_status: Optional[dict[str, bool]] = None
    locked: set[str] = field(default_factory=set)
    decay: float = 0.9
    gsi_history: list[float] = field(default_factory=list)
    plateau_detected: bool = False
    best_state: dict[str, str] = field(default_factory=dict)
    current_prompt: StructuredPrompt = StructuredPrompt(base="")
    characters: tuple[str, ...] = ()
    used_node_ids: set[int] = field(default_factory=set)
    last_escape_iteration: Optional[int] = None


@dataclass
class IterationRecord:
    k: int
    gsi: float
    d: float
    report: FeatureReport
    adjustments: list[Directive]
    locked: tuple[str, ...]
    escape_applied: bool
    image_ref: str
    stability: float
    prompt_text: str

    def to_trace_line(self) -> dict:
        """The JSON-lines trace schema."""
        return {
            "k": self.k,
            "gsi": self.gsi,
            "d": self.d,
            "feature_report": self.report.to_document(),
            "adjustments": [
                {"feature": d.feature_key, "text": d.text, "weight": d.weight} for d in self.adjustments
            ],
            "locked": list(self.locked),
            "escape_applied": self.escape_applied,
        }


@dataclass
class SrdOutcome:
    final_image: str
    final_prompt: str
    stop_reason: StopReason
    trace: list[IterationRecord]
    state: SrdState

    @property
    def gsi_history(self) -> list[float]:
        return list(self.state.gsi_history)
