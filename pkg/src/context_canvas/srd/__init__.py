from .escape import apply_escape_strategies
from .loop import run
from .metrics import (
    calculate_gsi,
    calculate_stability,
    decay_factor,
    detect_plateau,
    format_gsi,
    update_tracker,
)
from .prompt import calculate_adjustment, directive_text, update_prompt
from .types import (
    ConfigError,
    Directive,
    FeatureReport,
    FeatureSpec,
    FeatureStatus,
    IterationRecord,
    KeyMismatch,
    LockedFeature,
    PromptAdjustment,
    SrdConfig,
    SrdOutcome,
    SrdState,
    StopReason,
    StructuredPrompt,
    TargetFeatures,
)

__all__ = [
    "ConfigError",
    "Directive",
    "FeatureReport",
    "FeatureSpec",
    "FeatureStatus",
    "IterationRecord",
    "KeyMismatch",
    "LockedFeature",
    "PromptAdjustment",
    "SrdConfig",
    "SrdOutcome",
    "SrdState",
    "StopReason",
    "StructuredPrompt",
    "TargetFeatures",
    "apply_escape_strategies",
    "calculate_adjustment",
    "calculate_gsi",
    "calculate_stability",
    "decay_factor",
    "detect_plateau",
    "directive_text",
    "format_gsi",
    "run",
    "update_prompt",
    "update_tracker",
]
