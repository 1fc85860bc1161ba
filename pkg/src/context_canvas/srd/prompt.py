"""Directive construction and structured-prompt updates.

An adjustment turns a feature's specification text into a directive clause
whose wording strength tracks the decay weight: strong weights demand the
feature explicitly, weak ones merely mention it. Directives for locked
features are frozen verbatim and never regenerated or removed.
"""

from __future__ import annotations

from .types import (
    Directive,
    FeatureReport,
    FeatureSpec,
    LockedFeature,
    PromptAdjustment,
    StructuredPrompt,
    TargetFeatures,
)


def directive_text(specification: str, weight: float) -> str:
    if weight >= 0.7:
        return f"Ensure {specification} is clearly visible."
    if weight >= 0.4:
        return f"Include {specification}."
    return f"with {specification}."


def calculate_adjustment(
    feature: FeatureSpec,
    report: FeatureReport,
    targets: TargetFeatures,
    d: float,
    locked: set[str] = frozenset(),
) -> PromptAdjustment:
    if feature.key in locked:
        raise LockedFeature(f"feature {feature.key!r} is locked; its directive is frozen")
    if feature.key in report.keys() and report.present(feature.key):
        raise ValueError(f"feature {feature.key!r} is satisfied; no adjustment to calculate")
    targets.spec(feature.key)  # raises KeyMismatch for unknown keys
    return PromptAdjustment(feature.key, Directive(feature.key, directive_text(feature.specification, d), d))


def update_prompt(prompt: StructuredPrompt, adjustment: PromptAdjustment, locked: set[str] = frozenset()) -> StructuredPrompt:
    """Replace the feature's directive in place, or append a new one."""
    if adjustment.feature_key in locked:
        raise LockedFeature(f"feature {adjustment.feature_key!r} is locked; its directive is frozen")
    directives = list(prompt.directives)
    for index, directive in enumerate(directives):
        if directive.feature_key == adjustment.feature_key:
            directives[index] = adjustment.directive
            return StructuredPrompt(prompt.base, tuple(directives))
    directives.append(adjustment.directive)
    return StructuredPrompt(prompt.base, tuple(directives))
