"""Scoring and convergence arithmetic for the correction loop."""

from __future__ import annotations

import math
from typing import Optional

from .types import ConfigError, FeatureReport, KeyMismatch, TargetFeatures


def decay_factor(k: int, d0: float = 0.9) -> float:
    """Iteration-k adjustment damping: min(d0, 1/k)."""
    if not isinstance(k, int) or k < 1:
        raise ConfigError(f"iteration index must be a positive integer, got {k!r}")
    return min(d0, 1.0 / k)


def _check_keys(report: FeatureReport, targets: TargetFeatures) -> None:
    expected = set(targets.keys())
    if report.keys() != expected:
        missing = sorted(expected - report.keys())
        extra = sorted(report.keys() - expected)
        raise KeyMismatch(f"feature report keys diverge from targets (missing {missing}, extra {extra})")


def calculate_stability(report: FeatureReport, targets: TargetFeatures, graded: bool = False) -> float:
    """Mean per-feature score: satisfaction fraction in binary mode."""
    _check_keys(report, targets)
    keys = targets.keys()
    if not keys:
        return 1.0  # vacuously stable
    if graded:
        return sum(report.score(key) for key in keys) / len(keys)
    return sum(1.0 for key in keys if report.present(key)) / len(keys)


def update_tracker(
    report: FeatureReport,
    prev_status: Optional[dict[str, bool]],
    tracker: dict[str, int],
) -> dict[str, int]:
    """Consecutive-satisfaction counts: increment on stability, reset on regression."""
    if prev_status is not None and set(prev_status) != report.keys():
        raise KeyMismatch("previous status keys diverge from the report")
    if set(tracker) - report.keys():
        raise KeyMismatch("tracker keys diverge from the report")
    updated: dict[str, int] = {}
    for key in report.keys():
        if not report.present(key):
            updated[key] = 0
        elif prev_status is not None and prev_status.get(key):
            updated[key] = tracker.get(key, 0) + 1
        else:
            updated[key] = 1
    return updated


def calculate_gsi(
    tracker: dict[str, int],
    targets: TargetFeatures,
    report: FeatureReport,
    graded: bool = False,
) -> float:
    """Global stability index: satisfied/total (binary) or mean score (graded)."""
    _check_keys(report, targets)
    keys = targets.keys()
    if not keys:
        return 1.0
    if graded:
        return sum(report.score(key) for key in keys) / len(keys)
    return sum(1.0 for key in keys if report.present(key)) / len(keys)


def format_gsi(value: float) -> str:
    """Render a GSI at two decimals, truncating toward zero (5/9 -> '0.55')."""
    return f"{math.floor(value * 100) / 100:.2f}"


def detect_plateau(gsi_history: list[float], window: int, threshold: float) -> bool:
    """True when the last ``window`` GSI values span less than ``threshold``."""
    if len(gsi_history) < window:
        raise ConfigError(f"need at least {window} GSI values, have {len(gsi_history)}")
    recent = gsi_history[-window:]
    return (max(recent) - min(recent)) < threshold
