"""The self-correcting generation loop.

Each iteration generates an image from the current prompt, has the analyzer
check it against the target features, and then refines the prompt:

* early exit when the analysis is above the stability threshold and nothing
  changed since the previous iteration (on the first iteration the zero-shot
  image alone can clear the bar),
* decay update (min(d0, 1/k)), stability-tracker update and feature locking,
* one fresh directive per unsatisfied, non-locked feature, weighted by the
  current decay,
* exit when the global stability index reaches its threshold,
* plateau detection over a sliding window with escape strategies that
  restructure the prompt; a plateau whose escape cannot change the prompt
  aborts the run, since further iterations would replay it verbatim.

Exit priority within an iteration is fixed: stable-exit before any prompt
work, GSI-exit before plateau handling. The loop performs at most
``max_iterations`` generate calls. Every iteration appends a trace record.
"""

from __future__ import annotations

import json
import logging
import os
from typing import Optional, Protocol, Union

from ..errors import BackendFailure
from ..graph.store import PropertyGraph
from ..pipeline.compose import EnrichedPrompt
from .escape import apply_escape_strategies
from .metrics import calculate_gsi, calculate_stability, decay_factor, detect_plateau, update_tracker
from .prompt import calculate_adjustment, update_prompt
from .types import (
    ConfigError,
    FeatureReport,
    IterationRecord,
    KeyMismatch,
    SrdConfig,
    SrdOutcome,
    SrdState,
    StopReason,
    StructuredPrompt,
    TargetFeatures,
)

logger = logging.getLogger(__name__)


class ImageGenerator(Protocol):
    def generate(self, request) -> object: ...


class ImageAnalyzer(Protocol):
    def analyze(self, request) -> FeatureReport: ...


def _initial_state(p0: Union[EnrichedPrompt, str], cfg: SrdConfig) -> SrdState:
    if isinstance(p0, str):
        base, characters, used = p0, (), set()
    else:
        base = p0.final_text or p0.base
        characters = tuple(p0.characters())
        used = {node_id for ids in p0.provenance.values() for node_id in ids}
    state = SrdState(
        decay=cfg.initial_decay,
        current_prompt=StructuredPrompt(base=base),
        characters=characters,
        used_node_ids=used,
    )
    return state


def run(
    p0: Union[EnrichedPrompt, str],
    targets: TargetFeatures,
    cfg: SrdConfig,
    gen: ImageGenerator,
    analyzer: ImageAnalyzer,
    graph: Optional[PropertyGraph] = None,
    seed: int = 0,
    guidance_scale: float = 15.0,
) -> SrdOutcome:
    from ..backends.base import AnalyzeRequest, GenerateRequest  # avoid a module cycle

    if not isinstance(cfg, SrdConfig):
        raise ConfigError("cfg must be an SrdConfig")
    if not targets.features:
        raise ConfigError("the correction loop needs at least one target feature")
    state = _initial_state(p0, cfg)
    state.tracker = {key: 0 for key in targets.keys()}
    trace: list[IterationRecord] = []
    stop: Optional[StopReason] = None
    final_image = ""

    try:
        for k in range(1, cfg.max_iterations + 1):
            state.iteration = k
            prompt_text = state.current_prompt.serialize()
            response = gen.generate(
                GenerateRequest(prompt=prompt_text, seed=seed, guidance_scale=guidance_scale)
            )
            final_image = response.image_ref
            report = analyzer.analyze(AnalyzeRequest(image_ref=final_image, target_features=targets))
            if report.keys() != set(targets.keys()):
                raise KeyMismatch(
                    f"analyzer returned keys {sorted(report.keys())}, expected {sorted(targets.keys())}"
                )

            for key in report.satisfied():
                state.best_state[key] = final_image

            stability = calculate_stability(report, targets, cfg.graded)
            gsi = calculate_gsi(state.tracker, targets, report, cfg.graded)
            unchanged = state.prev_status is None or report.present_map() == state.prev_status
            record = IterationRecord(
                k=k,
                gsi=gsi,
                d=state.decay,
                report=report,
                adjustments=[],
                locked=tuple(sorted(state.locked)),
                escape_applied=False,
                image_ref=final_image,
                stability=stability,
                prompt_text=prompt_text,
            )

            if stability >= cfg.stability_threshold and unchanged:
                trace.append(record)
                stop = StopReason.FEATURE_STABLE_EXIT
                break

            state.decay = decay_factor(k, cfg.initial_decay)
            record.d = state.decay
            state.tracker = update_tracker(report, state.prev_status, state.tracker)
            for key, count in state.tracker.items():
                if count >= cfg.lock_count:
                    state.locked.add(key)
            record.locked = tuple(sorted(state.locked))

            for feature in targets.features:
                if report.present(feature.key) or feature.key in state.locked:
                    continue
                adjustment = calculate_adjustment(feature, report, targets, state.decay, state.locked)
                state.current_prompt = update_prompt(state.current_prompt, adjustment, state.locked)
                record.adjustments.append(adjustment.directive)
            record.prompt_text = state.current_prompt.serialize()

            state.gsi_history.append(gsi)
            if gsi >= cfg.gsi_threshold:
                trace.append(record)
                stop = StopReason.GSI_EXIT
                break

            armed = state.last_escape_iteration is None or (k - state.last_escape_iteration) >= cfg.plateau_window
            if (
                k < cfg.max_iterations
                and len(state.gsi_history) >= cfg.plateau_window
                and armed
                and detect_plateau(state.gsi_history, cfg.plateau_window, cfg.plateau_threshold)
            ):
                state.plateau_detected = True
                before = state.current_prompt.serialize()
                state = apply_escape_strategies(state, targets, graph)
                if state.current_prompt.serialize() == before:
                    logger.info("plateau at iteration %d and escape cannot change the prompt; aborting", k)
                    trace.append(record)
                    stop = StopReason.PLATEAU_ABORT
                    break
                state.last_escape_iteration = k
                record.escape_applied = True
                record.prompt_text = state.current_prompt.serialize()

            state.prev_status = report.present_map()
            trace.append(record)
    except BackendFailure as exc:
        exc.partial_trace = trace  # type: ignore[attr-defined]
        exc.partial_state = state  # type: ignore[attr-defined]
        raise

    if stop is None:
        stop = StopReason.MAX_ITERATIONS
    return SrdOutcome(
        final_image=final_image,
        final_prompt=state.current_prompt.serialize(),
        stop_reason=stop,
        trace=trace,
        state=state,
    )


def write_trace(path: str | os.PathLike, trace: list[IterationRecord]) -> None:
    """One JSON object per iteration, in order."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in trace:
            handle.write(json.dumps(record.to_trace_line(), ensure_ascii=False) + "\n")
