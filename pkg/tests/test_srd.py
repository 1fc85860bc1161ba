import json
import random
from fractions import Fraction

import pytest

from context_canvas.backends.base import BackendError, GenerateResponse
from context_canvas.backends.config import builtin_script_path
from context_canvas.backends.mock import MockBackend, load_script
from context_canvas.pipeline import compose_enriched_prompt, retrieve_context
from context_canvas.srd import (
    ConfigError,
    Directive,
    FeatureReport,
    KeyMismatch,
    LockedFeature,
    SrdConfig,
    SrdState,
    StopReason,
    StructuredPrompt,
    TargetFeatures,
    apply_escape_strategies,
    calculate_adjustment,
    calculate_gsi,
    calculate_stability,
    decay_factor,
    detect_plateau,
    directive_text,
    format_gsi,
    run,
    update_prompt,
    update_tracker,
)
from context_canvas.srd.loop import write_trace

AB = TargetFeatures.from_pairs([("a", "a golden crown"), ("b", "a looped noose")])


def _targets(*keys):
    return TargetFeatures.from_pairs([(key, f"spec for {key}") for key in keys])


def _report(**present):
    return FeatureReport.binary(present)


def _mock(reports, keys, refs=None):
    """Scripted backend: one canned analyze entry per iteration."""
    refs = refs or [f"img-{index}" for index in range(len(reports))]
    script = {"generate": refs, "analyze": [dict(zip(keys, flags)) for flags in reports]}
    return MockBackend(script)


# ----------------------------------------------------------------------
# metrics

def test_decay_schedule_examples():
    assert decay_factor(1) == 0.9
    assert decay_factor(2) == 0.5
    assert decay_factor(3) == pytest.approx(1 / 3)


def test_decay_exact_rational_branch():
    for k in range(1, 1001):
        expected = 0.9 if Fraction(1, k) > Fraction(9, 10) else 1.0 / k
        assert decay_factor(k, 0.9) == expected


def test_decay_rejects_bad_iteration():
    with pytest.raises(ConfigError):
        decay_factor(0)


def test_stability_examples():
    nine = _targets(*"abcdefghi")
    two_true = FeatureReport.binary({k: k in "ab" for k in "abcdefghi"})
    assert calculate_stability(two_true, nine) == pytest.approx(2 / 9)
    assert calculate_stability(FeatureReport.binary({k: True for k in "abcdefghi"}), nine) == 1.0
    assert calculate_stability(FeatureReport.binary({k: False for k in "abcdefghi"}), nine) == 0.0


def test_stability_key_mismatch():
    with pytest.raises(KeyMismatch):
        calculate_stability(_report(a=True), AB)


def test_tracker_increment_and_lock_threshold():
    tracker = update_tracker(_report(a=True, b=False), {"a": True, "b": False}, {"a": 1, "b": 0})
    assert tracker == {"a": 2, "b": 0}


def test_tracker_reset_on_regression():
    tracker = update_tracker(_report(a=False, b=True), {"a": True, "b": True}, {"a": 3, "b": 1})
    assert tracker == {"a": 0, "b": 2}


def test_tracker_first_iteration_satisfied():
    tracker = update_tracker(_report(a=True, b=False), None, {"a": 0, "b": 0})
    assert tracker == {"a": 1, "b": 0}


def test_gsi_examples_and_rendering():
    nine = _targets(*"abcdefghi")
    five = FeatureReport.binary({k: k in "abcde" for k in "abcdefghi"})
    value = calculate_gsi({}, nine, five)
    assert value == pytest.approx(5 / 9)
    assert format_gsi(value) == "0.55"  # two decimals, truncated
    assert format_gsi(calculate_gsi({}, nine, FeatureReport.binary({k: False for k in "abcdefghi"}))) == "0.00"
    assert format_gsi(calculate_gsi({}, nine, FeatureReport.binary({k: True for k in "abcdefghi"}))) == "1.00"


def test_plateau_examples():
    assert detect_plateau([0.22, 0.55, 1.0], 3, 0.05) is False
    assert detect_plateau([0.4, 0.4, 0.4], 3, 0.05) is True
    assert detect_plateau([0.4, 0.42, 0.41], 3, 0.05) is True
    with pytest.raises(ConfigError):
        detect_plateau([0.4], 3, 0.05)


def test_config_validation():
    with pytest.raises(ConfigError):
        SrdConfig(max_iterations=0)
    with pytest.raises(ConfigError):
        SrdConfig(initial_decay=0.0)
    with pytest.raises(ConfigError):
        SrdConfig(gsi_threshold=1.5)
    with pytest.raises(ConfigError):
        SrdConfig(plateau_window=5, max_iterations=3)


# ----------------------------------------------------------------------
# adjustments and prompt updates

def test_directive_bands():
    assert directive_text("a golden crown", 0.9) == "Ensure a golden crown is clearly visible."
    assert directive_text("a golden crown", 0.5) == "Include a golden crown."
    assert directive_text("a golden crown", 0.2) == "with a golden crown."


def test_adjustment_weight_follows_decay():
    adjustment = calculate_adjustment(AB.spec("a"), _report(a=False, b=True), AB, 0.9)
    assert adjustment.directive.weight == 0.9
    assert adjustment.directive.text.startswith("Ensure a golden crown")


def test_adjustment_on_locked_feature_rejected():
    with pytest.raises(LockedFeature):
        calculate_adjustment(AB.spec("a"), _report(a=False, b=True), AB, 0.5, locked={"a"})


def test_adjustment_on_satisfied_feature_rejected():
    with pytest.raises(ValueError):
        calculate_adjustment(AB.spec("a"), _report(a=True, b=False), AB, 0.5)


def test_update_prompt_replaces_in_place():
    prompt = StructuredPrompt("base")
    first = calculate_adjustment(AB.spec("a"), _report(a=False, b=False), AB, 0.9)
    second = calculate_adjustment(AB.spec("b"), _report(a=False, b=False), AB, 0.9)
    prompt = update_prompt(update_prompt(prompt, first), second)
    weaker = calculate_adjustment(AB.spec("a"), _report(a=False, b=False), AB, 0.5)
    prompt = update_prompt(prompt, weaker)
    assert [d.feature_key for d in prompt.directives] == ["a", "b"]
    assert prompt.directive_for("a").weight == 0.5


# ----------------------------------------------------------------------
# escape strategies

def _plateaued_state(prompt, characters=(), tracker=None):
    state = SrdState(
        current_prompt=prompt,
        characters=characters,
        plateau_detected=True,
        tracker=tracker or {},
        decay=0.5,
    )
    return state


def test_escape_requires_plateau(corpus_graph):
    state = _plateaued_state(StructuredPrompt("base"))
    state.plateau_detected = False
    with pytest.raises(ValueError):
        apply_escape_strategies(state, AB, corpus_graph)


def test_escape_appends_fresh_attribute(corpus_graph):
    # A Yama prompt that never mentions the forehead mark: the escape should
    # pull it (among others) from the graph as a fresh clause.
    state = _plateaued_state(StructuredPrompt("Yama seated in judgment"), characters=("Yama",))
    state.tracker = {"a": 0, "b": 0}
    updated = apply_escape_strategies(state, AB, corpus_graph)
    texts = [d.text for d in updated.current_prompt.directives]
    assert any("forehead mark" in text for text in texts)
    assert updated.plateau_detected is False


def test_escape_reorders_low_tracker_first(corpus_graph):
    directives = (
        Directive("a", "Ensure spec a is clearly visible.", 0.9),
        Directive("b", "Ensure spec b is clearly visible.", 0.9),
    )
    state = _plateaued_state(StructuredPrompt("base", directives), tracker={"a": 1, "b": 0})
    updated = apply_escape_strategies(state, AB, None)
    assert [d.feature_key for d in updated.current_prompt.directives] == ["b", "a"]
    assert {d.text for d in updated.current_prompt.directives} == {d.text for d in directives}


def test_escape_with_nothing_to_add_keeps_clause_set(corpus_graph):
    directives = (Directive("a", "Include spec a.", 0.5),)
    state = _plateaued_state(StructuredPrompt("base", directives))
    state.tracker = {"a": 0}
    updated = apply_escape_strategies(state, AB, None)
    assert set(d.text for d in updated.current_prompt.directives) == {"Include spec a."}


# ----------------------------------------------------------------------
# the loop

def yama_backend():
    return MockBackend(load_script(builtin_script_path("yama")))


def yama_targets(backend=None):
    backend = backend or yama_backend()
    return TargetFeatures.from_pairs(backend.script_targets())


def test_yama_replay_full_trace():
    backend = yama_backend()
    targets = yama_targets(backend)
    outcome = run("Yama on his vehicle", targets, SrdConfig(), backend, backend)

    assert outcome.stop_reason is StopReason.GSI_EXIT
    assert outcome.gsi_history == [pytest.approx(2 / 9), pytest.approx(5 / 9), 1.0]
    assert [format_gsi(value) for value in outcome.gsi_history] == ["0.22", "0.55", "1.00"]
    assert outcome.trace[0].d == 0.9
    assert outcome.trace[1].d == 0.5
    assert [d.feature_key for d in outcome.trace[0].adjustments] == [
        "horns", "crown", "skin_color", "noose", "mace", "posture", "forehead_mark",
    ]
    assert all(d.weight == 0.9 for d in outcome.trace[0].adjustments)
    assert [d.feature_key for d in outcome.trace[1].adjustments] == [
        "crown", "skin_color", "noose", "forehead_mark",
    ]
    assert all(d.weight == 0.5 for d in outcome.trace[1].adjustments)
    assert outcome.trace[1].locked == ("background", "vehicle")
    assert outcome.trace[2].locked == ("background", "horns", "mace", "posture", "vehicle")
    assert outcome.trace[2].adjustments == []
    assert len(outcome.trace) == 3


def test_all_true_first_iteration_is_feature_stable_exit():
    keys = ("a", "b", "c")
    backend = _mock([(True, True, True)], keys)
    outcome = run("base", _targets(*keys), SrdConfig(), backend, backend)
    assert outcome.stop_reason is StopReason.FEATURE_STABLE_EXIT
    assert len(outcome.trace) == 1
    assert outcome.gsi_history == []  # exited before the GSI stage
    assert outcome.trace[0].gsi == 1.0


def test_all_false_plateau_then_max_iterations(corpus_graph, tmp_path):
    keys = ("a", "b", "c")
    reports = [(False, False, False)] * 6
    backend = _mock(reports, keys)
    contexts, _ = retrieve_context(["Yama"], corpus_graph, cache_dir=tmp_path)
    enriched = compose_enriched_prompt("Yama in judgment", contexts)
    cfg = SrdConfig(max_iterations=6, plateau_window=3, plateau_threshold=0.01)
    outcome = run(enriched, _targets(*keys), cfg, backend, backend, corpus_graph)
    assert outcome.stop_reason is StopReason.MAX_ITERATIONS
    assert [record.escape_applied for record in outcome.trace] == [False, False, True, False, False, False]
    assert len(outcome.trace) == 6


def test_hopeless_plateau_aborts():
    keys = ("a", "b")
    backend = _mock([(False, False)] * 6, keys)
    cfg = SrdConfig(max_iterations=6, plateau_window=3, plateau_threshold=0.01)
    outcome = run("bare prompt", _targets(*keys), cfg, backend, backend, graph=None)
    assert outcome.stop_reason is StopReason.PLATEAU_ABORT
    assert len(outcome.trace) == 3


def test_second_plateau_rearms_after_window(corpus_graph, tmp_path):
    keys = ("a", "b")
    backend = _mock([(False, False)] * 7, keys)
    contexts, _ = retrieve_context(["Yama"], corpus_graph, cache_dir=tmp_path)
    enriched = compose_enriched_prompt("Yama in judgment", contexts)
    cfg = SrdConfig(max_iterations=7, plateau_window=3, plateau_threshold=0.01)
    outcome = run(enriched, _targets(*keys), cfg, backend, backend, corpus_graph)
    escapes = [record.k for record in outcome.trace if record.escape_applied]
    # one escape per flat window: k=3, re-armed at k=6
    assert escapes[0] == 3
    assert len(escapes) <= 2
    assert outcome.stop_reason in (StopReason.MAX_ITERATIONS, StopReason.PLATEAU_ABORT)


def test_locked_directive_frozen_verbatim():
    keys = ("a", "b")
    reports = [
        (False, False),
        (True, False),
        (True, False),
        (False, False),
        (False, False),
    ]
    backend = _mock(reports, keys)
    cfg = SrdConfig(max_iterations=5, gsi_threshold=0.99, plateau_window=5, plateau_threshold=0.0)
    outcome = run("base", _targets(*keys), cfg, backend, backend)
    assert outcome.stop_reason is StopReason.MAX_ITERATIONS
    locked_at = next(record.k for record in outcome.trace if "a" in record.locked)
    assert locked_at == 3
    frozen = None
    for record in outcome.trace:
        directive = next((d for d in record.adjustments if d.feature_key == "a"), None)
        if record.k == 1:
            assert directive is not None
            frozen = directive.text
        elif record.k >= locked_at:
            assert directive is None
    assert frozen is not None
    for record in outcome.trace[locked_at - 1 :]:
        assert frozen in record.prompt_text


def test_exit_precedence_stable_beats_gsi():
    keys = tuple("abcdefghi")
    eight = tuple(k != "i" for k in keys)
    reports = [tuple(k in "abcde" for k in keys), eight, eight]
    backend = _mock(reports, keys)
    cfg = SrdConfig(max_iterations=5, gsi_threshold=0.95, plateau_window=5, plateau_threshold=0.0)
    outcome = run("base", _targets(*keys), cfg, backend, backend)
    # k=3 repeats k=2's report above the stability threshold: stable exit, and
    # the GSI stage of iteration 3 is never reached.
    assert outcome.stop_reason is StopReason.FEATURE_STABLE_EXIT
    assert len(outcome.trace) == 3
    assert len(outcome.gsi_history) == 2


def test_exit_precedence_gsi_beats_plateau():
    keys = ("a", "b")
    script = {
        "generate": ["i1", "i2", "i3"],
        "analyze": [{"a": 0.4, "b": 0.4}, {"a": 0.4, "b": 0.4}, {"a": 0.402, "b": 0.402}],
    }
    backend = MockBackend(script)
    cfg = SrdConfig(
        max_iterations=4, gsi_threshold=0.401, stability_threshold=0.8,
        plateau_window=3, plateau_threshold=0.05, graded=True,
    )
    outcome = run("base", _targets(*keys), cfg, backend, backend)
    assert outcome.stop_reason is StopReason.GSI_EXIT
    assert len(outcome.trace) == 3
    assert not any(record.escape_applied for record in outcome.trace)


class _CountingGen:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def generate(self, request):
        self.calls += 1
        return self.inner.generate(request)


def test_at_most_k_generate_calls():
    keys = ("a", "b")
    backend = _mock([(False, False)] * 4, keys)
    counting = _CountingGen(backend)
    cfg = SrdConfig(max_iterations=4, plateau_window=4, plateau_threshold=0.0)
    outcome = run("base", _targets(*keys), cfg, counting, backend)
    assert counting.calls == 4 == len(outcome.trace)


def test_monotone_rule_mock_gives_monotone_gsi():
    rng = random.Random(4242)
    for trial in range(50):
        key_count = rng.randint(2, 6)
        keys = [f"f{index}" for index in range(key_count)]
        features = [{"key": key, "specification": f"feature {key} detail"} for key in keys]
        script = {"rule": {"w_min": 0.5, "p": 1.0, "sticky": True, "features": features}}
        backend = MockBackend(script, seed=trial)
        targets = TargetFeatures.from_pairs([(f["key"], f["specification"]) for f in features])
        cfg = SrdConfig(max_iterations=rng.randint(2, 6), plateau_window=2, plateau_threshold=0.0)
        outcome = run("a scene", targets, cfg, backend, backend, seed=trial)
        history = outcome.gsi_history
        assert all(history[i] <= history[i + 1] for i in range(len(history) - 1))


def test_rule_mock_converges_and_exits():
    features = [{"key": k, "specification": f"{k} detail"} for k in ("crown", "noose")]
    script = {"rule": {"w_min": 0.5, "p": 1.0, "sticky": True, "features": features}}
    backend = MockBackend(script)
    targets = TargetFeatures.from_pairs([(f["key"], f["specification"]) for f in features])
    outcome = run("a bare scene", targets, SrdConfig(max_iterations=3), backend, backend)
    # iteration 1 renders nothing; its 0.9-weight directives render everything at k=2
    assert outcome.gsi_history[0] == 0.0
    assert outcome.stop_reason is StopReason.GSI_EXIT
    assert outcome.gsi_history[-1] == 1.0


def test_best_state_tracks_most_recent_satisfying_image():
    keys = ("a", "b", "c")
    reports = [(True, True, False), (False, True, False), (True, False, False)]
    backend = _mock(reports, keys, refs=["one", "two", "three"])
    cfg = SrdConfig(max_iterations=3, gsi_threshold=1.0, plateau_window=3)
    outcome = run("base", _targets(*keys), cfg, backend, backend)
    assert outcome.stop_reason is StopReason.MAX_ITERATIONS
    assert outcome.state.best_state["a"] == "three#seed=0"
    assert outcome.state.best_state["b"] == "two#seed=0"
    assert "c" not in outcome.state.best_state


class _ExplodingGen:
    def __init__(self, after):
        self.after = after
        self.calls = 0

    def generate(self, request):
        self.calls += 1
        if self.calls > self.after:
            raise BackendError("backend down")
        return GenerateResponse(f"img-{self.calls}")


def test_backend_error_preserves_partial_trace():
    keys = ("a", "b")
    backend = _mock([(False, False)] * 3, keys)
    gen = _ExplodingGen(after=1)
    cfg = SrdConfig(max_iterations=3, plateau_window=3)
    with pytest.raises(BackendError) as info:
        run("base", _targets(*keys), cfg, gen, backend)
    assert len(info.value.partial_trace) == 1
    assert info.value.partial_trace[0].k == 1


def test_run_requires_targets():
    backend = _mock([(True,)], ("a",))
    with pytest.raises(ConfigError):
        run("base", TargetFeatures(()), SrdConfig(), backend, backend)


def test_trace_jsonl_schema(tmp_path):
    backend = yama_backend()
    targets = yama_targets(backend)
    outcome = run("Yama on his vehicle", targets, SrdConfig(), backend, backend)
    path = tmp_path / "trace.jsonl"
    write_trace(path, outcome.trace)
    lines = [json.loads(line) for line in path.read_text("utf-8").splitlines()]
    assert len(lines) == 3
    for line in lines:
        assert set(line) == {"k", "gsi", "d", "feature_report", "adjustments", "locked", "escape_applied"}
    assert [line["k"] for line in lines] == [1, 2, 3]
    assert lines[2]["gsi"] == 1.0
