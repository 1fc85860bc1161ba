import random

import pytest

from context_canvas.graph.store import DuplicateName, PropertyGraph
from context_canvas.kg import (
    RELATION_POLICIES,
    build_graph,
    build_phase1,
    build_phase2,
    link_events,
    load_records,
    validate,
)
from context_canvas.kg.builder import SYMMETRIC_TYPES, classify_possession
from context_canvas.kg.records import SchemaError, parse_record

from .conftest import CORPUS_DIR


def _minimal(name, **overrides):
    document = {"name": name}
    document.update(overrides)
    return parse_record(document, source=f"<{name}>")


# ----------------------------------------------------------------------
# record loading

def test_load_corpus(corpus_records):
    assert len(corpus_records) >= 10
    names = [record.name for record in corpus_records]
    assert names == sorted(names, key=lambda n: [r.source for r in corpus_records if r.name == n][0])
    tumburu = next(record for record in corpus_records if record.name == "Tumburu")
    assert "horse-like face" in tumburu.unique_features


def test_record_missing_name_is_schema_error():
    with pytest.raises(SchemaError) as info:
        parse_record({"race": "Deva"}, source="x.json")
    assert info.value.json_path == "$.name"


def test_beard_defaults_when_absent():
    record = _minimal("Agni", appearance_traits={"build": "radiant"})
    assert record.appearance_traits["beard"] == "no beard"


def test_self_reference_rejected():
    with pytest.raises(SchemaError, match="itself"):
        parse_record({"name": "Ouro", "relationships": {"friends": ["Ouro"]}}, source="x.json")


def test_bad_types_name_the_path():
    with pytest.raises(SchemaError) as info:
        parse_record({"name": "X", "strengths": "mighty"}, source="x.json")
    assert info.value.json_path == "$.strengths"
    with pytest.raises(SchemaError) as info:
        parse_record({"name": "X", "weapons_or_instruments": [{"description": "no name"}]}, source="x.json")
    assert "$.weapons_or_instruments[0].name" == info.value.json_path


def test_unique_features_accepts_text_or_list():
    as_text = _minimal("A", appearance_traits={"unique_features": "bear head with human body, tail"})
    assert as_text.unique_features == ["bear head with human body", "tail"]
    as_list = _minimal("B", appearance_traits={"unique_features": ["horns", "third eye"]})
    assert as_list.unique_features == ["horns", "third eye"]


def test_family_tree_mismatch_reported_flat_lists_win():
    record = _minimal(
        "Arjuna",
        relationships={"spouses": ["Draupadi"]},
        family_tree={"name": "Arjuna", "spouse": ["Draupadi", "Subhadra"], "children": {}},
    )
    assert record.family_tree_mismatches == ["Subhadra"]
    graph = PropertyGraph()
    build_phase1(record, graph)
    report = build_phase2([record], graph)
    assert ("Arjuna", "HAS_SPOUSE", "Draupadi") in report.edges
    assert all("Subhadra" != target for _, _, target in report.edges)
    assert report.family_tree_mismatches == {"Arjuna": ["Subhadra"]}


# ----------------------------------------------------------------------
# phase 1

def test_phase1_bhima_mace(corpus_records):
    graph = PropertyGraph()
    bhima = next(record for record in corpus_records if record.name == "Bhima")
    character = build_phase1(bhima, graph)
    wields = graph.neighbors(character, "out", "WIELDS")
    assert [(node.name, node.properties["description"]) for _, node in wields] == [("Gada", "golden mace")]


def test_phase1_empty_record_single_node():
    graph = PropertyGraph()
    character = build_phase1(_minimal("Ghost"), graph)
    assert len(graph) == 1
    assert graph.neighbors(character, "out") == []


def test_phase1_explicit_beard_kept():
    graph = PropertyGraph()
    character = build_phase1(_minimal("Drona2", appearance_traits={"beard": "white beard"}), graph)
    pairs = graph.neighbors(character, "out", "HAS_APPEARANCE_TRAIT")
    assert [node.properties["beard"] for _, node in pairs] == ["white beard"]


def test_phase1_tumburu_veena(corpus_records):
    graph = PropertyGraph()
    tumburu = next(record for record in corpus_records if record.name == "Tumburu")
    character = build_phase1(tumburu, graph)
    possessions = [node.name for _, node in graph.neighbors(character, "out", "WIELDS")]
    assert possessions == ["Veena"]


def test_phase1_duplicate_character_rejected(corpus_records):
    graph = PropertyGraph()
    tumburu = next(record for record in corpus_records if record.name == "Tumburu")
    build_phase1(tumburu, graph)
    with pytest.raises(DuplicateName):
        build_phase1(tumburu, graph)


def test_phase1_never_links_characters(corpus_records):
    graph = PropertyGraph()
    for record in corpus_records:
        build_phase1(record, graph)
    for rel in graph.relationships():
        source_is_char = "Character" in graph.node(rel.source).labels
        target_is_char = "Character" in graph.node(rel.target).labels
        assert not (source_is_char and target_is_char)


def test_phase1_stores_pending_annotations(corpus_records):
    graph = PropertyGraph()
    arjuna = next(record for record in corpus_records if record.name == "Arjuna")
    character = build_phase1(arjuna, graph)
    properties = graph.node(character).properties
    assert properties["pending_spouses"] == ["Draupadi"]
    assert properties["pending_teachers"] == ["Drona"]


def test_classify_possession():
    assert classify_possession("Gada", "golden mace") == "weapon"
    assert classify_possession("Veena", "a stringed musical instrument") == "instrument"
    assert classify_possession("Water Buffalo", "his vehicle and mount") == "vehicle"


# ----------------------------------------------------------------------
# phase 2

def test_phase2_siblings_mirrored(corpus_graph):
    arjuna = corpus_graph.find("Character", "Arjuna")
    bhima = corpus_graph.find("Character", "Bhima")
    keys = {rel.key() for rel in corpus_graph.relationships()}
    assert (arjuna, "HAS_SIBLING", bhima) in keys
    assert (bhima, "HAS_SIBLING", arjuna) in keys


def test_phase2_teacher_disciple_inverse(corpus_graph):
    arjuna = corpus_graph.find("Character", "Arjuna")
    drona = corpus_graph.find("Character", "Drona")
    keys = {rel.key() for rel in corpus_graph.relationships()}
    assert (arjuna, "HAS_TEACHER", drona) in keys
    assert (drona, "HAS_DISCIPLE", arjuna) in keys


def test_phase2_draupadi_five_spouse_pairs(corpus_graph):
    draupadi = corpus_graph.find("Character", "Draupadi")
    out = corpus_graph.neighbors(draupadi, "out", "HAS_SPOUSE")
    incoming = corpus_graph.neighbors(draupadi, "in", "HAS_SPOUSE")
    assert len(out) == 5 and len(incoming) == 5
    assert {node.name for _, node in out} == {"Arjuna", "Bhima", "Nakula", "Sahadeva", "Yudhishthira"}


def test_phase2_unknown_names_become_stubs(corpus_graph):
    kunti = corpus_graph.find("Character", "Kunti")
    assert kunti is not None
    assert corpus_graph.node(kunti).properties.get("stub") is True


def test_phase2_one_sided_list_still_mirrored():
    a = _minimal("A", relationships={"siblings": ["B"]})
    b = _minimal("B")
    graph, _ = build_graph([a, b])
    keys = {rel.key() for rel in graph.relationships()}
    ida, idb = graph.find("Character", "A"), graph.find("Character", "B")
    assert (ida, "HAS_SIBLING", idb) in keys and (idb, "HAS_SIBLING", ida) in keys
    assert validate(graph).ok


def test_phase2_consumes_pending_annotations(corpus_graph):
    for node in corpus_graph.nodes():
        assert not any(key.startswith("pending_") for key in node.properties)


# ----------------------------------------------------------------------
# events

def test_link_events_kurukshetra(corpus_graph):
    event = corpus_graph.find("Event", "Kurukshetra War")
    assert event is not None
    participants = {node.name for _, node in corpus_graph.neighbors(event, "in", "PARTICIPATED_IN")}
    assert participants == {"Krishna", "Arjuna", "Duryodhana"}


def test_link_events_empty_participants_and_idempotence():
    graph, _ = build_graph([_minimal("Solo")])
    link_events([{"name": "Council", "participants": []}], graph)
    link_events([{"name": "Council", "participants": []}], graph)
    events = [node for node in graph.nodes() if "Event" in node.labels]
    assert len(events) == 1
    assert graph.neighbors(events[0].id, "both") == []


# ----------------------------------------------------------------------
# validation

def test_validate_clean_corpus(corpus_graph):
    assert validate(corpus_graph).ok


def test_validate_detects_unmirrored_symmetric_edge():
    graph, _ = build_graph([_minimal("A"), _minimal("B")])
    graph.add_relationship(graph.find("Character", "A"), graph.find("Character", "B"), "HAS_SPOUSE")
    report = validate(graph)
    assert len(report.by_kind("unmirrored_symmetric_edge")) == 1


def test_validate_detects_missing_inverse():
    graph, _ = build_graph([_minimal("A"), _minimal("B")])
    graph.add_relationship(graph.find("Character", "A"), graph.find("Character", "B"), "HAS_TEACHER")
    report = validate(graph)
    assert len(report.by_kind("missing_inverse_edge")) == 1


def test_validate_flags_overloaded_stub():
    records = [_minimal(name, relationships={"friends": ["Ghost"]}) for name in ("A", "B", "C", "D")]
    graph, report = build_graph(records)
    assert report.stubs == ["Ghost"]
    assert validate(graph, stub_reference_threshold=3).by_kind("overloaded_stub")
    assert not validate(graph, stub_reference_threshold=4).by_kind("overloaded_stub")


# ----------------------------------------------------------------------
# determinism and invariants

def test_build_deterministic_under_record_shuffle(corpus_records, corpus_events, tmp_path):
    rng = random.Random(99)
    baseline = None
    for attempt in range(3):
        shuffled = list(corpus_records)
        rng.shuffle(shuffled)
        graph, _ = build_graph(shuffled, corpus_events)
        path = tmp_path / f"g{attempt}.json"
        graph.save(path)
        data = path.read_bytes()
        if baseline is None:
            baseline = data
        assert data == baseline


def test_builder_graph_save_load_save_byte_identical(corpus_graph, tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    corpus_graph.save(first)
    PropertyGraph.load(first).save(second)
    assert first.read_bytes() == second.read_bytes()


def test_symmetry_and_inverse_invariants(corpus_graph):
    keys = {rel.key() for rel in corpus_graph.relationships()}
    for rel in corpus_graph.relationships():
        if rel.rel_type in SYMMETRIC_TYPES:
            assert (rel.target, rel.rel_type, rel.source) in keys
        if rel.rel_type == "HAS_TEACHER":
            assert (rel.target, "HAS_DISCIPLE", rel.source) in keys
        if rel.rel_type == "HAS_PARENT":
            assert (rel.target, "HAS_CHILD", rel.source) in keys


def test_policies_cover_all_relation_lists():
    from context_canvas.kg.records import RELATION_LIST_KEYS

    assert set(RELATION_POLICIES) == set(RELATION_LIST_KEYS)
    for kind, policy in RELATION_POLICIES.items():
        inverse_kind = {v.forward: k for k, v in RELATION_POLICIES.items()}[policy.inverse]
        assert RELATION_POLICIES[inverse_kind].inverse == policy.forward


def test_corpus_dir_loads_via_path():
    records = load_records(CORPUS_DIR)
    assert {record.name for record in records} >= {"Tumburu", "Rambha", "Arjuna", "Drona", "Yama"}
