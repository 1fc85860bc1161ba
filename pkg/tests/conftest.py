import json
from pathlib import Path

import pytest

from context_canvas.graph.store import PropertyGraph
from context_canvas.kg import build_graph, load_records

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS_DIR = FIXTURES / "corpus"
EVENTS_FILE = FIXTURES / "events.json"


@pytest.fixture(scope="session")
def corpus_records():
    return load_records(CORPUS_DIR)


@pytest.fixture(scope="session")
def corpus_events():
    return json.loads(EVENTS_FILE.read_text("utf-8"))


@pytest.fixture(scope="session")
def corpus_graph(corpus_records, corpus_events):
    graph, _ = build_graph(corpus_records, corpus_events)
    return graph


@pytest.fixture()
def tumburu_subgraph():
    """Hand-built miniature of the Tumburu neighborhood (no builder involved)."""
    graph = PropertyGraph()
    tumburu = graph.add_node({"Character"}, {"name": "Tumburu", "race": "Gandharva"})
    rambha = graph.add_node({"Character"}, {"name": "Rambha", "race": "Apsara"})
    face = graph.add_node({"AppearanceTrait"}, {"name": "horse-like face", "trait": "unique_feature"})
    veena = graph.add_node(
        {"Weapon"},
        {"name": "Veena", "description": "a stringed musical instrument", "category": "instrument"},
    )
    graph.add_relationship(tumburu, rambha, "HAS_SPOUSE")
    graph.add_relationship(rambha, tumburu, "HAS_SPOUSE")
    graph.add_relationship(tumburu, face, "HAS_APPEARANCE_TRAIT")
    graph.add_relationship(tumburu, veena, "WIELDS")
    return graph, {"tumburu": tumburu, "rambha": rambha, "face": face, "veena": veena}
