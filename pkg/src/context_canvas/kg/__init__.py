from .builder import (
    LinkReport,
    RelationPolicy,
    RELATION_POLICIES,
    build_graph,
    build_phase1,
    build_phase2,
    link_events,
)
from .records import CharacterRecord, SchemaError, load_record_file, load_records
from .validate import ValidationReport, Violation, validate

__all__ = [
    "CharacterRecord",
    "LinkReport",
    "RELATION_POLICIES",
    "RelationPolicy",
    "SchemaError",
    "ValidationReport",
    "Violation",
    "build_graph",
    "build_phase1",
    "build_phase2",
    "link_events",
    "load_record_file",
    "load_records",
    "validate",
]
