"""Command-line entry point.

Subcommands: ``build-kg``, ``query``, ``enrich``, ``generate``, ``correct``,
``evaluate``. Exit codes: 0 success, 1 usage error, 2 data/schema error,
3 backend error. With ``--json`` a subcommand prints exactly one JSON
document on stdout; all logging goes to stderr. An optional TOML or JSON
config file supplies flag defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .backends.base import BackendError, ExtractionFormatError, GenerateRequest, extract_entities
from .backends.config import parse_backend_spec
from .backends.http import HttpBackend
from .backends.mock import MockBackend
from .errors import BackendFailure, DataError, UsageError
from .cql import ParseError, execute, parse
from .graph.store import PropertyGraph
from .judge import AlignmentWeights, aggregate_suite, judge_image, overall_alignment
from .kg import build_graph, load_records, validate
from .pipeline import (
    LexiconExtractor,
    NoEntityFound,
    PromptStyle,
    RetrievalStats,
    analyze_prompt,
    compose_enriched_prompt,
    resolve_relations,
    retrieve_context,
)
from .srd import SrdConfig, TargetFeatures, format_gsi, run
from .srd.loop import write_trace

logger = logging.getLogger("context_canvas.cli")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); our usage code is 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="context-canvas", description=__doc__)
    parser.add_argument("--version", action="version", version=f"context-canvas {__version__}")
    parser.add_argument("--config", help="TOML or JSON file with flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-kg", help="build a knowledge graph from character records")
    p.add_argument("--records", required=True, help="directory of *.json character records")
    p.add_argument("--events", help="events.json file: [{name, participants}]")
    p.add_argument("--out", required=True, help="graph file to write")
    p.add_argument("--stub-threshold", type=int, default=3)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("query", help="run a query against a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--cql", required=True)
    p.add_argument("--json", action="store_true")

    for name in ("enrich", "generate", "correct"):
        p = sub.add_parser(
            name,
            help={
                "enrich": "print the context-enriched prompt for a user prompt",
                "generate": "enrich a prompt and call the image generator once",
                "correct": "run the self-correcting generation loop",
            }[name],
        )
        p.add_argument("--graph", required=True)
        p.add_argument("--prompt", required=True)
        p.add_argument("--extractor", choices=("lexicon", "llm"), default="lexicon")
        p.add_argument("--focus", help="character that pronoun possessives bind to")
        p.add_argument("--max-words", type=int, default=400)
        p.add_argument("--cache-dir")
        p.add_argument("--json", action="store_true")
        if name == "enrich":
            p.add_argument("--backend", help="needed only with --extractor llm")
        else:
            p.add_argument("--backend", required=True)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--guidance-scale", type=float, default=15.0)
        if name == "generate":
            p.add_argument("--edit-base", help="image_ref to edit instead of generating fresh")
        if name == "correct":
            p.add_argument("--targets", default="auto", help="'auto' or a JSON file of {key, specification}")
            p.add_argument("--max-iter", type=int, default=3)
            p.add_argument("--gsi-threshold", type=float, default=0.85)
            p.add_argument("--stability-threshold", type=float, default=0.8)
            p.add_argument("--lock-count", type=int, default=2)
            p.add_argument("--plateau-window", type=int, default=3)
            p.add_argument("--plateau-threshold", type=float, default=0.05)
            p.add_argument("--trace", help="write a JSON-lines trace file")

    p = sub.add_parser("evaluate", help="judge a manifest of generated images")
    p.add_argument("--images", required=True, help="JSON manifest: [{image_ref, character}]")
    p.add_argument("--graph", required=True)
    p.add_argument("--backend", required=True)
    p.add_argument("--weights", help="four comma-separated weights (default 0.6,0.15,0.1,0.15)")
    p.add_argument("--out", help="also write the report to this file")
    p.add_argument("--cache-dir")
    p.add_argument("--json", action="store_true")
    return parser


def _load_config_defaults(parser: _Parser, argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    index = argv.index("--config")
    if index + 1 >= len(argv):
        raise UsageError("--config requires a file path")
    path = Path(argv[index + 1])
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    if path.suffix == ".toml":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        config = tomllib.loads(path.read_text("utf-8"))
    else:
        config = json.loads(path.read_text("utf-8"))
    if not isinstance(config, dict):
        raise UsageError("config file must hold a table/object of flag defaults")
    defaults = {key.replace("-", "_"): value for key, value in config.items()}
    parser.set_defaults(**defaults)
    for action in parser._subparsers._group_actions:  # propagate into subcommands
        for sub in action.choices.values():
            known = {a.dest for a in sub._actions}
            sub.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    return argv


def _make_backend(spec: str, seed: int = 0):
    config = parse_backend_spec(spec)
    if config.kind == "mock":
        return MockBackend.from_config(config, seed)
    return HttpBackend(config)


def _load_graph(path: str) -> PropertyGraph:
    return PropertyGraph.load(path)


def _emit(document: dict, as_json: bool, human: Optional[str] = None) -> None:
    if as_json:
        print(json.dumps(document, indent=2, ensure_ascii=False))
    elif human is not None:
        print(human)


# ----------------------------------------------------------------------
# subcommands


def _cmd_build_kg(args) -> int:
    records = load_records(args.records)
    events = None
    if args.events:
        events = json.loads(Path(args.events).read_text("utf-8"))
    graph, report = build_graph(records, events)
    graph.save(args.out)
    validation = validate(graph, stub_reference_threshold=args.stub_threshold)
    for violation in validation.violations:
        logger.warning("validation: %s: %s", violation.kind, violation.message)
    document = {
        "records": len(records),
        "nodes": len(graph),
        "relationships": graph.relationship_count(),
        "stubs": report.stubs,
        "violations": [{"kind": v.kind, "message": v.message} for v in validation.violations],
        "out": str(args.out),
    }
    human = (
        f"built {args.out}: {len(graph)} nodes, {graph.relationship_count()} relationships "
        f"from {len(records)} records ({len(report.stubs)} stubs, "
        f"{len(validation.violations)} validation issues)"
    )
    _emit(document, args.json, human)
    return 0


def _cmd_query(args) -> int:
    graph = _load_graph(args.graph)
    table = execute(parse(args.cql), graph)
    print(json.dumps(table.to_document(), indent=2, ensure_ascii=False))
    return 0


def _enrich_prompt(graph: PropertyGraph, args, backend=None, stats: Optional[RetrievalStats] = None):
    lexicon = LexiconExtractor.for_graph(graph, focus_character=args.focus)
    analysis = None
    if args.extractor == "llm":
        if backend is None:
            if not getattr(args, "backend", None):
                raise UsageError("--extractor llm requires --backend")
            backend = _make_backend(args.backend, getattr(args, "seed", 0))
        try:
            analysis = extract_entities(backend, args.prompt)
        except (ExtractionFormatError, BackendError, NoEntityFound) as exc:
            logger.warning("llm extractor failed (%s); falling back to the lexicon extractor", exc)
    if analysis is None:
        analysis = analyze_prompt(args.prompt, lexicon)
    names = resolve_relations(analysis, graph)
    contexts, cache_path = retrieve_context(names, graph, cache_dir=args.cache_dir, stats=stats)
    style = PromptStyle(max_words=args.max_words)
    enriched = compose_enriched_prompt(args.prompt, contexts, style)
    return enriched, contexts, cache_path


def _cmd_enrich(args) -> int:
    graph = _load_graph(args.graph)
    enriched, _, cache_path = _enrich_prompt(graph, args)
    document = {
        "final_text": enriched.final_text,
        "base": enriched.base,
        "characters": enriched.characters(),
        "provenance": enriched.provenance,
        "cache_file": str(cache_path),
    }
    if args.json:
        _emit(document, True)
    else:
        print(enriched.final_text)
        if enriched.provenance:
            print()
            print("provenance (clause -> node ids):")
            for clause, ids in enriched.provenance.items():
                print(f"  {clause}  ->  {ids}")
    return 0


def _cmd_generate(args) -> int:
    graph = _load_graph(args.graph)
    backend = _make_backend(args.backend, args.seed)
    try:
        enriched, _, _ = _enrich_prompt(graph, args, backend=backend)
        prompt_text = enriched.final_text
    except NoEntityFound as exc:
        logger.warning("%s; generating from the raw prompt", exc)
        prompt_text = args.prompt
    extras = {}
    if getattr(args, "edit_base", None):
        extras["edit_base"] = args.edit_base
    response = backend.generate(
        GenerateRequest(prompt=prompt_text, seed=args.seed, guidance_scale=args.guidance_scale, extras=extras)
    )
    document = {"image_ref": response.image_ref, "prompt": prompt_text, "latency_ms": response.latency_ms}
    _emit(document, args.json, response.image_ref)
    return 0


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in text.lower()).strip("_") or "feature"


def derive_targets(contexts) -> TargetFeatures:
    """Target features from retrieved context: unique features, skin colour,
    clothing and possessions, in context order with first-wins dedup."""
    pairs: list[tuple[str, str]] = []
    seen: set[str] = set()

    def add(key: str, spec: str) -> None:
        if key and key not in seen:
            seen.add(key)
            pairs.append((key, spec))

    for context in contexts:
        for phrase in context.attributes.get("unique_features", "").split(", "):
            if phrase:
                add(_slug(phrase), phrase)
        if "skin_color" in context.attributes:
            add("skin_color", f"{context.attributes['skin_color']} skin")
        if "clothing" in context.attributes:
            add("clothing", context.attributes["clothing"])
        for name, description in context.possessions:
            add(_slug(name), f"{name} ({description})" if description else name)
    if not pairs:
        raise DataError("no target features derivable from the retrieved context; pass --targets <file>")
    return TargetFeatures.from_pairs(pairs)


def _resolve_targets(args, backend, contexts) -> TargetFeatures:
    if args.targets != "auto":
        entries = json.loads(Path(args.targets).read_text("utf-8"))
        return TargetFeatures.from_pairs([(e["key"], e["specification"]) for e in entries])
    if isinstance(backend, MockBackend):
        scripted = backend.script_targets()
        if scripted:
            return TargetFeatures.from_pairs(scripted)
    return derive_targets(contexts)


def _cmd_correct(args) -> int:
    graph = _load_graph(args.graph)
    backend = _make_backend(args.backend, args.seed)
    try:
        enriched, contexts, _ = _enrich_prompt(graph, args, backend=backend)
    except NoEntityFound as exc:
        logger.warning("%s; correcting from the raw prompt", exc)
        enriched, contexts = args.prompt, []
    targets = _resolve_targets(args, backend, contexts)
    cfg = SrdConfig(
        max_iterations=args.max_iter,
        gsi_threshold=args.gsi_threshold,
        stability_threshold=args.stability_threshold,
        lock_count=args.lock_count,
        plateau_window=min(args.plateau_window, args.max_iter),
        plateau_threshold=args.plateau_threshold,
    )
    outcome = run(enriched, targets, cfg, backend, backend, graph, seed=args.seed)
    if args.trace:
        write_trace(args.trace, outcome.trace)
    document = {
        "stop_reason": outcome.stop_reason.value,
        "iterations": len(outcome.trace),
        "gsi_history": outcome.gsi_history,
        "gsi_rendered": [format_gsi(value) for value in outcome.gsi_history],
        "decay_values": [record.d for record in outcome.trace],
        "locked": sorted(outcome.state.locked),
        "final_image": outcome.final_image,
        "final_prompt": outcome.final_prompt,
    }
    if args.json:
        _emit(document, True)
    else:
        for record in outcome.trace:
            adjusted = ",".join(d.feature_key for d in record.adjustments) or "-"
            print(
                f"k={record.k} gsi={format_gsi(record.gsi)} d={record.d:.2f} "
                f"locked=[{','.join(record.locked)}] adjusted=[{adjusted}]"
                + (" escape" if record.escape_applied else "")
            )
        print(f"stop: {outcome.stop_reason.value} after {len(outcome.trace)} iteration(s)")
        print(f"final image: {outcome.final_image}")
    return 0


def _cmd_evaluate(args) -> int:
    graph = _load_graph(args.graph)
    backend = _make_backend(args.backend)
    weights = AlignmentWeights()
    if args.weights:
        try:
            values = tuple(float(part) for part in args.weights.split(","))
        except ValueError as exc:
            raise UsageError(f"--weights must be four comma-separated numbers: {exc}") from exc
        if len(values) != 4:
            raise UsageError("--weights must have exactly four values")
        weights = AlignmentWeights(*values)
    manifest = json.loads(Path(args.images).read_text("utf-8"))
    if not isinstance(manifest, list):
        raise DataError("image manifest must be a JSON array of {image_ref, character}")
    per_image = []
    stats = RetrievalStats()
    for entry in manifest:
        contexts, _ = retrieve_context([entry["character"]], graph, cache_dir=args.cache_dir, stats=stats)
        scores = judge_image(entry["image_ref"], contexts[0], backend)
        per_image.append(
            {
                "image_ref": entry["image_ref"],
                "character": entry["character"],
                "scores": scores.to_document(),
                "overall": overall_alignment(scores, weights),
                "_scores": scores,
            }
        )
    summary = aggregate_suite([item["_scores"] for item in per_image], weights)
    for item in per_image:
        item.pop("_scores")
    document = {"images": per_image, "summary": summary.to_document()}
    if args.out:
        Path(args.out).write_text(json.dumps(document, indent=2, ensure_ascii=False) + "\n", "utf-8")
    human_lines = [
        f"{item['image_ref']}: overall {item['overall']:.4f} ({item['character']})" for item in per_image
    ] + [f"suite mean overall: {summary.mean_overall:.4f} over {summary.count} image(s)"]
    _emit(document, args.json, "\n".join(human_lines))
    return 0


_COMMANDS = {
    "build-kg": _cmd_build_kg,
    "query": _cmd_query,
    "enrich": _cmd_enrich,
    "generate": _cmd_generate,
    "correct": _cmd_correct,
    "evaluate": _cmd_evaluate,
}


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _load_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"query error: {exc}", file=sys.stderr)
        return 1
    except BackendFailure as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
