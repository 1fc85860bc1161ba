"""Deterministic scripted mocks for every backend role.

A mock script is a JSON file with an ordered list of canned responses per
role (``generate``, ``analyze``, ``extract``, ``judge``) and, optionally, a
``rule`` section that turns the generate/analyze pair into a tiny simulated
diffusion model:

* ``generate`` scans the prompt for each rule feature's directive phrasing,
  maps the phrasing band to an effective weight (``Ensure`` > ``Include`` >
  ``with`` > bare mention) and deems the feature rendered when that weight
  reaches ``w_min`` (and an optional seeded coin with probability ``p``
  agrees). The satisfied set is encoded into the returned image token.
* ``analyze`` simply decodes the token, so the whole correction loop can be
  exercised end to end with zero model calls.

With ``sticky`` set, once a feature renders it stays rendered -- a monotone
world for convergence property tests. Mocks are pure functions of
(script, seed, request sequence); an exhausted script raises instead of
silently repeating. No network I/O happens on any mock code path.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from pathlib import Path
from typing import Optional

from ..errors import DataError
from ..pipeline.extract import AnalysisEntry
from ..srd.types import FeatureReport, FeatureStatus, KeyMismatch
from .base import AnalyzeRequest, GenerateRequest, GenerateResponse, JudgeRequest, ScriptExhausted
from .config import BackendConfig

_TOKEN_RE = re.compile(r"feat\[([^\]]*)\]")


def load_script(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            script = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load mock script {path}: {exc}") from exc
    if not isinstance(script, dict):
        raise DataError(f"mock script {path} must be a JSON object")
    rule = script.get("rule")
    if rule is not None:
        for feature in rule.get("features", []):
            if "," in feature.get("key", ""):
                raise DataError("rule feature keys must not contain commas")
    return script


def _coin(seed: int, call_index: int, key: str, p: float) -> bool:
    if p >= 1.0:
        return True
    digest = hashlib.sha256(f"{seed}:{call_index}:{key}".encode()).digest()
    fraction = int.from_bytes(digest[:8], "big") / 2**64
    return fraction < p


class MockBackend:
    """Replays a script; safe for concurrent use (cursor behind a lock)."""

    def __init__(self, script: dict, seed: int = 0):
        self.script = script
        self.seed = seed
        self._lock = threading.Lock()
        self._cursors = {"generate": 0, "analyze": 0, "extract": 0, "judge": 0}
        self._generate_calls = 0
        self._sticky_satisfied: set[str] = set()

    @classmethod
    def from_config(cls, config: BackendConfig, seed: int = 0) -> "MockBackend":
        if config.kind != "mock":
            raise ValueError("MockBackend requires a mock config")
        return cls(load_script(config.script_path), seed)

    @property
    def rule(self) -> Optional[dict]:
        return self.script.get("rule")

    def script_targets(self) -> Optional[list[tuple[str, str]]]:
        targets = self.script.get("targets")
        if not targets:
            return None
        return [(entry["key"], entry["specification"]) for entry in targets]

    def _next(self, role: str):
        with self._lock:
            entries = self.script.get(role)
            if not isinstance(entries, list):
                raise ScriptExhausted(f"mock script has no {role!r} entries")
            cursor = self._cursors[role]
            if cursor >= len(entries):
                raise ScriptExhausted(f"mock script exhausted after {cursor} {role} responses")
            self._cursors[role] += 1
            return entries[cursor]

    # ------------------------------------------------------------------

    def _rule_weight(self, prompt: str, specification: str) -> float:
        weight = 0.0
        if f"Ensure {specification}" in prompt:
            weight = max(weight, 0.85)
        if f"Include {specification}" in prompt:
            weight = max(weight, 0.55)
        if f"with {specification}" in prompt:
            weight = max(weight, 0.2)
        if weight == 0.0 and specification in prompt:
            weight = 0.3
        return weight

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        rule = self.rule
        if rule is None:
            ref = self._next("generate")
            if isinstance(ref, dict):
                ref = ref["image_ref"]
            return GenerateResponse(f"{ref}#seed={request.seed}", 0.0)
        with self._lock:
            call_index = self._generate_calls
            self._generate_calls += 1
            w_min = float(rule.get("w_min", 0.6))
            p = float(rule.get("p", 1.0))
            satisfied = set(self._sticky_satisfied) if rule.get("sticky", False) else set()
            for feature in rule.get("features", []):
                key, spec = feature["key"], feature["specification"]
                if key in satisfied:
                    continue
                weight = self._rule_weight(request.prompt, spec)
                if weight >= w_min and _coin(request.seed, call_index, key, p):
                    satisfied.add(key)
            if rule.get("sticky", False):
                self._sticky_satisfied |= satisfied
            token = ",".join(sorted(satisfied))
            ref = f"mock-{request.seed}-{call_index}-feat[{token}]"
            return GenerateResponse(ref, 0.0)

    def analyze(self, request: AnalyzeRequest) -> FeatureReport:
        keys = list(request.target_features.keys())
        if self.rule is not None:
            match = _TOKEN_RE.search(request.image_ref)
            satisfied = set(filter(None, match.group(1).split(","))) if match else set()
            return FeatureReport.binary({key: key in satisfied for key in keys})
        entry = self._next("analyze")
        if not isinstance(entry, dict):
            raise DataError("analyze script entries must be objects mapping feature keys to values")
        if set(entry) != set(keys):
            raise KeyMismatch(f"scripted report keys {sorted(entry)} != requested {sorted(keys)}")
        statuses = {}
        for key, value in entry.items():
            if isinstance(value, bool):
                statuses[key] = FeatureStatus(value, 1.0 if value else 0.0)
            else:
                score = float(value)
                statuses[key] = FeatureStatus(score >= 0.5, score)
        return FeatureReport(statuses)

    def extract(self, prompt_text: str) -> list[AnalysisEntry]:
        entries = self._next("extract")
        return [
            AnalysisEntry(
                entry.get("main_subject"),
                entry.get("linking_character"),
                entry.get("relation_kind"),
            )
            for entry in entries
        ]

    def judge(self, request: JudgeRequest) -> dict:
        return dict(self._next("judge"))
