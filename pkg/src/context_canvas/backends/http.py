"""JSON-over-HTTP backend client.

One endpoint per capability: POST ``<endpoint>/generate|analyze|extract|judge``
with the request types' JSON bodies. Transient failures (5xx, timeouts,
connection errors) are retried with exponential backoff up to the configured
attempt budget. The Authorization header is injected from the environment at
call time and is never logged.

The transport is injectable so tests can exercise retry and error paths
without touching the network; the default transport uses ``urllib``.
"""

from __future__ import annotations

import json
import logging
import os
import socket
import time
import urllib.error
import urllib.request
from typing import Callable, Optional

from ..pipeline.extract import AnalysisEntry
from ..srd.types import FeatureReport, FeatureStatus, KeyMismatch
from .base import (
    AnalyzeRequest,
    ExtractionFormatError,
    GenerateRequest,
    GenerateResponse,
    HttpStatusError,
    JudgeRequest,
    TimeoutError_,
)
from .config import BackendConfig

logger = logging.getLogger(__name__)

# transport(url, body_bytes, headers, timeout) -> (status, response_bytes)
Transport = Callable[[str, bytes, dict, float], tuple[int, bytes]]

EXTRACT_INSTRUCTION = (
    "Analyze the prompt and list the characters it refers to. For each entry "
    "return either a main_subject (a character named directly) or a "
    "linking_character plus relation_kind (for phrases like \"X's wife\"); "
    "relation_kind is one of spouse, child, parent, sibling, teacher, "
    "disciple, friend, enemy, vehicle, weapon, instrument. Respond as JSON: "
    '{"entries": [{"main_subject": ..., "linking_character": ..., '
    '"relation_kind": ...}]} with null for unused fields.'
)


def _urllib_transport(url: str, body: bytes, headers: dict, timeout: float) -> tuple[int, bytes]:
    request = urllib.request.Request(url, data=body, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.status, response.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()
    except (socket.timeout, TimeoutError) as exc:
        raise TimeoutError_(f"request to {url} timed out after {timeout}s") from exc
    except urllib.error.URLError as exc:
        raise TimeoutError_(f"request to {url} failed: {exc.reason}") from exc


class HttpBackend:
    def __init__(
        self,
        config: BackendConfig,
        transport: Optional[Transport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if config.kind != "http":
            raise ValueError("HttpBackend requires an http config")
        self.config = config
        self.transport = transport or _urllib_transport
        self.sleep = sleep

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        credential = os.environ.get(self.config.auth_env_var or "", "")
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        return headers

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.config.endpoint}/{path}"
        body = json.dumps(payload).encode("utf-8")
        last_error: Exception = HttpStatusError(0, "no attempts made")
        for attempt in range(self.config.max_attempts):
            if attempt:
                self.sleep(self.config.backoff_base * (2 ** (attempt - 1)))
            try:
                status, raw = self.transport(url, body, self._headers(), self.config.timeout)
            except TimeoutError_ as exc:
                logger.warning("attempt %d/%d to %s failed: %s", attempt + 1, self.config.max_attempts, path, exc)
                last_error = exc
                continue
            if 200 <= status < 300:
                try:
                    return json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                    raise HttpStatusError(status, f"unparseable response body: {exc}") from exc
            last_error = HttpStatusError(status)
            if status < 500:
                break  # client errors will not improve with retries
            logger.warning("attempt %d/%d to %s returned HTTP %d", attempt + 1, self.config.max_attempts, path, status)
        raise last_error

    # ------------------------------------------------------------------

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        document = self._post("generate", request.to_document())
        if not isinstance(document, dict) or "image_ref" not in document:
            raise HttpStatusError(200, "generate response lacks image_ref")
        return GenerateResponse(str(document["image_ref"]), float(document.get("latency_ms", 0.0)))

    def analyze(self, request: AnalyzeRequest) -> FeatureReport:
        document = self._post("analyze", request.to_document())
        features = document.get("features") if isinstance(document, dict) else None
        if not isinstance(features, list):
            raise HttpStatusError(200, "analyze response lacks a features array")
        statuses = {}
        for entry in features:
            key = entry.get("key")
            statuses[key] = FeatureStatus(bool(entry.get("present")), float(entry.get("score", 0.0)))
        expected = set(request.target_features.keys())
        if set(statuses) != expected:
            raise KeyMismatch(f"analyze response keys {sorted(statuses)} != requested {sorted(expected)}")
        return FeatureReport(statuses)

    def extract(self, prompt_text: str) -> list[AnalysisEntry]:
        document = self._post("extract", {"prompt": prompt_text, "instruction": EXTRACT_INSTRUCTION})
        entries = document.get("entries") if isinstance(document, dict) else None
        if not isinstance(entries, list):
            raise ExtractionFormatError("extract response lacks an entries array")
        try:
            return [
                AnalysisEntry(
                    entry.get("main_subject"),
                    entry.get("linking_character"),
                    entry.get("relation_kind"),
                )
                for entry in entries
            ]
        except Exception as exc:
            raise ExtractionFormatError(f"malformed extraction entries: {exc}") from exc

    def judge(self, request: JudgeRequest) -> dict:
        document = self._post("judge", request.to_document())
        if not isinstance(document, dict):
            raise HttpStatusError(200, "judge response is not an object")
        return document
