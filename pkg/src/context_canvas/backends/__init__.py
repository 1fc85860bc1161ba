from .base import (
    AnalyzeRequest,
    BackendError,
    ExtractionFormatError,
    GenerateRequest,
    GenerateResponse,
    HttpStatusError,
    ScriptExhausted,
    TimeoutError_,
)
from .config import BackendConfig
from .http import HttpBackend
from .mock import MockBackend, load_script

__all__ = [
    "AnalyzeRequest",
    "BackendConfig",
    "BackendError",
    "ExtractionFormatError",
    "GenerateRequest",
    "GenerateResponse",
    "HttpBackend",
    "HttpStatusError",
    "MockBackend",
    "ScriptExhausted",
    "TimeoutError_",
    "load_script",
]
