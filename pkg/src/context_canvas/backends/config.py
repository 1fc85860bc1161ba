"""Backend configuration and the CLI spec syntax that builds it.

Credentials never live in config files: ``auth_env_var`` names the
environment variable read at call time (default ``CONTEXT_CANVAS_API_KEY``).

CLI backend specs:

* ``mock:yama`` -- a script bundled with the package,
* ``mock:/path/to/script.json`` -- a script file on disk,
* ``http://host:port`` or ``https://...`` -- an HTTP backend endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from ..errors import UsageError

DEFAULT_AUTH_ENV_VAR = "CONTEXT_CANVAS_API_KEY"


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "http" | "mock"
    endpoint: Optional[str] = None
    auth_env_var: str = DEFAULT_AUTH_ENV_VAR
    timeout: float = 30.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    script_path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("http", "mock"):
            raise UsageError(f"backend kind must be http or mock, got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise UsageError("http backends require an endpoint")
        if self.kind == "mock" and not self.script_path:
            raise UsageError("mock backends require a script path")
        if self.max_attempts < 1:
            raise UsageError("max_attempts must be at least 1")


def builtin_script_path(name: str) -> Path:
    resource = resources.files("context_canvas.backends").joinpath(f"scripts/{name}.json")
    with resources.as_file(resource) as path:
        if not path.exists():
            raise UsageError(f"no builtin mock script named {name!r}")
        return Path(path)


def parse_backend_spec(spec: str, retries: Optional[int] = None, timeout: Optional[float] = None) -> BackendConfig:
    overrides = {}
    if retries is not None:
        overrides["max_attempts"] = retries + 1
    if timeout is not None:
        overrides["timeout"] = timeout
    if spec.startswith("mock:"):
        target = spec[len("mock:") :]
        path = Path(target)
        if not path.suffix and not path.exists():
            path = builtin_script_path(target)
        if not path.exists():
            raise UsageError(f"mock script not found: {target}")
        return BackendConfig(kind="mock", script_path=str(path), **overrides)
    if spec.startswith(("http://", "https://")):
        return BackendConfig(kind="http", endpoint=spec.rstrip("/"), **overrides)
    if spec.startswith("http:"):
        return BackendConfig(kind="http", endpoint=spec[len("http:") :].rstrip("/"), **overrides)
    raise UsageError(f"cannot parse backend spec {spec!r} (use mock:<name|path> or an http(s) URL)")
