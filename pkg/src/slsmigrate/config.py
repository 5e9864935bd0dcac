"""Pipeline configuration: one YAML/JSON file, with CLI flags layered on top."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

DEFAULT_AUTH_DECORATORS = (
    "login_required",
    "warehouse_required",
    "jwt_required",
    "requires_auth",
    "authenticate",
)
DEFAULT_AUTH_PATHS = ("/register", "/login", "/logout")
DEFAULT_SHARED_DIRS = (
    "common",
    "config",
    "core",
    "db",
    "helpers",
    "lib",
    "middleware",
    "models",
    "shared",
    "utils",
)
DEFAULT_EXCLUDE_DIRS = (
    ".git",
    ".venv",
    "__pycache__",
    "__tests__",
    "build",
    "dist",
    "node_modules",
    "test",
    "tests",
    "venv",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    auth_decorators: tuple[str, ...] = DEFAULT_AUTH_DECORATORS
    auth_paths: tuple[str, ...] = DEFAULT_AUTH_PATHS
    runtime: str | None = None
    # path prefix -> domain name; an empty name marks the prefix as shared code
    domain_map: dict[str, str] = field(default_factory=dict)
    shared_dirs: tuple[str, ...] = DEFAULT_SHARED_DIRS
    exclude_dirs: tuple[str, ...] = DEFAULT_EXCLUDE_DIRS
    max_trace_depth: int = 3
    layer_reuse_threshold: int = 3
    reserved_env_vars_file: str | None = None
    supported_globals_file: str | None = None

    def domain_of(self, path: str) -> str | None:
        """Service domain of a project file, or None for shared/root-level code."""
        best = None
        for prefix, name in self.domain_map.items():
            p = prefix.rstrip("/")
            if path == p or path.startswith(p + "/"):
                if best is None or len(p) > len(best[0]):
                    best = (p, name)
        if best is not None:
            return best[1] or None
        head, sep, _ = path.partition("/")
        if not sep or head in self.shared_dirs:
            return None
        return head

    def with_overrides(self, **overrides: Any) -> Config:
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **_coerce(clean))


_TUPLE_FIELDS = {"auth_decorators", "auth_paths", "shared_dirs", "exclude_dirs"}


def _coerce(raw: dict[str, Any]) -> dict[str, Any]:
    known = {f.name for f in fields(Config)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    out = dict(raw)
    for key in _TUPLE_FIELDS & set(out):
        value = out[key]
        if isinstance(value, str):
            value = [value]
        out[key] = tuple(value)
    if "domain_map" in out:
        out["domain_map"] = {str(k): ("" if v is None else str(v)) for k, v in dict(out["domain_map"]).items()}
    for key in ("max_trace_depth", "layer_reuse_threshold"):
        if key in out:
            out[key] = int(out[key])
    if out.get("runtime") not in (None, "python3.12", "nodejs22.x"):
        raise ConfigError(f"unsupported runtime {out['runtime']!r}")
    return out


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    text = Path(path).read_text("utf-8")
    raw = yaml.safe_load(text) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: configuration root must be a mapping")
    return Config(**_coerce(raw))
