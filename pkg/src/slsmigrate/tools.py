"""Validated file-system primitives shared by every pipeline stage.

All writes are atomic: content is validated first, written to a temporary
file in the target directory and then renamed over the target.  A failed
validation leaves the target byte-identical.
"""

from __future__ import annotations

import ast
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import yaml

from slsmigrate import canonical

READ_LINE_CAP = 500
VALIDATIONS = ("none", "python", "json", "yaml")


class ToolError(Exception):
    """Raised for contract violations (missing path, wrong kind, bad root)."""

    kind = "tool-error"


class NotFoundError(ToolError):
    kind = "not-found"


class UnreadableError(ToolError):
    kind = "unreadable"


class NotADirectoryToolError(ToolError):
    kind = "not-a-directory"


class NotAnObjectError(ToolError):
    kind = "not-an-object"


@dataclass(frozen=True)
class ReadResult:
    content: str
    truncated: bool
    total_lines: int
    range: tuple[int, int] | None = None
    warning: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["range"] = list(self.range) if self.range else None
        return d


@dataclass(frozen=True)
class WriteReceipt:
    path: str
    bytes_written: int
    validation: str
    ok: bool
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _read_text(path: Path) -> str:
    if not path.exists():
        raise NotFoundError(f"{path}: no such file")
    if not path.is_file():
        raise UnreadableError(f"{path}: not a regular file")
    data = path.read_bytes()
    if b"\x00" in data[:8192]:
        raise UnreadableError(f"{path}: binary content")
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnreadableError(f"{path}: not UTF-8 text ({exc.reason})") from exc


def read_file(path: str | os.PathLike[str], range: tuple[int, int] | None = None) -> ReadResult:
    """Read a text file, optionally restricted to an inclusive 1-based line range.

    Without a range at most ``READ_LINE_CAP`` lines come back (the head of the
    file) and ``truncated`` is set when more exist.
    """
    p = Path(path)
    lines = _read_text(p).splitlines(keepends=True)
    total = len(lines)
    if range is not None:
        start, end = range
        if start < 1 or end < start:
            raise ToolError(f"invalid line range {start}-{end}")
        end = min(end, total)
        selected = lines[start - 1 : end]
        return ReadResult("".join(selected), False, total, (start, end))
    if total > READ_LINE_CAP:
        return ReadResult(
            "".join(lines[:READ_LINE_CAP]),
            True,
            total,
            None,
            f"file has {total} lines; showing the first {READ_LINE_CAP}, pass a range for the rest",
        )
    return ReadResult("".join(lines), False, total)


def _permissive_yaml_loader() -> type[yaml.SafeLoader]:
    from slsmigrate.sam.yamlio import TemplateLoader

    return TemplateLoader


def check_syntax(content: str, validate: str) -> str | None:
    """Return an error message when ``content`` is not valid ``validate`` syntax."""
    if validate == "none":
        return None
    if validate == "python":
        try:
            ast.parse(content)
        except SyntaxError as exc:
            return f"line {exc.lineno}: {exc.msg}"
        except ValueError as exc:  # null bytes
            return str(exc)
        return None
    if validate == "json":
        try:
            json.loads(content)
        except json.JSONDecodeError as exc:
            return f"line {exc.lineno} column {exc.colno}: {exc.msg}"
        return None
    if validate == "yaml":
        try:
            yaml.load(content, Loader=_permissive_yaml_loader())
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1}: " if mark is not None else ""
            return f"{where}{getattr(exc, 'problem', None) or exc}"
        return None
    raise ToolError(f"unknown validation mode {validate!r}; expected one of {VALIDATIONS}")


def infer_validation(path: str | os.PathLike[str]) -> str:
    suffix = Path(path).suffix.lower()
    return {".py": "python", ".json": "json", ".yaml": "yaml", ".yml": "yaml"}.get(suffix, "none")


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_file(path: str | os.PathLike[str], content: str, validate: str = "none") -> WriteReceipt:
    p = Path(path)
    error = check_syntax(content, validate)
    if error is not None:
        return WriteReceipt(str(p), 0, validate, False, error)
    data = content.encode("utf-8")
    _atomic_write(p, data)
    return WriteReceipt(str(p), len(data), validate, True)


def merge_json_key(path: str | os.PathLike[str], key: str, value: Any) -> WriteReceipt:
    """Bind ``key`` to ``value`` in the JSON object stored at ``path``.

    A missing file counts as ``{}``.  Any other root type is rejected and the
    file is left alone.
    """
    p = Path(path)
    doc: dict[str, Any] = {}
    if p.exists():
        try:
            loaded = json.loads(_read_text(p))
        except json.JSONDecodeError as exc:
            raise NotAnObjectError(f"{p}: existing content is not JSON ({exc.msg})") from exc
        if not isinstance(loaded, dict):
            raise NotAnObjectError(f"{p}: JSON root is {type(loaded).__name__}, not an object")
        doc = loaded
    doc[key] = value
    return write_file(p, canonical.dumps(doc), "json")


def list_dir(path: str | os.PathLike[str], recursive: bool = False) -> list[tuple[str, str]]:
    """List entries as ``(relative posix path, kind)``; depth-first when recursive."""
    root = Path(path)
    if not root.exists():
        raise NotFoundError(f"{root}: no such directory")
    if not root.is_dir():
        raise NotADirectoryToolError(f"{root}: not a directory")

    out: list[tuple[str, str]] = []

    def walk(d: Path, prefix: str) -> None:
        for child in sorted(d.iterdir(), key=lambda c: c.name):
            rel = f"{prefix}{child.name}"
            if child.is_symlink():
                out.append((rel, "symlink"))
            elif child.is_dir():
                out.append((rel, "dir"))
                if recursive:
                    walk(child, rel + "/")
            else:
                out.append((rel, "file"))

    walk(root, "")
    return out
