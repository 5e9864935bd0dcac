from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Any

log = logging.getLogger("slsmigrate.facts")

HTTP_METHODS = ("GET", "POST", "PUT", "PATCH", "DELETE")
TAGS = ("AWS_SDK", "DynamoDB", "Auth", "FileUpload")


@dataclass(frozen=True)
class EntryPoint:
    method: str
    path: str
    handler_function: str
    file: str
    line: int
    auth_markers: tuple[str, ...] = ()
    # Where the handler body lives when it is imported into the routing file.
    handler_file: str | None = None

    @property
    def key(self) -> str:
        return f"{self.method} {self.path}"

    @property
    def defining_file(self) -> str:
        return self.handler_file or self.file

    def sort_key(self) -> tuple[str, int, str, str]:
        return (self.file, self.line, self.method, self.path)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["auth_markers"] = list(self.auth_markers)
        d["handler_file"] = self.defining_file
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EntryPoint:
        return cls(
            method=d["method"],
            path=d["path"],
            handler_function=d["handler_function"],
            file=d["file"],
            line=int(d["line"]),
            auth_markers=tuple(d.get("auth_markers", ())),
            handler_file=d.get("handler_file"),
        )


@dataclass(frozen=True)
class FileTag:
    file: str
    tags: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"file": self.file, "tags": list(self.tags)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> FileTag:
        return cls(d["file"], tuple(d.get("tags", ())))


@dataclass(frozen=True)
class CallEdge:
    caller_file: str
    caller_function: str
    callee_file: str
    callee_function: str
    line: int
    return_value_used: bool
    is_awaited: bool

    @property
    def fire_and_forget(self) -> bool:
        return not self.return_value_used and not self.is_awaited

    @property
    def caller(self) -> tuple[str, str]:
        return (self.caller_file, self.caller_function)

    @property
    def callee(self) -> tuple[str, str]:
        return (self.callee_file, self.callee_function)

    def sort_key(self) -> tuple[str, int, str, str, str]:
        return (self.caller_file, self.line, self.caller_function, self.callee_file, self.callee_function)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CallEdge:
        return cls(
            d["caller_file"],
            d["caller_function"],
            d["callee_file"],
            d["callee_function"],
            int(d["line"]),
            bool(d["return_value_used"]),
            bool(d["is_awaited"]),
        )


@dataclass(frozen=True)
class Diagnostic:
    level: str
    code: str
    file: str
    line: int | None
    message: str

    def sort_key(self) -> tuple[str, int, str, str]:
        return (self.file, self.line or 0, self.code, self.message)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def emit(self) -> None:
        log.warning(json.dumps(self.to_dict(), sort_keys=True))


@dataclass
class AnalysisReport:
    project_root: str
    language: str
    entry_points: list[EntryPoint]
    file_tags: list[FileTag]
    entry_point_dependencies: dict[str, list[CallEdge]]
    dynamodb_schema_candidates: list[str]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def tags_of(self, path: str) -> tuple[str, ...]:
        for ft in self.file_tags:
            if ft.file == path:
                return ft.tags
        return ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "project_root": self.project_root,
            "language": self.language,
            "entry_points": [e.to_dict() for e in self.entry_points],
            "file_tags": [t.to_dict() for t in self.file_tags],
            "entry_point_dependencies": {
                k: [e.to_dict() for e in v] for k, v in sorted(self.entry_point_dependencies.items())
            },
            "dynamodb_schema_candidates": list(self.dynamodb_schema_candidates),
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AnalysisReport:
        return cls(
            project_root=d["project_root"],
            language=d["language"],
            entry_points=[EntryPoint.from_dict(e) for e in d["entry_points"]],
            file_tags=[FileTag.from_dict(t) for t in d.get("file_tags", [])],
            entry_point_dependencies={
                k: [CallEdge.from_dict(e) for e in v] for k, v in d.get("entry_point_dependencies", {}).items()
            },
            dynamodb_schema_candidates=list(d.get("dynamodb_schema_candidates", [])),
            diagnostics=[Diagnostic(**x) for x in d.get("diagnostics", [])],
        )


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    start_line: int
    end_line: int
    is_async: bool = False


@dataclass(frozen=True)
class ClassSymbol:
    name: str
    start_line: int
    end_line: int


@dataclass(frozen=True)
class ImportRecord:
    name: str
    module: str
    symbol: str | None
    resolved: str | None

    @property
    def external(self) -> bool:
        return self.resolved is None

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "module": self.module,
            "symbol": self.symbol,
            "resolved": self.resolved,
            "external": self.external,
        }


@dataclass
class FileSymbols:
    functions: list[FunctionSymbol] = field(default_factory=list)
    classes: list[ClassSymbol] = field(default_factory=list)
    imports: list[ImportRecord] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "functions": [asdict(f) for f in sorted(self.functions, key=lambda f: (f.start_line, f.name))],
            "classes": [asdict(c) for c in sorted(self.classes, key=lambda c: (c.start_line, c.name))],
            "imports": [i.to_dict() for i in sorted(self.imports, key=lambda i: (i.name, i.module))],
        }


@dataclass
class SymbolTable:
    project_root: str
    language: str
    files: dict[str, FileSymbols] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "project_root": self.project_root,
            "language": self.language,
            "files": {path: fs.to_dict() for path, fs in sorted(self.files.items())},
        }
