"""Whole-project analysis: entry points, tags, call graph, schema candidates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from slsmigrate import canonical
from slsmigrate.config import Config
from slsmigrate.facts import javascript, python_ast
from slsmigrate.facts.model import (
    AnalysisReport,
    CallEdge,
    Diagnostic,
    EntryPoint,
    FileTag,
    SymbolTable,
)
from slsmigrate.facts.project import EmptyProjectError, Project
from slsmigrate.facts.schemas import locate_dynamodb_schemas
from slsmigrate.facts.tags import tag_file

REPORT_NAME = "analysis_report.json"
SYMBOLS_NAME = "symbol_table.json"


@dataclass
class LoadedProject:
    """Parsed view of a project shared by every analysis pass."""

    project: Project
    config: Config
    py: dict[str, python_ast.PyFile] = field(default_factory=dict)
    js: dict[str, javascript.JsFile] = field(default_factory=dict)
    raw_entry_points: list[EntryPoint] = field(default_factory=list)
    load_diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def language(self) -> str:
        return self.project.language

    def file_diagnostics(self) -> list[Diagnostic]:
        out = list(self.load_diagnostics)
        for pf in self.py.values():
            out.extend(pf.diagnostics)
        for jf in self.js.values():
            out.extend(jf.diagnostics)
        return out

    def js_defaults(self) -> dict[str, str | None]:
        return {path: jf.default_export for path, jf in self.js.items()}


def load_project(root: str | Path, config: Config | None = None) -> LoadedProject:
    config = config or Config()
    project = Project.discover(root, config)
    lp = LoadedProject(project, config)
    auth = frozenset(config.auth_decorators)
    for path in project.files:
        if project.language == "python":
            loaded = python_ast.load_file(project, path)
            if isinstance(loaded, Diagnostic):
                lp.load_diagnostics.append(loaded)
            else:
                lp.py[path] = loaded
        else:
            loaded_js = javascript.load_file(project, path)
            if isinstance(loaded_js, Diagnostic):
                lp.load_diagnostics.append(loaded_js)
            else:
                lp.js[path] = loaded_js
    if project.language == "python":
        lp.raw_entry_points = python_ast.entry_points(list(lp.py.values()), auth)
    else:
        # Route scanning registers inline handlers as call-attribution regions.
        lp.raw_entry_points = javascript.entry_points(project, lp.js, auth)
        for jf in lp.js.values():
            javascript.add_inline_symbols(jf)
    return lp


def extract_entry_points(lp: LoadedProject) -> tuple[list[EntryPoint], list[Diagnostic]]:
    """Deduplicated entry points in (file, line, method, path) order."""
    seen: dict[tuple[str, str], EntryPoint] = {}
    diagnostics: list[Diagnostic] = []
    for ep in sorted(lp.raw_entry_points, key=EntryPoint.sort_key):
        key = (ep.method, ep.path)
        if key in seen:
            first = seen[key]
            diagnostics.append(
                Diagnostic(
                    "warning",
                    "duplicate-route",
                    ep.file,
                    ep.line,
                    f"{ep.key} already registered at {first.file}:{first.line}; keeping the first",
                )
            )
            continue
        seen[key] = ep
    return list(seen.values()), diagnostics


def build_call_graph(lp: LoadedProject) -> list[CallEdge]:
    edges: list[CallEdge] = []
    if lp.language == "python":
        for pf in lp.py.values():
            edges.extend(python_ast.call_edges(pf))
    else:
        defaults = lp.js_defaults()
        for jf in lp.js.values():
            edges.extend(javascript.call_edges(jf, defaults))
    return sorted(set(edges), key=CallEdge.sort_key)


def derive_entry_dependencies(edges: list[CallEdge], entry_points: list[EntryPoint]) -> dict[str, list[CallEdge]]:
    out: dict[str, list[CallEdge]] = {}
    for ep in entry_points:
        handler = (ep.defining_file, ep.handler_function)
        out[ep.key] = sorted((e for e in edges if e.caller == handler), key=CallEdge.sort_key)
    return out


def tag_files(lp: LoadedProject) -> list[FileTag]:
    return [tag_file(path, lp.project.text(path)) for path in lp.project.files]


def symbol_table(lp: LoadedProject) -> SymbolTable:
    files = {path: pf.symbols for path, pf in lp.py.items()}
    files.update({path: jf.symbols for path, jf in lp.js.items()})
    return SymbolTable(str(lp.project.root), lp.language, files)


def analyze(root: str | Path, config: Config | None = None) -> tuple[AnalysisReport, SymbolTable]:
    lp = load_project(root, config)
    entry_points, dup_diags = extract_entry_points(lp)
    edges = build_call_graph(lp)
    tags = tag_files(lp)
    diagnostics = lp.file_diagnostics() + dup_diags
    report = AnalysisReport(
        project_root=str(lp.project.root),
        language=lp.language,
        entry_points=entry_points,
        file_tags=tags,
        entry_point_dependencies=derive_entry_dependencies(edges, entry_points),
        dynamodb_schema_candidates=locate_dynamodb_schemas(tags),
        diagnostics=sorted(set(diagnostics), key=Diagnostic.sort_key),
    )
    return report, symbol_table(lp)


def emit_analysis(
    root: str | Path, out_dir: str | Path, config: Config | None = None
) -> tuple[AnalysisReport, SymbolTable]:
    """Analyze ``root`` and write both artifacts canonically into ``out_dir``.

    Raises EmptyProjectError (nothing written) when the tree has no sources.
    """
    report, symbols = analyze(root, config)
    for diag in report.diagnostics:
        diag.emit()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / REPORT_NAME).write_bytes(canonical.dump_bytes(report.to_dict()))
    (out / SYMBOLS_NAME).write_bytes(canonical.dump_bytes(symbols.to_dict()))
    return report, symbols


def load_report(path: str | Path) -> AnalysisReport:
    return AnalysisReport.from_dict(json.loads(Path(path).read_text("utf-8")))


__all__ = [
    "EmptyProjectError",
    "LoadedProject",
    "analyze",
    "build_call_graph",
    "derive_entry_dependencies",
    "emit_analysis",
    "extract_entry_points",
    "load_project",
    "load_report",
    "locate_dynamodb_schemas",
    "symbol_table",
    "tag_files",
]
