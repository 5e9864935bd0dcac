"""Structural facts about a monolith: routes, call graph, tags, schema files."""

from slsmigrate.facts.analysis import (
    analyze,
    build_call_graph,
    derive_entry_dependencies,
    emit_analysis,
    extract_entry_points,
    load_project,
    load_report,
    tag_files,
)
from slsmigrate.facts.model import AnalysisReport, CallEdge, Diagnostic, EntryPoint, FileTag, SymbolTable
from slsmigrate.facts.project import EmptyProjectError, Project
from slsmigrate.facts.schemas import locate_dynamodb_schemas
from slsmigrate.facts.tags import tag_file

__all__ = [
    "AnalysisReport",
    "CallEdge",
    "Diagnostic",
    "EmptyProjectError",
    "EntryPoint",
    "FileTag",
    "Project",
    "SymbolTable",
    "analyze",
    "build_call_graph",
    "derive_entry_dependencies",
    "emit_analysis",
    "extract_entry_points",
    "load_project",
    "load_report",
    "locate_dynamodb_schemas",
    "tag_file",
    "tag_files",
]
