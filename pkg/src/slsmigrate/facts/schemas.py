"""DynamoDB schema-file location and table-declaration extraction."""

from __future__ import annotations

import posixpath
import re
from dataclasses import dataclass, field

from slsmigrate.facts.model import FileTag

# Tier 1: initialization scripts; tier 2: database configuration modules.
TIER1_STEM = re.compile(r"^(?:init|create|setup|seed|migrate|bootstrap)(?:[_-]\w+)?$|^\w+[_-](?:init|setup|tables)$")
TIER2_STEMS = frozenset({"db", "database", "models", "model", "dynamo", "dynamodb", "schema", "schemas", "tables"})
MAX_CANDIDATES = 3


def _stem(path: str) -> str:
    name = posixpath.basename(path)
    for ext in (".py", ".js", ".ts", ".cjs", ".mjs", ".jsx", ".tsx"):
        if name.endswith(ext):
            return name[: -len(ext)].lower()
    return name.lower()


def schema_tier(path: str) -> int:
    stem = _stem(path)
    if TIER1_STEM.match(stem):
        return 1
    if stem in TIER2_STEMS:
        return 2
    return 3


def locate_dynamodb_schemas(file_tags: list[FileTag]) -> list[str]:
    tagged = [t.file for t in file_tags if "DynamoDB" in t.tags]
    return sorted(tagged, key=lambda p: (schema_tier(p), p))[:MAX_CANDIDATES]


@dataclass
class TableDecl:
    name: str
    hash_key: str = "id"
    hash_type: str = "S"
    range_key: str | None = None
    range_type: str | None = None
    sources: list[str] = field(default_factory=list)


_TABLE_NAME = re.compile(r"""\bTableName['"]?\s*[:=]\s*['"]([A-Za-z0-9_.-]+)['"]""")
_TABLE_CALL = re.compile(r"""\.Table\(\s*['"]([A-Za-z0-9_.-]+)['"]\s*\)""")
_KEY_ELEMENT = re.compile(
    r"""['"]?AttributeName['"]?\s*[:=]\s*['"](\w+)['"]\s*,\s*['"]?KeyType['"]?\s*[:=]\s*['"](HASH|RANGE)['"]"""
)
_ATTR_DEF = re.compile(
    r"""['"]?AttributeName['"]?\s*[:=]\s*['"](\w+)['"]\s*,\s*['"]?AttributeType['"]?\s*[:=]\s*['"]([SNB])['"]"""
)


def _segments(text: str) -> list[tuple[int, str]]:
    """Split text at each TableName occurrence so key schemas bind to the nearest table."""
    starts = [m.start() for m in _TABLE_NAME.finditer(text)]
    bounds = starts + [len(text)]
    return [(s, text[s:e]) for s, e in zip(bounds, bounds[1:])]


def extract_tables(sources: dict[str, str]) -> list[TableDecl]:
    """Table declarations found in the candidate files, first declaration wins."""
    tables: dict[str, TableDecl] = {}
    for path in sources:
        text = sources[path]
        for _, segment in _segments(text):
            m = _TABLE_NAME.search(segment)
            if not m:
                continue
            decl = tables.setdefault(m.group(1), TableDecl(m.group(1)))
            if path not in decl.sources:
                decl.sources.append(path)
            if decl.sources[0] != path:
                continue
            types = {a: t for a, t in _ATTR_DEF.findall(segment)}
            for attr, kind in _KEY_ELEMENT.findall(segment):
                if kind == "HASH":
                    decl.hash_key, decl.hash_type = attr, types.get(attr, "S")
                elif decl.range_key is None:
                    decl.range_key, decl.range_type = attr, types.get(attr, "S")
        for m in _TABLE_CALL.finditer(text):
            decl = tables.setdefault(m.group(1), TableDecl(m.group(1)))
            if path not in decl.sources:
                decl.sources.append(path)
    return [tables[k] for k in sorted(tables)]
