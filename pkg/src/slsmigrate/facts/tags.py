"""Keyword-based file tagging (AWS_SDK, DynamoDB, Auth, FileUpload)."""

from __future__ import annotations

import re

from slsmigrate.facts.model import TAGS, FileTag

# Pattern table: a file gets a tag when any of its patterns matches the source.
TAG_PATTERNS: dict[str, tuple[re.Pattern[str], ...]] = {
    "AWS_SDK": (
        re.compile(r"^\s*(?:import|from)\s+(?:boto3|botocore|aioboto3)\b", re.M),
        re.compile(r"""(?:require\s*\(\s*|from\s+)['"](?:aws-sdk|@aws-sdk/[\w-]+)['"]"""),
    ),
    "DynamoDB": (
        re.compile(r"dynamodb", re.I),
        re.compile(r"\b(?:put_item|get_item|update_item|delete_item|batch_write_item|batch_get_item|create_table)\b"),
        re.compile(r"\bDocumentClient\b"),
        re.compile(r"\b(?:Put|Get|Update|Delete|Query|Scan|BatchWrite|BatchGet)(?:Item)?Command\b"),
    ),
    "Auth": (
        re.compile(r"\bjwt\b", re.I),
        re.compile(r"jsonwebtoken|flask_jwt|passport"),
        re.compile(r"\bbearer\b", re.I),
        re.compile(r"\b(?:login_required|jwt_required)\b"),
    ),
    "FileUpload": (
        re.compile(r"\bmulter\b"),
        re.compile(r"multipart", re.I),
        re.compile(r"\brequest\.files\b"),
        re.compile(r"\bsecure_filename\b"),
        re.compile(r"\bupload_file(?:obj)?\b"),
        re.compile(r"\bput_object\b|\bPutObjectCommand\b"),
    ),
}


def tags_for_text(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(tag for tag in TAGS if any(p.search(text) for p in TAG_PATTERNS[tag]))


def tag_file(path: str, text: str | None) -> FileTag:
    """Tag one file; ``text`` is None when the file could not be read."""
    return FileTag(path, tags_for_text(text))
