from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

FATAL = "fatal"
WARNING = "warning"


@dataclass
class Finding:
    """One linter or validator result.

    ``artifact`` is a workspace-relative path; ``pointer`` is a JSON pointer
    into that artifact (YAML/JSON documents), ``#L<n>`` for a source line, or
    the empty string for the artifact as a whole.
    """

    check_id: str
    severity: str
    artifact: str
    pointer: str
    message: str
    mechanical_fix: dict[str, Any] | None = None
    fix_hint: str | None = None

    @property
    def fatal(self) -> bool:
        return self.severity == FATAL

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.check_id, self.artifact, self.pointer, self.message)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Finding:
        return cls(**d)


def escape_token(token: str) -> str:
    return token.replace("~", "~0").replace("/", "~1")


def pointer(*tokens: object) -> str:
    return "".join("/" + escape_token(str(t)) for t in tokens)


def _unescape(token: str) -> str:
    return token.replace("~1", "/").replace("~0", "~")


def resolve_pointer(doc: Any, ptr: str) -> tuple[bool, Any]:
    """Follow a JSON pointer; returns ``(found, node)``."""
    if ptr == "":
        return True, doc
    if not ptr.startswith("/"):
        return False, None
    node = doc
    for raw in ptr[1:].split("/"):
        token = _unescape(raw)
        if isinstance(node, dict):
            if token not in node:
                return False, None
            node = node[token]
        elif isinstance(node, list):
            if not token.isdigit() or int(token) >= len(node):
                return False, None
            node = node[int(token)]
        else:
            return False, None
    return True, node


def deepest_pointer(doc: Any, *tokens: object) -> str:
    """Longest prefix of ``tokens`` that still resolves inside ``doc``."""
    good = ""
    for i in range(1, len(tokens) + 1):
        candidate = pointer(*tokens[:i])
        if not resolve_pointer(doc, candidate)[0]:
            break
        good = candidate
    return good


def worst_exit_code(findings: list[Finding]) -> int:
    if any(f.fatal for f in findings):
        return 2
    if findings:
        return 1
    return 0
