from __future__ import annotations

import json
from typing import Any


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, LF, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dump_bytes(obj: Any) -> bytes:
    return dumps(obj).encode("utf-8")
