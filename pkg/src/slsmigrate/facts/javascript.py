"""JavaScript/TypeScript analysis with regular expressions over Express idioms.

Every pattern runs over a *masked* copy of the source in which comments and
string/template/regex literal bodies are blanked out (newlines kept), so
offsets and line numbers match the original text while braces and keywords
inside literals cannot confuse the scanners.

Known blind spots: routes whose path is computed or a template literal with
substitutions, ``app.route(path).get(...)`` chains, class methods as call
sources, call chains deeper than ``alias.member(...)``, and calls inside
template-literal substitutions.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field

from slsmigrate.facts.model import (
    CallEdge,
    ClassSymbol,
    Diagnostic,
    EntryPoint,
    FileSymbols,
    FunctionSymbol,
    ImportRecord,
)
from slsmigrate.facts.project import Project

ROUTE_VERBS = {"get": "GET", "post": "POST", "put": "PUT", "patch": "PATCH", "delete": "DELETE"}

_IDENT = r"[A-Za-z_$][\w$]*"
_KEYWORDS = frozenset(
    {
        "if", "for", "while", "switch", "catch", "function", "return", "typeof", "await", "async",
        "new", "delete", "void", "yield", "in", "of", "instanceof", "case", "do", "else", "super",
        "import", "require", "constructor",
    }
)
_EXPR_KEYWORDS = frozenset({"return", "await", "yield", "typeof", "void", "new", "delete", "in", "of", "instanceof", "case", "throw"})
_CONTINUATION = set(".?[(+-*/%&|^<>=!,:`")
_EXPRESS_PARAM = re.compile(r":(" + _IDENT + r")\??")


def express_path(path: str) -> str:
    return _EXPRESS_PARAM.sub(r"{\1}", path)


def join_route(prefix: str, path: str) -> str:
    segments = [s.strip("/") for s in (prefix, path) if s.strip("/")]
    return "/" + "/".join(segments)


# -- masking ---------------------------------------------------------------


def mask(text: str) -> str:
    out = list(text)
    n = len(text)
    i = 0
    last_sig = ""

    def blank(a: int, b: int) -> None:
        for k in range(a, min(b, n)):
            if out[k] != "\n":
                out[k] = " "

    while i < n:
        c = text[i]
        nxt = text[i + 1] if i + 1 < n else ""
        if c == "/" and nxt == "/":
            end = text.find("\n", i)
            end = n if end < 0 else end
            blank(i, end)
            i = end
            continue
        if c == "/" and nxt == "*":
            end = text.find("*/", i + 2)
            end = n if end < 0 else end + 2
            blank(i, end)
            i = end
            continue
        if c in "'\"`":
            j = i + 1
            while j < n and text[j] != c:
                if text[j] == "\\":
                    j += 1
                elif text[j] == "\n" and c != "`":
                    break
                j += 1
            blank(i + 1, j)
            i = j + 1
            last_sig = c
            continue
        if c == "/" and (last_sig == "" or last_sig in "(,=:[!&|?{};+-*%<>~^"):
            j = i + 1
            in_class = False
            while j < n and text[j] != "\n":
                ch = text[j]
                if ch == "\\":
                    j += 2
                    continue
                if ch == "[":
                    in_class = True
                elif ch == "]":
                    in_class = False
                elif ch == "/" and not in_class:
                    break
                j += 1
            if j < n and text[j] == "/":
                blank(i + 1, j)
                i = j + 1
                while i < n and (text[i].isalpha()):
                    i += 1
                last_sig = "/"
                continue
        if not c.isspace():
            last_sig = c
        i += 1
    return "".join(out)


def match_close(masked: str, open_idx: int) -> int:
    """Index of the bracket closing the one at ``open_idx`` (or len on failure)."""
    pairs = {"(": ")", "[": "]", "{": "}"}
    stack = [pairs[masked[open_idx]]]
    for k in range(open_idx + 1, len(masked)):
        ch = masked[k]
        if ch in pairs:
            stack.append(pairs[ch])
        elif ch in ")]}":
            if not stack or ch != stack[-1]:
                continue
            stack.pop()
            if not stack:
                return k
    return len(masked)


def match_open(masked: str, close_idx: int) -> int:
    pairs = {")": "(", "]": "[", "}": "{"}
    depth = 0
    want = pairs[masked[close_idx]]
    mine = masked[close_idx]
    for k in range(close_idx, -1, -1):
        if masked[k] == mine:
            depth += 1
        elif masked[k] == want:
            depth -= 1
            if depth == 0:
                return k
    return -1


def split_args(masked: str, open_idx: int) -> list[tuple[int, int]]:
    """Top-level comma-separated argument spans inside the parens at ``open_idx``."""
    close = match_close(masked, open_idx)
    spans: list[tuple[int, int]] = []
    depth = 0
    start = open_idx + 1
    for k in range(open_idx + 1, close):
        ch = masked[k]
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == "," and depth == 0:
            spans.append(_strip_span(masked, start, k))
            start = k + 1
    last = _strip_span(masked, start, close)
    if last[0] < last[1]:
        spans.append(last)
    return spans


def _strip_span(s: str, a: int, b: int) -> tuple[int, int]:
    while a < b and s[a].isspace():
        a += 1
    while b > a and s[b - 1].isspace():
        b -= 1
    return a, b


# -- per-file model --------------------------------------------------------


@dataclass(frozen=True)
class ImportTarget:
    kind: str  # "module" | "symbol"
    file: str
    name: str | None = None


@dataclass
class Region:
    name: str
    start: int
    body_start: int
    body_end: int
    is_async: bool
    inline: bool = False


@dataclass
class JsFile:
    path: str
    text: str
    masked: str
    newlines: list[int]
    imports: dict[str, ImportTarget] = field(default_factory=dict)
    symbols: FileSymbols = field(default_factory=FileSymbols)
    regions: list[Region] = field(default_factory=list)
    default_export: str | None = None
    apps: set[str] = field(default_factory=set)
    routers: set[str] = field(default_factory=set)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def line_of(self, offset: int) -> int:
        return bisect.bisect_right(self.newlines, offset - 1) + 1

    def literal(self, a: int, b: int) -> str | None:
        """Content of the string literal occupying [a, b) in the original text."""
        raw = self.text[a:b]
        if len(raw) >= 2 and raw[0] in "'\"`" and raw[-1] == raw[0]:
            inner = raw[1:-1]
            if raw[0] == "`" and "${" in inner:
                return None
            return inner
        return None


def load_file(project: Project, path: str) -> JsFile | Diagnostic:
    text = project.text(path)
    if text is None:
        return Diagnostic("warning", "unreadable", path, None, "file is not UTF-8 text; skipped")
    masked = mask(text)
    newlines = [i for i, ch in enumerate(text) if ch == "\n"]
    jf = JsFile(path, text, masked, newlines)
    _collect_imports(project, jf)
    _collect_regions(jf)
    _collect_express_objects(jf)
    return jf


_REQUIRE_ALIAS = re.compile(
    rf"\b(?:const|let|var)\s+({_IDENT})\s*=\s*require\s*\(\s*((['\"])[^'\"\n]*\3)\s*\)(?:\s*\.\s*({_IDENT}))?"
)
_REQUIRE_DESTRUCTURE = re.compile(
    rf"\b(?:const|let|var)\s*\{{([^}}]*)\}}\s*=\s*require\s*\(\s*((['\"])[^'\"\n]*\3)\s*\)"
)
_IMPORT_FROM = re.compile(
    rf"\bimport\s+(?:({_IDENT})\s*,?\s*)?(?:\{{([^}}]*)\}}|\*\s*as\s+({_IDENT}))?\s*from\s*((['\"])[^'\"\n]*\5)"
)
_DEFAULT_EXPORT = re.compile(
    rf"\b(?:module\.exports\s*=\s*(?:async\s+)?(?:function\s*\*?\s*)?|export\s+default\s+(?:async\s+)?(?:function\s*\*?\s*)?)({_IDENT})"
)


def _spec(jf: JsFile, m: re.Match[str], group: int) -> str:
    return jf.text[m.start(group) + 1 : m.end(group) - 1]


def _add_import(project: Project, jf: JsFile, local: str, spec: str, symbol: str | None, line: int) -> None:
    resolved = project.resolve_js_module(jf.path, spec)
    jf.symbols.imports.append(ImportRecord(local, spec, symbol, resolved))
    if resolved is None:
        if spec.startswith("."):
            jf.diagnostics.append(
                Diagnostic("warning", "unresolved-import", jf.path, line, f"cannot resolve require/import of {spec}")
            )
        return
    if symbol is None:
        jf.imports[local] = ImportTarget("module", resolved)
    else:
        jf.imports[local] = ImportTarget("symbol", resolved, symbol)


def _collect_imports(project: Project, jf: JsFile) -> None:
    m_ = jf.masked
    for m in _REQUIRE_ALIAS.finditer(m_):
        _add_import(project, jf, m.group(1), _spec(jf, m, 2), m.group(4), jf.line_of(m.start()))
    for m in _REQUIRE_DESTRUCTURE.finditer(m_):
        for original, local in _destructured(m.group(1)):
            _add_import(project, jf, local, _spec(jf, m, 2), original, jf.line_of(m.start()))
    for m in _IMPORT_FROM.finditer(m_):
        spec = _spec(jf, m, 4)
        line = jf.line_of(m.start())
        if m.group(1):
            _add_import(project, jf, m.group(1), spec, None, line)
        if m.group(3):
            _add_import(project, jf, m.group(3), spec, None, line)
        if m.group(2):
            for original, local in _destructured(m.group(2), sep=" as "):
                _add_import(project, jf, local, spec, original, line)
    dm = _DEFAULT_EXPORT.search(m_)
    if dm:
        jf.default_export = dm.group(1)


def _destructured(body: str, sep: str = ":") -> list[tuple[str, str]]:
    out = []
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        if sep in part:
            original, local = (p.strip() for p in part.split(sep, 1))
        else:
            original = local = part
        if re.fullmatch(_IDENT, original) and re.fullmatch(_IDENT, local):
            out.append((original, local))
    return out


_FUNC_DECL = re.compile(rf"\b(async\s+)?function\s*\*?\s*({_IDENT})\s*\(")
_FUNC_ASSIGN = re.compile(
    rf"(?:\b(?:const|let|var)\s+|\b(?:module\.)?exports\.)({_IDENT})\s*=\s*(async\s+)?(function\b\s*\*?\s*(?:{_IDENT})?\s*\(|\(|{_IDENT}\s*=>)"
)
_CLASS = re.compile(rf"\bclass\s+({_IDENT})[^{{;]*\{{")


def _skip_ws(s: str, k: int) -> int:
    while k < len(s) and s[k].isspace():
        k += 1
    return k


def _expression_end(s: str, k: int) -> int:
    depth = 0
    while k < len(s):
        ch = s[k]
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            if depth == 0:
                return k
            depth -= 1
        elif depth == 0 and ch in ";,":
            return k
        elif depth == 0 and ch == "\n":
            nxt = _skip_ws(s, k)
            if nxt >= len(s) or s[nxt] not in _CONTINUATION:
                return k
        k += 1
    return k


def function_body(s: str, k: int) -> tuple[int, int] | None:
    """Given the offset just after a function's parameter list or arrow, locate its body."""
    k = _skip_ws(s, k)
    if k < len(s) and s[k] == "{":
        return k, match_close(s, k) + 1
    if k < len(s):
        return k, _expression_end(s, k)
    return None


def arrow_or_function_at(s: str, k: int) -> tuple[int, int, bool] | None:
    """If an inline function literal starts at ``k``, return its body span and asyncness."""
    k = _skip_ws(s, k)
    is_async = False
    if s.startswith("async", k) and not re.match(r"[\w$]", s[k + 5 : k + 6] or " "):
        is_async = True
        k = _skip_ws(s, k + 5)
    fm = re.compile(rf"function\b\s*\*?\s*(?:{_IDENT})?\s*\(").match(s, k)
    if fm:
        close = match_close(s, fm.end() - 1)
        body = function_body(s, close + 1)
        return (body[0], body[1], is_async) if body else None
    if k < len(s) and s[k] == "(":
        close = match_close(s, k)
        after = _skip_ws(s, close + 1)
        if s.startswith("=>", after):
            body = function_body(s, after + 2)
            return (body[0], body[1], is_async) if body else None
        return None
    im = re.compile(rf"({_IDENT})\s*=>").match(s, k)
    if im:
        body = function_body(s, im.end())
        return (body[0], body[1], is_async) if body else None
    return None


def _collect_regions(jf: JsFile) -> None:
    s = jf.masked
    regions: list[Region] = []
    for m in _FUNC_DECL.finditer(s):
        close = match_close(s, m.end() - 1)
        body = function_body(s, close + 1)
        if body and s[body[0]] == "{":
            regions.append(Region(m.group(2), m.start(), body[0], body[1], bool(m.group(1))))
    for m in _FUNC_ASSIGN.finditer(s):
        found = arrow_or_function_at(s, m.start(2) if m.group(2) else m.start(3))
        if found:
            regions.append(Region(m.group(1), m.start(), found[0], found[1], found[2]))
    regions.sort(key=lambda r: (r.start, -r.body_end))
    outer: list[Region] = []
    for r in regions:
        if outer and r.start < outer[-1].body_end:
            continue
        outer.append(r)
    jf.regions = outer
    for r in outer:
        jf.symbols.functions.append(
            FunctionSymbol(r.name, jf.line_of(r.start), jf.line_of(max(r.body_end - 1, r.start)), r.is_async)
        )
    for m in _CLASS.finditer(s):
        brace = m.end() - 1
        jf.symbols.classes.append(ClassSymbol(m.group(1), jf.line_of(m.start()), jf.line_of(match_close(s, brace))))


_APP = re.compile(rf"\b(?:const|let|var)\s+({_IDENT})\s*=\s*express\s*\(\s*\)")
_ROUTER = re.compile(rf"\b(?:const|let|var)\s+({_IDENT})\s*=\s*(?:express\s*\.\s*)?Router\s*\(")
_EXPORTED = re.compile(rf"\bmodule\.exports\s*=\s*({_IDENT})\s*;?")


def _collect_express_objects(jf: JsFile) -> None:
    jf.apps = {m.group(1) for m in _APP.finditer(jf.masked)}
    jf.routers = {m.group(1) for m in _ROUTER.finditer(jf.masked)}


def exported_router(jf: JsFile) -> str | None:
    for m in _EXPORTED.finditer(jf.masked):
        if m.group(1) in jf.routers:
            return m.group(1)
    return None


# -- call edges ------------------------------------------------------------

_CALL = re.compile(rf"(?<![\w$.])({_IDENT})(?:\s*\.\s*({_IDENT}))?\s*\(")


def _prev_sig(s: str, k: int) -> tuple[int, bool]:
    """Index of the previous non-space char before ``k`` and whether a newline was crossed."""
    newline = False
    k -= 1
    while k >= 0 and s[k].isspace():
        if s[k] == "\n":
            newline = True
        k -= 1
    return k, newline


def _word_before(s: str, k: int) -> str:
    m = re.search(r"([\w$]+)\s*$", s[: k + 1])
    return m.group(1) if m else ""


def _statement_starts_at(s: str, k: int) -> bool:
    j, newline = _prev_sig(s, k)
    if j < 0:
        return True
    ch = s[j]
    if ch in ";{}":
        return True
    if ch.isalnum() or ch in "_$":
        word = _word_before(s, j)
        if word in ("else", "do"):
            return True
        if word in _EXPR_KEYWORDS:
            return False
        return newline
    if ch == ")":
        opener = match_open(s, j)
        if opener >= 0 and _word_before(s, opener - 1) in ("if", "while", "for"):
            return True
        return newline
    if ch == "]":
        return newline
    return False


def _statement_ends_at(s: str, k: int) -> bool:
    j = k
    newline = False
    while j < len(s) and s[j].isspace():
        if s[j] == "\n":
            newline = True
        j += 1
    if j >= len(s) or s[j] in ";}":
        return True
    return newline and s[j] not in _CONTINUATION


def resolve_callee(jf: JsFile, name: str, member: str | None, defaults: dict[str, str | None]) -> tuple[str, str] | None:
    target = jf.imports.get(name)
    if target is None:
        return None
    if member is None:
        if target.kind == "symbol":
            return target.file, target.name or name
        exported = defaults.get(target.file)
        return (target.file, exported) if exported else None
    if target.kind == "module":
        return target.file, member
    return target.file, f"{target.name}.{member}"


def call_edges(jf: JsFile, defaults: dict[str, str | None]) -> list[CallEdge]:
    s = jf.masked
    edges: list[CallEdge] = []
    for m in _CALL.finditer(s):
        name, member = m.group(1), m.group(2)
        if name in _KEYWORDS or _word_before(s, m.start() - 1) == "function":
            continue
        region = owner_of(jf, m.start())
        if region is None:
            continue
        callee = resolve_callee(jf, name, member, defaults)
        if callee is None or callee[0] == jf.path:
            continue
        start = m.start()
        j, _ = _prev_sig(s, start)
        awaited = j >= 4 and _word_before(s, j) == "await"
        stmt_from = j - 4 if awaited else start
        close = match_close(s, m.end() - 1)
        bare = _statement_starts_at(s, stmt_from) and _statement_ends_at(s, close + 1)
        edges.append(CallEdge(jf.path, region.name, callee[0], callee[1], jf.line_of(start), not bare, awaited))
    return edges


# -- entry points ----------------------------------------------------------

_ROUTE_CALL = re.compile(rf"(?<![\w$.])({_IDENT})\s*\.\s*(get|post|put|patch|delete|all|route)\s*\(")
_USE_CALL = re.compile(rf"(?<![\w$.])({_IDENT})\s*\.\s*use\s*\(")


@dataclass
class _Mount:
    parent: tuple[str, str]
    prefix: str
    markers: tuple[str, ...]
    file: str
    line: int


def _arg_names(jf: JsFile, span: tuple[int, int]) -> list[str]:
    text = jf.masked[span[0] : span[1]].strip()
    if text.startswith("["):
        inner = text[1:-1]
        return [n for part in inner.split(",") for n in [_callable_name(part.strip())] if n]
    name = _callable_name(text)
    return [name] if name else []


def _callable_name(text: str) -> str | None:
    m = re.match(rf"({_IDENT}(?:\s*\.\s*{_IDENT})*)\s*(\(|$)", text)
    if not m:
        return None
    return re.split(r"\s*\.\s*", m.group(1))[-1]


def _router_ref(
    project: Project, jf: JsFile, span: tuple[int, int], files: dict[str, JsFile]
) -> tuple[str, str] | None:
    text = jf.masked[span[0] : span[1]].strip()
    m = re.fullmatch(rf"({_IDENT})", text)
    if m:
        name = m.group(1)
        if name in jf.routers:
            return jf.path, name
        target = jf.imports.get(name)
        if target is not None:
            other = files.get(target.file)
            if other is None:
                return None
            if target.kind == "module":
                exported = exported_router(other)
                return (other.path, exported) if exported else None
            if target.name in other.routers:
                return other.path, target.name  # type: ignore[return-value]
        return None
    rm = re.fullmatch(r"require\s*\(\s*(['\"])[^'\"\n]*\1\s*\)", text)
    if rm:
        a = span[0] + jf.masked[span[0] : span[1]].index(rm.group(1))
        b = jf.masked.index(rm.group(1), a + 1) + 1
        resolved = project.resolve_js_module(jf.path, jf.text[a + 1 : b - 1])
        other = files.get(resolved or "")
        if other is not None:
            exported = exported_router(other)
            return (other.path, exported) if exported else None
    return None


def _collect_mounts(
    project: Project, files: dict[str, JsFile], auth: frozenset[str]
) -> tuple[dict[tuple[str, str], list[_Mount]], dict[tuple[str, str], list[tuple[int, str]]]]:
    mounts: dict[tuple[str, str], list[_Mount]] = {}
    router_wide: dict[tuple[str, str], list[tuple[int, str]]] = {}
    for jf in files.values():
        s = jf.masked
        for m in _USE_CALL.finditer(s):
            obj = m.group(1)
            if obj not in jf.apps and obj not in jf.routers:
                continue
            args = split_args(s, m.end() - 1)
            if not args:
                continue
            line = jf.line_of(m.start())
            prefix = ""
            rest = args
            first = jf.literal(*args[0])
            if first is not None:
                prefix, rest = first, args[1:]
            if not rest:
                continue
            target = _router_ref(project, jf, rest[-1], files)
            if target is None:
                # Plain middleware: record auth markers that apply to later routes on this object.
                if not prefix and obj in jf.routers | jf.apps:
                    for span in rest:
                        for name in _arg_names(jf, span):
                            if name in auth:
                                router_wide.setdefault((jf.path, obj), []).append((m.start(), name))
                continue
            markers = tuple(n for span in rest[:-1] for n in _arg_names(jf, span) if n in auth)
            if obj in jf.routers:
                jf.diagnostics.append(
                    Diagnostic(
                        "warning",
                        "nested-mount",
                        jf.path,
                        line,
                        f"router mounted on router {obj}; only one mount level is resolved",
                    )
                )
            mounts.setdefault(target, []).append(_Mount((jf.path, obj), express_path(prefix), markers, jf.path, line))
    return mounts, router_wide


def _handler_of(jf: JsFile, span: tuple[int, int]) -> tuple[str, str, Region | None]:
    s = jf.masked
    inline = arrow_or_function_at(s, span[0])
    if inline is not None:
        name = f"anonymous_L{jf.line_of(span[0])}"
        return jf.path, name, Region(name, span[0], inline[0], inline[1], inline[2], inline=True)
    text = s[span[0] : span[1]].strip()
    wrapped = re.match(rf"{_IDENT}\s*\(", text)
    if wrapped:
        inner = split_args(s, span[0] + text.index("("))
        if inner:
            return _handler_of(jf, inner[-1])
    parts = [p for p in re.split(r"\s*\.\s*", text) if p]
    if len(parts) == 1:
        target = jf.imports.get(parts[0])
        if target is not None and target.kind == "symbol":
            return target.file, target.name or parts[0], None
        return jf.path, parts[0], None
    if len(parts) == 2:
        target = jf.imports.get(parts[0])
        if target is not None and target.kind == "module":
            return target.file, parts[1], None
    return jf.path, ".".join(parts), None


def entry_points(project: Project, files: dict[str, JsFile], auth: frozenset[str]) -> list[EntryPoint]:
    mounts, router_wide = _collect_mounts(project, files, auth)
    found: list[EntryPoint] = []
    for jf in files.values():
        s = jf.masked
        for m in _ROUTE_CALL.finditer(s):
            obj, verb = m.group(1), m.group(2)
            if obj not in jf.apps and obj not in jf.routers:
                continue
            line = jf.line_of(m.start())
            if verb in ("route", "all"):
                jf.diagnostics.append(
                    Diagnostic("warning", f"unsupported-{verb}", jf.path, line, f"{obj}.{verb}(...) is not resolved")
                )
                continue
            args = split_args(s, m.end() - 1)
            if len(args) < 2:
                continue
            raw = jf.literal(*args[0])
            if raw is None:
                jf.diagnostics.append(
                    Diagnostic("warning", "computed-route", jf.path, line, "route path is not a plain string literal; skipped")
                )
                continue
            handler_file, handler, region = _handler_of(jf, args[-1])
            if region is not None:
                jf.regions.append(region)
            markers = [n for span in args[1:-1] for n in _arg_names(jf, span) if n in auth]
            for at, name in router_wide.get((jf.path, obj), []):
                if at < m.start() and name not in markers:
                    markers.insert(0, name)
            if obj in jf.apps:
                targets = [("", ())]
            else:
                ms = mounts.get((jf.path, obj), [])
                if not ms:
                    jf.diagnostics.append(
                        Diagnostic("warning", "unmounted-router", jf.path, line, f"router {obj} is never mounted")
                    )
                targets = [(mt.prefix, mt.markers) for mt in ms] or [("", ())]
            for prefix, mount_markers in sorted(set(targets)):
                all_markers = tuple(dict.fromkeys([*mount_markers, *markers]))
                found.append(
                    EntryPoint(
                        ROUTE_VERBS[verb],
                        join_route(prefix, express_path(raw)),
                        handler,
                        jf.path,
                        line,
                        all_markers,
                        handler_file,
                    )
                )
    for jf in files.values():
        jf.regions.sort(key=lambda r: (r.start, r.inline))
    return found


def add_inline_symbols(jf: JsFile) -> None:
    """Record inline route handlers that are not nested inside a named function."""
    named = [r for r in jf.regions if not r.inline]
    for r in jf.regions:
        if r.inline and not any(n.body_start <= r.start < n.body_end for n in named):
            sym = FunctionSymbol(r.name, jf.line_of(r.start), jf.line_of(max(r.body_end - 1, r.start)), r.is_async)
            # A named function expression used as a handler is recorded once, under its handler name.
            jf.symbols.functions = [
                f for f in jf.symbols.functions if (f.start_line, f.end_line) != (sym.start_line, sym.end_line)
            ]
            jf.symbols.functions.append(sym)


def owner_of(jf: JsFile, offset: int) -> Region | None:
    """Inline route handlers own their calls; otherwise the enclosing named function does."""
    inline = [r for r in jf.regions if r.inline and r.body_start <= offset < r.body_end]
    if inline:
        return max(inline, key=lambda r: r.body_start)
    for r in jf.regions:
        if not r.inline and r.body_start <= offset < r.body_end:
            return r
    return None
