"""Python analysis by full syntactic parsing (stdlib ``ast``)."""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Iterator

from slsmigrate.facts.model import (
    HTTP_METHODS,
    CallEdge,
    ClassSymbol,
    Diagnostic,
    EntryPoint,
    FileSymbols,
    FunctionSymbol,
    ImportRecord,
)
from slsmigrate.facts.project import Project

ROUTE_SHORTCUTS = {"get": "GET", "post": "POST", "put": "PUT", "patch": "PATCH", "delete": "DELETE"}
_FLASK_PARAM = re.compile(r"<(?:[^:<>]+:)?([^<>]+)>")


@dataclass(frozen=True)
class ImportTarget:
    kind: str  # "module" | "symbol"
    file: str
    name: str | None = None


@dataclass
class PyFile:
    path: str
    tree: ast.Module
    imports: dict[str, ImportTarget] = field(default_factory=dict)
    symbols: FileSymbols = field(default_factory=FileSymbols)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def flask_path(path: str) -> str:
    return _FLASK_PARAM.sub(r"{\1}", path)


def join_route(prefix: str, path: str) -> str:
    segments = [s.strip("/") for s in (prefix, path) if s.strip("/")]
    return "/" + "/".join(segments)


def dotted_name(node: ast.expr) -> str | None:
    parts: list[str] = []
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if isinstance(node, ast.Name):
        parts.append(node.id)
        return ".".join(reversed(parts))
    return None


def _last_name(node: ast.expr) -> str | None:
    if isinstance(node, ast.Call):
        node = node.func
    if isinstance(node, ast.Attribute):
        return node.attr
    if isinstance(node, ast.Name):
        return node.id
    return None


def _str_const(node: ast.expr | None) -> str | None:
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        return node.value
    return None


def _kwarg(call: ast.Call, name: str) -> ast.expr | None:
    for kw in call.keywords:
        if kw.arg == name:
            return kw.value
    return None


# -- pass 1: parse + import map --------------------------------------------


def load_file(project: Project, path: str) -> PyFile | Diagnostic:
    text = project.text(path)
    if text is None:
        return Diagnostic("warning", "unreadable", path, None, "file is not UTF-8 text; skipped")
    try:
        tree = ast.parse(text, filename=path)
    except SyntaxError as exc:
        return Diagnostic("warning", "parse-error", path, exc.lineno, f"syntax error: {exc.msg}; file skipped")
    pf = PyFile(path, tree)
    _collect_imports(project, pf)
    _collect_symbols(pf)
    return pf


def _collect_imports(project: Project, pf: PyFile) -> None:
    for node in ast.walk(pf.tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                resolved = project.resolve_python_module(pf.path, alias.name)
                local = alias.asname or alias.name
                pf.symbols.imports.append(ImportRecord(local, alias.name, None, resolved))
                if resolved:
                    pf.imports[local] = ImportTarget("module", resolved)
                    if alias.asname is None and "." in alias.name:
                        head = alias.name.split(".")[0]
                        head_file = project.resolve_python_module(pf.path, head)
                        if head_file:
                            pf.imports.setdefault(head, ImportTarget("module", head_file))
                elif project.python_package_exists(alias.name) and "." in alias.name:
                    pf.diagnostics.append(
                        Diagnostic("warning", "unresolved-import", pf.path, node.lineno, f"cannot resolve import {alias.name}")
                    )
        elif isinstance(node, ast.ImportFrom):
            module = node.module or ""
            shown = "." * node.level + module
            base = project.resolve_python_module(pf.path, module, node.level) if (module or node.level) else None
            for alias in node.names:
                local = alias.asname or alias.name
                if alias.name == "*":
                    pf.symbols.imports.append(ImportRecord("*", shown, "*", base))
                    continue
                sub = project.resolve_python_module(
                    pf.path, f"{module}.{alias.name}" if module else alias.name, node.level
                )
                if sub is not None:
                    pf.imports[local] = ImportTarget("module", sub)
                    pf.symbols.imports.append(ImportRecord(local, shown, alias.name, sub))
                elif base is not None:
                    pf.imports[local] = ImportTarget("symbol", base, alias.name)
                    pf.symbols.imports.append(ImportRecord(local, shown, alias.name, base))
                else:
                    pf.symbols.imports.append(ImportRecord(local, shown, alias.name, None))
                    if node.level > 0 or (module and project.python_package_exists(module)):
                        pf.diagnostics.append(
                            Diagnostic(
                                "warning",
                                "unresolved-import",
                                pf.path,
                                node.lineno,
                                f"cannot resolve {alias.name} from {shown}",
                            )
                        )


def _collect_symbols(pf: PyFile) -> None:
    for node in pf.tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            pf.symbols.functions.append(
                FunctionSymbol(node.name, node.lineno, node.end_lineno or node.lineno, isinstance(node, ast.AsyncFunctionDef))
            )
        elif isinstance(node, ast.ClassDef):
            pf.symbols.classes.append(ClassSymbol(node.name, node.lineno, node.end_lineno or node.lineno))
            for item in node.body:
                if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    pf.symbols.functions.append(
                        FunctionSymbol(
                            f"{node.name}.{item.name}",
                            item.lineno,
                            item.end_lineno or item.lineno,
                            isinstance(item, ast.AsyncFunctionDef),
                        )
                    )


def _function_units(tree: ast.Module) -> Iterator[tuple[str, ast.AST]]:
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            yield node.name, node
        elif isinstance(node, ast.ClassDef):
            for item in node.body:
                if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    yield f"{node.name}.{item.name}", item


# -- pass 2: call edges ----------------------------------------------------


def resolve_callee(func: ast.expr, imports: dict[str, ImportTarget]) -> tuple[str, str] | None:
    if isinstance(func, ast.Name):
        target = imports.get(func.id)
        if target is not None and target.kind == "symbol":
            return target.file, target.name or func.id
        return None
    dotted = dotted_name(func)
    if dotted is None or "." not in dotted:
        return None
    parts = dotted.split(".")
    prefix, attr = ".".join(parts[:-1]), parts[-1]
    target = imports.get(prefix)
    if target is None:
        return None
    if target.kind == "module":
        return target.file, attr
    return target.file, f"{target.name}.{attr}"


def call_edges(pf: PyFile) -> list[CallEdge]:
    edges: list[CallEdge] = []
    for caller, fn in _function_units(pf.tree):
        parents: dict[ast.AST, ast.AST] = {}
        for node in ast.walk(fn):
            for child in ast.iter_child_nodes(node):
                parents[child] = node
        for node in ast.walk(fn):
            if not isinstance(node, ast.Call):
                continue
            callee = resolve_callee(node.func, pf.imports)
            if callee is None or callee[0] == pf.path:
                continue
            parent = parents.get(node)
            awaited = isinstance(parent, ast.Await) and parent.value is node
            holder = parents.get(parent) if awaited else parent
            bare = isinstance(holder, ast.Expr)
            edges.append(
                CallEdge(pf.path, caller, callee[0], callee[1], node.lineno, not bare, awaited)
            )
    return edges


# -- entry points ----------------------------------------------------------


@dataclass
class _RouteObject:
    kind: str  # "app" | "blueprint"
    prefix: str = ""
    line: int = 0


@dataclass
class _Registration:
    parent: tuple[str, str] | None
    child: tuple[str, str]
    prefix: str | None
    file: str
    line: int


def _object_ref(pf: PyFile, expr: ast.expr, objects: dict[tuple[str, str], _RouteObject]) -> tuple[str, str] | None:
    if isinstance(expr, ast.Name):
        if (pf.path, expr.id) in objects:
            return pf.path, expr.id
        target = pf.imports.get(expr.id)
        if target is not None and target.kind == "symbol":
            return target.file, target.name or expr.id
        return None
    if isinstance(expr, ast.Attribute) and isinstance(expr.value, ast.Name):
        target = pf.imports.get(expr.value.id)
        if target is not None and target.kind == "module":
            return target.file, expr.attr
    return None


def _scan_objects(pf: PyFile, objects: dict[tuple[str, str], _RouteObject]) -> None:
    for node in ast.walk(pf.tree):
        if not isinstance(node, ast.Assign) or not isinstance(node.value, ast.Call):
            continue
        ctor = _last_name(node.value.func)
        if ctor not in ("Flask", "Blueprint"):
            continue
        for target in node.targets:
            if isinstance(target, ast.Name):
                if ctor == "Flask":
                    objects[(pf.path, target.id)] = _RouteObject("app", "", node.lineno)
                else:
                    prefix = _str_const(_kwarg(node.value, "url_prefix")) or ""
                    objects[(pf.path, target.id)] = _RouteObject("blueprint", flask_path(prefix), node.lineno)


def _scan_registrations(pf: PyFile, objects: dict[tuple[str, str], _RouteObject]) -> list[_Registration]:
    regs: list[_Registration] = []
    for node in ast.walk(pf.tree):
        if not (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Attribute)
            and node.func.attr == "register_blueprint"
            and node.args
        ):
            continue
        child = _object_ref(pf, node.args[0], objects)
        if child is None:
            pf.diagnostics.append(
                Diagnostic("warning", "unresolved-blueprint", pf.path, node.lineno, "cannot resolve registered blueprint")
            )
            continue
        parent = _object_ref(pf, node.func.value, objects)
        prefix = _kwarg(node, "url_prefix")
        prefix_str = _str_const(prefix)
        if prefix is not None and prefix_str is None:
            pf.diagnostics.append(
                Diagnostic("warning", "computed-prefix", pf.path, node.lineno, "url_prefix is not a literal; ignored")
            )
        regs.append(_Registration(parent, child, None if prefix_str is None else flask_path(prefix_str), pf.path, node.lineno))
    return regs


def _effective_prefixes(
    ref: tuple[str, str],
    objects: dict[tuple[str, str], _RouteObject],
    regs: list[_Registration],
    depth: int = 0,
) -> list[str]:
    obj = objects[ref]
    if obj.kind == "app":
        return [""]
    mine = [r for r in regs if r.child == ref]
    if not mine or depth > 4:
        return [obj.prefix]
    out: list[str] = []
    for reg in mine:
        local = reg.prefix if reg.prefix is not None else obj.prefix
        parents = [""]
        if reg.parent is not None and reg.parent in objects and objects[reg.parent].kind == "blueprint":
            parents = _effective_prefixes(reg.parent, objects, regs, depth + 1)
        out.extend(join_route(p, local) if (p or local) else "" for p in parents)
    return sorted(set(out))


def _methods_of(call: ast.Call, verb: str, pf: PyFile) -> list[str]:
    if verb != "route":
        return [ROUTE_SHORTCUTS[verb]]
    node = _kwarg(call, "methods")
    if node is None:
        return ["GET"]
    if isinstance(node, (ast.List, ast.Tuple, ast.Set)):
        methods = [_str_const(e) for e in node.elts]
        if all(m is not None for m in methods):
            return [m.upper() for m in methods if m.upper() in HTTP_METHODS]  # type: ignore[union-attr]
    pf.diagnostics.append(
        Diagnostic("warning", "computed-methods", pf.path, call.lineno, "methods= is not a literal list; assuming GET")
    )
    return ["GET"]


def entry_points(
    files: list[PyFile], auth_decorators: frozenset[str]
) -> list[EntryPoint]:
    objects: dict[tuple[str, str], _RouteObject] = {}
    for pf in files:
        _scan_objects(pf, objects)
    regs: list[_Registration] = []
    for pf in files:
        regs.extend(_scan_registrations(pf, objects))

    found: list[EntryPoint] = []
    for pf in files:
        for node in ast.walk(pf.tree):
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                found.extend(_decorated_routes(pf, node, objects, regs, auth_decorators))
            elif (
                isinstance(node, ast.Call)
                and isinstance(node.func, ast.Attribute)
                and node.func.attr == "add_url_rule"
            ):
                found.extend(_url_rule_routes(pf, node, objects, regs))
    return found


def _auth_markers(fn: ast.FunctionDef | ast.AsyncFunctionDef, auth_decorators: frozenset[str]) -> tuple[str, ...]:
    markers: list[str] = []
    for dec in fn.decorator_list:
        name = _last_name(dec)
        if name in auth_decorators and name not in markers:
            markers.append(name)
    return tuple(markers)


def _decorated_routes(
    pf: PyFile,
    fn: ast.FunctionDef | ast.AsyncFunctionDef,
    objects: dict[tuple[str, str], _RouteObject],
    regs: list[_Registration],
    auth_decorators: frozenset[str],
) -> list[EntryPoint]:
    out: list[EntryPoint] = []
    markers = _auth_markers(fn, auth_decorators)
    for dec in fn.decorator_list:
        if not (isinstance(dec, ast.Call) and isinstance(dec.func, ast.Attribute)):
            continue
        verb = dec.func.attr
        if verb != "route" and verb not in ROUTE_SHORTCUTS:
            continue
        ref = _object_ref(pf, dec.func.value, objects)
        if ref is None or ref not in objects:
            continue
        raw = _str_const(dec.args[0]) if dec.args else _str_const(_kwarg(dec, "rule"))
        if raw is None:
            pf.diagnostics.append(
                Diagnostic("warning", "computed-route", pf.path, dec.lineno, "route path is not a string literal; skipped")
            )
            continue
        for prefix in _effective_prefixes(ref, objects, regs):
            path = join_route(prefix, flask_path(raw))
            for method in _methods_of(dec, verb, pf):
                out.append(EntryPoint(method, path, fn.name, pf.path, dec.lineno, markers, pf.path))
    return out


def _url_rule_routes(
    pf: PyFile,
    call: ast.Call,
    objects: dict[tuple[str, str], _RouteObject],
    regs: list[_Registration],
) -> list[EntryPoint]:
    ref = _object_ref(pf, call.func.value, objects)  # type: ignore[attr-defined]
    if ref is None or ref not in objects:
        return []
    raw = _str_const(call.args[0]) if call.args else _str_const(_kwarg(call, "rule"))
    view = _kwarg(call, "view_func") or (call.args[2] if len(call.args) > 2 else None)
    if raw is None or view is None:
        pf.diagnostics.append(
            Diagnostic("warning", "computed-route", pf.path, call.lineno, "add_url_rule without literal rule/view_func")
        )
        return []
    handler_file, handler = pf.path, dotted_name(view) or "<unknown>"
    if isinstance(view, ast.Name) and view.id in pf.imports and pf.imports[view.id].kind == "symbol":
        target = pf.imports[view.id]
        handler_file, handler = target.file, target.name or view.id
    elif isinstance(view, ast.Attribute) and isinstance(view.value, ast.Name):
        target = pf.imports.get(view.value.id)
        if target is not None and target.kind == "module":
            handler_file, handler = target.file, view.attr
    out = []
    for prefix in _effective_prefixes(ref, objects, regs):
        path = join_route(prefix, flask_path(raw))
        for method in _methods_of(call, "route", pf):
            out.append(EntryPoint(method, path, handler, pf.path, call.lineno, (), handler_file))
    return out
