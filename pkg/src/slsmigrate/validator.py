"""Cross-artifact consistency checks over (blueprint, template, handler code).

Eleven checks in five phases. Every failing check is fatal; findings whose
repair is derivable from the finding alone carry a ``mechanical_fix`` that
:func:`apply_fixes` applies in one batch before a single re-validation.
"""

from __future__ import annotations

import ast
import json
import re
import shutil
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from slsmigrate import canonical
from slsmigrate.facts.javascript import mask
from slsmigrate.findings import FATAL, WARNING, Finding, deepest_pointer, pointer
from slsmigrate.planner import (
    BLUEPRINT_NAME,
    EVENT_BUS_ENV,
    Blueprint,
    LambdaSpec,
    function_logical_id,
    load_blueprint,
)
from slsmigrate.sam.lint import reserved_env_vars
from slsmigrate.sam.model import Resource, Template, TemplateError, lift_intrinsics, parse_template, serialize_template
from slsmigrate.sam.yamlio import GetAtt, Opaque, Ref, Sub
from slsmigrate.sdk import (
    NODE_BUILTIN_MODULES,
    PYTHON_BUILTIN_PACKAGES,
    SDK_PACKAGE_VERSION,
    env_reads,
    sdk_calls,
)
from slsmigrate.synth import LAYER_ID, LAYER_MODULE, TEMPLATE_NAME, env_bindings, layer_subdir, rule_target_permission_id
from slsmigrate.tools import write_file

REPORT_NAME = "validation_report.json"
CHECKS = ("C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11")
PRECHECK = "C0"
PHASES = {
    "A": ("C0", "C1", "C2"),
    "B": ("C3", "C4", "C5", "C6"),
    "C": ("C7", "C8"),
    "D": ("C9", "C10"),
    "E": ("C11",),
}
PHASE_OF = {check: phase for phase, checks in PHASES.items() for check in checks}
# SDK families whose policy alignment C5 owns; sqs and events belong to C9/C10.
C5_FAMILIES = ("dynamodb", "s3", "lambda")
EVENTS_PRINCIPAL = "events.amazonaws.com"
_PY_LAYER_IMPORT = re.compile(rf"^\s*(?:from\s+{LAYER_MODULE}\s+import|import\s+{LAYER_MODULE}\b)", re.M)
_JS_LAYER_IMPORT = re.compile(rf"""require\(\s*['"]/opt/nodejs/{LAYER_MODULE}(?:\.js)?['"]\s*\)""")
_JS_REQUIRE = re.compile(r"""\brequire\(\s*['"]([^'"]+)['"]\s*\)""")
_JS_ESM = re.compile(r"^[ \t]*(?:import\s*(?:[\w*{][^;\n]*\bfrom\b|['\"(])|export\s+(?:default\b|const\b|function\b|async\b|class\b|let\b|var\b|\{))", re.M)


# -- report ----------------------------------------------------------------


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)
    checks_run: list[str] = field(default_factory=lambda: list(CHECKS))
    fix_round: int = 0

    @property
    def status(self) -> str:
        return "fail" if any(f.fatal for f in self.findings) else "pass"

    def by_phase(self) -> dict[str, list[Finding]]:
        out: dict[str, list[Finding]] = {phase: [] for phase in PHASES}
        for f in self.findings:
            out[PHASE_OF.get(f.check_id, "A")].append(f)
        return out

    def checks_failed(self) -> list[str]:
        ids = {f.check_id for f in self.findings}
        return [c for c in (PRECHECK, *CHECKS) if c in ids]

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "checks_run": list(self.checks_run),
            "fix_round": self.fix_round,
            "findings": {phase: [f.to_dict() for f in fs] for phase, fs in self.by_phase().items()},
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ValidationReport:
        findings = [Finding.from_dict(f) for phase in PHASES for f in d.get("findings", {}).get(phase, [])]
        return cls(sorted(findings, key=Finding.sort_key), list(d.get("checks_run", CHECKS)), int(d.get("fix_round", 0)))

    def summary(self) -> str:
        lines = [f"status: {self.status}  findings: {len(self.findings)}  fix_round: {self.fix_round}"]
        for f in self.findings:
            where = f"{f.artifact}{f.pointer}" if f.pointer.startswith(("/", "#")) else f.artifact
            lines.append(f"  [{f.check_id}] {f.severity:7} {where}: {f.message}")
            if f.fix_hint:
                lines.append(f"        hint: {f.fix_hint}")
        return "\n".join(lines)


def write_report(report: ValidationReport, out_dir: str | Path) -> Path:
    path = Path(out_dir) / REPORT_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(canonical.dump_bytes(report.to_dict()))
    return path


# -- intrinsic encoding for mechanical fixes -------------------------------


def to_json_form(node: Any) -> Any:
    """Long-form (``{"Ref": x}``) encoding so fixes serialize as plain JSON."""
    if isinstance(node, Ref):
        return {"Ref": node.target}
    if isinstance(node, GetAtt):
        return {"Fn::GetAtt": [node.resource, node.attribute]}
    if isinstance(node, Sub):
        return {"Fn::Sub": [node.template, to_json_form(node.variables)] if node.variables else node.template}
    if isinstance(node, Opaque):
        return {node.tag: to_json_form(node.value)}
    if isinstance(node, dict):
        return {k: to_json_form(v) for k, v in node.items()}
    if isinstance(node, list):
        return [to_json_form(v) for v in node]
    return node


# -- workspace -------------------------------------------------------------


@dataclass
class Workspace:
    root: Path
    blueprint: Blueprint
    template: Template
    reserved: frozenset[str]

    @property
    def doc(self) -> dict[str, Any]:
        return self.template.to_document()

    def spec_for(self, logical_id: str) -> LambdaSpec | None:
        for s in self.blueprint.lambda_functions:
            if s.logical_id == logical_id:
                return s
        return None

    def code_dir(self, props: dict[str, Any]) -> Path | None:
        uri = props.get("CodeUri")
        if not isinstance(uri, str) or not uri.strip("/"):
            return None
        path = (self.root / uri.strip("/")).resolve()
        if not path.is_dir() or not path.is_relative_to(self.root.resolve()):
            return None
        return path

    def rel(self, path: Path) -> str:
        return path.resolve().relative_to(self.root.resolve()).as_posix()


def _language(runtime: Any) -> str:
    return "python" if isinstance(runtime, str) and runtime.startswith("python") else "nodejs"


def _sources(code_dir: Path, language: str) -> dict[Path, str]:
    exts = (".py",) if language == "python" else (".js", ".cjs", ".mjs")
    out: dict[Path, str] = {}
    for path in sorted(code_dir.rglob("*")):
        if path.is_file() and path.suffix in exts and "node_modules" not in path.parts:
            out[path] = path.read_text("utf-8", errors="replace")
    return out


def _env(props: dict[str, Any]) -> dict[str, Any]:
    env = props.get("Environment")
    variables = env.get("Variables") if isinstance(env, dict) else None
    return variables if isinstance(variables, dict) else {}


def _policies(props: dict[str, Any], name: str) -> list[dict[str, Any]]:
    out = []
    for entry in props.get("Policies") or []:
        if isinstance(entry, dict) and name in entry:
            out.append(entry[name] if isinstance(entry[name], dict) else {})
        elif entry == name:
            out.append({})
    return out


def _events(props: dict[str, Any]) -> dict[str, dict[str, Any]]:
    events = props.get("Events")
    if not isinstance(events, dict):
        return {}
    return {k: v for k, v in events.items() if isinstance(v, dict)}


def _fn(ws: Workspace, *tokens: object) -> str:
    return deepest_pointer(ws.doc, "Resources", *tokens)


class _Collector:
    def __init__(self, ws: Workspace) -> None:
        self.ws = ws
        self.findings: list[Finding] = []

    def add(
        self,
        check: str,
        artifact: str,
        ptr: str,
        message: str,
        fix: dict[str, Any] | None = None,
        hint: str | None = None,
        severity: str = FATAL,
    ) -> None:
        self.findings.append(Finding(check, severity, artifact, ptr, message, fix, hint))


# -- phase A ---------------------------------------------------------------


def _check_c1(ws: Workspace, out: _Collector) -> None:
    names = [s.name for s in ws.blueprint.lambda_functions]
    fn_ids = {r.logical_id for r in ws.template.functions()}
    lambdas = ws.root / "lambdas"
    dirs = {p.name for p in lambdas.iterdir() if p.is_dir()} if lambdas.is_dir() else set()
    for i, name in enumerate(names):
        lid = function_logical_id(name)
        if lid not in fn_ids:
            out.add("C1", BLUEPRINT_NAME, pointer("lambda_functions", i), f"Lambda {name} has no Function {lid} in the template",
                    hint=f"declare AWS::Serverless::Function {lid}")
        if name not in dirs:
            out.add("C1", BLUEPRINT_NAME, pointer("lambda_functions", i), f"Lambda {name} has no code directory lambdas/{name}/",
                    hint=f"create lambdas/{name}/ with its handler")
    expected = {function_logical_id(n) for n in names}
    for lid in sorted(fn_ids - expected):
        out.add("C1", TEMPLATE_NAME, pointer("Resources", lid), f"Function {lid} has no Lambda in the blueprint",
                hint="remove the Function or add it to the blueprint")
    for d in sorted(dirs - set(names)):
        out.add("C1", f"lambdas/{d}", "", f"code directory lambdas/{d}/ belongs to no blueprint Lambda",
                hint="delete the directory or add the Lambda to the blueprint")


def _check_c2(ws: Workspace, out: _Collector) -> None:
    for fn in ws.template.functions():
        uri = fn.properties.get("CodeUri")
        if ws.code_dir(fn.properties) is None:
            spec = ws.spec_for(fn.logical_id)
            hint = f"point CodeUri at lambdas/{spec.name}/" if spec else "point CodeUri at an existing directory"
            out.add("C2", TEMPLATE_NAME, _fn(ws, fn.logical_id, "Properties", "CodeUri"),
                    f"Function {fn.logical_id} CodeUri {uri!r} is not an existing directory in the workspace", hint=hint)


# -- phase B ---------------------------------------------------------------


def _python_defines(source: str, name: str) -> bool:
    tree = ast.parse(source)
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)) and node.name == name:
            return True
        if isinstance(node, ast.Assign) and any(isinstance(t, ast.Name) and t.id == name for t in node.targets):
            return True
    return False


def _node_exports(source: str, name: str) -> bool:
    n = re.escape(name)
    patterns = (
        rf"\b(?:module\.)?exports\.{n}\s*=",
        rf"\bmodule\.exports\s*=\s*\{{[^}}]*\b{n}\b",
    )
    return any(re.search(p, source) for p in patterns)


def _check_c3(ws: Workspace, out: _Collector) -> None:
    for fn in ws.template.functions():
        code = ws.code_dir(fn.properties)
        handler = fn.properties.get("Handler")
        if code is None or not isinstance(handler, str):
            continue
        ptr = _fn(ws, fn.logical_id, "Properties", "Handler")
        module, _, func = handler.rpartition(".")
        if not module or not func:
            out.add("C3", TEMPLATE_NAME, ptr, f"Function {fn.logical_id} Handler {handler!r} is not <module>.<function>")
            continue
        language = _language(fn.properties.get("Runtime"))
        exts = (".py",) if language == "python" else (".js", ".cjs", ".mjs")
        candidates = [code / (module.replace(".", "/") + ext) for ext in exts]
        path = next((p for p in candidates if p.is_file()), None)
        if path is None:
            out.add("C3", TEMPLATE_NAME, ptr, f"Function {fn.logical_id} Handler module {module} has no source file in {ws.rel(code)}/",
                    hint=f"create {module}{exts[0]} or correct Handler")
            continue
        source = path.read_text("utf-8", errors="replace")
        try:
            defined = _python_defines(source, func) if language == "python" else _node_exports(source, func)
        except SyntaxError as exc:
            out.add("C3", ws.rel(path), f"#L{exc.lineno or 1}", f"handler source does not parse: {exc.msg}")
            continue
        if not defined:
            out.add("C3", TEMPLATE_NAME, ptr, f"Function {fn.logical_id} Handler {handler} names {func}, which {ws.rel(path)} does not define",
                    hint=f"rename the function in {ws.rel(path)} or update Handler")


def _check_c4(ws: Workspace, out: _Collector) -> None:
    bindings = env_bindings(ws.blueprint)
    gfunc = ws.template.globals.get("Function") if isinstance(ws.template.globals.get("Function"), dict) else {}
    global_env = set(_env(gfunc))
    for fn in ws.template.functions():
        needed: set[str] = set()
        spec = ws.spec_for(fn.logical_id)
        if spec:
            needed.update(spec.env_vars)
        code = ws.code_dir(fn.properties)
        if code is not None:
            language = _language(fn.properties.get("Runtime"))
            for source in _sources(code, language).values():
                needed.update(env_reads(source, language))
        declared = set(_env(fn.properties)) | global_env
        for var in sorted(needed - declared - ws.reserved):
            ptr = _fn(ws, fn.logical_id, "Properties", "Environment", "Variables")
            msg = f"Function {fn.logical_id} reads {var} but the template does not set it"
            if var in bindings.values:
                fix = {"op": "set_env", "resource": fn.logical_id, "name": var, "value": to_json_form(bindings.values[var])}
                out.add("C4", TEMPLATE_NAME, ptr, msg, fix=fix)
            else:
                out.add("C4", TEMPLATE_NAME, ptr, msg, hint=f"declare {var} under Environment.Variables")


def _policy_fix(lid: str, policy: dict[str, Any]) -> dict[str, Any]:
    return {"op": "add_policy", "resource": lid, "policy": to_json_form(policy)}


def _check_c5(ws: Workspace, out: _Collector) -> None:
    for fn in ws.template.functions():
        code = ws.code_dir(fn.properties)
        if code is None:
            continue
        language = _language(fn.properties.get("Runtime"))
        env = _env(fn.properties)
        seen: set[tuple[str, str]] = set()
        for path, source in _sources(code, language).items():
            for call in sdk_calls(source, language):
                if call.family not in C5_FAMILIES or call.env_var not in env or call.policy_key is None:
                    continue
                target = env[call.env_var]
                granted = [p.get(call.policy_key) for p in _policies(fn.properties, call.policy)]
                if target in granted or (call.policy, call.env_var) in seen:
                    continue
                seen.add((call.policy, call.env_var))
                policy = {call.policy: {call.policy_key: target}}
                out.add("C5", TEMPLATE_NAME, _fn(ws, fn.logical_id, "Properties"),
                        f"Function {fn.logical_id} calls {call.family} on {call.env_var} ({ws.rel(path)}:{call.line}) without {call.policy}",
                        fix=_policy_fix(fn.logical_id, policy))


def _layer_files(ws: Workspace) -> set[str]:
    res = ws.template.resources.get(LAYER_ID)
    uri = res.properties.get("ContentUri") if res else None
    if not isinstance(uri, str):
        return set()
    base = ws.root / uri.strip("/") / layer_subdir(ws.blueprint.runtime)
    return {p.stem for p in base.glob("*") if p.suffix in (".py", ".js")} if base.is_dir() else set()


def _check_c6(ws: Workspace, out: _Collector) -> None:
    layer = ws.template.resources.get(LAYER_ID)
    wants_layer = ws.blueprint.uses_layer
    if layer is None or layer.type != "AWS::Serverless::LayerVersion":
        if wants_layer:
            out.add("C6", TEMPLATE_NAME, pointer("Resources"), f"blueprint uses the shared layer but no {LAYER_ID} LayerVersion exists",
                    hint=f"declare AWS::Serverless::LayerVersion {LAYER_ID}")
    else:
        uri = layer.properties.get("ContentUri")
        base = ws.root / uri.strip("/") if isinstance(uri, str) else None
        ptr = _fn(ws, LAYER_ID, "Properties", "ContentUri")
        if base is None or not base.is_dir():
            out.add("C6", TEMPLATE_NAME, ptr, f"{LAYER_ID} ContentUri {uri!r} is not an existing directory",
                    hint="create the layer directory")
        else:
            sub = layer_subdir(ws.blueprint.runtime)
            stray = sorted(p.name for p in base.iterdir() if p.is_file() and p.suffix in (".py", ".js"))
            if stray:
                out.add("C6", TEMPLATE_NAME, ptr,
                        f"{LAYER_ID} files {', '.join(stray)} sit at the layer root instead of {sub}/",
                        fix={"op": "nest_layer", "dir": ws.rel(base), "subdir": sub, "files": stray})
            elif not (base / sub).is_dir():
                out.add("C6", TEMPLATE_NAME, ptr, f"{LAYER_ID} has no {sub}/ directory", hint=f"place layer modules under {sub}/")
    for fn in ws.template.functions():
        spec = ws.spec_for(fn.logical_id)
        layers = fn.properties.get("Layers") or []
        has = Ref(LAYER_ID) in layers
        code = ws.code_dir(fn.properties)
        language = _language(fn.properties.get("Runtime"))
        pattern = _PY_LAYER_IMPORT if language == "python" else _JS_LAYER_IMPORT
        imports = code is not None and any(pattern.search(s) for s in _sources(code, language).values())
        wants = bool(spec and spec.uses_shared_layer) or imports
        ptr = _fn(ws, fn.logical_id, "Properties", "Layers")
        if wants and not has:
            why = "imports shared_utils" if imports else "is marked uses_shared_layer"
            out.add("C6", TEMPLATE_NAME, ptr, f"Function {fn.logical_id} {why} but does not reference {LAYER_ID}",
                    fix={"op": "add_layer", "resource": fn.logical_id, "layer": LAYER_ID})
        elif has and not wants:
            out.add("C6", TEMPLATE_NAME, ptr, f"Function {fn.logical_id} references {LAYER_ID} but neither its blueprint entry nor its code uses it",
                    fix={"op": "remove_layer", "resource": fn.logical_id, "layer": LAYER_ID})


# -- phase C ---------------------------------------------------------------


def _api_events(props: dict[str, Any]) -> dict[str, dict[str, Any]]:
    return {k: v for k, v in _events(props).items() if v.get("Type") == "Api"}


def _check_c7(ws: Workspace, out: _Collector) -> None:
    for fn in ws.template.functions():
        spec = ws.spec_for(fn.logical_id)
        if spec is None:
            continue
        events = _api_events(fn.properties)
        actual = {
            name: (str((ev.get("Properties") or {}).get("Method", "")).upper(), (ev.get("Properties") or {}).get("Path"))
            for name, ev in events.items()
        }
        if spec.is_http:
            want = ((spec.method or "").upper(), spec.path)
            hint = f"route Function {fn.logical_id} as {want[0]} {want[1]}"
            if not actual:
                out.add("C7", TEMPLATE_NAME, _fn(ws, fn.logical_id, "Properties", "Events"),
                        f"Function {fn.logical_id} has no Api event for {want[0]} {want[1]}", hint=hint)
            for name, route in sorted(actual.items()):
                if route != want:
                    out.add("C7", TEMPLATE_NAME, _fn(ws, fn.logical_id, "Properties", "Events", name, "Properties", "Path"),
                            f"Function {fn.logical_id} routes {route[0]} {route[1]} but the blueprint expects {want[0]} {want[1]}",
                            hint=hint)
        else:
            for name in sorted(actual):
                out.add("C7", TEMPLATE_NAME, _fn(ws, fn.logical_id, "Properties", "Events", name),
                        f"Function {fn.logical_id} is a {spec.trigger} consumer but exposes an Api event",
                        hint="remove the Api event")


def _api_auth(ws: Workspace, event_props: dict[str, Any]) -> tuple[str | None, list[str]]:
    api_ref = event_props.get("RestApiId")
    api = ws.template.resources.get(api_ref.target) if isinstance(api_ref, Ref) else None
    auth = api.properties.get("Auth") if api else None
    if not isinstance(auth, dict):
        return None, []
    declared = sorted((auth.get("Authorizers") or {}).keys()) if isinstance(auth.get("Authorizers"), dict) else []
    default = auth.get("DefaultAuthorizer")
    return (default if isinstance(default, str) and default != "NONE" else None), declared


def _check_c8(ws: Workspace, out: _Collector) -> None:
    for fn in ws.template.functions():
        spec = ws.spec_for(fn.logical_id)
        if spec is None or not spec.is_http:
            continue
        for name, ev in sorted(_api_events(fn.properties).items()):
            props = ev.get("Properties") or {}
            default, declared = _api_auth(ws, props)
            own = (props.get("Auth") or {}).get("Authorizer") if isinstance(props.get("Auth"), dict) else None
            effective = own if own is not None else default
            ptr = _fn(ws, fn.logical_id, "Properties", "Events", name, "Properties", "Auth", "Authorizer")
            if spec.auth == "none" and default and effective != "NONE":
                out.add("C8", TEMPLATE_NAME, ptr,
                        f"public endpoint {spec.method} {spec.path} inherits default authorizer {default} without an Authorizer: NONE override",
                        fix={"op": "set_event_auth", "resource": fn.logical_id, "event": name, "authorizer": "NONE"})
            elif spec.auth == "required" and effective in (None, "NONE"):
                msg = f"protected endpoint {spec.method} {spec.path} has no authorizer attached"
                if declared:
                    fix = {"op": "set_event_auth", "resource": fn.logical_id, "event": name, "authorizer": declared[0]}
                    out.add("C8", TEMPLATE_NAME, ptr, msg, fix=fix)
                else:
                    out.add("C8", TEMPLATE_NAME, ptr, msg, hint="declare a Cognito authorizer on the Api")


# -- phase D ---------------------------------------------------------------


def _code_targets(ws: Workspace, fn_props: dict[str, Any], family: str) -> list[Any]:
    code = ws.code_dir(fn_props)
    if code is None:
        return []
    language = _language(fn_props.get("Runtime"))
    env = _env(fn_props)
    found = []
    for source in _sources(code, language).values():
        for call in sdk_calls(source, language):
            if call.family == family:
                found.append(env.get(call.env_var) if call.env_var else True)
    return found


def _check_c9(ws: Workspace, out: _Collector) -> None:
    resources = ws.template.resources
    pairs: dict[tuple[str, str], str] = {}  # (function id, queue id) -> queue env var
    for q in ws.blueprint.sqs_queues:
        qid = q["logical_id"]
        if qid not in resources or resources[qid].type != "AWS::SQS::Queue":
            out.add("C9", TEMPLATE_NAME, pointer("Resources"), f"blueprint queue {q['name']} has no AWS::SQS::Queue {qid}",
                    hint=f"declare AWS::SQS::Queue {qid}")
            continue
        for producer in q.get("producers", []):
            pairs[(function_logical_id(producer), qid)] = q["env_var"]
        consumer = function_logical_id(q["consumer"])
        fn = resources.get(consumer)
        if fn is None:
            continue
        arns = [(ev.get("Properties") or {}).get("Queue") for ev in _events(fn.properties).values() if ev.get("Type") == "SQS"]
        if GetAtt(qid, "Arn") not in arns:
            out.add("C9", TEMPLATE_NAME, _fn(ws, consumer, "Properties", "Events"),
                    f"consumer Function {consumer} has no SQS event source for queue {qid}",
                    fix={"op": "add_event", "resource": consumer, "event": "Queue",
                         "body": to_json_form({"Type": "SQS", "Properties": {"Queue": GetAtt(qid, "Arn"), "BatchSize": 10}})})
    for fn in ws.template.functions():
        for target in _code_targets(ws, fn.properties, "sqs"):
            if isinstance(target, Ref) and target.target in resources:
                pairs.setdefault((fn.logical_id, target.target), "")
    for (lid, qid), env_var in sorted(pairs.items()):
        fn = resources.get(lid)
        if fn is None:
            continue
        if env_var and _env(fn.properties).get(env_var) != Ref(qid):
            out.add("C9", TEMPLATE_NAME, _fn(ws, lid, "Properties", "Environment", "Variables"),
                    f"producer Function {lid} lacks {env_var}: !Ref {qid}",
                    fix={"op": "set_env", "resource": lid, "name": env_var, "value": {"Ref": qid}})
        granted = [p.get("QueueName") for p in _policies(fn.properties, "SQSSendMessagePolicy")]
        if GetAtt(qid, "QueueName") not in granted and Ref(qid) not in granted:
            out.add("C9", TEMPLATE_NAME, _fn(ws, lid, "Properties", "Policies"),
                    f"producer Function {lid} sends to {qid} without SQSSendMessagePolicy",
                    fix=_policy_fix(lid, {"SQSSendMessagePolicy": {"QueueName": GetAtt(qid, "QueueName")}}))


def _permission_for(ws: Workspace, fn_id: str, rule_id: str) -> bool:
    for res in ws.template.of_kind("Permission"):
        p = res.properties
        if (
            p.get("FunctionName") in (Ref(fn_id), GetAtt(fn_id, "Arn"))
            and p.get("SourceArn") == GetAtt(rule_id, "Arn")
            and p.get("Principal") == EVENTS_PRINCIPAL
        ):
            return True
    return False


def _check_c10(ws: Workspace, out: _Collector) -> None:
    resources = ws.template.resources
    producers: set[str] = set()
    for r in ws.blueprint.eventbridge_rules:
        rid = r["logical_id"]
        producers.update(function_logical_id(p) for p in r.get("producers", []))
        rule = resources.get(rid)
        if rule is None or rule.type != "AWS::Events::Rule":
            out.add("C10", TEMPLATE_NAME, pointer("Resources"), f"blueprint rule {r['name']} has no AWS::Events::Rule {rid}",
                    hint=f"declare AWS::Events::Rule {rid}")
            continue
        targets = rule.properties.get("Targets") or []
        wired = {t.get("Arn").resource for t in targets if isinstance(t, dict) and isinstance(t.get("Arn"), GetAtt)}
        for name in r["targets"]:
            fid = function_logical_id(name)
            if fid not in resources:
                continue
            if fid not in wired:
                out.add("C10", TEMPLATE_NAME, _fn(ws, rid, "Properties", "Targets"),
                        f"rule {rid} does not target Function {fid}",
                        fix={"op": "add_rule_target", "resource": rid, "target": to_json_form({"Arn": GetAtt(fid, "Arn"), "Id": fid})})
            if not _permission_for(ws, fid, rid):
                perm_id = rule_target_permission_id(name)
                while perm_id in resources:
                    perm_id += "X"
                body = {
                    "Type": "AWS::Lambda::Permission",
                    "Properties": {
                        "Action": "lambda:InvokeFunction",
                        "FunctionName": Ref(fid),
                        "Principal": EVENTS_PRINCIPAL,
                        "SourceArn": GetAtt(rid, "Arn"),
                    },
                }
                out.add("C10", TEMPLATE_NAME, _fn(ws, rid),
                        f"rule {rid} target {fid} has no Lambda Permission for {EVENTS_PRINCIPAL}",
                        fix={"op": "add_resource", "logical_id": perm_id, "body": to_json_form(body)})
    for fn in ws.template.functions():
        if _code_targets(ws, fn.properties, "events"):
            producers.add(fn.logical_id)
    for lid in sorted(producers):
        fn = resources.get(lid)
        if fn is None:
            continue
        if not _policies(fn.properties, "EventBridgePutEventsPolicy"):
            out.add("C10", TEMPLATE_NAME, _fn(ws, lid, "Properties", "Policies"),
                    f"producer Function {lid} puts events without EventBridgePutEventsPolicy",
                    fix=_policy_fix(lid, {"EventBridgePutEventsPolicy": {"EventBusName": "default"}}))
        if EVENT_BUS_ENV not in _env(fn.properties):
            out.add("C10", TEMPLATE_NAME, _fn(ws, lid, "Properties", "Environment", "Variables"),
                    f"producer Function {lid} lacks {EVENT_BUS_ENV}",
                    fix={"op": "set_env", "resource": lid, "name": EVENT_BUS_ENV, "value": "default"})


# -- phase E ---------------------------------------------------------------


def _normalize_package(name: str) -> str:
    return re.sub(r"[-_.]+", "_", name).lower()


def _requirements(text: str) -> list[tuple[int, str]]:
    out = []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("-"):
            continue
        name = re.split(r"[\s<>=!~\[;@]", line, maxsplit=1)[0]
        if name:
            out.append((i, name))
    return out


def _python_imports(source: str) -> set[str]:
    try:
        tree = ast.parse(source)
    except SyntaxError:
        return set()
    names: set[str] = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            names.update(a.name.split(".")[0] for a in node.names)
        elif isinstance(node, ast.ImportFrom) and node.level == 0 and node.module:
            names.add(node.module.split(".")[0])
    return names


def _js_package(spec: str) -> str | None:
    if spec.startswith((".", "/", "node:")):
        return None
    parts = spec.split("/")
    name = "/".join(parts[:2]) if spec.startswith("@") else parts[0]
    return None if name in NODE_BUILTIN_MODULES else name


def _check_c11_python(ws: Workspace, code: Path, out: _Collector) -> None:
    req = code / "requirements.txt"
    declared: set[str] = set()
    rel_req = ws.rel(code) + "/requirements.txt"
    if req.is_file():
        entries = _requirements(req.read_text("utf-8", errors="replace"))
        builtins = {_normalize_package(b) for b in PYTHON_BUILTIN_PACKAGES}
        bundled = [(line, name) for line, name in entries if _normalize_package(name) in builtins]
        for line, name in bundled:
            out.add("C11", rel_req, f"#L{line}", f"{name} is bundled with the Lambda runtime and must not be listed",
                    fix={"op": "strip_requirements", "path": rel_req, "names": [n for _, n in bundled]})
        if not entries:
            out.add("C11", rel_req, "", "requirements.txt declares no dependencies", severity=WARNING,
                    fix={"op": "delete_file", "path": rel_req})
        declared = {_normalize_package(n) for _, n in entries}
    local = {p.stem for p in code.rglob("*.py")} | {p.name for p in code.iterdir() if p.is_dir()}
    allowed = set(sys.stdlib_module_names) | {_normalize_package(b) for b in PYTHON_BUILTIN_PACKAGES} | local | _layer_files(ws)
    for path, source in _sources(code, "python").items():
        for name in sorted(_python_imports(source)):
            if name in allowed or _normalize_package(name) in declared:
                continue
            out.add("C11", ws.rel(path), "", f"imports {name}, which is neither bundled nor declared in requirements.txt",
                    fix={"op": "add_requirement", "path": rel_req, "name": name})


def _check_c11_node(ws: Workspace, code: Path, out: _Collector) -> None:
    manifest_path = code / "package.json"
    rel_manifest = ws.rel(code) + "/package.json"
    deps: dict[str, Any] = {}
    if manifest_path.is_file():
        try:
            manifest = json.loads(manifest_path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            out.add("C11", rel_manifest, "", f"package.json is not valid JSON: {exc.msg}")
            manifest = {}
        if not isinstance(manifest, dict):
            manifest = {}
        deps = manifest.get("dependencies") if isinstance(manifest.get("dependencies"), dict) else {}
        if manifest.get("type") == "module":
            out.add("C11", rel_manifest, pointer("type"), "package.json sets type=module; handlers must be CommonJS",
                    fix={"op": "drop_json_key", "path": rel_manifest, "key": "type"})
        if not deps:
            out.add("C11", rel_manifest, "", "package.json declares no dependencies", severity=WARNING,
                    fix={"op": "delete_file", "path": rel_manifest})
    for path, source in _sources(code, "nodejs").items():
        if path.suffix == ".mjs":
            out.add("C11", ws.rel(path), "", "ES module file; handlers must be CommonJS", hint="rename to .js and use require")
        m = _JS_ESM.search(mask(source))
        if m:
            line = source.count("\n", 0, m.start()) + 1
            out.add("C11", ws.rel(path), f"#L{line}", "ES module syntax; handlers must use CommonJS require/exports",
                    hint="rewrite import/export as require/module.exports")
        for spec in sorted(set(_JS_REQUIRE.findall(source))):
            pkg = _js_package(spec)
            if pkg and pkg not in deps:
                version = SDK_PACKAGE_VERSION if pkg.startswith("@aws-sdk/") else "*"
                out.add("C11", ws.rel(path), "", f"requires {pkg}, which package.json does not declare",
                        fix={"op": "add_dependency", "path": rel_manifest, "name": pkg, "version": version})


def _check_c11(ws: Workspace, out: _Collector) -> None:
    for fn in ws.template.functions():
        code = ws.code_dir(fn.properties)
        if code is None:
            continue
        if _language(fn.properties.get("Runtime")) == "python":
            _check_c11_python(ws, code, out)
        else:
            _check_c11_node(ws, code, out)


_CHECK_FUNCS = (
    _check_c1, _check_c2, _check_c3, _check_c4, _check_c5, _check_c6,
    _check_c7, _check_c8, _check_c9, _check_c10, _check_c11,
)


# -- entry points ----------------------------------------------------------


def load_workspace(root: str | Path) -> tuple[Workspace | None, list[Finding]]:
    """Load the three artifacts, or return C0 pre-check findings."""
    root = Path(root)
    problems: list[Finding] = []
    bp_path, tpl_path = root / BLUEPRINT_NAME, root / TEMPLATE_NAME
    bp = template = None
    if not bp_path.is_file():
        problems.append(Finding(PRECHECK, FATAL, BLUEPRINT_NAME, "", "blueprint.json is missing", fix_hint="run the plan stage"))
    else:
        try:
            bp = load_blueprint(bp_path)
        except (ValueError, KeyError, TypeError) as exc:
            problems.append(Finding(PRECHECK, FATAL, BLUEPRINT_NAME, "", f"blueprint.json is unreadable: {exc}"))
    if not tpl_path.is_file():
        problems.append(Finding(PRECHECK, FATAL, TEMPLATE_NAME, "", "template.yaml is missing", fix_hint="run the synthesize stage"))
    else:
        try:
            template = parse_template(tpl_path.read_text("utf-8"), TEMPLATE_NAME)
        except TemplateError as exc:
            where = f"#L{exc.line}" if exc.line else ""
            problems.append(Finding(PRECHECK, FATAL, TEMPLATE_NAME, where, f"template.yaml does not parse: {exc.message}"))
    if not (root / "lambdas").is_dir():
        problems.append(Finding(PRECHECK, FATAL, "lambdas", "", "lambdas/ code tree is missing", fix_hint="run the synthesize stage"))
    if problems or bp is None or template is None:
        return None, problems
    return Workspace(root, bp, template, reserved_env_vars()), []


def validate(root: str | Path, fix_round: int = 0) -> ValidationReport:
    ws, problems = load_workspace(root)
    if ws is None:
        return ValidationReport(sorted(problems, key=Finding.sort_key), list(CHECKS), fix_round)
    out = _Collector(ws)
    for check in _CHECK_FUNCS:
        check(ws, out)
    unique = {(f.check_id, f.artifact, f.pointer, f.message): f for f in out.findings}
    return ValidationReport(sorted(unique.values(), key=Finding.sort_key), list(CHECKS), fix_round)


# -- fixes -----------------------------------------------------------------


def _apply_template_fix(template: Template, fix: dict[str, Any]) -> bool:
    op = fix["op"]
    if op == "add_resource":
        body = lift_intrinsics(fix["body"])
        if fix["logical_id"] in template.resources:
            return False
        template.resources[fix["logical_id"]] = Resource(fix["logical_id"], body["Type"], body.get("Properties", {}))
        return True
    res = template.resources.get(fix.get("resource", ""))
    if res is None:
        return False
    props = res.properties
    if op == "set_env":
        props.setdefault("Environment", {}).setdefault("Variables", {})[fix["name"]] = lift_intrinsics(fix["value"])
    elif op == "add_policy":
        policy = lift_intrinsics(fix["policy"])
        policies = props.setdefault("Policies", [])
        if policy not in policies:
            policies.append(policy)
    elif op == "add_layer":
        layers = props.setdefault("Layers", [])
        if Ref(fix["layer"]) not in layers:
            layers.append(Ref(fix["layer"]))
    elif op == "remove_layer":
        props["Layers"] = [x for x in props.get("Layers") or [] if x != Ref(fix["layer"])]
        if not props["Layers"]:
            del props["Layers"]
    elif op == "set_event_auth":
        ev_props = props["Events"][fix["event"]].setdefault("Properties", {})
        ev_props.setdefault("Auth", {})["Authorizer"] = fix["authorizer"]
    elif op == "add_event":
        props.setdefault("Events", {})[fix["event"]] = lift_intrinsics(fix["body"])
    elif op == "add_rule_target":
        props.setdefault("Targets", []).append(lift_intrinsics(fix["target"]))
    else:
        return False
    return True


def _apply_file_fix(root: Path, fix: dict[str, Any]) -> bool:
    op = fix["op"]
    path = root / fix.get("path", fix.get("dir", ""))
    if op == "delete_file":
        if path.is_file():
            path.unlink()
        return True
    if op == "strip_requirements":
        if not path.is_file():
            return False
        drop = {_normalize_package(n) for n in fix["names"]}
        kept = [
            line for line in path.read_text("utf-8").splitlines()
            if not any(_normalize_package(name) in drop for _, name in _requirements(line))
        ]
        if _requirements("\n".join(kept)):
            write_file(path, "\n".join(kept) + "\n")
        else:
            path.unlink()
        return True
    if op == "add_requirement":
        existing = path.read_text("utf-8") if path.is_file() else ""
        if existing and not existing.endswith("\n"):
            existing += "\n"
        write_file(path, existing + fix["name"] + "\n")
        return True
    if op in ("drop_json_key", "add_dependency"):
        data = json.loads(path.read_text("utf-8")) if path.is_file() else {"name": path.parent.name, "version": "1.0.0", "private": True}
        if op == "drop_json_key":
            data.pop(fix["key"], None)
        else:
            data.setdefault("dependencies", {})[fix["name"]] = fix["version"]
        return write_file(path, json.dumps(data, indent=2) + "\n", "json").ok
    if op == "nest_layer":
        target = path / fix["subdir"]
        target.mkdir(parents=True, exist_ok=True)
        for name in fix["files"]:
            if (path / name).is_file():
                shutil.move(str(path / name), str(target / name))
        return True
    return False


_FILE_OPS = {"delete_file", "strip_requirements", "add_requirement", "drop_json_key", "add_dependency", "nest_layer"}


def apply_fixes(root: str | Path, report: ValidationReport) -> tuple[Path, ValidationReport]:
    """Apply every mechanical fix in one batch, then re-validate exactly once.

    A report that already went through a fix round is returned unchanged.
    """
    root = Path(root)
    if report.fix_round >= 1:
        return root, report
    fixes: list[dict[str, Any]] = []
    for f in report.findings:
        if f.mechanical_fix and f.mechanical_fix not in fixes:
            fixes.append(f.mechanical_fix)
    if not fixes:
        return root, validate(root, fix_round=1)
    tpl_path = root / TEMPLATE_NAME
    template = parse_template(tpl_path.read_text("utf-8"), TEMPLATE_NAME) if tpl_path.is_file() else None
    changed = False
    for fix in fixes:
        if fix["op"] in _FILE_OPS:
            _apply_file_fix(root, fix)
        elif template is not None:
            changed = _apply_template_fix(template, fix) or changed
    if changed and template is not None:
        write_file(tpl_path, serialize_template(template), "yaml")
    return root, validate(root, fix_round=1)
