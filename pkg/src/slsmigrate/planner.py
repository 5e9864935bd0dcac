"""Blueprint planning: endpoint classification, Lambda boundaries, async wiring."""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from slsmigrate import canonical
from slsmigrate.config import Config
from slsmigrate.facts.analysis import build_call_graph, load_project
from slsmigrate.facts.model import AnalysisReport, CallEdge, Diagnostic, EntryPoint
from slsmigrate.facts.schemas import TableDecl, extract_tables, schema_tier

BLUEPRINT_NAME = "blueprint.json"
BLUEPRINT_KEYS = (
    "lambda_functions",
    "dynamodb_tables",
    "s3_buckets",
    "cognito",
    "api_gateway",
    "sqs_queues",
    "eventbridge_rules",
    "lambda_invoke_permissions",
    "dropped_functions",
)
RUNTIME_FOR_LANGUAGE = {"python": "python3.12", "javascript": "nodejs22.x"}
EVENT_BUS_ENV = "EVENT_BUS_NAME"
UPLOADS_BUCKET_ENV = "UPLOADS_BUCKET"
IDENTITY_TABLES = frozenset({"user", "users"})

SYNC_INVOKE = "sync_invoke"
SQS = "sqs"
EVENTBRIDGE = "eventbridge"

Node = tuple[str, str]  # (file, function)


class PlanError(ValueError):
    pass


# -- naming ----------------------------------------------------------------


def slug(text: str) -> str:
    text = re.sub(r"([a-z0-9])([A-Z])", r"\1-\2", text)
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def path_slug(path: str) -> str:
    parts = []
    for segment in path.strip("/").split("/"):
        if not segment:
            continue
        m = re.fullmatch(r"\{([^}]+)\}", segment)
        parts.append(f"by-{slug(m.group(1))}" if m else slug(segment))
    return "-".join(p for p in parts if p) or "root"


def pascal(name: str) -> str:
    return "".join(w[:1].upper() + w[1:] for w in re.split(r"[^A-Za-z0-9]+", name) if w)


def upper_snake(name: str) -> str:
    return slug(name).replace("-", "_").upper()


def function_logical_id(name: str) -> str:
    return pascal(name) + "Function"


def invoke_env_var(callee: str) -> str:
    return f"{upper_snake(callee)}_FUNCTION_NAME"


def _unique(base: str, taken: set[str]) -> str:
    name, n = base, 2
    while name in taken:
        name, n = f"{base}-{n}", n + 1
    taken.add(name)
    return name


# -- blueprint types -------------------------------------------------------


@dataclass(frozen=True)
class AsyncTarget:
    kind: str  # "sqs_queue" | "eventbridge_rule"
    target_name: str

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "target_name": self.target_name}


@dataclass
class LambdaSpec:
    name: str
    trigger: str
    runtime: str
    source_files: list[str]
    auth: str = "none"
    method: str | None = None
    path: str | None = None
    publishes_to: list[AsyncTarget] = field(default_factory=list)
    invokes: list[str] = field(default_factory=list)
    env_vars: list[str] = field(default_factory=list)
    uses_shared_layer: bool = False
    # "file:function" units whose logic the Lambda hosts.
    entry_functions: list[str] = field(default_factory=list)
    consumes: str | None = None

    @property
    def logical_id(self) -> str:
        return function_logical_id(self.name)

    @property
    def is_http(self) -> bool:
        return self.trigger == "http"

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "name": self.name,
            "trigger": self.trigger,
            "runtime": self.runtime,
            "source_files": list(self.source_files),
            "auth": self.auth,
            "publishes_to": [t.to_dict() for t in self.publishes_to],
            "invokes": list(self.invokes),
            "env_vars": list(self.env_vars),
            "uses_shared_layer": self.uses_shared_layer,
            "entry_functions": list(self.entry_functions),
        }
        if self.is_http:
            d["method"] = self.method
            d["path"] = self.path
        if self.consumes is not None:
            d["consumes"] = self.consumes
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> LambdaSpec:
        return cls(
            name=d["name"],
            trigger=d["trigger"],
            runtime=d["runtime"],
            source_files=list(d.get("source_files", [])),
            auth=d.get("auth", "none"),
            method=d.get("method"),
            path=d.get("path"),
            publishes_to=[AsyncTarget(t["kind"], t["target_name"]) for t in d.get("publishes_to", [])],
            invokes=list(d.get("invokes", [])),
            env_vars=list(d.get("env_vars", [])),
            uses_shared_layer=bool(d.get("uses_shared_layer", False)),
            entry_functions=list(d.get("entry_functions", [])),
            consumes=d.get("consumes"),
        )


@dataclass
class Blueprint:
    lambda_functions: list[LambdaSpec]
    dynamodb_tables: list[dict[str, Any]] = field(default_factory=list)
    s3_buckets: list[dict[str, Any]] = field(default_factory=list)
    cognito: dict[str, Any] | None = None
    api_gateway: dict[str, Any] = field(default_factory=dict)
    sqs_queues: list[dict[str, Any]] = field(default_factory=list)
    eventbridge_rules: list[dict[str, Any]] = field(default_factory=list)
    lambda_invoke_permissions: list[dict[str, str]] = field(default_factory=list)
    dropped_functions: list[dict[str, Any]] = field(default_factory=list)

    def spec(self, name: str) -> LambdaSpec | None:
        for s in self.lambda_functions:
            if s.name == name:
                return s
        return None

    @property
    def runtime(self) -> str:
        return self.lambda_functions[0].runtime if self.lambda_functions else "python3.12"

    @property
    def uses_layer(self) -> bool:
        return any(s.uses_shared_layer for s in self.lambda_functions)

    def queue(self, name: str) -> dict[str, Any] | None:
        return next((q for q in self.sqs_queues if q["name"] == name), None)

    def rule(self, name: str) -> dict[str, Any] | None:
        return next((r for r in self.eventbridge_rules if r["name"] == name), None)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda_functions": [s.to_dict() for s in self.lambda_functions],
            "dynamodb_tables": self.dynamodb_tables,
            "s3_buckets": self.s3_buckets,
            "cognito": self.cognito,
            "api_gateway": self.api_gateway,
            "sqs_queues": self.sqs_queues,
            "eventbridge_rules": self.eventbridge_rules,
            "lambda_invoke_permissions": self.lambda_invoke_permissions,
            "dropped_functions": self.dropped_functions,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Blueprint:
        missing = [k for k in BLUEPRINT_KEYS if k not in d]
        if missing:
            raise PlanError(f"blueprint is missing keys: {', '.join(missing)}")
        return cls(
            lambda_functions=[LambdaSpec.from_dict(s) for s in d["lambda_functions"]],
            dynamodb_tables=list(d["dynamodb_tables"]),
            s3_buckets=list(d["s3_buckets"]),
            cognito=d["cognito"],
            api_gateway=dict(d["api_gateway"]),
            sqs_queues=list(d["sqs_queues"]),
            eventbridge_rules=list(d["eventbridge_rules"]),
            lambda_invoke_permissions=list(d["lambda_invoke_permissions"]),
            dropped_functions=list(d["dropped_functions"]),
        )


# -- classification --------------------------------------------------------


@dataclass(frozen=True)
class ClassifiedEndpoint:
    entry: EntryPoint
    auth: str


def classify_endpoints(
    report: AnalysisReport, auth_decorators: Iterable[str], auth_paths: Iterable[str]
) -> tuple[list[ClassifiedEndpoint], list[dict[str, Any]]]:
    decorators = set(auth_decorators)
    paths = {p.rstrip("/") or "/" for p in auth_paths}
    business: list[ClassifiedEndpoint] = []
    dropped: list[dict[str, Any]] = []
    for ep in report.entry_points:
        if (ep.path.rstrip("/") or "/") in paths:
            dropped.append(
                {
                    "method": ep.method,
                    "path": ep.path,
                    "reason": "cognito",
                    "handler_function": ep.handler_function,
                    "file": ep.file,
                }
            )
            continue
        auth = "required" if decorators.intersection(ep.auth_markers) else "none"
        business.append(ClassifiedEndpoint(ep, auth))
    return business, dropped


# -- deep tracing ----------------------------------------------------------


@dataclass(frozen=True)
class TracedEdge:
    edge: CallEdge
    depth: int


def trace_deep_calls(
    graph: Iterable[CallEdge], level1_edges: Iterable[CallEdge], max_depth: int = 3
) -> tuple[list[TracedEdge], list[Diagnostic]]:
    """Breadth-first transitive expansion of ``level1_edges`` over the project call graph."""
    by_caller: dict[Node, list[CallEdge]] = {}
    for e in graph:
        by_caller.setdefault(e.caller, []).append(e)
    for edges in by_caller.values():
        edges.sort(key=CallEdge.sort_key)
    seen: set[CallEdge] = set()
    out: list[TracedEdge] = []
    diagnostics: list[Diagnostic] = []
    queue: deque[tuple[CallEdge, int]] = deque((e, 1) for e in sorted(set(level1_edges), key=CallEdge.sort_key))
    expanded: set[Node] = {e.caller for e in level1_edges}
    while queue:
        edge, depth = queue.popleft()
        if edge in seen:
            continue
        seen.add(edge)
        out.append(TracedEdge(edge, depth))
        if depth >= max_depth:
            continue
        if edge.callee in expanded:
            if _reaches(by_caller, edge.callee, edge.caller):
                diagnostics.append(
                    Diagnostic(
                        "info",
                        "call-cycle",
                        edge.caller_file,
                        edge.line,
                        f"{edge.callee_file}:{edge.callee_function} is on a call cycle; not re-expanded",
                    )
                )
            continue
        expanded.add(edge.callee)
        for nxt in by_caller.get(edge.callee, []):
            queue.append((nxt, depth + 1))
    return out, diagnostics


def _reaches(by_caller: dict[Node, list[CallEdge]], start: Node, goal: Node) -> bool:
    stack, seen = [start], {start}
    while stack:
        node = stack.pop()
        if node == goal:
            return True
        for e in by_caller.get(node, []):
            if e.callee not in seen:
                seen.add(e.callee)
                stack.append(e.callee)
    return False


# -- communication selection ------------------------------------------------


def select_communication(relation: Iterable[CallEdge], config: Config | None = None) -> str:
    """Pick the inter-Lambda mechanism for one producer action's cross-domain edges."""
    edges = list(relation)
    if not edges:
        raise PlanError("select_communication needs at least one cross-domain edge")
    if any(e.return_value_used for e in edges):
        return SYNC_INVOKE
    config = config or Config()
    consumers = {e.callee for e in edges}
    domains = {config.domain_of(e.callee_file) for e in edges}
    if len(consumers) >= 2 and len(domains) >= 2:
        return EVENTBRIDGE
    return SQS


# -- planning --------------------------------------------------------------


@dataclass
class _Walk:
    nodes: list[Node] = field(default_factory=list)
    relations: dict[Node, list[CallEdge]] = field(default_factory=dict)
    invokes: set[Node] = field(default_factory=set)


class _Planner:
    def __init__(self, report: AnalysisReport, config: Config, edges: list[CallEdge], texts: dict[str, str]):
        self.report = report
        self.config = config
        self.texts = texts
        self.by_caller: dict[Node, list[CallEdge]] = {}
        for e in edges:
            self.by_caller.setdefault(e.caller, []).append(e)
        for lst in self.by_caller.values():
            lst.sort(key=CallEdge.sort_key)
        self.handlers: dict[Node, str] = {}
        self.infra = {p for p in report.dynamodb_schema_candidates if schema_tier(p) == 1}

    def domain(self, path: str) -> str | None:
        return self.config.domain_of(path)

    def walk(self, roots: list[Node], allow_async: bool) -> _Walk:
        """In-process closure from ``roots``; cross-domain edges become relations or invokes."""
        result = _Walk()
        visited: set[Node] = set()
        queue: deque[tuple[Node, str | None, int]] = deque()
        for root in roots:
            queue.append((root, self.domain(root[0]), 0))
            visited.add(root)
        while queue:
            node, eff, depth = queue.popleft()
            result.nodes.append(node)
            if depth >= self.config.max_trace_depth:
                continue
            local: list[tuple[CallEdge, str | None]] = []
            cross: list[CallEdge] = []
            for e in self.by_caller.get(node, []):
                cd = self.domain(e.callee_file)
                is_cross = cd is not None and eff is not None and cd != eff
                # Awaited calls whose value is dropped still block the caller: not fire-and-forget.
                if is_cross and allow_async and not (e.is_awaited and not e.return_value_used):
                    cross.append(e)
                else:
                    local.append((e, cd or eff))
            if cross:
                if select_communication(cross, self.config) == SYNC_INVOKE:
                    for e in cross:
                        if e.callee in self.handlers and e.callee not in roots:
                            result.invokes.add(e.callee)
                        else:
                            local.append((e, self.domain(e.callee_file)))
                else:
                    result.relations[node] = cross
            for e, next_eff in local:
                if e.callee not in visited:
                    visited.add(e.callee)
                    queue.append((e.callee, next_eff, depth + 1))
        return result

    def source_files(self, nodes: Iterable[Node]) -> list[str]:
        files = {n[0] for n in nodes if n[0] in self.texts}
        return sorted(files - self.infra)


def _mentions(text: str, needle: str) -> bool:
    return re.search(r"""['"`]""" + re.escape(needle) + r"""['"`]""", text) is not None or needle in text.split()


def plan_blueprint(
    report: AnalysisReport,
    config: Config | None = None,
    *,
    call_graph: list[CallEdge] | None = None,
    texts: dict[str, str] | None = None,
) -> Blueprint:
    """Plan the migration; the monolith tree at ``report.project_root`` is read when needed."""
    config = config or Config()
    runtime = config.runtime or RUNTIME_FOR_LANGUAGE[report.language]
    if call_graph is None or texts is None:
        lp = load_project(report.project_root, config)
        call_graph = build_call_graph(lp) if call_graph is None else call_graph
        texts = {p: lp.project.text(p) or "" for p in lp.project.files} if texts is None else texts

    business, dropped = classify_endpoints(report, config.auth_decorators, config.auth_paths)
    if not business:
        raise PlanError("no business endpoints to migrate (every entry point is an auth endpoint)")
    business.sort(key=lambda c: (c.entry.path, c.entry.method))
    dropped.sort(key=lambda d: (d["path"], d["method"]))

    planner = _Planner(report, config, call_graph, texts)
    taken: set[str] = set()
    http: list[tuple[ClassifiedEndpoint, LambdaSpec]] = []
    for c in business:
        ep = c.entry
        name = _unique(f"{ep.method.lower()}-{path_slug(ep.path)}", taken)
        spec = LambdaSpec(
            name=name,
            trigger="http",
            runtime=runtime,
            source_files=[],
            auth=c.auth,
            method=ep.method,
            path=ep.path,
            entry_functions=[f"{ep.defining_file}:{ep.handler_function}"],
        )
        http.append((c, spec))
        planner.handlers.setdefault((ep.defining_file, ep.handler_function), name)

    queues: dict[frozenset[Node], dict[str, Any]] = {}
    rules: dict[Node, dict[str, Any]] = {}
    consumer_roots: dict[str, tuple[str, list[Node], str]] = {}  # spec name -> (trigger, roots, consumes)
    permissions: set[tuple[str, str]] = set()

    for c, spec in http:
        root = (c.entry.defining_file, c.entry.handler_function)
        walk = planner.walk([root], allow_async=True)
        spec.source_files = planner.source_files(walk.nodes)
        spec.invokes = sorted({planner.handlers[n] for n in walk.invokes} - {spec.name})
        for callee in spec.invokes:
            permissions.add((spec.name, callee))
        targets: set[AsyncTarget] = set()
        for producer, relation in sorted(walk.relations.items()):
            kind = select_communication(relation, config)
            if kind == SQS:
                consumers = frozenset(e.callee for e in relation)
                if consumers not in queues:
                    first = min(consumers)
                    qname = _unique(slug(first[1]), taken)
                    cname = _unique(f"consume-{qname}", taken)
                    queues[consumers] = {
                        "name": qname,
                        "logical_id": pascal(qname) + "Queue",
                        "env_var": f"{upper_snake(qname)}_QUEUE_URL",
                        "consumer": cname,
                        "producers": [],
                    }
                    consumer_roots[cname] = ("sqs", sorted(consumers), qname)
                q = queues[consumers]
                q["producers"] = sorted(set(q["producers"]) | {spec.name})
                targets.add(AsyncTarget("sqs_queue", q["name"]))
            else:
                if producer not in rules:
                    rname = _unique(slug(producer[1]), taken)
                    by_domain: dict[str, list[Node]] = {}
                    for e in relation:
                        by_domain.setdefault(planner.domain(e.callee_file) or "", []).append(e.callee)
                    target_names = []
                    for dom in sorted(by_domain):
                        tname = _unique(f"on-{rname}-{dom}", taken)
                        target_names.append(tname)
                        consumer_roots[tname] = ("eventbridge", sorted(set(by_domain[dom])), rname)
                    rules[producer] = {
                        "name": rname,
                        "logical_id": pascal(rname) + "Rule",
                        "source": f"app.{planner.domain(producer[0]) or 'core'}",
                        "detail_type": producer[1],
                        "targets": target_names,
                        "producers": [],
                    }
                r = rules[producer]
                r["producers"] = sorted(set(r["producers"]) | {spec.name})
                targets.add(AsyncTarget("eventbridge_rule", r["name"]))
        spec.publishes_to = sorted(targets, key=lambda t: (t.kind, t.target_name))

    consumers_specs: list[LambdaSpec] = []
    for cname, (trigger, roots, consumes) in sorted(consumer_roots.items()):
        walk = planner.walk(roots, allow_async=False)
        consumers_specs.append(
            LambdaSpec(
                name=cname,
                trigger=trigger,
                runtime=runtime,
                source_files=planner.source_files(walk.nodes),
                auth="none",
                entry_functions=[f"{f}:{fn}" for f, fn in roots],
                consumes=consumes,
            )
        )

    specs = [s for _, s in http] + consumers_specs

    # Shared tables, buckets, identity.
    has_dynamo = any("DynamoDB" in t.tags for t in report.file_tags)
    any_auth_tag = any("Auth" in t.tags for t in report.file_tags)
    cognito_needed = bool(dropped) or any_auth_tag or any(c.auth == "required" for c, _ in http)
    tables: list[TableDecl] = []
    if has_dynamo:
        sources = {p: texts.get(p, "") for p in report.dynamodb_schema_candidates}
        tables = extract_tables(sources)
        if cognito_needed:
            tables = [t for t in tables if t.name.lower() not in IDENTITY_TABLES]
    table_dicts = []
    for t in tables:
        d: dict[str, Any] = {
            "name": t.name,
            "logical_id": pascal(t.name) + "Table",
            "env_var": f"{upper_snake(t.name)}_TABLE",
            "hash_key": t.hash_key,
            "hash_type": t.hash_type,
        }
        if t.range_key:
            d["range_key"] = t.range_key
            d["range_type"] = t.range_type
        table_dicts.append(d)

    upload_files = {t.file for t in report.file_tags if "FileUpload" in t.tags}
    buckets = (
        [{"name": "uploads", "logical_id": "UploadsBucket", "env_var": UPLOADS_BUCKET_ENV}] if upload_files else []
    )

    # Shared layer: domain-neutral utility files reused by enough HTTP Lambdas.
    handler_files = {c.entry.defining_file for c, _ in http}
    usage: dict[str, int] = {}
    for _, spec in http:
        for f in spec.source_files:
            if f not in handler_files and planner.domain(f) is None:
                usage[f] = usage.get(f, 0) + 1
    layer_files = {f for f, n in usage.items() if n >= config.layer_reuse_threshold}

    queue_env = {q["name"]: q["env_var"] for q in queues.values()}
    for spec in specs:
        env: set[str] = set()
        for t in table_dicts:
            if any(_mentions(texts.get(f, ""), t["name"]) or t["env_var"] in texts.get(f, "") for f in spec.source_files):
                env.add(t["env_var"])
        if buckets and upload_files.intersection(spec.source_files):
            env.add(UPLOADS_BUCKET_ENV)
        for target in spec.publishes_to:
            env.add(queue_env[target.target_name] if target.kind == "sqs_queue" else EVENT_BUS_ENV)
        for callee in spec.invokes:
            env.add(invoke_env_var(callee))
        spec.env_vars = sorted(env)
        spec.uses_shared_layer = bool(layer_files.intersection(spec.source_files))

    cognito = {"user_pool": "UserPool", "user_pool_client": "UserPoolClient"} if cognito_needed else None
    api = {
        "logical_id": "Api",
        "stage": "Prod",
        "default_authorizer": "CognitoAuthorizer" if cognito else None,
        "cors": {"allow_origin": "*", "allow_credentials": False},
    }
    return Blueprint(
        lambda_functions=specs,
        dynamodb_tables=table_dicts,
        s3_buckets=buckets,
        cognito=cognito,
        api_gateway=api,
        sqs_queues=sorted(queues.values(), key=lambda q: q["name"]),
        eventbridge_rules=sorted(rules.values(), key=lambda r: r["name"]),
        lambda_invoke_permissions=[{"caller": a, "callee": b} for a, b in sorted(permissions)],
        dropped_functions=dropped,
    )


def check_blueprint(bp: Blueprint, report: AnalysisReport) -> list[str]:
    """Invariant violations (empty when the blueprint is well-formed)."""
    problems: list[str] = []
    http = {(s.method, s.path) for s in bp.lambda_functions if s.is_http}
    dropped = {(d["method"], d["path"]) for d in bp.dropped_functions}
    entries = {(e.method, e.path) for e in report.entry_points}
    if http | dropped != entries:
        problems.append("http Lambdas and dropped functions do not cover the entry points")
    if http & dropped:
        problems.append("an endpoint is both migrated and dropped")
    if len(http) != sum(1 for s in bp.lambda_functions if s.is_http):
        problems.append("duplicate (method, path) among http Lambdas")
    perms = {(p["caller"], p["callee"]) for p in bp.lambda_invoke_permissions}
    for s in bp.lambda_functions:
        for callee in s.invokes:
            if (s.name, callee) not in perms:
                problems.append(f"{s.name} invokes {callee} without a permission")
        for t in s.publishes_to:
            if (bp.queue if t.kind == "sqs_queue" else bp.rule)(t.target_name) is None:
                problems.append(f"{s.name} publishes to undeclared {t.kind} {t.target_name}")
        if not s.is_http and (s.method or s.path):
            problems.append(f"{s.name}: non-http Lambda carries method/path")
    for r in bp.eventbridge_rules:
        if len(r["targets"]) < 2:
            problems.append(f"rule {r['name']} has fewer than 2 targets")
    return problems


def write_blueprint(bp: Blueprint, out_dir: str | Path) -> Path:
    path = Path(out_dir) / BLUEPRINT_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(canonical.dump_bytes(bp.to_dict()))
    return path


def load_blueprint(path: str | Path) -> Blueprint:
    return Blueprint.from_dict(json.loads(Path(path).read_text("utf-8")))
