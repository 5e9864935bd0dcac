"""API-coverage precision/recall/F1 and end-to-end test pass rates."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

from slsmigrate.sam.model import Template, parse_template

log = logging.getLogger("slsmigrate.metrics")

SCORECARD_NAME = "scorecard.json"
PARAM_TOKEN = "{}"
DEFAULT_CATEGORIES = ("core", "robustness")
CATEGORIES = ("core", "robustness", "auth", "async")

# {id}, {proxy+}, :id, <id>, <int:id>
_PARAM_SEGMENT = re.compile(r"^(?:\{[^/{}]+\}|:[A-Za-z_]\w*\??|<(?:[A-Za-z_]\w*:)?[A-Za-z_]\w*>)$")

Endpoint = tuple[str, str]


class MetricsError(ValueError):
    pass


def normalize_path(path: str) -> str:
    segments = [s for s in path.strip().split("/") if s]
    return "/" + "/".join(PARAM_TOKEN if _PARAM_SEGMENT.match(s) else s for s in segments)


def normalize_endpoint(method: str, path: str) -> Endpoint:
    return (method.strip().upper(), normalize_path(path))


@dataclass(frozen=True)
class EndpointSet:
    endpoints: frozenset[Endpoint]
    source: str  # generated | reference

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, str]], source: str) -> EndpointSet:
        if source not in ("generated", "reference"):
            raise MetricsError(f"unknown endpoint-set source {source!r}")
        return cls(frozenset(normalize_endpoint(m, p) for m, p in pairs), source)

    def __len__(self) -> int:
        return len(self.endpoints)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ApiScore:
    precision: float
    recall: float
    f1: float
    matched: int
    generated: int
    reference: int


def api_f1(generated: EndpointSet, reference: EndpointSet) -> ApiScore:
    if not reference.endpoints:
        raise MetricsError("reference endpoint set is empty")
    tp = len(generated.endpoints & reference.endpoints)
    precision = tp / len(generated.endpoints) if generated.endpoints else 0.0
    recall = tp / len(reference.endpoints)
    return ApiScore(precision, recall, f1_score(precision, recall), tp, len(generated), len(reference))


def api_f1_many(pairs: list[tuple[EndpointSet, EndpointSet]]) -> tuple[ApiScore, ApiScore]:
    """(micro, macro) over several applications.

    Micro pools match counts across apps; macro averages each app's
    precision, recall, and F1.
    """
    if not pairs:
        raise MetricsError("no applications to score")
    per_app = [api_f1(g, r) for g, r in pairs]
    tp = sum(s.matched for s in per_app)
    g_total = sum(s.generated for s in per_app)
    r_total = sum(s.reference for s in per_app)
    p = tp / g_total if g_total else 0.0
    rec = tp / r_total
    micro = ApiScore(p, rec, f1_score(p, rec), tp, g_total, r_total)
    n = len(per_app)
    macro = ApiScore(
        sum(s.precision for s in per_app) / n,
        sum(s.recall for s in per_app) / n,
        sum(s.f1 for s in per_app) / n,
        tp,
        g_total,
        r_total,
    )
    return micro, macro


def anti_pattern_count(generated: EndpointSet, reference: EndpointSet, auth_paths: Iterable[str]) -> int:
    """Redundant auth endpoints: generated, absent from the reference, on an auth path."""
    paths = {normalize_path(p) for p in auth_paths}
    return sum(1 for _, path in generated.endpoints - reference.endpoints if path in paths)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    app: str
    category: str
    total: int
    passed: int

    def __post_init__(self) -> None:
        if self.total < 0 or self.passed < 0 or self.passed > self.total:
            raise MetricsError(f"{self.app}/{self.category}: need 0 <= passed <= total, got {self.passed}/{self.total}")


def e2epr(
    results: Iterable[TestResult], categories: Iterable[str] = DEFAULT_CATEGORIES
) -> tuple[float, float, list[str]]:
    """(micro, macro, excluded apps) end-to-end pass rates over the selected categories."""
    wanted = set(categories)
    totals: dict[str, list[int]] = {}
    for r in results:
        slot = totals.setdefault(r.app, [0, 0])
        if r.category in wanted:
            slot[0] += r.total
            slot[1] += r.passed
    excluded = sorted(app for app, (t, _) in totals.items() if t == 0)
    for app in excluded:
        log.warning("app %s has no %s tests; excluded from E2EPR", app, "+".join(sorted(wanted)))
    kept = {app: tp for app, tp in totals.items() if tp[0] > 0}
    if not kept:
        raise MetricsError("no application has tests in the selected categories")
    micro = sum(p for _, p in kept.values()) / sum(t for t, _ in kept.values())
    macro = sum(p / t for t, p in kept.values()) / len(kept)
    return micro, macro, excluded


@dataclass
class ScoreCard:
    precision_micro: float
    recall_micro: float
    f1_micro: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    anti_pattern_count: int
    e2epr_micro: float | None = None
    e2epr_macro: float | None = None
    apps: list[dict[str, Any]] = field(default_factory=list)
    excluded_apps: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def table(self) -> str:
        def fmt(v: float | None) -> str:
            return "n/a" if v is None else f"{v:.3f}"

        rows = [("metric", "micro", "macro")]
        rows.append(("precision", fmt(self.precision_micro), fmt(self.precision_macro)))
        rows.append(("recall", fmt(self.recall_micro), fmt(self.recall_macro)))
        rows.append(("f1", fmt(self.f1_micro), fmt(self.f1_macro)))
        rows.append(("e2epr", fmt(self.e2epr_micro), fmt(self.e2epr_macro)))
        rows.append(("anti-patterns", str(self.anti_pattern_count), ""))
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        return "\n".join(
            f"{r[0]:<{widths[0]}}  {r[1]:>{widths[1]}}  {r[2]:>{widths[2]}}".rstrip() for r in rows
        )


def score(
    apps: list[tuple[str, EndpointSet, EndpointSet]],
    results: list[TestResult] | None = None,
    auth_paths: Iterable[str] = (),
    categories: Iterable[str] = DEFAULT_CATEGORIES,
) -> ScoreCard:
    auth_paths = list(auth_paths)
    micro, macro = api_f1_many([(g, r) for _, g, r in apps])
    per_app = []
    anti = 0
    for name, g, r in apps:
        s = api_f1(g, r)
        count = anti_pattern_count(g, r, auth_paths)
        anti += count
        per_app.append({"app": name, "precision": s.precision, "recall": s.recall, "f1": s.f1, "anti_patterns": count})
    card = ScoreCard(micro.precision, micro.recall, micro.f1, macro.precision, macro.recall, macro.f1, anti, apps=per_app)
    if results:
        card.e2epr_micro, card.e2epr_macro, card.excluded_apps = e2epr(results, categories)
    return card


# -- endpoint sources ------------------------------------------------------


def endpoints_from_template(template: Template) -> list[Endpoint]:
    """Api events of every Function; consumer Lambdas have none and drop out."""
    out = []
    for fn in template.functions():
        events = fn.properties.get("Events") or {}
        for ev in events.values() if isinstance(events, dict) else []:
            if isinstance(ev, dict) and ev.get("Type") in ("Api", "HttpApi"):
                props = ev.get("Properties") or {}
                if isinstance(props.get("Method"), str) and isinstance(props.get("Path"), str):
                    out.append((props["Method"], props["Path"]))
    return out


def endpoints_from_report(report: dict[str, Any], auth_paths: Iterable[str] = ()) -> list[Endpoint]:
    """Monolith routes, minus those a managed identity service replaces."""
    skip = {normalize_path(p) for p in auth_paths}
    return [
        (ep["method"], ep["path"])
        for ep in report.get("entry_points", [])
        if normalize_path(ep["path"]) not in skip
    ]


def _endpoint_list(data: Any) -> list[Endpoint]:
    if isinstance(data, dict):
        data = data.get("endpoints", [])
    out = []
    for item in data:
        if isinstance(item, str):
            method, _, path = item.strip().partition(" ")
        elif isinstance(item, dict):
            method, path = item["method"], item["path"]
        else:
            method, path = item[0], item[1]
        out.append((method, path.strip()))
    return out


def load_endpoints(path: str | Path, auth_paths: Iterable[str] = ()) -> list[Endpoint]:
    """Endpoints from a template, an analysis report, or an endpoint-list JSON file."""
    p = Path(path)
    text = p.read_text("utf-8")
    if p.suffix in (".yaml", ".yml"):
        return endpoints_from_template(parse_template(text, p.name))
    data = json.loads(text)
    if isinstance(data, dict) and "entry_points" in data:
        return endpoints_from_report(data, auth_paths)
    return _endpoint_list(data)


def load_results(path: str | Path) -> list[TestResult]:
    data = json.loads(Path(path).read_text("utf-8"))
    if isinstance(data, dict):
        data = data.get("results", [data])
    return [TestResult(str(d["app"]), str(d["category"]), int(d["total"]), int(d["passed"])) for d in data]
