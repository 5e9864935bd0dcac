from __future__ import annotations

import itertools
import json
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import APP_FIXTURES, project
from slsmigrate.config import Config
from slsmigrate.facts import analyze
from slsmigrate.facts.analysis import build_call_graph, load_project
from slsmigrate.facts.model import CallEdge
from slsmigrate.planner import (
    BLUEPRINT_KEYS,
    EVENTBRIDGE,
    SQS,
    SYNC_INVOKE,
    PlanError,
    check_blueprint,
    classify_endpoints,
    path_slug,
    plan_blueprint,
    select_communication,
    trace_deep_calls,
    write_blueprint,
)

_reports: dict[str, object] = {}


def report_of(name):
    if name not in _reports:
        _reports[name] = analyze(project(name))[0]
    return _reports[name]


def edge(callee_file, callee="fn", rvu=False, awaited=False, caller_file="app.py", caller="handler", line=1):
    return CallEdge(caller_file, caller, callee_file, callee, line, rvu, awaited)


# -- classification ---------------------------------------------------------------


def test_classify_examples():
    config = Config()
    business, dropped = classify_endpoints(report_of("flask_shop"), config.auth_decorators, config.auth_paths)
    by_key = {c.entry.key: c.auth for c in business}
    assert {(d["method"], d["path"], d["reason"]) for d in dropped} >= {("POST", "/login", "cognito")}
    assert by_key["GET /cart/items"] == "required"
    assert by_key["GET /health"] == "none"


@pytest.mark.parametrize("name", APP_FIXTURES)
def test_partition_and_auth_paths_dropped(name):
    report = report_of(name)
    bp = plan_blueprint(report)
    business = {(s.method, s.path) for s in bp.lambda_functions if s.is_http}
    dropped = {(d["method"], d["path"]) for d in bp.dropped_functions}
    entries = {(e.method, e.path) for e in report.entry_points}
    assert business | dropped == entries
    assert not business & dropped
    auth_entries = {(m, p) for m, p in entries if p in ("/register", "/login", "/logout")}
    assert auth_entries <= dropped
    assert check_blueprint(bp, report) == []


# -- deep tracing ---------------------------------------------------------------


def _closure(graph, level1, max_depth):
    """Brute-force: every edge reachable from a level-1 edge within max_depth hops."""
    reached = set(level1)
    frontier = set(level1)
    for _ in range(max_depth - 1):
        nxt = {e for e in graph for f in frontier if e.caller == f.callee} - reached
        reached |= nxt
        frontier = nxt
    return reached


@pytest.mark.parametrize("name", APP_FIXTURES)
def test_trace_matches_brute_force_closure(name):
    report = report_of(name)
    graph = build_call_graph(load_project(project(name)))
    level1 = [e for deps in report.entry_point_dependencies.values() for e in deps]
    traced, _ = trace_deep_calls(graph, level1, 3)
    assert {t.edge for t in traced} == _closure(graph, level1, 3)


def test_trace_chain_depth_two():
    a = edge("svc_a.py", "a", caller_file="app.py", caller="route")
    b = edge("svc_b.py", "b", caller_file="svc_a.py", caller="a")
    traced, _ = trace_deep_calls([a, b], [a])
    assert {(t.edge, t.depth) for t in traced} == {(a, 1), (b, 2)}


def test_trace_without_deeper_calls_is_fixed_point():
    a = edge("svc_a.py", "a", caller_file="app.py", caller="route")
    traced, diags = trace_deep_calls([a], [a])
    assert [t.edge for t in traced] == [a] and diags == []


def test_trace_terminates_on_mutual_recursion():
    l1 = edge("a.py", "a", caller_file="app.py", caller="route")
    ab = edge("b.py", "b", caller_file="a.py", caller="a")
    ba = edge("a.py", "a", caller_file="b.py", caller="b")
    traced, diags = trace_deep_calls([l1, ab, ba], [l1], max_depth=10)
    assert {t.edge for t in traced if t.edge != l1} == {ab, ba}
    assert len(traced) == 3
    assert any(d.code == "call-cycle" for d in diags)


# -- communication rules ---------------------------------------------------------


def test_select_examples():
    assert select_communication([edge("orders/s.py", rvu=True)]) == SYNC_INVOKE
    assert select_communication([edge("notifications/s.py")]) == SQS
    assert select_communication([edge("loyalty/s.py", "a"), edge("notifications/s.py", "b")]) == EVENTBRIDGE


def test_empty_relation_is_error():
    with pytest.raises(PlanError):
        select_communication([])


@pytest.mark.parametrize("flags", list(itertools.product([False, True], repeat=3)))
def test_sync_precedence_over_all_flag_combinations(flags):
    # three edges to two domains; any value-using edge forces sync_invoke
    edges = [
        edge("loyalty/s.py", "a", rvu=flags[0]),
        edge("notifications/s.py", "b", rvu=flags[1]),
        edge("shipping/s.py", "c", rvu=flags[2]),
    ]
    expected = SYNC_INVOKE if any(flags) else EVENTBRIDGE
    assert select_communication(edges) == expected


def _relation(value_used, consumers, domains):
    out = []
    for i in range(consumers):
        domain = f"d{i % domains}"
        out.append(edge(f"{domain}/svc{i}.py", f"consume{i}", rvu=value_used and i == 0))
    return out


def enumerate_shapes():
    for value_used, consumers, domains in itertools.product([False, True], [1, 2, 3], [1, 2, 3]):
        if domains <= consumers:
            yield value_used, consumers, domains


@pytest.mark.parametrize("shape", list(enumerate_shapes()))
def test_rule_table_exhaustive(shape):
    value_used, consumers, domains = shape
    got = select_communication(_relation(value_used, consumers, domains))
    if value_used:
        assert got == SYNC_INVOKE
    elif consumers >= 2 and domains >= 2:
        assert got == EVENTBRIDGE
    else:
        assert got == SQS


# -- planning ---------------------------------------------------------------


def test_todo_plan_shape():
    bp = plan_blueprint(report_of("flask_todo"))
    assert sum(s.is_http for s in bp.lambda_functions) == 3
    assert len(bp.dropped_functions) == 3
    assert all(d["reason"] == "cognito" for d in bp.dropped_functions)
    assert bp.cognito is not None
    assert bp.api_gateway["default_authorizer"] == "CognitoAuthorizer"
    assert [t["name"] for t in bp.dynamodb_tables] == ["todos"]


@pytest.mark.parametrize("name", ["flask_shop", "express_bookstore"])
def test_fan_out_becomes_one_rule_with_two_targets(name):
    bp = plan_blueprint(report_of(name))
    assert len(bp.eventbridge_rules) == 1
    rule = bp.eventbridge_rules[0]
    assert len(rule["targets"]) == 2
    consumers = [s for s in bp.lambda_functions if s.trigger == "eventbridge"]
    assert sorted(s.name for s in consumers) == sorted(rule["targets"])
    for s in consumers:
        assert s.method is None and s.path is None and "method" not in s.to_dict()


def test_shop_queue_and_invoke():
    bp = plan_blueprint(report_of("flask_shop"))
    assert [q["name"] for q in bp.sqs_queues] == ["schedule-return"]
    assert bp.spec("consume-schedule-return").trigger == "sqs"
    post_orders = bp.spec("post-orders")
    assert post_orders.invokes == ["get-cart-items"]
    assert {"caller": "post-orders", "callee": "get-cart-items"} in bp.lambda_invoke_permissions
    assert "init_tables.py" not in {f for s in bp.lambda_functions for f in s.source_files}


def test_no_dynamodb_and_no_auth_means_no_tables_no_cognito(tmp_path):
    (tmp_path / "app.py").write_text(
        "from flask import Flask\napp = Flask(__name__)\n\n@app.get('/health')\ndef health():\n    return 'ok'\n"
    )
    bp = plan_blueprint(analyze(tmp_path)[0])
    assert bp.dynamodb_tables == [] and bp.cognito is None
    assert bp.api_gateway["default_authorizer"] is None


def test_zero_business_endpoints_is_error(tmp_path):
    (tmp_path / "app.py").write_text(
        "from flask import Flask\napp = Flask(__name__)\n\n@app.post('/login')\ndef login():\n    return 'ok'\n"
    )
    with pytest.raises(PlanError):
        plan_blueprint(analyze(tmp_path)[0])


def test_naming():
    assert path_slug("/todos/{todo_id}") == "todos-by-todo-id"
    names = [s.name for s in plan_blueprint(report_of("flask_todo")).lambda_functions]
    assert names == sorted(set(names), key=names.index)
    assert "delete-todos-by-todo-id" in names


@pytest.mark.parametrize("name", APP_FIXTURES)
def test_blueprint_file_has_exact_keys(name, tmp_path):
    path = write_blueprint(plan_blueprint(report_of(name)), tmp_path)
    data = json.loads(path.read_text())
    assert tuple(data) == tuple(sorted(BLUEPRINT_KEYS)) and len(data) == 9


@pytest.mark.parametrize("name", APP_FIXTURES)
def test_eventbridge_minimality_and_invoke_permissions(name):
    bp = plan_blueprint(report_of(name))
    assert all(len(r["targets"]) >= 2 for r in bp.eventbridge_rules)
    perms = {(p["caller"], p["callee"]) for p in bp.lambda_invoke_permissions}
    assert {(s.name, c) for s in bp.lambda_functions for c in s.invokes} <= perms


@settings(max_examples=10, deadline=None)
@given(st.data())
def test_property_plan_independent_of_entry_point_order(data):
    name = data.draw(st.sampled_from(APP_FIXTURES))
    report = report_of(name)
    shuffled = replace(report, entry_points=data.draw(st.permutations(report.entry_points)))
    assert plan_blueprint(shuffled).to_dict() == plan_blueprint(report).to_dict()
