from __future__ import annotations

import ast
import json
import shutil
import time
from collections import defaultdict
from pathlib import Path

import pytest

from conftest import FIXTURES, ROUTE_FIXTURES, expected_routes, project
from slsmigrate import canonical
from slsmigrate.facts import analyze, tag_file
from slsmigrate.facts.analysis import (
    REPORT_NAME,
    SYMBOLS_NAME,
    build_call_graph,
    derive_entry_dependencies,
    emit_analysis,
    extract_entry_points,
    load_project,
)
from slsmigrate.facts.project import EmptyProjectError
from slsmigrate.facts.schemas import extract_tables, locate_dynamodb_schemas, schema_tier
from slsmigrate.facts.model import FileTag


def _write(root: Path, files: dict[str, str]) -> Path:
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return root


def _routes(root: Path) -> set[tuple[str, str, str]]:
    eps, _ = extract_entry_points(load_project(root))
    return {(e.method, e.path, e.handler_function) for e in eps}


# -- entry points ---------------------------------------------------------------


@pytest.mark.parametrize("name", ROUTE_FIXTURES)
def test_fixture_routes_match_hand_enumeration(name):
    start = time.perf_counter()
    eps, _ = extract_entry_points(load_project(project(name)))
    elapsed = time.perf_counter() - start
    got = [(e.method, e.path, e.handler_function, e.file) for e in eps]
    assert len(got) == len(set(got))
    assert set(got) == expected_routes(name)
    assert elapsed < 5


def test_flask_multi_method_expands(tmp_path):
    _write(tmp_path, {"app.py": (
        "from flask import Flask\napp = Flask(__name__)\n\n"
        "@app.route('/todos', methods=['GET', 'POST'])\ndef list_todos():\n    return []\n"
    )})
    assert _routes(tmp_path) == {("GET", "/todos", "list_todos"), ("POST", "/todos", "list_todos")}


def test_flask_blueprint_prefix(tmp_path):
    _write(tmp_path, {
        "cart/routes.py": (
            "from flask import Blueprint\nbp = Blueprint('cart', __name__, url_prefix='/cart')\n\n"
            "@bp.route('/items')\ndef items():\n    return []\n"
        ),
        "app.py": "from flask import Flask\nfrom cart.routes import bp\napp = Flask(__name__)\napp.register_blueprint(bp)\n",
    })
    assert _routes(tmp_path) == {("GET", "/cart/items", "items")}


def test_express_mount_prefix(tmp_path):
    _write(tmp_path, {
        "routes/orders.js": (
            "const express = require('express');\nconst router = express.Router();\n"
            "function h(req, res) { res.json({}); }\nrouter.post('/orders', h);\nmodule.exports = router;\n"
        ),
        "app.js": "const express = require('express');\nconst app = express();\nconst r = require('./routes/orders');\napp.use('/api', r);\n",
    })
    assert _routes(tmp_path) == {("POST", "/api/orders", "h")}


def test_auth_markers_recorded():
    eps, _ = extract_entry_points(load_project(project("flask_todo")))
    by_key = {e.key: e for e in eps}
    assert "login_required" in by_key["GET /todos"].auth_markers
    assert by_key["POST /login"].auth_markers == ()


def test_registration_line_points_at_route_construct():
    eps, _ = extract_entry_points(load_project(project("flask_todo")))
    for e in eps:
        line = (project("flask_todo") / e.file).read_text().splitlines()[e.line - 1]
        assert "route" in line or "." + e.method.lower() in line


def test_unparseable_file_degrades_to_diagnostic(tmp_path):
    _write(tmp_path, {
        "app.py": "from flask import Flask\napp = Flask(__name__)\n\n@app.get('/health')\ndef health():\n    return 'ok'\n",
        "broken.py": "def oops(:\n",
    })
    report, _ = analyze(tmp_path)
    assert [e.key for e in report.entry_points] == ["GET /health"]
    assert any(d.file == "broken.py" for d in report.diagnostics)


# -- call graph ---------------------------------------------------------------


@pytest.mark.parametrize("name", ["py_flags", "js_flags"])
def test_flag_labels_match_hand_classification(name):
    expected = json.loads((FIXTURES / name / "expected_flags.json").read_text())
    edges = build_call_graph(load_project(project(name)))
    got = {(e.line, e.callee_function): (e.return_value_used, e.is_awaited) for e in edges}
    for row in expected:
        assert got[(row["line"], row["callee_function"])] == (row["return_value_used"], row["is_awaited"]), row
    assert len(got) == len(expected)


@pytest.mark.parametrize("name", ["flask_todo", "flask_shop", "express_bookstore", "py_flags", "js_flags"])
def test_edges_are_cross_file_sorted_and_sound(name):
    root = project(name)
    edges = build_call_graph(load_project(root))
    assert edges == sorted(edges, key=lambda e: (e.caller_file, e.line, e.caller_function, e.callee_file, e.callee_function))
    for e in edges:
        assert e.caller_file != e.callee_file
        line = (root / e.caller_file).read_text().splitlines()[e.line - 1]
        assert "(" in line
        assert (root / e.callee_file).is_file()


@pytest.mark.parametrize("name", ["flask_todo", "flask_shop", "py_flags"])
def test_unused_value_means_statement_level_call(name):
    root = project(name)
    for e in build_call_graph(load_project(root)):
        tree = ast.parse((root / e.caller_file).read_text())
        statements = [n for n in ast.walk(tree) if isinstance(n, ast.stmt) and n.lineno == e.line]
        bare = any(
            isinstance(s, ast.Expr) and isinstance(s.value, (ast.Call, ast.Await)) for s in statements
        )
        assert bare == (not e.return_value_used), e


def test_await_only_inside_async_functions():
    lp = load_project(project("py_flags"))
    async_fns = {
        (path, f.name) for path, pf in lp.py.items() for f in pf.symbols.functions if f.is_async
    }
    for e in build_call_graph(lp):
        if e.is_awaited:
            assert (e.caller_file, e.caller_function) in async_fns


@pytest.mark.parametrize("name", ["flask_todo", "flask_shop", "express_bookstore"])
def test_entry_dependencies_match_brute_force_grouping(name):
    lp = load_project(project(name))
    eps, _ = extract_entry_points(lp)
    edges = build_call_graph(lp)
    deps = derive_entry_dependencies(edges, eps)
    assert set(deps) == {e.key for e in eps}
    oracle = defaultdict(list)
    for ep in eps:
        for edge in edges:
            if edge.caller_file == ep.defining_file and edge.caller_function == ep.handler_function:
                oracle[ep.key].append(edge)
    for key, got in deps.items():
        assert sorted(got, key=lambda e: (e.callee_file, e.line)) == sorted(oracle[key], key=lambda e: (e.callee_file, e.line))


def test_shared_helper_copied_to_each_handler(tmp_path):
    _write(tmp_path, {
        "helpers.py": "def audit(x):\n    return x\n",
        "app.py": (
            "from flask import Flask\nfrom helpers import audit\napp = Flask(__name__)\n\n"
            "@app.get('/a')\ndef a():\n    return audit(1)\n\n@app.get('/b')\ndef b():\n    audit(2)\n    return 'ok'\n"
            "\n@app.get('/c')\ndef c():\n    return 'c'\n"
        ),
    })
    report, _ = analyze(tmp_path)
    deps = report.entry_point_dependencies
    assert [e.callee_function for e in deps["GET /a"]] == ["audit"]
    assert [e.callee_function for e in deps["GET /b"]] == ["audit"]
    assert deps["GET /c"] == []


# -- tags and schemas ---------------------------------------------------------------


def test_tag_examples():
    assert tag_file("a.py", "import boto3\n").tags == ("AWS_SDK",)
    assert tag_file("b.py", "x = 1\n").tags == ()
    both = tag_file("c.py", "import jwt\nfrom boto3.dynamodb.conditions import Key\ntable.put_item(Item={})\n")
    assert {"Auth", "DynamoDB"} <= set(both.tags)


def test_tags_deterministic_for_fixed_bytes():
    text = (project("flask_todo") / "db.py").read_text()
    assert tag_file("db.py", text) == tag_file("db.py", text)


def test_schema_locator_examples():
    tags = [FileTag(p, ("DynamoDB",)) for p in ("app.py", "db.py", "init_db.py")]
    assert locate_dynamodb_schemas(tags) == ["init_db.py", "db.py", "app.py"]
    assert locate_dynamodb_schemas([FileTag("routes.py", ("DynamoDB",))]) == ["routes.py"]
    five = [FileTag(p, ("DynamoDB",)) for p in ("e.py", "c.py", "a.py", "d.py", "b.py")]
    assert locate_dynamodb_schemas(five) == ["a.py", "b.py", "c.py"]
    assert locate_dynamodb_schemas([FileTag("x.py", ("Auth",))]) == []


def test_schema_order_is_total():
    paths = ["scripts/create_tables.js", "db/client.js", "models.py", "zeta.py", "alpha/init_db.py"]
    ranked = sorted(paths, key=lambda p: (schema_tier(p), p))
    assert [schema_tier(p) for p in ranked] == sorted(schema_tier(p) for p in paths)


def test_extract_tables_reads_key_schema():
    text = (project("flask_shop") / "common" / "db.py").read_text()
    tables = {t.name: t for t in extract_tables({"common/db.py": text})}
    assert tables["carts"].range_key == "item_id"


# -- emission -------------------------------------------------------------------


def test_emit_analysis_writes_canonical_artifacts(tmp_path):
    emit_analysis(project("flask_todo"), tmp_path)
    report = json.loads((tmp_path / REPORT_NAME).read_text())
    assert len(report["entry_points"]) == 6
    assert set(report) >= {"entry_points", "file_tags", "entry_point_dependencies", "dynamodb_schema_candidates"}
    for name in (REPORT_NAME, SYMBOLS_NAME):
        raw = (tmp_path / name).read_bytes()
        assert raw == canonical.dump_bytes(json.loads(raw))


def test_emit_twice_is_byte_identical(tmp_path):
    emit_analysis(project("express_bookstore"), tmp_path / "a")
    emit_analysis(project("express_bookstore"), tmp_path / "b")
    for name in (REPORT_NAME, SYMBOLS_NAME):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_independent_of_filesystem_order(tmp_path):
    src = project("flask_shop")
    files = sorted(p for p in src.rglob("*") if p.is_file())
    dst = tmp_path / "copy"
    for path in reversed(files):
        target = dst / path.relative_to(src)
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(path, target)
    a, _ = analyze(src)
    b, _ = analyze(dst)
    da, db = a.to_dict(), b.to_dict()
    da.pop("project_root"), db.pop("project_root")
    assert da == db


def test_empty_project_writes_nothing(tmp_path):
    (tmp_path / "src").mkdir()
    (tmp_path / "src" / "README.md").write_text("nothing here")
    out = tmp_path / "out"
    with pytest.raises(EmptyProjectError):
        emit_analysis(tmp_path / "src", out)
    assert not out.exists() or not any(out.iterdir())


@pytest.mark.parametrize("name", ["flask_shop", "express_bookstore"])
def test_symbol_table_invariants(name):
    _, symbols = analyze(project(name))
    files = set(symbols.files)
    for path, fs in symbols.files.items():
        spans = sorted((f.start_line, f.end_line) for f in fs.functions)
        for (_, end), (start, _) in zip(spans, spans[1:]):
            assert end < start, (path, spans)
        for imp in fs.imports:
            assert imp.resolved is None or imp.resolved in files
