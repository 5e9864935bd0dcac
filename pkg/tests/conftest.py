from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import pytest

from slsmigrate.facts import analyze
from slsmigrate.facts.analysis import emit_analysis
from slsmigrate.planner import plan_blueprint, write_blueprint
from slsmigrate.synth import synthesize

FIXTURES = Path(__file__).parent / "fixtures"
APP_FIXTURES = ("flask_todo", "flask_shop", "express_bookstore")
ROUTE_FIXTURES = APP_FIXTURES + ("py_flags", "js_flags")

sys.path.insert(0, str(Path(__file__).parent))


def project(name: str) -> Path:
    return FIXTURES / name / "project"


def expected_routes(name: str) -> set[tuple[str, str, str, str]]:
    return {tuple(r) for r in json.loads((FIXTURES / name / "expected_routes.json").read_text())}


def build_workspace(name: str, out: Path) -> Path:
    """analyze -> plan -> synthesize into ``out`` through the library API."""
    emit_analysis(project(name), out)
    report, _ = analyze(project(name))
    bp = plan_blueprint(report)
    write_blueprint(bp, out)
    synthesize(bp, out)
    return out


@pytest.fixture(scope="session")
def clean_workspaces(tmp_path_factory: pytest.TempPathFactory) -> dict[str, Path]:
    base = tmp_path_factory.mktemp("clean")
    return {name: build_workspace(name, base / name) for name in APP_FIXTURES}


@pytest.fixture
def shop_workspace(clean_workspaces: dict[str, Path], tmp_path: Path) -> Path:
    """A private copy of the clean flask_shop workspace."""
    dst = tmp_path / "ws"
    shutil.copytree(clean_workspaces["flask_shop"], dst)
    return dst


# -- acceptance reporting ----------------------------------------------------

_criteria: dict[int, dict[str, object]] = {}


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item: pytest.Item, call: pytest.CallInfo):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    report = outcome.get_result()
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "failed": False})
    if report.failed or report.skipped:
        entry["failed"] = True


def pytest_terminal_summary(terminalreporter) -> None:
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        verdict = "FAIL" if entry["failed"] else "PASS"
        terminalreporter.write_line(f"criterion {number:2}: {verdict}  {entry['title']}")
