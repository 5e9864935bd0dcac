from __future__ import annotations

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import project
from mutations import MUTATIONS
from slsmigrate.cli import main


def tree_hash(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode() + b"\0" + p.read_bytes() + b"\0")
    return h.hexdigest()


def run(*argv: str) -> int:
    return main([str(a) for a in argv])


def test_analyze_writes_artifacts(tmp_path, capsys):
    assert run("analyze", "--project", project("flask_todo"), "--out", tmp_path, "--format", "json") == 0
    assert {p.name for p in tmp_path.iterdir()} >= {"analysis_report.json", "symbol_table.json"}
    assert json.loads(capsys.readouterr().out)["language"] == "python"


def test_plan_without_analysis_is_fatal(tmp_path, capsys):
    assert run("plan", "--out", tmp_path) == 2
    assert "slsmigrate analyze" in capsys.readouterr().err


def test_empty_project_is_fatal(tmp_path):
    (tmp_path / "src").mkdir()
    assert run("analyze", "--project", tmp_path / "src", "--out", tmp_path / "out") == 2


@pytest.mark.parametrize("name", ["flask_shop", "express_bookstore"])
def test_all_is_clean_and_leaves_input_untouched(name, tmp_path, capsys):
    before = tree_hash(project(name))
    assert run("all", "--project", project(name), "--out", tmp_path, "--format", "json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "pass"
    assert tree_hash(project(name)) == before
    assert (tmp_path / "validation_report.json").is_file()


def test_stages_match_all(tmp_path):
    staged, combined = tmp_path / "staged", tmp_path / "combined"
    for stage in ("analyze", "plan", "synthesize", "validate"):
        assert run(stage, "--project", project("flask_todo"), "--out", staged) == 0
    assert run("all", "--project", project("flask_todo"), "--out", combined) == 0
    assert tree_hash(staged) == tree_hash(combined)


def test_validate_reports_findings_and_fixes(shop_workspace, capsys):
    MUTATIONS["C5"][0](shop_workspace)
    assert run("validate", "--out", shop_workspace) == 1
    assert run("validate", "--out", shop_workspace, "--fix", "--format", "json") == 0
    capsys.readouterr()
    MUTATIONS["C7"][0](shop_workspace)
    assert run("validate", "--out", shop_workspace, "--fix", "--format", "json") == 1
    assert json.loads(capsys.readouterr().out)["fix_round"] == 1


def test_lint_exit_codes(clean_workspaces, tmp_path):
    assert run("lint", "--out", clean_workspaces["flask_todo"]) == 0
    bad = tmp_path / "bad.yaml"
    text = (clean_workspaces["flask_todo"] / "template.yaml").read_text()
    bad.write_text(text.replace("Timeout: 30", "Timeout: 30\n    Policies: []"))
    assert run("lint", "--template", bad) == 2
    broken = tmp_path / "broken.yaml"
    broken.write_text("Resources: [\n")
    assert run("lint", "--template", broken) == 2


def test_score_on_own_output(clean_workspaces, tmp_path, capsys):
    ws = clean_workspaces["flask_shop"]
    results = tmp_path / "results.json"
    results.write_text(json.dumps([{"app": "shop", "category": "core", "total": 4, "passed": 3}]))
    code = run(
        "score", "--out", tmp_path, "--format", "json",
        "--generated", ws / "template.yaml", "--reference", ws / "analysis_report.json", "--results", results,
    )
    assert code == 0
    card = json.loads(capsys.readouterr().out)
    assert card["f1_micro"] == 1.0 and card["anti_pattern_count"] == 0 and card["e2epr_micro"] == 0.75
    assert (tmp_path / "scorecard.json").is_file()


def test_tool_subcommands(tmp_path, capsys):
    target = tmp_path / "pkg.json"
    assert run("tool", "write", target, "--content", '{"a": 1}', "--format", "json") == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True
    assert run("tool", "write", target, "--content", "{broken", "--format", "json") == 1
    assert json.loads(capsys.readouterr().out)["ok"] is False
    assert json.loads(target.read_text()) == {"a": 1}
    assert run("tool", "merge", target, "b", '{"c": 2}') == 0
    assert json.loads(target.read_text()) == {"a": 1, "b": {"c": 2}}
    capsys.readouterr()
    assert run("tool", "read", target, "--format", "json") == 0
    assert json.loads(capsys.readouterr().out)["truncated"] is False
    assert run("tool", "list", tmp_path, "--format", "json") == 0
    assert json.loads(capsys.readouterr().out) == [{"path": "pkg.json", "kind": "file"}]
    assert run("tool", "read", tmp_path / "missing.txt") == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "slsmigrate", "plan", "--out", str(tmp_path)], capture_output=True, text=True
    )
    assert proc.returncode == 2 and "analyze" in proc.stderr
