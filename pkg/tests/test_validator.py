from __future__ import annotations

import json

import pytest

from mutations import MUTATIONS, deleted_env_var, removed_table_policy
from slsmigrate.findings import resolve_pointer
from slsmigrate.sam.model import parse_template
from slsmigrate.validator import (
    CHECKS,
    PHASE_OF,
    PRECHECK,
    REPORT_NAME,
    ValidationReport,
    apply_fixes,
    to_json_form,
    validate,
    write_report,
)


@pytest.mark.parametrize("name", ["flask_todo", "flask_shop", "express_bookstore"])
def test_clean_workspace_passes(clean_workspaces, name):
    report = validate(clean_workspaces[name])
    assert report.findings == [] and report.status == "pass"
    assert list(report.checks_run) == list(CHECKS)


def _locus_ok(ws, finding) -> bool:
    target = ws / finding.artifact
    if not target.exists():
        return False
    if finding.pointer == "":
        return True
    if finding.pointer.startswith("#L"):
        return 1 <= int(finding.pointer[2:]) <= len(target.read_text().splitlines())
    if finding.artifact.endswith((".yaml", ".yml")):
        doc = to_json_form(parse_template(target.read_text()).to_document())
    else:
        doc = json.loads(target.read_text())
    return resolve_pointer(doc, finding.pointer)[0]


@pytest.mark.parametrize("check_id", sorted(MUTATIONS, key=lambda c: int(c[1:])))
def test_mutation_triggers_exactly_its_check(shop_workspace, check_id):
    mutate, fixable = MUTATIONS[check_id]
    mutate(shop_workspace)
    report = validate(shop_workspace)
    assert report.checks_failed() == [check_id]
    assert all(_locus_ok(shop_workspace, f) for f in report.findings)
    for f in report.findings:
        assert (f.mechanical_fix is not None) == fixable
        assert fixable or f.fix_hint

    _, after = apply_fixes(shop_workspace, report)
    assert after.fix_round == 1
    assert after.checks_failed() == ([] if fixable else [check_id])


def test_route_mismatch_stays_with_a_hint(shop_workspace):
    MUTATIONS["C7"][0](shop_workspace)
    _, after = apply_fixes(shop_workspace, validate(shop_workspace))
    (finding,) = after.findings
    assert finding.check_id == "C7" and "/orders/{order_id}" in finding.fix_hint


def test_two_mechanical_findings_fixed_in_one_batch(shop_workspace):
    deleted_env_var(shop_workspace)
    removed_table_policy(shop_workspace)
    report = validate(shop_workspace)
    assert report.checks_failed() == ["C4", "C5"]
    _, after = apply_fixes(shop_workspace, report)
    assert after.findings == []


def test_fix_round_is_bounded(shop_workspace):
    MUTATIONS["C1"][0](shop_workspace)
    _, after = apply_fixes(shop_workspace, validate(shop_workspace))
    _, again = apply_fixes(shop_workspace, after)
    assert again is after


def test_missing_template_is_precheck_finding(shop_workspace):
    (shop_workspace / "template.yaml").unlink()
    report = validate(shop_workspace)
    assert [f.check_id for f in report.findings] == [PRECHECK]
    assert PHASE_OF[PRECHECK] == "A"
    assert list(report.checks_run) == list(CHECKS)


def test_unparseable_blueprint_is_precheck_finding(shop_workspace):
    (shop_workspace / "blueprint.json").write_text("{not json")
    assert {f.check_id for f in validate(shop_workspace).findings} == {PRECHECK}


def test_report_round_trip(shop_workspace):
    MUTATIONS["C4"][0](shop_workspace)
    MUTATIONS["C7"][0](shop_workspace)
    report = validate(shop_workspace)
    path = write_report(report, shop_workspace)
    assert path.name == REPORT_NAME
    data = json.loads(path.read_text())
    assert data["status"] == "fail"
    assert set(data["findings"]) <= {"A", "B", "C", "D", "E"}
    restored = ValidationReport.from_dict(data)
    assert sorted(f.sort_key() for f in restored.findings) == sorted(f.sort_key() for f in report.findings)
    assert restored.checks_run == report.checks_run


def test_validation_is_deterministic(shop_workspace):
    MUTATIONS["C10"][0](shop_workspace)
    assert validate(shop_workspace).to_dict() == validate(shop_workspace).to_dict()
