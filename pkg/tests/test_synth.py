from __future__ import annotations

import ast
import json

import pytest
import yaml

from conftest import APP_FIXTURES, project
from slsmigrate.facts import analyze
from slsmigrate.planner import Blueprint, plan_blueprint
from slsmigrate.sam.lint import find_cfn_lint, lint_template, run_cfn_lint
from slsmigrate.sam.model import parse_template
from slsmigrate.synth import (
    LAYER_ID,
    MANIFEST_NAME,
    TEMPLATE_NAME,
    SynthesisError,
    stub_files,
    synthesize,
    synthesize_template,
)

_plans: dict[str, Blueprint] = {}


def blueprint(name: str) -> Blueprint:
    if name not in _plans:
        _plans[name] = plan_blueprint(analyze(project(name))[0])
    return Blueprint.from_dict(json.loads(json.dumps(_plans[name].to_dict())))


KIND_RANK = {
    "AWS::Serverless::LayerVersion": 0,
    "AWS::DynamoDB::Table": 1,
    "AWS::S3::Bucket": 1,
    "AWS::SQS::Queue": 1,
    "AWS::Cognito::UserPool": 1,
    "AWS::Cognito::UserPoolClient": 1,
    "AWS::Serverless::Api": 1,
    "AWS::Serverless::Function": 2,
    "AWS::Events::Rule": 3,
    "AWS::Lambda::Permission": 3,
}


@pytest.mark.parametrize("name", APP_FIXTURES)
def test_resources_are_layered(name):
    t = synthesize_template(blueprint(name))
    ranks = [KIND_RANK[r.type] for r in t.resources.values()]
    assert ranks == sorted(ranks)
    order = {lid: i for i, lid in enumerate(t.resources)}
    for ref in t.references():
        if ref.source is not None and ref.target in order:
            assert order[ref.target] < order[ref.source], ref


@pytest.mark.parametrize("name", APP_FIXTURES)
def test_template_lints_clean(name):
    assert [f for f in lint_template(synthesize_template(blueprint(name))) if f.fatal] == []


def test_auth_events_and_cors():
    bp = blueprint("flask_shop")
    t = synthesize_template(bp)
    api = t.resources["Api"].properties
    assert api["Auth"]["DefaultAuthorizer"] == "CognitoAuthorizer"
    assert "AllowCredentials" not in api["Cors"]
    for spec in bp.lambda_functions:
        if spec.is_http:
            auth = t.resources[spec.logical_id].properties["Events"]["Api"]["Properties"]["Auth"]
            assert auth["Authorizer"] == ("NONE" if spec.auth == "none" else "CognitoAuthorizer")


def test_two_target_rule_has_two_permissions():
    t = synthesize_template(blueprint("flask_shop"))
    rules = [r for r in t.resources.values() if r.type == "AWS::Events::Rule"]
    assert len(rules) == 1 and len(rules[0].properties["Targets"]) == 2
    perms = [r for r in t.resources.values() if r.type == "AWS::Lambda::Permission"]
    assert len(perms) == 2
    assert {p.properties["FunctionName"].target for p in perms} == {
        tgt["Id"] for tgt in rules[0].properties["Targets"]
    }


def test_undeclared_queue_is_rejected():
    bp = blueprint("flask_shop")
    consumer = next(s for s in bp.lambda_functions if s.trigger == "sqs")
    consumer.consumes = "no-such-queue"
    with pytest.raises(SynthesisError):
        synthesize_template(bp)


def test_python_stubs_read_declared_env_and_have_no_manifest():
    bp = blueprint("flask_shop")
    files = stub_files(bp)
    assert not any(p.endswith("requirements.txt") for p in files)
    for spec in bp.lambda_functions:
        source = files[f"lambdas/{spec.name}/handler.py"]
        tree = ast.parse(source)
        assert any(isinstance(n, ast.FunctionDef) and n.name == "lambda_handler" for n in tree.body)
        for var in spec.env_vars:
            assert f'os.environ["{var}"]' in source
        assert ("from shared_utils import" in source) == spec.uses_shared_layer


def test_node_stubs_are_commonjs_with_declared_packages():
    bp = blueprint("express_bookstore")
    files = stub_files(bp)
    for spec in bp.lambda_functions:
        source = files[f"lambdas/{spec.name}/handler.js"]
        assert "require(" in source or "exports" in source
        assert "import " not in source and "export " not in source
        manifest = files.get(f"lambdas/{spec.name}/package.json")
        if spec.publishes_to or spec.env_vars:
            assert manifest is not None
        if manifest is not None:
            data = json.loads(manifest)
            assert data.get("type") != "module" and data["dependencies"]
            for pkg in data["dependencies"]:
                assert f'require("{pkg}")' in source or f"require('{pkg}')" in source


def test_collision_writes_nothing(tmp_path):
    existing = tmp_path / TEMPLATE_NAME
    existing.write_text("hand written\n")
    with pytest.raises(SynthesisError):
        synthesize(blueprint("flask_todo"), tmp_path)
    assert [p.name for p in tmp_path.iterdir()] == [TEMPLATE_NAME]
    assert existing.read_text() == "hand written\n"


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_synthesis_is_idempotent_and_removes_stale_files(tmp_path):
    bp = blueprint("flask_shop")
    synthesize(bp, tmp_path)
    first = _snapshot(tmp_path)
    synthesize(bp, tmp_path)
    assert _snapshot(tmp_path) == first
    manifest = json.loads((tmp_path / MANIFEST_NAME).read_text())["files"]
    assert set(manifest) | {MANIFEST_NAME} == set(first)

    gone = next(s for s in bp.lambda_functions if s.name == "get-health")
    bp.lambda_functions.remove(gone)
    synthesize(bp, tmp_path)
    assert not (tmp_path / "lambdas" / gone.name).exists()


def test_generated_yaml_is_plain_yaml(tmp_path):
    synthesize(blueprint("flask_todo"), tmp_path)
    text = (tmp_path / TEMPLATE_NAME).read_text()
    t = parse_template(text)
    assert LAYER_ID in t.resources or not blueprint("flask_todo").uses_layer
    assert "Resources" in yaml.load(text, Loader=yaml.BaseLoader)


@pytest.mark.skipif(find_cfn_lint() is None, reason="cfn-lint not installed")
@pytest.mark.parametrize("name", APP_FIXTURES)
def test_cfn_lint_agrees(name, tmp_path):
    synthesize(blueprint(name), tmp_path)
    assert run_cfn_lint(tmp_path / TEMPLATE_NAME) == []
