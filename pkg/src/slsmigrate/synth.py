"""Template and handler-stub synthesis from a blueprint."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from slsmigrate import canonical
from slsmigrate.planner import (
    EVENT_BUS_ENV,
    Blueprint,
    LambdaSpec,
    function_logical_id,
    invoke_env_var,
    pascal,
)
from slsmigrate.sam.model import Resource, Template, serialize_template
from slsmigrate.sam.yamlio import GetAtt, Ref, Sub
from slsmigrate.sdk import SDK_PACKAGE_VERSION
from slsmigrate.tools import infer_validation, write_file

TEMPLATE_NAME = "template.yaml"
MANIFEST_NAME = ".slsmigrate-manifest.json"
LAYER_ID = "SharedLayer"
LAYER_DIR = "layers/shared"
LAYER_MODULE = "shared_utils"
FUNCTION_TIMEOUT = 30
QUEUE_VISIBILITY_TIMEOUT = 6 * FUNCTION_TIMEOUT
PYTHON_HANDLER = "handler.lambda_handler"
NODE_HANDLER = "handler.handler"


class SynthesisError(ValueError):
    pass


def is_python(runtime: str) -> bool:
    return runtime.startswith("python")


def handler_property(runtime: str) -> str:
    return PYTHON_HANDLER if is_python(runtime) else NODE_HANDLER


def layer_subdir(runtime: str) -> str:
    return "python" if is_python(runtime) else "nodejs"


def rule_target_permission_id(target: str) -> str:
    return pascal(target) + "Permission"


# -- resolution helpers ----------------------------------------------------


@dataclass
class EnvBindings:
    """Environment value and IAM policy backing each blueprint env var."""

    values: dict[str, Any]
    policies: dict[str, dict[str, Any]]


def env_bindings(bp: Blueprint) -> EnvBindings:
    values: dict[str, Any] = {EVENT_BUS_ENV: "default"}
    policies: dict[str, dict[str, Any]] = {
        EVENT_BUS_ENV: {"EventBridgePutEventsPolicy": {"EventBusName": "default"}}
    }
    for t in bp.dynamodb_tables:
        values[t["env_var"]] = Ref(t["logical_id"])
        policies[t["env_var"]] = {"DynamoDBCrudPolicy": {"TableName": Ref(t["logical_id"])}}
    for b in bp.s3_buckets:
        values[b["env_var"]] = Ref(b["logical_id"])
        policies[b["env_var"]] = {"S3CrudPolicy": {"BucketName": Ref(b["logical_id"])}}
    for q in bp.sqs_queues:
        values[q["env_var"]] = Ref(q["logical_id"])
        policies[q["env_var"]] = {"SQSSendMessagePolicy": {"QueueName": GetAtt(q["logical_id"], "QueueName")}}
    for s in bp.lambda_functions:
        fid = function_logical_id(s.name)
        values[invoke_env_var(s.name)] = Ref(fid)
        policies[invoke_env_var(s.name)] = {"LambdaInvokePolicy": {"FunctionName": Ref(fid)}}
    return EnvBindings(values, policies)


def _check_references(bp: Blueprint) -> None:
    names = {s.name for s in bp.lambda_functions}
    for s in bp.lambda_functions:
        for t in s.publishes_to:
            found = bp.queue(t.target_name) if t.kind == "sqs_queue" else bp.rule(t.target_name)
            if found is None:
                raise SynthesisError(f"Lambda {s.name} publishes to undeclared {t.kind} {t.target_name}")
        for callee in s.invokes:
            if callee not in names:
                raise SynthesisError(f"Lambda {s.name} invokes undeclared Lambda {callee}")
        if s.trigger == "sqs" and bp.queue(s.consumes or "") is None:
            raise SynthesisError(f"Lambda {s.name} consumes undeclared queue {s.consumes}")
        if s.trigger == "eventbridge" and bp.rule(s.consumes or "") is None:
            raise SynthesisError(f"Lambda {s.name} consumes undeclared rule {s.consumes}")


def function_order(bp: Blueprint) -> list[LambdaSpec]:
    """Specs by name, with every invoke callee placed before its caller."""
    pending = sorted(bp.lambda_functions, key=lambda s: s.name)
    placed: list[LambdaSpec] = []
    done: set[str] = set()
    while pending:
        for s in pending:
            if all(c in done for c in s.invokes):
                placed.append(s)
                done.add(s.name)
                pending.remove(s)
                break
        else:
            raise SynthesisError("cyclic invokes between Lambdas: " + ", ".join(s.name for s in pending))
    return placed


# -- template --------------------------------------------------------------


def synthesize_template(bp: Blueprint) -> Template:
    _check_references(bp)
    runtime = bp.runtime
    t = Template(
        header={
            "AWSTemplateFormatVersion": "2010-09-09",
            "Transform": "AWS::Serverless-2016-10-31",
            "Description": "Serverless application migrated from a monolith",
        },
        globals={"Function": {"Timeout": FUNCTION_TIMEOUT, "MemorySize": 256}},
    )
    res = t.resources

    # Sub-task 1: shared stateful resources.
    if bp.uses_layer:
        res[LAYER_ID] = Resource(
            LAYER_ID,
            "AWS::Serverless::LayerVersion",
            {
                "LayerName": Sub("${AWS::StackName}-shared"),
                "ContentUri": f"{LAYER_DIR}/",
                "CompatibleRuntimes": [runtime],
            },
            {"Metadata": {"BuildMethod": runtime}},
        )
    for table in bp.dynamodb_tables:
        attrs = [{"AttributeName": table["hash_key"], "AttributeType": table["hash_type"]}]
        keys = [{"AttributeName": table["hash_key"], "KeyType": "HASH"}]
        if table.get("range_key"):
            attrs.append({"AttributeName": table["range_key"], "AttributeType": table.get("range_type") or "S"})
            keys.append({"AttributeName": table["range_key"], "KeyType": "RANGE"})
        res[table["logical_id"]] = Resource(
            table["logical_id"],
            "AWS::DynamoDB::Table",
            {"BillingMode": "PAY_PER_REQUEST", "AttributeDefinitions": attrs, "KeySchema": keys},
        )
    for bucket in bp.s3_buckets:
        res[bucket["logical_id"]] = Resource(bucket["logical_id"], "AWS::S3::Bucket", {})
    for queue in bp.sqs_queues:
        res[queue["logical_id"]] = Resource(
            queue["logical_id"], "AWS::SQS::Queue", {"VisibilityTimeout": QUEUE_VISIBILITY_TIMEOUT}
        )
    if bp.cognito:
        pool, client = bp.cognito["user_pool"], bp.cognito["user_pool_client"]
        res[pool] = Resource(
            pool,
            "AWS::Cognito::UserPool",
            {
                "UserPoolName": Sub("${AWS::StackName}-users"),
                "UsernameAttributes": ["email"],
                "AutoVerifiedAttributes": ["email"],
            },
        )
        res[client] = Resource(
            client,
            "AWS::Cognito::UserPoolClient",
            {
                "UserPoolId": Ref(pool),
                "GenerateSecret": False,
                "ExplicitAuthFlows": ["ALLOW_USER_PASSWORD_AUTH", "ALLOW_REFRESH_TOKEN_AUTH"],
            },
        )
    api = bp.api_gateway
    api_id = api.get("logical_id", "Api")
    stage = api.get("stage", "Prod")
    api_props: dict[str, Any] = {
        "StageName": stage,
        "Cors": {
            "AllowOrigin": "'*'",
            "AllowHeaders": "'Content-Type,Authorization'",
            "AllowMethods": "'GET,POST,PUT,PATCH,DELETE,OPTIONS'",
        },
    }
    authorizer = api.get("default_authorizer")
    if authorizer and bp.cognito:
        api_props["Auth"] = {
            "DefaultAuthorizer": authorizer,
            "AddDefaultAuthorizerToCorsPreflight": False,
            "Authorizers": {authorizer: {"UserPoolArn": GetAtt(bp.cognito["user_pool"], "Arn")}},
        }
    res[api_id] = Resource(api_id, "AWS::Serverless::Api", api_props)

    # Sub-task 2: one Function per spec.
    env = env_bindings(bp)
    for spec in function_order(bp):
        res[spec.logical_id] = Resource(spec.logical_id, "AWS::Serverless::Function", _function_props(bp, spec, env))

    # Sub-task 3: EventBridge rules, their invoke permissions, Outputs.
    for rule in bp.eventbridge_rules:
        rid = rule["logical_id"]
        res[rid] = Resource(
            rid,
            "AWS::Events::Rule",
            {
                "EventBusName": "default",
                "EventPattern": {"source": [rule["source"]], "detail-type": [rule["detail_type"]]},
                "State": "ENABLED",
                "Targets": [
                    {"Arn": GetAtt(function_logical_id(name), "Arn"), "Id": function_logical_id(name)}
                    for name in rule["targets"]
                ],
            },
        )
        for name in rule["targets"]:
            pid = rule_target_permission_id(name)
            res[pid] = Resource(
                pid,
                "AWS::Lambda::Permission",
                {
                    "Action": "lambda:InvokeFunction",
                    "FunctionName": Ref(function_logical_id(name)),
                    "Principal": "events.amazonaws.com",
                    "SourceArn": GetAtt(rid, "Arn"),
                },
            )
    base_url = f"https://${{{api_id}}}.execute-api.${{AWS::Region}}.amazonaws.com/{stage}"
    t.outputs["ApiUrl"] = {"Description": "API base URL", "Value": Sub(base_url)}
    for spec in bp.lambda_functions:
        if spec.is_http:
            t.outputs[pascal(spec.name) + "Url"] = {
                "Description": f"{spec.method} {spec.path}",
                "Value": Sub(base_url + (spec.path or "")),
            }
    if bp.cognito:
        t.outputs["UserPoolId"] = {"Value": Ref(bp.cognito["user_pool"])}
        t.outputs["UserPoolClientId"] = {"Value": Ref(bp.cognito["user_pool_client"])}
    return t


def _function_props(bp: Blueprint, spec: LambdaSpec, env: EnvBindings) -> dict[str, Any]:
    props: dict[str, Any] = {
        "Handler": handler_property(spec.runtime),
        "Runtime": spec.runtime,
        "CodeUri": f"lambdas/{spec.name}/",
    }
    if spec.uses_shared_layer:
        props["Layers"] = [Ref(LAYER_ID)]
    if spec.env_vars:
        missing = [v for v in spec.env_vars if v not in env.values]
        if missing:
            raise SynthesisError(f"Lambda {spec.name} declares env vars with no backing resource: {', '.join(missing)}")
        props["Environment"] = {"Variables": {v: env.values[v] for v in spec.env_vars}}
        props["Policies"] = [env.policies[v] for v in spec.env_vars]
    events: dict[str, Any] = {}
    if spec.is_http:
        event_props: dict[str, Any] = {
            "RestApiId": Ref(bp.api_gateway.get("logical_id", "Api")),
            "Path": spec.path,
            "Method": (spec.method or "GET").lower(),
        }
        default = bp.api_gateway.get("default_authorizer") if bp.cognito else None
        if default and spec.auth == "none":
            event_props["Auth"] = {"Authorizer": "NONE"}
        elif default and spec.auth == "required":
            event_props["Auth"] = {"Authorizer": default}
        events["Api"] = {"Type": "Api", "Properties": event_props}
    elif spec.trigger == "sqs":
        queue = bp.queue(spec.consumes or "")
        assert queue is not None
        events["Queue"] = {
            "Type": "SQS",
            "Properties": {"Queue": GetAtt(queue["logical_id"], "Arn"), "BatchSize": 10},
        }
    if events:
        props["Events"] = events
    return props


# -- stubs -----------------------------------------------------------------


def _tables_of(bp: Blueprint, spec: LambdaSpec) -> list[dict[str, Any]]:
    return [t for t in bp.dynamodb_tables if t["env_var"] in spec.env_vars]


def _python_stub(bp: Blueprint, spec: LambdaSpec) -> str:
    tables = _tables_of(bp, spec)
    buckets = [b for b in bp.s3_buckets if b["env_var"] in spec.env_vars]
    queues = [bp.queue(t.target_name) for t in spec.publishes_to if t.kind == "sqs_queue"]
    rules = [bp.rule(t.target_name) for t in spec.publishes_to if t.kind == "eventbridge_rule"]
    what = f"{spec.method} {spec.path}" if spec.is_http else f"{spec.trigger} consumer of {spec.consumes}"
    lines = [f'"""Lambda entry point for {spec.name} ({what})."""', "", "import json", "import os", ""]
    if tables or buckets or queues or rules or spec.invokes:
        lines += ["import boto3", ""]
    if spec.uses_shared_layer:
        lines += [f"from {LAYER_MODULE} import json_response", ""]
    for var in spec.env_vars:
        lines.append(f'{var} = os.environ["{var}"]')
    if spec.env_vars:
        lines.append("")
    if tables:
        lines.append('dynamodb = boto3.resource("dynamodb")')
        for t in tables:
            lines.append(f'{t["name"].replace("-", "_").lower()}_table = dynamodb.Table({t["env_var"]})')
    if buckets:
        lines.append('s3 = boto3.client("s3")')
    if queues:
        lines.append('sqs = boto3.client("sqs")')
    if rules:
        lines.append('events = boto3.client("events")')
    if spec.invokes:
        lines.append('lambda_client = boto3.client("lambda")')
    if tables or buckets or queues or rules or spec.invokes:
        lines.append("")
    lines += ["", "def lambda_handler(event, context):"]
    if spec.is_http:
        lines += [
            '    claims = ((event.get("requestContext") or {}).get("authorizer") or {}).get("claims") or {}',
            "    payload = {",
            f'        "function": "{spec.name}",',
            '        "user": claims.get("sub"),',
            '        "path_parameters": event.get("pathParameters") or {},',
            '        "body": json.loads(event.get("body") or "null"),',
            "    }",
        ]
    elif spec.trigger == "sqs":
        lines += [
            '    records = [json.loads(r["body"]) for r in event.get("Records", [])]',
            f'    payload = {{"function": "{spec.name}", "records": records}}',
        ]
    else:
        lines += [f'    payload = {{"function": "{spec.name}", "detail": event.get("detail") or {{}}}}']
    for b in buckets:
        lines.append(f'    s3.put_object(Bucket={b["env_var"]}, Key="echo.json", Body=json.dumps(payload))')
    for q in queues:
        assert q is not None
        lines.append(f'    sqs.send_message(QueueUrl={q["env_var"]}, MessageBody=json.dumps(payload))')
    for r in rules:
        assert r is not None
        lines += [
            "    events.put_events(",
            "        Entries=[",
            "            {",
            f'                "Source": "{r["source"]}",',
            f'                "DetailType": "{r["detail_type"]}",',
            '                "Detail": json.dumps(payload),',
            f'                "EventBusName": {EVENT_BUS_ENV},',
            "            }",
            "        ]",
            "    )",
        ]
    for callee in spec.invokes:
        lines.append(
            f'    lambda_client.invoke(FunctionName={invoke_env_var(callee)}, InvocationType="RequestResponse", '
            "Payload=json.dumps(payload))"
        )
    if spec.uses_shared_layer:
        lines.append("    return json_response(200, payload)")
    else:
        lines.append('    return {"statusCode": 200, "headers": {"Content-Type": "application/json"}, "body": json.dumps(payload)}')
    return "\n".join(lines) + "\n"


def _node_stub(bp: Blueprint, spec: LambdaSpec) -> tuple[str, list[str]]:
    tables = _tables_of(bp, spec)
    buckets = [b for b in bp.s3_buckets if b["env_var"] in spec.env_vars]
    queues = [bp.queue(t.target_name) for t in spec.publishes_to if t.kind == "sqs_queue"]
    rules = [bp.rule(t.target_name) for t in spec.publishes_to if t.kind == "eventbridge_rule"]
    packages: list[str] = []
    what = f"{spec.method} {spec.path}" if spec.is_http else f"{spec.trigger} consumer of {spec.consumes}"
    lines = [f"// Lambda entry point for {spec.name} ({what}).", "'use strict';", ""]
    if tables:
        lines.append("const { DynamoDBClient } = require('@aws-sdk/client-dynamodb');")
        lines.append("const { DynamoDBDocumentClient, GetCommand } = require('@aws-sdk/lib-dynamodb');")
        packages += ["@aws-sdk/client-dynamodb", "@aws-sdk/lib-dynamodb"]
    if buckets:
        lines.append("const { S3Client, PutObjectCommand } = require('@aws-sdk/client-s3');")
        packages.append("@aws-sdk/client-s3")
    if queues:
        lines.append("const { SQSClient, SendMessageCommand } = require('@aws-sdk/client-sqs');")
        packages.append("@aws-sdk/client-sqs")
    if rules:
        lines.append("const { EventBridgeClient, PutEventsCommand } = require('@aws-sdk/client-eventbridge');")
        packages.append("@aws-sdk/client-eventbridge")
    if spec.invokes:
        lines.append("const { LambdaClient, InvokeCommand } = require('@aws-sdk/client-lambda');")
        packages.append("@aws-sdk/client-lambda")
    if spec.uses_shared_layer:
        lines.append(f"const {{ jsonResponse }} = require('/opt/nodejs/{LAYER_MODULE}');")
    if len(lines) > 3:
        lines.append("")
    for var in spec.env_vars:
        lines.append(f"const {var} = process.env.{var};")
    if spec.env_vars:
        lines.append("")
    if tables:
        lines.append("const doc = DynamoDBDocumentClient.from(new DynamoDBClient({}));")
    if buckets:
        lines.append("const s3 = new S3Client({});")
    if queues:
        lines.append("const sqs = new SQSClient({});")
    if rules:
        lines.append("const events = new EventBridgeClient({});")
    if spec.invokes:
        lines.append("const lambda = new LambdaClient({});")
    if tables or buckets or queues or rules or spec.invokes:
        lines.append("")
    for t in tables:
        fn = pascal(t["name"])
        lines += [
            f"async function get{fn}Item(key) {{",
            f"  const out = await doc.send(new GetCommand({{ TableName: {t['env_var']}, Key: key }}));",
            "  return out.Item;",
            "}",
            "",
        ]
    lines.append("exports.handler = async (event) => {")
    if spec.is_http:
        lines += [
            "  const claims = ((event.requestContext || {}).authorizer || {}).claims || {};",
            "  const payload = {",
            f"    function: '{spec.name}',",
            "    user: claims.sub || null,",
            "    pathParameters: event.pathParameters || {},",
            "    body: event.body ? JSON.parse(event.body) : null,",
            "  };",
        ]
    elif spec.trigger == "sqs":
        lines += [
            "  const records = (event.Records || []).map((r) => JSON.parse(r.body));",
            f"  const payload = {{ function: '{spec.name}', records }};",
        ]
    else:
        lines.append(f"  const payload = {{ function: '{spec.name}', detail: event.detail || {{}} }};")
    for b in buckets:
        lines.append(
            f"  await s3.send(new PutObjectCommand({{ Bucket: {b['env_var']}, Key: 'echo.json', Body: JSON.stringify(payload) }}));"
        )
    for q in queues:
        assert q is not None
        lines.append(f"  await sqs.send(new SendMessageCommand({{ QueueUrl: {q['env_var']}, MessageBody: JSON.stringify(payload) }}));")
    for r in rules:
        assert r is not None
        lines += [
            "  await events.send(",
            "    new PutEventsCommand({",
            "      Entries: [",
            "        {",
            f"          Source: '{r['source']}',",
            f"          DetailType: '{r['detail_type']}',",
            "          Detail: JSON.stringify(payload),",
            f"          EventBusName: {EVENT_BUS_ENV},",
            "        },",
            "      ],",
            "    }),",
            "  );",
        ]
    for callee in spec.invokes:
        lines.append(
            f"  await lambda.send(new InvokeCommand({{ FunctionName: {invoke_env_var(callee)}, "
            "Payload: Buffer.from(JSON.stringify(payload)) }));"
        )
    if spec.uses_shared_layer:
        lines.append("  return jsonResponse(200, payload);")
    else:
        lines.append(
            "  return { statusCode: 200, headers: { 'Content-Type': 'application/json' }, body: JSON.stringify(payload) };"
        )
    lines.append("};")
    return "\n".join(lines) + "\n", sorted(set(packages))


_PY_LAYER = '''"""Helpers shared by several Lambdas; mounted under /opt/python."""

import json


def json_response(status, payload):
    return {
        "statusCode": status,
        "headers": {"Content-Type": "application/json"},
        "body": json.dumps(payload, default=str),
    }
'''

_NODE_LAYER = """// Helpers shared by several Lambdas; mounted under /opt/nodejs.
'use strict';

function jsonResponse(status, payload) {
  return {
    statusCode: status,
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(payload),
  };
}

module.exports = { jsonResponse };
"""


def stub_files(bp: Blueprint) -> dict[str, str]:
    """Relative path -> content for every generated code file."""
    files: dict[str, str] = {}
    for spec in bp.lambda_functions:
        base = f"lambdas/{spec.name}"
        if is_python(spec.runtime):
            files[f"{base}/handler.py"] = _python_stub(bp, spec)
            # Stubs only need boto3, which the runtime bundles: no requirements.txt.
        else:
            source, packages = _node_stub(bp, spec)
            files[f"{base}/handler.js"] = source
            if packages:
                manifest = {
                    "name": spec.name,
                    "version": "1.0.0",
                    "private": True,
                    "main": "handler.js",
                    "dependencies": {p: SDK_PACKAGE_VERSION for p in packages},
                }
                files[f"{base}/package.json"] = json.dumps(manifest, indent=2) + "\n"
    if bp.uses_layer:
        sub = layer_subdir(bp.runtime)
        ext = "py" if sub == "python" else "js"
        files[f"{LAYER_DIR}/{sub}/{LAYER_MODULE}.{ext}"] = _PY_LAYER if sub == "python" else _NODE_LAYER
    return files


def synthesize_stubs(bp: Blueprint, out_dir: str | Path) -> list[str]:
    return synthesize(bp, out_dir, include_template=False)


# -- writing ---------------------------------------------------------------


def _previous_manifest(out: Path) -> set[str]:
    path = out / MANIFEST_NAME
    if not path.exists():
        return set()
    try:
        return set(json.loads(path.read_text("utf-8")).get("files", []))
    except (json.JSONDecodeError, AttributeError):
        return set()


def synthesize(bp: Blueprint, out_dir: str | Path, include_template: bool = True) -> list[str]:
    """Write template.yaml and stubs under ``out_dir``; returns the generated relative paths.

    Files already present but not produced by an earlier run are collisions:
    the call fails before anything is written.
    """
    out = Path(out_dir)
    files = stub_files(bp)
    if include_template:
        files[TEMPLATE_NAME] = serialize_template(synthesize_template(bp))
    previous = _previous_manifest(out)
    collisions = sorted(p for p in files if (out / p).exists() and p not in previous)
    if collisions:
        raise SynthesisError("refusing to overwrite non-generated files: " + ", ".join(collisions))
    for rel in sorted(previous - set(files)):
        stale = out / rel
        if stale.is_file():
            stale.unlink()
            parent = stale.parent
            while parent != out and parent.is_dir() and not any(parent.iterdir()):
                parent.rmdir()
                parent = parent.parent
    for rel in sorted(files):
        receipt = write_file(out / rel, files[rel], infer_validation(rel))
        if not receipt.ok:
            raise SynthesisError(f"generated {rel} failed validation: {receipt.error}")
    keep = sorted(set(files) | (previous if not include_template else set()))
    write_file(out / MANIFEST_NAME, canonical.dumps({"files": keep}), "json")
    return sorted(files)
