"""Lexical tables for SDK calls and environment reads in handler sources.

Shared by the stub generator (which emits these shapes) and the validator
(which recognizes them). Detection is purely textual.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

PYTHON_ENV_READS = (
    re.compile(r"""os\.environ\[\s*['"](\w+)['"]\s*\]"""),
    re.compile(r"""os\.environ\.get\(\s*['"](\w+)['"]"""),
    re.compile(r"""os\.getenv\(\s*['"](\w+)['"]"""),
)
NODE_ENV_READS = (
    re.compile(r"process\.env\.(\w+)"),
    re.compile(r"""process\.env\[\s*['"](\w+)['"]\s*\]"""),
)


@dataclass(frozen=True)
class SdkRule:
    family: str  # dynamodb | s3 | lambda | sqs | events
    policy: str
    pattern: re.Pattern[str]
    # Policy property naming the resource; None when the policy is not resource-scoped.
    policy_key: str | None


PYTHON_SDK_RULES = (
    SdkRule("dynamodb", "DynamoDBCrudPolicy", re.compile(r"\.Table\(\s*([A-Z][A-Z0-9_]*)\s*\)"), "TableName"),
    SdkRule("s3", "S3CrudPolicy", re.compile(r"\bs3\.\w+\([^)]*\bBucket=([A-Z][A-Z0-9_]*)"), "BucketName"),
    SdkRule(
        "lambda",
        "LambdaInvokePolicy",
        re.compile(r"\blambda_client\.invoke\([^)]*\bFunctionName=([A-Z][A-Z0-9_]*)"),
        "FunctionName",
    ),
    SdkRule("sqs", "SQSSendMessagePolicy", re.compile(r"\bsqs\.send_message\([^)]*\bQueueUrl=([A-Z][A-Z0-9_]*)"), "QueueName"),
    SdkRule("events", "EventBridgePutEventsPolicy", re.compile(r"\bevents\.put_events\("), None),
)
NODE_SDK_RULES = (
    SdkRule("dynamodb", "DynamoDBCrudPolicy", re.compile(r"\bTableName:\s*([A-Z][A-Z0-9_]*)"), "TableName"),
    SdkRule("s3", "S3CrudPolicy", re.compile(r"\bBucket:\s*([A-Z][A-Z0-9_]*)"), "BucketName"),
    SdkRule("lambda", "LambdaInvokePolicy", re.compile(r"\bInvokeCommand\(\{\s*FunctionName:\s*([A-Z][A-Z0-9_]*)"), "FunctionName"),
    SdkRule("sqs", "SQSSendMessagePolicy", re.compile(r"\bSendMessageCommand\(\{\s*QueueUrl:\s*([A-Z][A-Z0-9_]*)"), "QueueName"),
    SdkRule("events", "EventBridgePutEventsPolicy", re.compile(r"\bPutEventsCommand\("), None),
)


@dataclass(frozen=True)
class SdkCall:
    family: str
    policy: str
    policy_key: str | None
    env_var: str | None
    line: int


def env_reads(source: str, language: str) -> list[str]:
    patterns = PYTHON_ENV_READS if language == "python" else NODE_ENV_READS
    found: set[str] = set()
    for p in patterns:
        found.update(p.findall(source))
    return sorted(found)


def sdk_calls(source: str, language: str) -> list[SdkCall]:
    rules = PYTHON_SDK_RULES if language == "python" else NODE_SDK_RULES
    calls: list[SdkCall] = []
    for rule in rules:
        for m in rule.pattern.finditer(source):
            env = m.group(1) if m.groups() else None
            line = source.count("\n", 0, m.start()) + 1
            calls.append(SdkCall(rule.family, rule.policy, rule.policy_key, env, line))
    return sorted(calls, key=lambda c: (c.line, c.family))


# Packages preinstalled in the python3.12 Lambda runtime; listing them is an error.
PYTHON_BUILTIN_PACKAGES = frozenset({"boto3", "botocore", "s3transfer", "jmespath", "urllib3", "python-dateutil", "six"})
NODE_BUILTIN_MODULES = frozenset(
    {"assert", "buffer", "crypto", "events", "fs", "http", "https", "os", "path", "querystring", "stream", "url", "util", "zlib"}
)
SDK_PACKAGE_VERSION = "^3.600.0"
