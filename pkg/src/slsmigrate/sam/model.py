"""Typed model of the SAM/CloudFormation subset the pipeline reads and writes."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterator

import yaml

from slsmigrate.findings import WARNING, Finding, pointer
from slsmigrate.sam.yamlio import DuplicateKeyError, GetAtt, Opaque, Ref, Sub, dump, load

RESOURCE_KINDS: dict[str, str] = {
    "AWS::Serverless::Function": "Function",
    "AWS::DynamoDB::Table": "Table",
    "AWS::Serverless::SimpleTable": "Table",
    "AWS::Cognito::UserPool": "UserPool",
    "AWS::Cognito::UserPoolClient": "UserPoolClient",
    "AWS::Serverless::Api": "Api",
    "AWS::SQS::Queue": "Queue",
    "AWS::Events::Rule": "Rule",
    "AWS::Serverless::LayerVersion": "LayerVersion",
    "AWS::Lambda::Permission": "Permission",
    "AWS::S3::Bucket": "Bucket",
}

PSEUDO_PARAMETERS = frozenset(
    {
        "AWS::AccountId",
        "AWS::NotificationARNs",
        "AWS::NoValue",
        "AWS::Partition",
        "AWS::Region",
        "AWS::StackId",
        "AWS::StackName",
        "AWS::URLSuffix",
    }
)

# Top-level keys, in the order they are written back out.
HEADER_ORDER = (
    "AWSTemplateFormatVersion",
    "Transform",
    "Description",
    "Metadata",
    "Parameters",
    "Mappings",
    "Conditions",
)

_SUB_VAR = re.compile(r"\$\{([^}!][^}]*)\}")


class TemplateError(Exception):
    """Fatal parse error; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(f"line {line}: {message}" if line else message)
        self.message = message
        self.line = line


@dataclass
class Resource:
    logical_id: str
    type: str
    properties: dict[str, Any] = field(default_factory=dict)
    attributes: dict[str, Any] = field(default_factory=dict)

    @property
    def kind(self) -> str | None:
        return RESOURCE_KINDS.get(self.type)

    def to_document(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"Type": self.type}
        for key, value in self.attributes.items():
            doc[key] = value
        if self.properties:
            doc["Properties"] = self.properties
        return doc


@dataclass(frozen=True)
class Reference:
    source: str | None
    target: str
    pointer: str
    form: str


@dataclass
class Template:
    header: dict[str, Any] = field(default_factory=dict)
    globals: dict[str, Any] = field(default_factory=dict)
    resources: dict[str, Resource] = field(default_factory=dict)
    outputs: dict[str, Any] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)
    warnings: list[Finding] = field(default_factory=list)

    @property
    def parameters(self) -> dict[str, Any]:
        params = self.header.get("Parameters")
        return params if isinstance(params, dict) else {}

    def functions(self) -> Iterator[Resource]:
        return (r for r in self.resources.values() if r.kind == "Function")

    def of_kind(self, kind: str) -> list[Resource]:
        return [r for r in self.resources.values() if r.kind == kind]

    def to_document(self) -> dict[str, Any]:
        doc: dict[str, Any] = {}
        for key in HEADER_ORDER:
            if key in self.header:
                doc[key] = self.header[key]
        if self.globals:
            doc["Globals"] = self.globals
        doc["Resources"] = {lid: r.to_document() for lid, r in self.resources.items()}
        if self.outputs:
            doc["Outputs"] = self.outputs
        for key, value in self.extra.items():
            doc[key] = value
        return doc

    def references(self) -> list[Reference]:
        """Every Ref/GetAtt/Sub reference, with the resource it appears in."""
        refs: list[Reference] = []
        for lid, res in self.resources.items():
            _collect_refs(res.properties, lid, ("Resources", lid, "Properties"), refs)
            for attr, value in res.attributes.items():
                _collect_refs(value, lid, ("Resources", lid, attr), refs)
        _collect_refs(self.outputs, None, ("Outputs",), refs)
        _collect_refs(self.globals, None, ("Globals",), refs)
        return refs

    def known_names(self) -> set[str]:
        """Names a Ref may legally target, including SAM's implicit resources."""
        names = set(self.resources) | set(self.parameters) | set(PSEUDO_PARAMETERS)
        for lid, res in self.resources.items():
            if res.type == "AWS::Serverless::Function":
                names |= {f"{lid}Role", f"{lid}Alias", f"{lid}Version"}
            elif res.type == "AWS::Serverless::Api":
                names |= {f"{lid}Stage", f"{lid}Deployment", f"{lid}.Stage", f"{lid}.Deployment"}
        if any(r.type == "AWS::Serverless::Function" for r in self.resources.values()):
            names |= {"ServerlessRestApi", "ServerlessHttpApi"}
        return names


def _collect_refs(node: Any, source: str | None, path: tuple[Any, ...], out: list[Reference]) -> None:
    if isinstance(node, Ref):
        out.append(Reference(source, node.target, pointer(*path), "Ref"))
    elif isinstance(node, GetAtt):
        out.append(Reference(source, node.resource, pointer(*path), "GetAtt"))
    elif isinstance(node, Sub):
        local = set(node.variables)
        for match in _SUB_VAR.finditer(node.template):
            name = match.group(1).strip()
            head = name if name.startswith("AWS::") else name.split(".", 1)[0]
            if head not in local:
                out.append(Reference(source, head, pointer(*path), "Sub"))
        _collect_refs(node.variables, source, path, out)
    elif isinstance(node, Opaque):
        _collect_refs(node.value, source, path, out)
    elif isinstance(node, dict):
        for key, value in node.items():
            _collect_refs(value, source, path + (key,), out)
    elif isinstance(node, list):
        for i, value in enumerate(node):
            _collect_refs(value, source, path + (i,), out)


def _lift_long_forms(node: Any) -> Any:
    """Rewrite JSON-style ``{"Ref": x}``/``{"Fn::GetAtt": ...}``/``{"Fn::Sub": ...}``."""
    if isinstance(node, dict):
        if len(node) == 1:
            (key, value), = node.items()
            if key == "Ref" and isinstance(value, str):
                return Ref(value)
            if key == "Fn::GetAtt":
                if isinstance(value, str) and "." in value:
                    res, _, att = value.partition(".")
                    return GetAtt(res, att)
                if isinstance(value, list) and len(value) == 2 and all(isinstance(v, str) for v in value):
                    return GetAtt(value[0], value[1])
            if key == "Fn::Sub":
                if isinstance(value, str):
                    return Sub(value)
                if isinstance(value, list) and len(value) == 2 and isinstance(value[1], dict):
                    return Sub(value[0], _lift_long_forms(value[1]))
            if key.startswith("Fn::") or key == "Condition":
                return {key: _lift_long_forms(value)}
        return {k: _lift_long_forms(v) for k, v in node.items()}
    if isinstance(node, list):
        return [_lift_long_forms(v) for v in node]
    if isinstance(node, Opaque):
        return Opaque(node.tag, _lift_long_forms(node.value))
    if isinstance(node, Sub):
        return Sub(node.template, _lift_long_forms(node.variables))
    return node


lift_intrinsics = _lift_long_forms


def _resource_lines(text: str) -> dict[str, int]:
    """Line of each logical id under ``Resources`` (best effort, for messages)."""
    lines: dict[str, int] = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return lines
    if not isinstance(root, yaml.MappingNode):
        return lines
    for key_node, value_node in root.value:
        if getattr(key_node, "value", None) == "Resources" and isinstance(value_node, yaml.MappingNode):
            for rk, _ in value_node.value:
                lines.setdefault(str(rk.value), rk.start_mark.line + 1)
    return lines


def parse_template(text: str, artifact: str = "template.yaml") -> Template:
    try:
        doc = load(text)
    except DuplicateKeyError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        problem = exc.problem or "duplicate key"
        in_resources = False
        try:
            root = yaml.compose(text, Loader=yaml.SafeLoader)
            if isinstance(root, yaml.MappingNode):
                for key_node, value_node in root.value:
                    if key_node.value == "Resources" and isinstance(value_node, yaml.MappingNode):
                        in_resources = any(k.start_mark.line + 1 == line for k, _ in value_node.value)
        except yaml.YAMLError:
            pass
        label = "duplicate logical id" if in_resources else "duplicate key"
        raise TemplateError(f"{label}: {problem}", line) from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise TemplateError(
            f"YAML syntax error: {getattr(exc, 'problem', None) or exc}",
            mark.line + 1 if mark is not None else None,
        ) from exc

    if not isinstance(doc, dict):
        raise TemplateError("template root must be a mapping", 1)
    doc = _lift_long_forms(doc)
    resources_doc = doc.get("Resources")
    if not isinstance(resources_doc, dict) or not resources_doc:
        raise TemplateError("template needs a non-empty Resources mapping")

    lines = _resource_lines(text)
    template = Template()
    for key, value in doc.items():
        if key in HEADER_ORDER:
            template.header[key] = value
        elif key == "Globals":
            if not isinstance(value, dict):
                raise TemplateError("Globals must be a mapping")
            template.globals = value
        elif key == "Outputs":
            template.outputs = value if isinstance(value, dict) else {}
        elif key != "Resources":
            template.extra[key] = value

    for lid, body in resources_doc.items():
        lid = str(lid)
        if not isinstance(body, dict) or not isinstance(body.get("Type"), str):
            raise TemplateError(f"resource {lid} has no Type", lines.get(lid))
        props = body.get("Properties") or {}
        if not isinstance(props, dict):
            raise TemplateError(f"resource {lid} Properties must be a mapping", lines.get(lid))
        attributes = {k: v for k, v in body.items() if k not in ("Type", "Properties")}
        res = Resource(lid, body["Type"], props, attributes)
        template.resources[lid] = res
        if res.kind is None:
            template.warnings.append(
                Finding(
                    "L6",
                    WARNING,
                    artifact,
                    pointer("Resources", lid, "Type"),
                    f"resource {lid} has unmodelled type {res.type}; kept as-is",
                )
            )
    return template


def serialize_template(template: Template) -> str:
    return dump(template.to_document())
