"""YAML loading/dumping for CloudFormation templates with short intrinsic tags."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import yaml


@dataclass(frozen=True)
class Ref:
    target: str


@dataclass(frozen=True)
class GetAtt:
    resource: str
    attribute: str


@dataclass
class Sub:
    template: str
    variables: dict[str, Any] = field(default_factory=dict)


@dataclass
class Opaque:
    """Any intrinsic we do not model (``!If``, ``Fn::Join`` ...), kept verbatim."""

    tag: str
    value: Any


class DuplicateKeyError(yaml.constructor.ConstructorError):
    pass


class TemplateLoader(yaml.SafeLoader):
    """SafeLoader that understands ``!Ref``/``!GetAtt``/``!Sub`` and rejects duplicate keys."""

    def construct_mapping(self, node, deep=False):  # type: ignore[override]
        if isinstance(node, yaml.MappingNode):
            seen: dict[Any, int] = {}
            for key_node, _ in node.value:
                key = self.construct_object(key_node, deep=True)
                try:
                    hash(key)
                except TypeError:
                    continue
                if key in seen:
                    raise DuplicateKeyError(
                        "while constructing a mapping",
                        node.start_mark,
                        f"duplicate key {key!r} (first defined on line {seen[key] + 1})",
                        key_node.start_mark,
                    )
                seen[key] = key_node.start_mark.line
        return super().construct_mapping(node, deep=deep)


def _construct_ref(loader: TemplateLoader, node: yaml.Node) -> Ref:
    return Ref(str(loader.construct_scalar(node)))


def _construct_getatt(loader: TemplateLoader, node: yaml.Node) -> GetAtt | Opaque:
    if isinstance(node, yaml.ScalarNode):
        resource, _, attribute = str(loader.construct_scalar(node)).partition(".")
        return GetAtt(resource, attribute)
    value = loader.construct_sequence(node, deep=True)
    if len(value) == 2 and all(isinstance(v, str) for v in value):
        return GetAtt(value[0], value[1])
    return Opaque("!GetAtt", value)


def _construct_sub(loader: TemplateLoader, node: yaml.Node) -> Sub | Opaque:
    if isinstance(node, yaml.ScalarNode):
        return Sub(str(loader.construct_scalar(node)))
    value = loader.construct_sequence(node, deep=True)
    if len(value) == 2 and isinstance(value[0], str) and isinstance(value[1], dict):
        return Sub(value[0], dict(value[1]))
    return Opaque("!Sub", value)


def _construct_other(loader: TemplateLoader, suffix: str, node: yaml.Node) -> Opaque:
    tag = "!" + suffix
    if isinstance(node, yaml.ScalarNode):
        return Opaque(tag, loader.construct_scalar(node))
    if isinstance(node, yaml.SequenceNode):
        return Opaque(tag, loader.construct_sequence(node, deep=True))
    return Opaque(tag, loader.construct_mapping(node, deep=True))


TemplateLoader.add_constructor("!Ref", _construct_ref)
TemplateLoader.add_constructor("!GetAtt", _construct_getatt)
TemplateLoader.add_constructor("!Sub", _construct_sub)
TemplateLoader.add_multi_constructor("!", _construct_other)


class TemplateDumper(yaml.SafeDumper):
    def ignore_aliases(self, data: Any) -> bool:
        return True

    def choose_scalar_style(self):  # type: ignore[override]
        # Tagged scalars are quoted by default; keep `!Ref Foo` plain when safe.
        event = self.event
        if (
            isinstance(event, yaml.ScalarEvent)
            and event.tag
            and event.tag.startswith("!")
            and not event.style
        ):
            if self.analysis is None:
                self.analysis = self.analyze_scalar(event.value)
            if self.analysis.allow_block_plain and self.analysis.allow_flow_plain and event.value:
                return ""
        return super().choose_scalar_style()


def _represent_ref(dumper: TemplateDumper, data: Ref) -> yaml.Node:
    return dumper.represent_scalar("!Ref", data.target)


def _represent_getatt(dumper: TemplateDumper, data: GetAtt) -> yaml.Node:
    return dumper.represent_scalar("!GetAtt", f"{data.resource}.{data.attribute}")


def _represent_sub(dumper: TemplateDumper, data: Sub) -> yaml.Node:
    if data.variables:
        return dumper.represent_sequence("!Sub", [data.template, data.variables])
    return dumper.represent_scalar("!Sub", data.template)


def _represent_opaque(dumper: TemplateDumper, data: Opaque) -> yaml.Node:
    tag = data.tag if data.tag.startswith("!") else "!" + data.tag
    if isinstance(data.value, dict):
        return dumper.represent_mapping(tag, data.value)
    if isinstance(data.value, list):
        return dumper.represent_sequence(tag, data.value)
    return dumper.represent_scalar(tag, "" if data.value is None else str(data.value))


TemplateDumper.add_representer(Ref, _represent_ref)
TemplateDumper.add_representer(GetAtt, _represent_getatt)
TemplateDumper.add_representer(Sub, _represent_sub)
TemplateDumper.add_representer(Opaque, _represent_opaque)


def load(text: str) -> Any:
    return yaml.load(text, Loader=TemplateLoader)


def dump(doc: Any) -> str:
    return yaml.dump(
        doc,
        Dumper=TemplateDumper,
        sort_keys=False,
        default_flow_style=False,
        allow_unicode=True,
        width=4096,
    )
