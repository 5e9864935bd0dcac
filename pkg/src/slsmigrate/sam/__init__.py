from slsmigrate.sam.lint import lint_template
from slsmigrate.sam.model import Resource, Template, TemplateError, parse_template, serialize_template
from slsmigrate.sam.yamlio import GetAtt, Opaque, Ref, Sub

__all__ = [
    "GetAtt",
    "Opaque",
    "Ref",
    "Resource",
    "Sub",
    "Template",
    "TemplateError",
    "lint_template",
    "parse_template",
    "serialize_template",
]
