"""Native template lint covering the deployment blockers seen in generated SAM projects.

Rules:
    L1  reserved Lambda environment variable name (fatal)
    L2  CORS wildcard origin combined with credentials (fatal)
    L3  Globals section or key SAM does not support (fatal)
    L4  Ref/GetAtt/Sub target that does not exist (fatal)
    L5  Function missing Handler, Runtime or CodeUri (fatal)
    L6  resource type outside the modelled subset (warning, from parsing)
    L7  Function runtime outside python3.12/nodejs22.x (warning)
"""

from __future__ import annotations

import json
import shutil
import subprocess
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from slsmigrate.findings import FATAL, WARNING, Finding, pointer
from slsmigrate.sam.model import Template

SUPPORTED_RUNTIMES = ("python3.12", "nodejs22.x")


@lru_cache(maxsize=None)
def _data(name: str) -> dict[str, Any]:
    return json.loads(resources.files("slsmigrate.sam").joinpath("data", name).read_text("utf-8"))


def reserved_env_vars(path: str | Path | None = None) -> frozenset[str]:
    data = json.loads(Path(path).read_text("utf-8")) if path else _data("reserved_env_vars.json")
    return frozenset(data["reserved"])


def supported_globals(path: str | Path | None = None) -> dict[str, frozenset[str]]:
    data = json.loads(Path(path).read_text("utf-8")) if path else _data("supported_globals.json")
    return {section: frozenset(keys) for section, keys in data["sections"].items()}


def _env_vars(props: dict[str, Any]) -> dict[str, Any]:
    env = props.get("Environment")
    if isinstance(env, dict) and isinstance(env.get("Variables"), dict):
        return env["Variables"]
    return {}


def _is_true(value: Any) -> bool:
    return value is True or (isinstance(value, str) and value.strip("'\"").lower() == "true")


def _wildcard(origin: Any) -> bool:
    if isinstance(origin, str):
        return origin.strip().strip("'\"") == "*"
    if isinstance(origin, list):
        return any(_wildcard(o) for o in origin)
    return False


def _cors_findings(cors: Any, base: tuple[Any, ...], artifact: str, what: str) -> list[Finding]:
    if not isinstance(cors, dict):
        return []
    origin = cors.get("AllowOrigin", cors.get("AllowOrigins"))
    if _wildcard(origin) and _is_true(cors.get("AllowCredentials")):
        return [
            Finding(
                "L2",
                FATAL,
                artifact,
                pointer(*base, "AllowCredentials"),
                f"{what}: wildcard origin cannot be combined with AllowCredentials=true",
                fix_hint="list explicit origins or drop AllowCredentials",
            )
        ]
    return []


def lint_template(
    template: Template,
    artifact: str = "template.yaml",
    *,
    reserved: frozenset[str] | None = None,
    globals_table: dict[str, frozenset[str]] | None = None,
) -> list[Finding]:
    reserved = reserved if reserved is not None else reserved_env_vars()
    globals_table = globals_table if globals_table is not None else supported_globals()
    findings: list[Finding] = list(template.warnings)

    # L3
    for section, body in template.globals.items():
        if section not in globals_table:
            findings.append(
                Finding("L3", FATAL, artifact, pointer("Globals", section), f"Globals section {section} is not supported")
            )
            continue
        if not isinstance(body, dict):
            continue
        for key in body:
            if key not in globals_table[section]:
                findings.append(
                    Finding(
                        "L3",
                        FATAL,
                        artifact,
                        pointer("Globals", section, key),
                        f"Globals.{section}.{key} is not a supported Globals property",
                        fix_hint=f"move {key} onto each resource",
                    )
                )

    # L1 (globals + functions)
    gfunc = template.globals.get("Function") if isinstance(template.globals.get("Function"), dict) else {}
    for name in _env_vars(gfunc):
        if name in reserved:
            findings.append(
                Finding(
                    "L1",
                    FATAL,
                    artifact,
                    pointer("Globals", "Function", "Environment", "Variables", name),
                    f"Globals sets reserved Lambda environment variable {name}",
                )
            )

    gapi = template.globals.get("Api")
    if isinstance(gapi, dict):
        findings += _cors_findings(gapi.get("Cors"), ("Globals", "Api", "Cors"), artifact, "Globals.Api.Cors")
    ghttp = template.globals.get("HttpApi")
    if isinstance(ghttp, dict):
        findings += _cors_findings(
            ghttp.get("CorsConfiguration"), ("Globals", "HttpApi", "CorsConfiguration"), artifact, "Globals.HttpApi"
        )

    for lid, res in template.resources.items():
        base = ("Resources", lid, "Properties")
        props = res.properties
        if res.type == "AWS::Serverless::Function":
            for name in _env_vars(props):
                if name in reserved:
                    findings.append(
                        Finding(
                            "L1",
                            FATAL,
                            artifact,
                            pointer(*base, "Environment", "Variables", name),
                            f"{lid} sets reserved Lambda environment variable {name}",
                            fix_hint=f"rename {name}; the runtime provides it already",
                        )
                    )
            image = props.get("PackageType", gfunc.get("PackageType")) == "Image"
            required = ("ImageUri",) if image else ("Handler", "Runtime", "CodeUri")
            for key in required:
                if key == "CodeUri" and "InlineCode" in props:
                    continue
                if key not in props and key not in gfunc:
                    findings.append(
                        Finding(
                            "L5", FATAL, artifact, pointer("Resources", lid), f"{lid} is missing required property {key}"
                        )
                    )
            runtime = props.get("Runtime", gfunc.get("Runtime"))
            if isinstance(runtime, str) and runtime not in SUPPORTED_RUNTIMES:
                findings.append(
                    Finding(
                        "L7",
                        WARNING,
                        artifact,
                        pointer(*base, "Runtime"),
                        f"{lid} runtime {runtime} is outside {', '.join(SUPPORTED_RUNTIMES)}",
                    )
                )
        elif res.type == "AWS::Serverless::Api":
            findings += _cors_findings(props.get("Cors"), base + ("Cors",), artifact, f"{lid}.Cors")
        elif res.type == "AWS::Serverless::HttpApi":
            findings += _cors_findings(
                props.get("CorsConfiguration"), base + ("CorsConfiguration",), artifact, f"{lid}.CorsConfiguration"
            )

    # L4
    known = template.known_names()
    for ref in template.references():
        if ref.target not in known:
            findings.append(
                Finding(
                    "L4",
                    FATAL,
                    artifact,
                    ref.pointer,
                    f"{ref.form} to undefined resource or parameter {ref.target}",
                )
            )

    return sorted(findings, key=Finding.sort_key)


def find_cfn_lint() -> str | None:
    return shutil.which("cfn-lint")


def run_cfn_lint(template_path: str | Path, artifact: str = "template.yaml") -> list[Finding]:
    """Merge findings from an external cfn-lint executable, when one is installed."""
    exe = find_cfn_lint()
    if exe is None:
        return []
    proc = subprocess.run(
        [exe, "--format", "json", str(template_path)], capture_output=True, text=True, check=False
    )
    try:
        matches = json.loads(proc.stdout or "[]")
    except json.JSONDecodeError:
        return [Finding("cfn-lint", WARNING, artifact, "", f"unparseable cfn-lint output: {proc.stderr.strip()}")]
    out = []
    for m in matches:
        rule = m.get("Rule", {}).get("Id", "?")
        level = m.get("Level", "Warning")
        line = m.get("Location", {}).get("Start", {}).get("LineNumber")
        out.append(
            Finding(
                f"cfn-lint:{rule}",
                FATAL if level == "Error" else WARNING,
                artifact,
                f"#L{line}" if line else "",
                m.get("Message", ""),
            )
        )
    return out

