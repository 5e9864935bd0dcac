"""Command-line entry point: ``slsmigrate <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable

from slsmigrate import canonical, metrics, tools
from slsmigrate.config import Config, ConfigError, load_config
from slsmigrate.facts.analysis import REPORT_NAME, emit_analysis, load_report
from slsmigrate.facts.project import EmptyProjectError
from slsmigrate.findings import Finding, worst_exit_code
from slsmigrate.planner import BLUEPRINT_NAME, PlanError, load_blueprint, plan_blueprint, write_blueprint
from slsmigrate.sam.lint import lint_template, reserved_env_vars, run_cfn_lint, supported_globals
from slsmigrate.sam.model import TemplateError, parse_template
from slsmigrate.synth import TEMPLATE_NAME, SynthesisError, synthesize
from slsmigrate.validator import apply_fixes, validate, write_report

EXIT_OK, EXIT_FINDINGS, EXIT_FATAL = 0, 1, 2


class StageError(Exception):
    """Aborts a command with exit code 2."""


def _emit(args: argparse.Namespace, payload: Any, text: str) -> None:
    if args.format == "quiet":
        return
    if args.format == "json":
        sys.stdout.write(canonical.dumps(payload))
    else:
        print(text)


def _config(args: argparse.Namespace) -> Config:
    config = load_config(args.config)
    return config.with_overrides(
        runtime=getattr(args, "runtime", None),
        auth_paths=getattr(args, "auth_path", None),
        auth_decorators=getattr(args, "auth_decorator", None),
    )


def _out(args: argparse.Namespace) -> Path:
    return Path(args.out)


def _require(path: Path, stage: str) -> Path:
    if not path.is_file():
        raise StageError(f"{path} not found; run `slsmigrate {stage}` first")
    return path


# -- stages ----------------------------------------------------------------


def cmd_analyze(args: argparse.Namespace) -> int:
    if not args.project:
        raise StageError("analyze needs --project")
    try:
        report, symbols = emit_analysis(args.project, _out(args), _config(args))
    except EmptyProjectError as exc:
        raise StageError(str(exc)) from exc
    _emit(
        args,
        {"entry_points": len(report.entry_points), "diagnostics": len(report.diagnostics), "language": report.language},
        f"analyzed {report.language} project: {len(report.entry_points)} entry points, "
        f"{len(report.diagnostics)} diagnostics -> {_out(args) / REPORT_NAME}",
    )
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    report = load_report(_require(_out(args) / REPORT_NAME, "analyze"))
    if args.project:
        report.project_root = str(Path(args.project).resolve())
    try:
        bp = plan_blueprint(report, _config(args))
    except PlanError as exc:
        raise StageError(str(exc)) from exc
    path = write_blueprint(bp, _out(args))
    _emit(
        args,
        {"lambda_functions": len(bp.lambda_functions), "dropped_functions": len(bp.dropped_functions)},
        f"planned {len(bp.lambda_functions)} Lambdas ({len(bp.dropped_functions)} endpoints dropped) -> {path}",
    )
    return EXIT_OK


def cmd_synthesize(args: argparse.Namespace) -> int:
    bp = load_blueprint(_require(_out(args) / BLUEPRINT_NAME, "plan"))
    try:
        written = synthesize(bp, _out(args))
    except SynthesisError as exc:
        raise StageError(str(exc)) from exc
    _emit(args, {"files": written}, f"wrote {len(written)} files under {_out(args)}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    out = _out(args)
    _require(out / BLUEPRINT_NAME, "plan")
    _require(out / TEMPLATE_NAME, "synthesize")
    report = validate(out)
    if getattr(args, "fix", False) and report.status == "fail":
        _, report = apply_fixes(out, report)
    write_report(report, out)
    _emit(args, report.to_dict(), report.summary())
    return EXIT_OK if not report.findings else EXIT_FINDINGS


def cmd_all(args: argparse.Namespace) -> int:
    for stage in (cmd_analyze, cmd_plan, cmd_synthesize):
        stage(argparse.Namespace(**{**vars(args), "format": "text" if args.format == "text" else "quiet"}))
    return cmd_validate(args)


def cmd_score(args: argparse.Namespace) -> int:
    config = _config(args)
    generated = args.generated or [str(_out(args) / TEMPLATE_NAME)]
    reference = args.reference or [str(_out(args) / REPORT_NAME)]
    if len(generated) != len(reference):
        raise StageError("--generated and --reference must be given the same number of times")
    apps = []
    for g, r in zip(generated, reference):
        gp, rp = Path(g), Path(r)
        if not gp.is_file() or not rp.is_file():
            raise StageError(f"missing endpoint source {gp if not gp.is_file() else rp}")
        name = gp.parent.name or gp.stem
        apps.append(
            (
                name,
                metrics.EndpointSet.of(metrics.load_endpoints(gp, config.auth_paths), "generated"),
                metrics.EndpointSet.of(metrics.load_endpoints(rp, config.auth_paths), "reference"),
            )
        )
    results = [r for path in args.results or [] for r in metrics.load_results(path)]
    try:
        card = metrics.score(apps, results, config.auth_paths, args.category or metrics.DEFAULT_CATEGORIES)
    except metrics.MetricsError as exc:
        raise StageError(str(exc)) from exc
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / metrics.SCORECARD_NAME).write_bytes(canonical.dump_bytes(card.to_dict()))
    _emit(args, card.to_dict(), card.table())
    return EXIT_OK


def cmd_lint(args: argparse.Namespace) -> int:
    path = Path(args.template) if args.template else _out(args) / TEMPLATE_NAME
    _require(path, "synthesize")
    config = _config(args)
    try:
        template = parse_template(path.read_text("utf-8"), path.name)
    except TemplateError as exc:
        findings = [Finding("L0", "fatal", path.name, f"#L{exc.line}" if exc.line else "", exc.message)]
    else:
        findings = lint_template(
            template,
            path.name,
            reserved=reserved_env_vars(config.reserved_env_vars_file),
            globals_table=supported_globals(config.supported_globals_file),
        )
        if args.cfn_lint:
            findings += run_cfn_lint(path, path.name)
    findings.sort(key=Finding.sort_key)
    text = "\n".join(f"[{f.check_id}] {f.severity:7} {f.artifact}{f.pointer}: {f.message}" for f in findings)
    _emit(args, [f.to_dict() for f in findings], text or "no findings")
    return worst_exit_code(findings)


def cmd_tool(args: argparse.Namespace) -> int:
    try:
        if args.tool_command == "read":
            rng = (args.start, args.end or args.start + tools.READ_LINE_CAP - 1) if args.start else None
            result = tools.read_file(args.path, rng)
            _emit(args, result.to_dict(), result.content.rstrip("\n") + (f"\n-- {result.warning}" if result.warning else ""))
            return EXIT_OK
        if args.tool_command == "write":
            content = sys.stdin.read() if args.content is None else args.content
            validation = args.validate or tools.infer_validation(args.path)
            receipt = tools.write_file(args.path, content, validation)
        elif args.tool_command == "merge":
            receipt = tools.merge_json_key(args.path, args.key, json.loads(args.value))
        else:
            entries = tools.list_dir(args.path, args.recursive)
            _emit(args, [{"path": p, "kind": k} for p, k in entries], "\n".join(f"{k:7} {p}" for p, k in entries))
            return EXIT_OK
    except tools.ToolError as exc:
        raise StageError(str(exc)) from exc
    _emit(args, receipt.to_dict(), f"wrote {receipt.bytes_written} bytes" if receipt.ok else f"rejected: {receipt.error}")
    return EXIT_OK if receipt.ok else EXIT_FINDINGS


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--project", help="monolith source tree (read-only)")
    common.add_argument("--out", default="out", help="artifact directory (default: out)")
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--runtime", choices=("python3.12", "nodejs22.x"), help="override the target runtime")
    common.add_argument("--auth-path", action="append", help="endpoint path replaced by Cognito (repeatable)")
    common.add_argument("--auth-decorator", action="append", help="auth decorator/middleware name (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true", help="log analyzer diagnostics")

    parser = argparse.ArgumentParser(prog="slsmigrate", description="Static monolith-to-SAM migration pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, tuple[Callable[[argparse.Namespace], int], str]] = {
        "analyze": (cmd_analyze, "extract entry points, call graph, and tags"),
        "plan": (cmd_plan, "turn the analysis report into a blueprint"),
        "synthesize": (cmd_synthesize, "generate template.yaml and handler stubs"),
        "validate": (cmd_validate, "run the 11 cross-artifact checks"),
        "score": (cmd_score, "API-coverage F1 and E2EPR"),
        "lint": (cmd_lint, "lint a SAM template"),
        "all": (cmd_all, "analyze, plan, synthesize, validate"),
    }
    for name, (func, help_text) in commands.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        if name in ("validate", "all"):
            p.add_argument("--fix", action="store_true", help="apply mechanical fixes once and re-validate")
        if name == "lint":
            p.add_argument("--template", help="template path (default: <out>/template.yaml)")
            p.add_argument("--cfn-lint", action="store_true", help="merge findings from cfn-lint when installed")
        if name == "score":
            p.add_argument("--generated", action="append", help="template.yaml or endpoint list (repeatable)")
            p.add_argument("--reference", action="append", help="analysis report or endpoint list (repeatable)")
            p.add_argument("--results", action="append", help="test-results JSON file (repeatable)")
            p.add_argument("--category", action="append", choices=metrics.CATEGORIES, help="test categories to score")

    tool = sub.add_parser("tool", help="workspace file tools")
    tool.set_defaults(func=cmd_tool)
    tsub = tool.add_subparsers(dest="tool_command", required=True)
    read = tsub.add_parser("read", parents=[common])
    read.add_argument("path")
    read.add_argument("--start", type=int)
    read.add_argument("--end", type=int)
    write = tsub.add_parser("write", parents=[common])
    write.add_argument("path")
    write.add_argument("--content", help="content to write (default: stdin)")
    write.add_argument("--validate", choices=tools.VALIDATIONS)
    merge = tsub.add_parser("merge", parents=[common])
    merge.add_argument("path")
    merge.add_argument("key")
    merge.add_argument("value", help="JSON value")
    listing = tsub.add_parser("list", parents=[common])
    listing.add_argument("path")
    listing.add_argument("--recursive", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (StageError, ConfigError) as exc:
        print(f"slsmigrate: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
