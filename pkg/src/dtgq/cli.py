"""Command-line entry point.

    dtgq check MODEL
    dtgq run --model M --script S [--format text|json] [--fail-fast] [--numerals MODE] [--trace]
    dtgq dump --model M --script S [--numerals MODE]

Exit codes: 0 success, 1 semantic failure (invalid model, failed step or
expectation), 2 usage, IO or static errors in the inputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .dynamics import StoryReport, run_story
from .errors import DTGQError, Diagnostic
from .model import validate_model
from .parser import ModelDesc, build_model, parse_discourse, parse_model

EXIT_OK, EXIT_SEMANTIC, EXIT_USAGE = 0, 1, 2

# Failures caused by the inputs themselves rather than by what they denote.
STATIC_CODES = frozenset(
    {
        "SyntaxError",
        "DuplicateDeclaration",
        "UnknownDirective",
        "UnknownType",
        "UnknownPredicate",
        "UnknownSentence",
        "UnknownQuantifier",
        "MissingCarrier",
        "UndeclaredIndexVariable",
        "UndeclaredVariable",
        "DependencyClosureViolation",
        "DuplicateVariable",
        "SelfDependentType",
        "DuplicateBindingVariable",
        "BindingIndexClash",
        "DummyPackNotConstant",
        "VariableClash",
        "FreeIndexNotInContext",
        "BindingNotFinal",
        "NonConstantFreeVariable",
        "FreeIndexVariable",
        "ArityMismatch",
        "TypeMismatch",
        "DummyPackMismatch",
        "MalformedSigma",
    }
)


@dataclass(frozen=True)
class RunConfig:
    model_path: Path
    script_path: Path
    output_format: str = "text"  # text | json
    fail_fast: bool = False
    numerals_mode: Optional[str] = None  # exactly | atleast; None defers to env var / pragma
    trace: bool = False


class _Fail(Exception):
    def __init__(self, code: int):
        self.code = code


def _err(msg) -> None:
    print(msg, file=sys.stderr)


def _read(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        _err(f"error: cannot read {path}: {exc}")
        raise _Fail(EXIT_USAGE) from None


def _load_desc(path: Path) -> ModelDesc:
    text = _read(path)
    try:
        return parse_model(text, str(path))
    except DTGQError as exc:
        _err(exc.diagnostic)
        raise _Fail(EXIT_USAGE) from None


def _numerals(flag: Optional[str]) -> Optional[str]:
    value = flag or os.environ.get("DTGQ_NUMERALS") or None
    if value not in (None, "exactly", "atleast"):
        _err(f"error: DTGQ_NUMERALS must be 'exactly' or 'atleast', not {value!r}")
        raise _Fail(EXIT_USAGE)
    return value


def cmd_check(model_path: Path) -> int:
    try:
        desc = _load_desc(model_path)
        model = build_model(desc)
    except _Fail as f:
        return f.code
    except DTGQError as exc:
        _err(exc.diagnostic)
        return EXIT_SEMANTIC
    diags = validate_model(model)
    for d in diags:
        _err(Diagnostic(d.severity, d.code, d.message, d.span or _guess_span(desc, d.message)))
    if any(d.severity == "error" for d in diags):
        return EXIT_SEMANTIC
    print(f"{model_path}: ok ({len(model.types)} types, {len(model.predicates)} predicates)")
    return EXIT_OK


def _guess_span(desc: ModelDesc, message: str):
    # diagnostics from the validator name the declaration first
    for d in desc.decls:
        name = getattr(d, "name", None)
        if name and (message.startswith(name + ":") or message.startswith(name + " ") or f" {name}(" in message):
            return d.span
    return None


def _story(cfg: RunConfig) -> StoryReport:
    numerals = _numerals(cfg.numerals_mode)
    desc = _load_desc(cfg.model_path)
    script = _read(cfg.script_path)
    try:
        model = build_model(desc, numerals)
    except DTGQError as exc:
        _err(exc.diagnostic)
        raise _Fail(EXIT_USAGE) from None
    diags = validate_model(model)
    if diags:
        for d in diags:
            _err(d)
        raise _Fail(EXIT_SEMANTIC)
    try:
        steps = parse_discourse(script, str(cfg.script_path))
    except DTGQError as exc:
        _err(exc.diagnostic)
        raise _Fail(EXIT_USAGE) from None
    if not cfg.trace:
        return run_story(steps, model, fail_fast=cfg.fail_fast)
    logger = logging.getLogger("dtgq")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("trace: %(message)s"))
    level = logger.level
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG)
    try:
        return run_story(steps, model, fail_fast=cfg.fail_fast, trace=True)
    finally:
        logger.removeHandler(handler)
        logger.setLevel(level)


def _story_exit(report: StoryReport) -> int:
    if report.error is not None:
        return EXIT_USAGE if report.error.code in STATIC_CODES else EXIT_SEMANTIC
    return EXIT_OK if report.expectations_passed else EXIT_SEMANTIC


def render_text(report: StoryReport) -> str:
    out = []
    for r in report.steps:
        where = f"line {r.line}: " if r.line else ""
        out.append(f"[{r.index}] {where}{r.text}")
        if r.kind == "sentence" and r.id is not None:
            if r.is_sentence is None:
                pass
            elif r.is_sentence:
                out.append(f"    truth: {'true' if r.truth else 'false'}")
            else:
                out.append("    truth: n/a (*-sentence)")
            if r.extended_from_false:
                out.append("    note: sentence is false; context extended anyway")
            for name, den in sorted(r.new_types.items()):
                out.append(f"    {name}: {len(den.carrier)} element(s)")
            for name, why in sorted(r.undefined_types.items()):
                out.append(f"    {name}: UNDEFINED ({why})")
        if r.kind == "expect" and r.passed is not None:
            out.append(f"    expectation {'passed' if r.passed else 'FAILED'}")
        if r.context:
            out.append(f"    context: {', '.join(r.context)}")
    if report.error is not None:
        out.append(str(report.error))
    n = len(report.expectations)
    ok = sum(1 for r in report.expectations if r.passed)
    out.append(f"{'ok' if report.ok else 'FAILED'}: {ok}/{n} expectations passed")
    return "\n".join(out) + "\n"


def cmd_run(cfg: RunConfig) -> int:
    try:
        report = _story(cfg)
    except _Fail as f:
        return f.code
    if cfg.output_format == "json":
        sys.stdout.write(json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(render_text(report))
    if report.error is not None:
        _err(report.error)
    return _story_exit(report)


def cmd_dump(cfg: RunConfig) -> int:
    try:
        report = _story(cfg)
    except _Fail as f:
        return f.code
    sys.stdout.write(json.dumps(report.dump(), sort_keys=True, indent=2) + "\n")
    if report.error is not None:
        _err(report.error)
        return _story_exit(report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dtgq", description="Generalized quantifiers over dependent types.")
    sub = ap.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="parse and validate a model file")
    check.add_argument("model", type=Path)
    for name, helptext in (("run", "run a discourse script"), ("dump", "dump the T-types a script creates")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--model", type=Path, required=True)
        p.add_argument("--script", type=Path, required=True)
        p.add_argument("--numerals", choices=("exactly", "atleast"))
        p.add_argument("--trace", action="store_true", help="log chain membership decisions to stderr")
        if name == "run":
            p.add_argument("--format", choices=("text", "json"), default="text")
            p.add_argument("--fail-fast", action="store_true", help="stop at the first failed expectation")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "check":
        return cmd_check(args.model)
    cfg = RunConfig(
        args.model,
        args.script,
        getattr(args, "format", "text"),
        getattr(args, "fail_fast", False),
        args.numerals,
        args.trace,
    )
    return cmd_run(cfg) if args.command == "run" else cmd_dump(cfg)


if __name__ == "__main__":
    sys.exit(main())
