"""
Command-line front end for rootrat.

Results go to stdout (plain text or JSON); diagnostics and logs go to stderr.
Exit codes: 0 at least one result, 1 nothing found or timed out, 2 usage,
parse or option errors.
"""

import argparse
import io
import json
import shlex
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

import sympy as sp
from pydantic import ValidationError

from rootrat.config import settings
from rootrat.app.exceptions import (
    ExpressionSyntaxError,
    FDecompositionError,
    OptionsError,
    RootratError,
    SearchTimeout,
)
from rootrat.app.models import (
    BatchLineModel,
    BatchReport,
    Options,
    ReportModel,
    ResultModel,
    SubstitutionModel,
)
from rootrat.app.services.driver import (
    VerifiedForm,
    parametrize_polynomial,
    rationalize_root,
    rationalize_simultaneously,
    verify,
)
from rootrat.app.services.expr import parse_rational_function, parse_root, render
from rootrat.app.services.parametrize import Parametrization
from rootrat.app.utils.logger import init_logger

# Initialize logger
logger = init_logger()

EXIT_OK = 0
EXIT_EMPTY = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Raised instead of argparse's own exit so run() can report it"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_option_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--vars", default=None, help='Variables to change, e.g. "x,y"')
    parser.add_argument("--out-vars", default=None, help='Names of the new variables, e.g. "t1,t2"')
    parser.add_argument("--multiple", action="store_true", help="Return every distinct result")
    parser.add_argument("--general-c", action="store_true", help="Let the point depend on free parameters C1, C2, ...")
    parser.add_argument("--general-t", action="store_true", help="Keep every line parameter t0..tn")
    parser.add_argument("--force-fdecomp", action="store_true", help="Use F-decompositions only")
    parser.add_argument("--fpolys", default=None, help='F-decomposition triple "f1;f2;f3"')
    parser.add_argument("--point", default=None, help='Affine d-1 point in the active variable order, e.g. "-1,0"')
    parser.add_argument("--fix-t", type=int, default=None, help="Index of the line parameter set to 1")
    parser.add_argument(
        "--perfect-squares",
        choices=["auto", "keep", "strip", "exhaustive"],
        default="auto",
        help="Keep or strip square factors of the radicand (default: auto)",
    )
    parser.add_argument("--height", type=int, default=None, help=f"Point-search height bound (default: {settings.height})")
    parser.add_argument("--timeout", type=float, default=None, help=f"Time budget in seconds (default: {settings.timeout})")
    parser.add_argument("--json", action="store_true", help="Emit JSON instead of plain text")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="rootrat",
        description="Rationalize square roots by parametrizing their associated hypersurfaces.",
    )
    parser.add_argument("--version", action="version", version=f"{settings.app_name} {settings.app_version}")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)

    rationalize = commands.add_parser("rationalize", help="Rationalize one square root R1*sqrt(R2)")
    rationalize.add_argument("expression", help='Root expression, e.g. "sqrt(1-x^2-y^2)"')
    _add_option_flags(rationalize)

    parametrize = commands.add_parser("parametrize", help="Parametrize the hypersurface of a polynomial")
    parametrize.add_argument("expression", help='Polynomial, e.g. "u^2+x^2-1"')
    _add_option_flags(parametrize)

    simultaneous = commands.add_parser("simultaneous", help="Rationalize several roots with one substitution")
    simultaneous.add_argument("expressions", nargs="+", help="Root expressions")
    _add_option_flags(simultaneous)

    check = commands.add_parser("verify", help="Check that a substitution rationalizes a root")
    check.add_argument("expression", help="Root expression")
    check.add_argument(
        "--subs",
        required=True,
        help='Substitutions "x=...; y=..." or a JSON substitutions array as emitted by --json',
    )
    check.add_argument("--json", action="store_true", help="Emit JSON instead of plain text")

    batch = commands.add_parser("batch", help="Run one task per line of a file")
    batch.add_argument("file", help="Task file; blank lines and lines starting with # are skipped")
    batch.add_argument("--json", action="store_true", help="Emit the batch report as JSON")
    return parser


def _split_list(text: Optional[str], separator: str = ",") -> Optional[List[str]]:
    if text is None:
        return None
    return [item.strip() for item in text.split(separator) if item.strip()]


def options_from_args(args) -> Options:
    """Translate parsed flags into driver Options (validated by pydantic)"""
    fields = {
        "variables": _split_list(args.vars),
        "output_variables": _split_list(args.out_vars),
        "multiple_solutions": args.multiple,
        "general_c": args.general_c,
        "general_t": args.general_t,
        "force_fdecomposition": args.force_fdecomp,
        "f_polynomials": _split_list(args.fpolys, ";"),
        "point": _split_list(args.point),
        "fix_index": args.fix_t,
        "perfect_squares": args.perfect_squares,
    }
    if args.height is not None:
        fields["height"] = args.height
    if args.timeout is not None:
        fields["timeout"] = args.timeout
    return Options(**fields)


def _render_value(value, token=None) -> str:
    if token is not None:
        value = token.expand_value(value)
    return render(value)


def _substitutions(pairs, token=None) -> List[SubstitutionModel]:
    return [SubstitutionModel(var=str(v), value=_render_value(e, token)) for v, e in pairs]


def form_result(form: VerifiedForm) -> ResultModel:
    return ResultModel(
        substitutions=_substitutions(form.substitutions, form.token),
        root_value=_render_value(form.value, form.token),
        strategy=form.strategy,
        point=form.point.rendered() if form.point is not None else None,
    )


def parametrization_result(param: Parametrization) -> ResultModel:
    root_value = param.root_value
    return ResultModel(
        substitutions=_substitutions(param.substitutions, param.token),
        root_value=_render_value(root_value, param.token) if root_value is not None else None,
        strategy=param.strategy,
        point=param.point.rendered() if param.point is not None else None,
    )


def _report(text: str, results: List[ResultModel]) -> ReportModel:
    return ReportModel(input=text, results=results, status="ok" if results else "empty")


def _print_report(report: ReportModel, as_json: bool, out: TextIO, err: TextIO, empty_message: str):
    if as_json:
        print(report.model_dump_json(), file=out)
        return
    if not report.results:
        print(empty_message, file=err)
        return
    blocks = []
    for result in report.results:
        lines = [f"{s.var} = {s.value}" for s in result.substitutions]
        if result.root_value is not None:
            lines.append(f"root_value = {result.root_value}")
        blocks.append("\n".join(lines))
    print("\n\n".join(blocks), file=out)


def parse_substitutions(text: str) -> List[tuple]:
    """Parse "x=...; y=..." or a JSON substitutions array"""
    stripped = text.strip()
    if stripped.startswith("[") or stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise ExpressionSyntaxError(f"invalid JSON substitutions: {e.msg}", e.pos) from None
        if isinstance(data, dict):
            data = data.get("substitutions", [])
        return [(sp.Symbol(item["var"]), parse_rational_function(item["value"])) for item in data]
    pairs = []
    for entry in _split_list(stripped, ";") or []:
        if "=" not in entry:
            raise ExpressionSyntaxError(f"substitution without '=': {entry}")
        var, value = entry.split("=", 1)
        pairs.append((sp.Symbol(var.strip()), parse_rational_function(value)))
    return pairs


def _execute(args, out: TextIO, err: TextIO) -> int:
    """Run one parsed subcommand; domain errors propagate to the caller"""
    command = args.command
    if command == "verify":
        root = parse_root(args.expression)
        form = verify(root, parse_substitutions(args.subs))
        results = [form_result(form)] if form is not None else []
        _print_report(_report(args.expression, results), args.json, out, err, "verification failed")
        return EXIT_OK if results else EXIT_EMPTY

    options = options_from_args(args)
    if command == "rationalize":
        forms = rationalize_root(parse_root(args.expression), options)
        report = _report(args.expression, [form_result(f) for f in forms])
    elif command == "parametrize":
        params = parametrize_polynomial(parse_rational_function(args.expression), options)
        report = _report(args.expression, [parametrization_result(p) for p in params])
    else:
        # one result per root, in input order, all with the same substitutions
        forms = rationalize_simultaneously([parse_root(e) for e in args.expressions], options) or []
        report = _report(" ; ".join(args.expressions), [form_result(f) for f in forms])

    _print_report(report, args.json, out, err, "no parametrization found")
    return EXIT_OK if report.results else EXIT_EMPTY


def _run_guarded(args, out: TextIO, err: TextIO) -> int:
    try:
        return _execute(args, out, err)
    except (ExpressionSyntaxError, OptionsError, FDecompositionError) as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE
    except ValidationError as e:
        print(f"error: invalid options: {e.errors()[0]['msg']}", file=err)
        return EXIT_USAGE
    except SearchTimeout as e:
        print(f"timeout: {e}", file=err)
        return EXIT_EMPTY
    except RootratError as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}", extra={"error": str(e)})
        print(f"error: internal failure: {type(e).__name__}: {e}", file=err)
        return EXIT_USAGE


def run_batch(path: str, as_json: bool, out: TextIO, err: TextIO) -> int:
    """Run every task line of a file and summarize the outcomes"""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        print(f"error: cannot read batch file: {e}", file=err)
        return EXIT_USAGE

    parser = build_parser()
    report = BatchReport()
    for number, line in enumerate(lines, start=1):
        task = line.strip()
        if not task or task.startswith("#"):
            continue
        entry = _run_batch_line(parser, number, task)
        report.lines.append(entry)
        if entry.outcome == "succeeded":
            report.succeeded += 1
        elif entry.outcome == "failed":
            report.failed += 1
        else:
            report.errored += 1

    if as_json:
        print(report.model_dump_json(), file=out)
    else:
        for entry in report.lines:
            detail = f" ({entry.error})" if entry.error else ""
            print(f"line {entry.line}: {entry.outcome}{detail}: {entry.task}", file=out)
        print(f"succeeded={report.succeeded} failed={report.failed} errored={report.errored}", file=out)
    return EXIT_USAGE if report.errored else EXIT_OK


def _run_batch_line(parser, number: int, task: str) -> BatchLineModel:
    try:
        args = parser.parse_args(shlex.split(task) + ["--json"])
        if args.command in (None, "batch"):
            raise UsageError("batch lines need a rationalize, parametrize, simultaneous or verify task")
    except (UsageError, ValueError) as e:
        return BatchLineModel(line=number, task=task, outcome="errored", error=str(e))
    except SystemExit:
        # --help and --version exit from inside argparse
        return BatchLineModel(line=number, task=task, outcome="errored", error="not a task")

    out, err = io.StringIO(), io.StringIO()
    code = _run_guarded(args, out, err)
    stdout = out.getvalue().strip()
    report = ReportModel.model_validate_json(stdout) if stdout else None
    message = err.getvalue().strip() or None
    if code == EXIT_OK:
        return BatchLineModel(line=number, task=task, outcome="succeeded", report=report)
    if code == EXIT_EMPTY:
        return BatchLineModel(line=number, task=task, outcome="failed", report=report, error=message)
    return BatchLineModel(line=number, task=task, outcome="errored", error=message)


def run(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    """
    Entry point used by `python -m rootrat` and the tests.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])
        out: Result stream (defaults to stdout)
        err: Diagnostic stream (defaults to stderr)

    Returns:
        Process exit code
    """
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except UsageError as e:
        print(f"usage error: {e}", file=err)
        return EXIT_USAGE
    if args.command is None:
        parser.print_help(file=err)
        return EXIT_USAGE

    logger.log_function_call("cli", {"command": args.command})
    if args.command == "batch":
        return run_batch(args.file, args.json, out, err)
    return _run_guarded(args, out, err)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
