"""Command line front end: ``oclk check|eval|typecheck|trace``."""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

from .contracts import CheckReport, Row, Verdict, check_constancy, check_invariants, check_operation, \
    find_spec, load_invocation_file
from .diagnostics import Diagnostic, EvaluationError, OclError
from .dynamics import check_trace, load_trace_file
from .evaluator import evaluate
from .fixpoint import DEFAULT_MAX_ITER, DivergenceError, MissingValue, resolve_derived
from .model import empty_snapshot, load_class_model_file, load_snapshot_file, validate_multiplicities
from .syntax import parse_constraint_file
from .syntax.ast import ConstantDecl, DerivedDef, OperationSpec
from .typecheck import typecheck_expression, typecheck_file
from .values import ObjRef, format_value, is_undef

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _max_iter_default() -> int:
    raw = os.environ.get("OCLK_MAX_ITER")
    if raw is None:
        return DEFAULT_MAX_ITER
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"OCLK_MAX_ITER must be a positive integer, got {raw!r}") from None
    if n <= 0:
        raise UsageError(f"OCLK_MAX_ITER must be a positive integer, got {raw!r}")
    return n


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oclk", description="Check OCL constraints against object snapshots.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, snapshots=True, constraints=True):
        p.add_argument("--model", required=True, help="class model document")
        if snapshots:
            p.add_argument("--snapshot", action="append", default=[],
                           help="snapshot document (repeatable: pre-state then post-state)")
        if constraints:
            p.add_argument("--constraints", action="append", default=[], help="constraint file (repeatable)")
        p.add_argument("--max-iter", type=_positive, default=None,
                       help="fixpoint iteration cap (default: $OCLK_MAX_ITER or 10000)")
        p.add_argument("--format", choices=("text", "machine"), default="text")

    p = sub.add_parser("check", help="check invariants, contracts and traces")
    common(p)
    p.add_argument("--invocation", help="operation invocation record")
    p.add_argument("--trace", help="message trace document")
    p.add_argument("--undefined-ok", action="store_true", help="do not fail on undefined verdicts")

    p = sub.add_parser("eval", help="evaluate one expression")
    common(p)
    p.add_argument("--self", dest="self_id", help="object id bound to self")
    p.add_argument("expression")

    p = sub.add_parser("typecheck", help="parse and type check constraint files")
    common(p, snapshots=False)

    p = sub.add_parser("trace", help="check called and action constraints against a trace")
    common(p, snapshots=False)
    p.add_argument("--trace", required=True, help="message trace document")
    p.add_argument("--undefined-ok", action="store_true", help="do not fail on undefined verdicts")
    return parser


class Session:
    def __init__(self, args, out, err):
        self.args = args
        self.out = out
        self.err = err
        self.max_iter = args.max_iter or _max_iter_default()
        self.model = load_class_model_file(args.model)
        self.files = []
        for path in getattr(args, "constraints", []):
            text = Path(path).read_text(encoding="utf-8")
            self.files.append(parse_constraint_file(text, path))
        self.typed = []
        for f in self.files:
            self.typed.extend(typecheck_file(f, self.model))

    def snapshots(self):
        return [load_snapshot_file(p, self.model) for p in self.args.snapshot]

    def of_kind(self, kind):
        return [tc for tc in self.typed if isinstance(tc.decl, kind)]

    def resolve(self, snap, label: str, report: CheckReport | None):
        res = resolve_derived(self.of_kind(DerivedDef), snap, self.model, self.max_iter)
        if report is not None:
            for cid, oid, v in res.loose:
                report.add(Row(cid, f"{label}self={oid}", Verdict.of(v)))
        return res.snapshot

    def emit_report(self, report: CheckReport) -> None:
        if self.args.format == "machine":
            for line in report.machine_lines():
                print(line, file=self.out)
        else:
            self.out.write(report.text())

    def warn(self, diags) -> None:
        for d in diags:
            print(str(d), file=self.err)


def cmd_check(s: Session) -> int:
    snaps = s.snapshots()
    if not snaps and not s.args.invocation and not s.args.trace:
        raise UsageError("check needs --snapshot, --invocation or --trace")
    report = CheckReport()
    names = [Path(p).stem for p in s.args.snapshot]
    for name, snap in zip(names, snaps):
        label = f"{name}: " if len(snaps) > 1 else ""
        s.warn(_as_warnings(validate_multiplicities(snap, s.model, name)))
        snap = s.resolve(snap, label, report)
        for row in check_invariants(s.typed, snap, s.model).rows:
            report.add(Row(row.constraint, label + row.binding, row.verdict, row.pos))
    constancy = []
    if len(snaps) >= 2:
        constancy = check_constancy(s.model, snaps[0], snaps[-1], s.of_kind(ConstantDecl), s.args.snapshot[-1])
    if s.args.invocation:
        inv = load_invocation_file(s.args.invocation, s.model)
        specs = find_spec(s.of_kind(OperationSpec), inv.op)
        if not specs:
            raise UsageError(f"no specification for operation '{inv.op}' in the constraint files")
        inv.pre = s.resolve(inv.pre, "pre: ", None)
        inv.post = s.resolve(inv.post, "post: ", None)
        for tc in specs:
            report.extend(check_operation(tc, inv, s.model).report)
        constancy.extend(check_constancy(s.model, inv.pre, inv.post, s.of_kind(ConstantDecl), inv.file))
    if s.args.trace:
        trace = load_trace_file(s.args.trace, s.model)
        trace.snapshots = {k: s.resolve(v, "", None) for k, v in trace.snapshots.items()}
        report.extend(check_trace(s.typed, trace, s.model))
    s.emit_report(report)
    errors = [d for d in constancy if d.is_error]
    for d in constancy:
        print(str(d), file=s.out if d.is_error else s.err)
    if errors or not report.ok(s.args.undefined_ok):
        return EXIT_FAIL
    return EXIT_OK


def _as_warnings(diags):
    return [Diagnostic(d.message, d.pos, "warning", d.file) for d in diags]


def cmd_eval(s: Session) -> int:
    snaps = s.snapshots() or [empty_snapshot()]
    snaps = [s.resolve(x, "", None) for x in snaps]
    post, pre = snaps[-1], (snaps[0] if len(snaps) > 1 else None)
    env, self_cls = {}, None
    if s.args.self_id is not None:
        self_cls = post.class_of(s.args.self_id)
        if self_cls is None:
            raise UsageError(f"--self: no object '{s.args.self_id}' in the snapshot")
        env["self"] = ObjRef(s.args.self_id)
    typed = typecheck_expression(s.args.expression, s.model, self_cls, file="<expression>",
                                 with_pre=pre is not None)
    v = evaluate(typed, env, post, s.model, pre)
    print(format_value(v), file=s.out)
    return EXIT_FAIL if is_undef(v) else EXIT_OK


def cmd_typecheck(s: Session) -> int:
    if s.args.format == "text":
        n = len(s.typed)
        print(f"{n} declaration{'s' if n != 1 else ''} type checked, no errors", file=s.out)
    return EXIT_OK


def cmd_trace(s: Session) -> int:
    trace = load_trace_file(s.args.trace, s.model)
    trace.snapshots = {k: s.resolve(v, "", None) for k, v in trace.snapshots.items()}
    report = check_trace(s.typed, trace, s.model)
    s.emit_report(report)
    return EXIT_OK if report.ok(s.args.undefined_ok) else EXIT_FAIL


COMMANDS = {"check": cmd_check, "eval": cmd_eval, "typecheck": cmd_typecheck, "trace": cmd_trace}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            session = Session(args, out, err)
            code = COMMANDS[args.command](session)
        for w in caught:
            print(f"warning: {w.message}", file=err)
        return code
    except OclError as exc:
        for d in exc.diagnostics:
            print(str(d), file=err)
        return EXIT_ERROR
    except (DivergenceError, MissingValue, UsageError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR
    except EvaluationError as exc:
        print(f"error: evaluation failed: {exc}", file=err)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc.strerror}: {exc.filename}", file=err)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
