"""Checking `called` clauses and `action` constraints against message traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .contracts import CheckReport, Row, Verdict
from .diagnostics import NOPOS, Diagnostic, DiagnosticSink, LoadError
from .evaluator import evaluate
from .logic import Bool3
from .model import ClassModel, Snapshot, coerce_literal, load_snapshot_file, objects_of_kind
from .syntax.ast import ActionConstraint, Message, MsgIf, OperationSpec, decl_id
from .typecheck import TypedConstraint, typecheck
from .types import ClassType, CollType
from .values import CollV, ObjRef, format_value, is_undef, strong_equal
from .yamldoc import PDict, load_document


@dataclass(frozen=True)
class Send:
    receiver: str
    op: str
    args: tuple = ()
    sender: str | None = None


@dataclass(frozen=True)
class StatePoint:
    snapshot: str


@dataclass(frozen=True)
class Begin:
    id: str
    op: str
    receiver: str | None = None
    args: tuple = ()  # (name, plain value) pairs


@dataclass(frozen=True)
class End:
    id: str


@dataclass
class Trace:
    entries: list
    snapshots: dict = field(default_factory=dict)  # name -> Snapshot
    file: str = "<trace>"

    def spans(self):
        """(begin entry, index of begin, index of matching end) for every invocation."""
        open_at = {}
        out = []
        for i, e in enumerate(self.entries):
            if isinstance(e, Begin):
                open_at[e.id] = i
            elif isinstance(e, End):
                j = open_at.pop(e.id)
                out.append((self.entries[j], j, i))
        return sorted(out, key=lambda s: s[1])

    def state_before(self, index: int) -> Snapshot | None:
        for e in reversed(self.entries[:index]):
            if isinstance(e, StatePoint):
                return self.snapshots[e.snapshot]
        return None

    def state_points(self) -> list[tuple[int, str]]:
        return [(i, e.snapshot) for i, e in enumerate(self.entries) if isinstance(e, StatePoint)]


def _entry(raw, pos, sink: DiagnosticSink):
    if not isinstance(raw, dict) or "kind" not in raw:
        sink.error("trace entry needs a 'kind'", pos)
        return None
    kind = raw["kind"]
    fields = {
        "state": {"snapshot"},
        "send": {"receiver", "op", "args", "sender"},
        "begin": {"id", "op", "receiver", "args"},
        "end": {"id"},
    }
    if kind not in fields:
        sink.error(f"unknown trace entry kind '{kind}'", pos)
        return None
    for key in raw:
        if key != "kind" and key not in fields[kind]:
            sink.error(f"unknown key '{key}' in {kind} entry", pos)
            return None
    try:
        if kind == "state":
            return StatePoint(str(raw["snapshot"]))
        if kind == "send":
            args = raw.get("args") or []
            if not isinstance(args, list):
                sink.error("send 'args' must be a list", pos)
                return None
            sender = raw.get("sender")
            return Send(str(raw["receiver"]), str(raw["op"]), tuple(args),
                        None if sender is None else str(sender))
        if kind == "begin":
            args = raw.get("args") or {}
            if not isinstance(args, dict):
                sink.error("begin 'args' must be a mapping", pos)
                return None
            receiver = raw.get("receiver")
            return Begin(str(raw["id"]), str(raw["op"]), None if receiver is None else str(receiver),
                         tuple((str(k), v) for k, v in args.items()))
        return End(str(raw["id"]))
    except KeyError as exc:
        sink.error(f"{kind} entry is missing '{exc.args[0]}'", pos)
        return None


def load_trace(text: str, model: ClassModel, file: str = "<trace>", base_dir: Path | None = None,
               snapshots: dict | None = None) -> Trace:
    """Load a trace document; snapshot references are resolved relative to ``base_dir``."""
    doc = load_document(text, file)
    sink = DiagnosticSink(file)
    if not isinstance(doc, PDict):
        raise LoadError(Diagnostic("trace document must be a mapping", NOPOS, file=file))
    for key in doc:
        if key not in ("snapshots", "entries"):
            sink.error(f"unknown trace key '{key}'", doc.pos_of(key))
    snaps = dict(snapshots or {})
    refs = doc.get("snapshots") or {}
    if not isinstance(refs, dict):
        sink.error("'snapshots' must map names to snapshot files", doc.pos_of("snapshots"))
        refs = {}
    base = base_dir or Path(".")
    for name, path in refs.items():
        try:
            snaps[str(name)] = load_snapshot_file(base / str(path), model)
        except LoadError as exc:
            sink.items.extend(exc.diagnostics)
        except OSError as exc:
            sink.error(f"snapshot '{name}': {exc.strerror}: {path}", refs.pos_of(name))
    raw_entries = doc.get("entries") or []
    if not isinstance(raw_entries, list):
        sink.error("'entries' must be a list", doc.pos_of("entries"))
        raw_entries = []
    entries = []
    stack: list[str] = []
    seen: set[str] = set()
    for i, raw in enumerate(raw_entries):
        pos = raw_entries.pos_of(i)
        e = _entry(raw, pos, sink)
        if e is None:
            continue
        if isinstance(e, StatePoint) and e.snapshot not in snaps:
            sink.error(f"state refers to unknown snapshot '{e.snapshot}'", pos)
        if isinstance(e, Begin):
            if e.id in seen:
                sink.error(f"invocation id '{e.id}' begins twice", pos)
            seen.add(e.id)
            stack.append(e.id)
        if isinstance(e, End):
            if not stack or stack[-1] != e.id:
                sink.error(f"end '{e.id}' does not close the innermost open invocation"
                           + (f" '{stack[-1]}'" if stack else ""), pos)
            else:
                stack.pop()
        entries.append(e)
    if stack:
        sink.error(f"invocation(s) never ended: {', '.join(stack)}", doc.pos_of("entries"))
    sink.raise_if_errors(LoadError)
    return Trace(entries, snaps, file)


def load_trace_file(path, model: ClassModel) -> Trace:
    path = Path(path)
    return load_trace(path.read_text(encoding="utf-8"), model, str(path), path.parent)


# -- required messages ---------------------------------------------------------

@dataclass(frozen=True)
class Required:
    receiver: str
    op: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.receiver}.{self.op}({', '.join(format_value(a) for a in self.args)})"


def _required(items, env, snap: Snapshot, pre: Snapshot, tc: TypedConstraint, model: ClassModel):
    """Messages demanded by a message list; None when a condition or target is undefined."""
    out: list[Required] = []
    for item in items:
        if isinstance(item, MsgIf):
            c = evaluate(tc.typed(item.cond), env, snap, model, pre)
            if c is Bool3.UNDEF:
                return None
            sub = _required(item.then if c is Bool3.TRUE else item.else_, env, snap, pre, tc, model)
            if sub is None:
                return None
            out.extend(sub)
            continue
        target = env["self"] if item.target is None else evaluate(tc.typed(item.target), env, snap, model, pre)
        if is_undef(target):
            return None
        args = tuple(evaluate(tc.typed(a), env, snap, model, pre) for a in item.args)
        receivers = target.items if isinstance(target, CollV) else (target,)
        out.extend(Required(r.id, item.op, args) for r in receivers)
    return out


def _send_args(send: Send, snap: Snapshot, model: ClassModel):
    cls = snap.class_of(send.receiver)
    if cls is None:
        return None
    found = model.find_operation(cls, send.op)
    if not found or len(found[0][1].params) != len(send.args):
        return None
    try:
        return tuple(coerce_literal(raw, p.type) for raw, p in zip(send.args, found[0][1].params))
    except ValueError:
        return None


def _delivered(entries, snap: Snapshot, model: ClassModel) -> list[Send]:
    """Sends in a trace segment; a begin counts as its operation's message arriving."""
    out = []
    for e in entries:
        if isinstance(e, Send):
            out.append(e)
        elif isinstance(e, Begin) and e.receiver is not None:
            cls = snap.class_of(e.receiver)
            found = model.find_operation(cls, e.op) if cls is not None else []
            named = dict(e.args)
            order = [p.name for p in found[0][1].params] if found else list(named)
            out.append(Send(e.receiver, e.op, tuple(named.get(n) for n in order)))
    return out


def _missing(required: list[Required], sends: list[Send], snap: Snapshot, model: ClassModel) -> list[Required]:
    missing = []
    for req in required:
        hit = False
        for s in sends:
            if s.receiver != req.receiver or s.op != req.op:
                continue
            args = _send_args(s, snap, model)
            if args is not None and all(strong_equal(a, b) is Bool3.TRUE for a, b in zip(args, req.args)):
                hit = True
                break
        if not hit:
            missing.append(req)
    return missing


def check_called(spec, trace: Trace, model: ClassModel) -> CheckReport:
    """Every span of the contextual operation must contain the required messages."""
    tc = spec if isinstance(spec, TypedConstraint) else typecheck(spec, model)
    decl: OperationSpec = tc.decl
    cid = f"{decl.label}:called"
    report = CheckReport()
    if decl.called is None:
        return report
    spans = 0
    for begin, i, j in trace.spans():
        if begin.op not in (decl.op, decl.label):
            continue
        snap = trace.state_before(i)
        if begin.receiver is None or snap is None or snap.class_of(begin.receiver) is None:
            continue
        if not model.is_subclass(snap.class_of(begin.receiver), tc.context):
            continue
        spans += 1
        binding = f"span {begin.id} (self={begin.receiver})"
        env = {"self": ObjRef(begin.receiver)}
        params = dict(tc.params)
        raw_args = dict(begin.args)
        try:
            for name, t in params.items():
                env[name] = coerce_literal(raw_args.get(name), t)
        except ValueError as exc:
            raise LoadError(Diagnostic(f"begin '{begin.id}': {exc}", NOPOS, file=trace.file)) from None
        required = _required(decl.called, env, snap, snap, tc, model)
        if required is None:
            report.add(Row(cid, binding, Verdict.UNDEFINED, decl.pos, note="condition or target undefined"))
            continue
        sends = _delivered(trace.entries[i + 1:j], snap, model)
        missing = _missing(required, sends, snap, model)
        note = "missing " + ", ".join(map(str, missing)) if missing else ""
        report.add(Row(cid, binding, Verdict.VIOLATED if missing else Verdict.SATISFIED, decl.pos, note=note))
    if spans == 0:
        report.add(Row(cid, "(no spans)", Verdict.SATISFIED, decl.pos, note="vacuous: operation never ran"))
    return report


def check_action(spec, trace: Trace, model: ClassModel) -> CheckReport:
    """On each rising edge of the condition the messages must be sent before the next state."""
    tc = spec if isinstance(spec, TypedConstraint) else typecheck(spec, model)
    decl: ActionConstraint = tc.decl
    cid = decl_id(decl)
    report = CheckReport()
    points = trace.state_points()
    if len(points) < 2:
        raise LoadError(Diagnostic(f"{cid}: action constraints need a trace with at least two states",
                                   NOPOS, file=trace.file))
    condition = tc.typed(decl.condition)
    edges = 0
    for (i, name0), (j, name1) in zip(points, points[1:]):
        s0, s1 = trace.snapshots[name0], trace.snapshots[name1]
        objs = objects_of_kind(s0, model, tc.context) | objects_of_kind(s1, model, tc.context)
        sends = _delivered(trace.entries[i + 1:j], s1, model)
        for oid in sorted(objs):
            env = {"self": ObjRef(oid)}
            c0 = evaluate(condition, env, s0, model)
            c1 = evaluate(condition, env, s1, model)
            binding = f"{oid} {name0}->{name1}"
            if c0 is Bool3.UNDEF and c1 is Bool3.UNDEF:
                report.add(Row(cid, binding, Verdict.UNDEFINED, decl.pos, note="condition undefined at both states"))
                continue
            if c0 is Bool3.TRUE or c1 is not Bool3.TRUE:
                continue
            edges += 1
            required = _required(decl.messages, env, s1, s0, tc, model)
            if required is None:
                report.add(Row(cid, binding, Verdict.UNDEFINED, decl.pos, note="message target undefined"))
                continue
            missing = _missing(required, sends, s1, model)
            note = "missing " + ", ".join(map(str, missing)) if missing else ""
            report.add(Row(cid, binding, Verdict.VIOLATED if missing else Verdict.SATISFIED, decl.pos, note=note))
    if not report.rows:
        report.add(Row(cid, "(no rising edges)", Verdict.SATISFIED, decl.pos, note="nothing required"))
    return report


def check_trace(constraints, trace: Trace, model: ClassModel) -> CheckReport:
    """All `called` clauses and action constraints in ``constraints``."""
    report = CheckReport()
    for item in getattr(constraints, "decls", constraints):
        decl = getattr(item, "decl", item)
        if isinstance(decl, OperationSpec) and decl.called is not None and decl.kind == "operation":
            report.extend(check_called(item, trace, model))
        elif isinstance(decl, ActionConstraint):
            report.extend(check_action(item, trace, model))
    return report
