"""Invariant and operation-contract checking over snapshots."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from .diagnostics import NOPOS, Diagnostic, LoadError, Pos
from .evaluator import eval_oclIsNew, evaluate
from .logic import Bool3, bool_binop
from .model import ClassModel, Snapshot, coerce_literal, load_snapshot_file, objects_of_kind
from .syntax.ast import ConstantDecl, Invariant, OperationSpec, decl_id
from .typecheck import TypedConstraint, typecheck
from .types import ClassType, CollType, TypeRef, conforms_to
from .values import CollV, ObjRef, Value, format_value, strong_equal
from .yamldoc import PDict, load_document

__all__ = [
    "Verdict", "Row", "CheckReport", "OpInvocation", "OperationVerdicts", "check_invariants",
    "check_operation", "check_constancy", "eval_oclIsNew", "load_invocation", "find_spec",
]


class Verdict(str, enum.Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNDEFINED = "undefined"

    @classmethod
    def of(cls, b: Bool3) -> "Verdict":
        return {Bool3.TRUE: cls.SATISFIED, Bool3.FALSE: cls.VIOLATED}.get(b, cls.UNDEFINED)

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Row:
    constraint: str
    binding: str
    verdict: Verdict
    pos: Pos = NOPOS
    counted: bool = True  # informational rows never affect the exit status
    note: str = ""

    @property
    def sort_key(self):
        return (self.constraint, self.binding)


@dataclass
class CheckReport:
    rows: list[Row] = field(default_factory=list)

    def add(self, row: Row) -> None:
        self.rows.append(row)

    def extend(self, other: "CheckReport") -> "CheckReport":
        self.rows.extend(other.rows)
        return self

    def sorted_rows(self) -> list[Row]:
        return sorted(self.rows, key=lambda r: r.sort_key)

    def with_verdict(self, v: Verdict) -> list[Row]:
        return [r for r in self.sorted_rows() if r.counted and r.verdict is v]

    def ok(self, undefined_ok: bool = False) -> bool:
        bad = {Verdict.VIOLATED} if undefined_ok else {Verdict.VIOLATED, Verdict.UNDEFINED}
        return not any(r.counted and r.verdict in bad for r in self.rows)

    def machine_lines(self) -> list[str]:
        return [f"{r.constraint} | {r.binding} | {r.verdict}" for r in self.sorted_rows()]

    def text(self) -> str:
        rows = self.sorted_rows()
        if not rows:
            return "no constraints checked\n"
        width_c = max(len("constraint"), *(len(r.constraint) for r in rows))
        width_b = max(len("binding"), *(len(r.binding) for r in rows))
        lines = [f"{'constraint':<{width_c}}  {'binding':<{width_b}}  verdict",
                 f"{'-' * width_c}  {'-' * width_b}  -------"]
        for r in rows:
            extra = f"  ({r.note})" if r.note else ""
            lines.append(f"{r.constraint:<{width_c}}  {r.binding:<{width_b}}  {r.verdict}{extra}")
        for title, v in (("violated", Verdict.VIOLATED), ("undefined", Verdict.UNDEFINED)):
            hits = self.with_verdict(v)
            if hits:
                lines.append("")
                lines.append(f"{title} ({len(hits)}):")
                lines.extend(f"  {r.constraint} [{r.binding}]" for r in hits)
        counted = [r for r in rows if r.counted]
        n_ok = sum(1 for r in counted if r.verdict is Verdict.SATISFIED)
        lines.append("")
        lines.append(f"{n_ok} satisfied, {len(self.with_verdict(Verdict.VIOLATED))} violated, "
                     f"{len(self.with_verdict(Verdict.UNDEFINED))} undefined")
        return "\n".join(lines) + "\n"


def _as_typed(items, model: ClassModel, kind) -> list[TypedConstraint]:
    out = []
    for item in getattr(items, "decls", items):
        tc = item if isinstance(item, TypedConstraint) else None
        decl = tc.decl if tc else item
        if isinstance(decl, kind):
            out.append(tc or typecheck(decl, model))
    return out


# -- invariants --------------------------------------------------------------

def check_invariants(constraints, snap: Snapshot, model: ClassModel) -> CheckReport:
    """Evaluate every invariant once per object of its context class.

    ``constraints`` is a ``ConstraintFile`` or a list of declarations or
    ``TypedConstraint`` objects; non-invariant declarations are ignored.
    """
    report = CheckReport()
    for tc in _as_typed(constraints, model, Invariant):
        decl = tc.decl
        name = decl.self_name or "self"
        cid = decl_id(decl)
        for oid in sorted(objects_of_kind(snap, model, tc.context)):
            env = {"self": ObjRef(oid)}
            if decl.self_name:
                env[decl.self_name] = ObjRef(oid)
            v = evaluate(tc.typed(decl.expr), env, snap, model)
            report.add(Row(cid, f"{name}={oid}", Verdict.of(v), decl.pos))
    return report


# -- operations --------------------------------------------------------------

@dataclass
class OpInvocation:
    """A recorded execution: which operation ran, on what, and the two states."""
    op: str
    receivers: dict  # name -> object id; "self" for ordinary operations
    args: dict  # name -> plain document value
    pre: Snapshot
    post: Snapshot
    result: object = None
    has_result: bool = False
    file: str = "<invocation>"


@dataclass(frozen=True)
class OperationVerdicts:
    pre: Verdict
    post: Verdict  # raw postcondition over the post-state
    combined: Verdict  # pre implies post
    binding: str
    report: CheckReport


def load_invocation(text: str, model: ClassModel, file: str = "<invocation>",
                    base_dir: Path | None = None) -> OpInvocation:
    doc = load_document(text, file)
    if not isinstance(doc, PDict):
        raise LoadError(Diagnostic("invocation document must be a mapping", NOPOS, file=file))
    allowed = {"op", "receivers", "args", "result", "preSnapshot", "postSnapshot"}
    for key in doc:
        if key not in allowed:
            raise LoadError(Diagnostic(f"unknown invocation key '{key}'", doc.pos_of(key), file=file))
    for key in ("op", "preSnapshot", "postSnapshot"):
        if key not in doc:
            raise LoadError(Diagnostic(f"invocation needs '{key}'", doc.pos, file=file))
    base = base_dir or Path(".")
    snaps = []
    for key in ("preSnapshot", "postSnapshot"):
        snaps.append(load_snapshot_file(base / str(doc[key]), model))
    receivers = doc.get("receivers") or {}
    args = doc.get("args") or {}
    if not isinstance(receivers, dict) or not isinstance(args, dict):
        raise LoadError(Diagnostic("'receivers' and 'args' must be mappings", doc.pos, file=file))
    return OpInvocation(str(doc["op"]), {str(k): str(v) for k, v in receivers.items()}, dict(args),
                        snaps[0], snaps[1], doc.get("result"), "result" in doc, file)


def load_invocation_file(path, model: ClassModel) -> OpInvocation:
    path = Path(path)
    return load_invocation(path.read_text(encoding="utf-8"), model, str(path), path.parent)


def spec_matches(spec: OperationSpec, op: str) -> bool:
    return op in {spec.label, spec.op} or (spec.kind == "operation" and op == f"{spec.context}::{spec.op}")


def find_spec(specs, op: str) -> list:
    return [s for s in specs if spec_matches(getattr(s, "decl", s), op)]


def _bind_value(raw, t: TypeRef, snap: Snapshot, model: ClassModel, what: str, file: str) -> Value:
    try:
        v = coerce_literal(raw, t)
    except ValueError as exc:
        raise LoadError(Diagnostic(f"{what}: {exc}", NOPOS, file=file)) from None
    refs = v.items if isinstance(v, CollV) else (v,)
    want = t.elem if isinstance(t, CollType) else t
    for r in refs:
        if isinstance(r, ObjRef):
            cls = snap.class_of(r.id)
            if cls is None:
                raise LoadError(Diagnostic(f"{what}: object '{r.id}' does not exist in the pre-state",
                                           NOPOS, file=file))
            if not conforms_to(ClassType(cls), want, model):
                raise LoadError(Diagnostic(f"{what}: object '{r.id}' is a {cls}, expected {want}",
                                           NOPOS, file=file))
    return v


def bind_invocation(tc: TypedConstraint, inv: OpInvocation, model: ClassModel) -> dict:
    """Environment for a spec from an invocation record; raises ``LoadError`` on mismatch."""
    decl = tc.decl
    env: dict = {}
    if decl.kind == "operation":
        expected = {"self": ClassType(tc.context)}
    else:
        expected = dict(tc.receivers)
    if set(inv.receivers) != set(expected):
        raise LoadError(Diagnostic(
            f"{decl.label}: receivers {sorted(inv.receivers)} do not match {sorted(expected)}",
            NOPOS, file=inv.file))
    for name, t in expected.items():
        env[name] = _bind_value(inv.receivers[name], t, inv.pre, model, f"receiver '{name}'", inv.file)
    params = dict(tc.params)
    if set(inv.args) != set(params):
        raise LoadError(Diagnostic(
            f"{decl.label}: arguments {sorted(inv.args)} do not match parameters {sorted(params)}",
            NOPOS, file=inv.file))
    for name, t in params.items():
        env[name] = _bind_value(inv.args[name], t, inv.pre, model, f"argument '{name}'", inv.file)
    if tc.returns is not None:
        raw = inv.result if inv.has_result else None
        env["result"] = _bind_value(raw, tc.returns, inv.post, model, "result", inv.file) \
            if raw is not None else coerce_literal(None, tc.returns)
    return env


def _binding_text(env: dict) -> str:
    return ", ".join(f"{k}={format_value(v)}" for k, v in env.items() if k != "result")


def check_operation(spec, inv: OpInvocation, model: ClassModel) -> OperationVerdicts:
    """Check a spec (operation, joint action or event) against one invocation record."""
    tc = spec if isinstance(spec, TypedConstraint) else typecheck(spec, model)
    decl = tc.decl
    env = bind_invocation(tc, inv, model)
    pre_v = Bool3.TRUE if decl.pre is None else evaluate(tc.typed(decl.pre), env, inv.pre, model)
    post_v = Bool3.TRUE if decl.post is None else evaluate(tc.typed(decl.post), env, inv.post, model, inv.pre)
    combined = bool_binop("implies", pre_v, post_v)
    binding = _binding_text(env)
    report = CheckReport([
        Row(f"{decl.label}:pre", binding, Verdict.of(pre_v), decl.pos),
        Row(f"{decl.label}:post", binding, Verdict.of(combined), decl.pos),
        Row(f"{decl.label}:post-raw", binding, Verdict.of(post_v), decl.pos, counted=False,
            note="post-state only, informational"),
    ])
    return OperationVerdicts(Verdict.of(pre_v), Verdict.of(post_v), Verdict.of(combined), binding, report)


# -- constancy ---------------------------------------------------------------

def _constant_features(model: ClassModel, declarations) -> list[tuple[str, str, str]]:
    """(kind, class, feature) triples marked constant in the model or by declarations."""
    out = set()
    for q, cls in model.classes.items():
        for a in cls.attributes:
            if a.constant:
                out.add(("attr", q, a.name))
    for assoc in model.associations.values():
        for target in (0, 1):
            end, other = assoc.ends[target], assoc.ends[1 - target]
            if end.constant:
                out.add(("role", other.cls, end.role))
    for d in declarations or ():
        decl = getattr(d, "decl", d)
        if not isinstance(decl, ConstantDecl):
            continue
        ctx = model.resolve_class(decl.context)
        if decl.is_query:
            out.add(("query", ctx, decl.feature))
        elif model.find_attribute(ctx, decl.feature):
            out.add(("attr", ctx, decl.feature))
        else:
            out.add(("role", ctx, decl.feature))
    return sorted(out)


def check_constancy(model: ClassModel, pre: Snapshot, post: Snapshot, declarations=(),
                    file: str = "<snapshot>") -> list[Diagnostic]:
    """Report constant features whose value changed on objects that are not new."""
    diags: list[Diagnostic] = []
    for kind, cls, name in _constant_features(model, declarations):
        # objects created by the operation (only in the post-state) are exempt
        both = sorted(objects_of_kind(pre, model, cls) & objects_of_kind(post, model, cls))
        for oid in both:
            if kind == "role":
                role = model.find_role(cls, name)[0]
                before = pre.linked(role.assoc.name, role.target, oid)
                after = post.linked(role.assoc.name, role.target, oid)
                if before != after:
                    diags.append(Diagnostic(
                        f"constant role '{name}' of '{oid}' changed from {{{', '.join(before)}}} "
                        f"to {{{', '.join(after)}}}", NOPOS, "error", file))
                continue
            a, b = pre.objects[oid].attrs.get(name), post.objects[oid].attrs.get(name)
            if kind == "query" and a is None and b is None:
                diags.append(Diagnostic(f"constant query '{name}()' of {cls} is computed, not stored; "
                                        f"not checked", NOPOS, "warning", file))
                break
            if (a is None) != (b is None) or (a is not None and strong_equal(a, b) is not Bool3.TRUE):
                label = "query" if kind == "query" else "attribute"
                diags.append(Diagnostic(
                    f"constant {label} '{name}' of '{oid}' changed from "
                    f"{format_value(a) if a is not None else 'unset'} to "
                    f"{format_value(b) if b is not None else 'unset'}", NOPOS, "error", file))
    return diags
