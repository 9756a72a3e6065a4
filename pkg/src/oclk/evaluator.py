"""Evaluation of type-checked expressions over snapshots.

Every partial operation yields an undefined value of the statically known
result type; ``EvaluationError`` signals an internal fault (or a checked
Integer overflow), never an ordinary undefined result.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping

from .diagnostics import EvaluationError
from .logic import Bool3, bool_binop, bool_not, fold_and, fold_or
from .model import ClassModel, Snapshot, objects_of_kind
from .syntax.ast import (
    Binary, BoolLit, Call, CollOp, If, IntLit, Let, Name, Nav, PathName, RealLit, SelfExpr,
    StrLit, Unary,
)
from .typecheck import Ref, TypedExpr, TypeInfo
from .types import BOOLEAN, INTEGER, REAL, ClassType, CollType, TypeRef, conforms_to
from .values import (
    CollV, ObjRef, Undef, Value, check_int, dynamic_type, is_undef, make_coll, real, strong_equal,
    undef, value_key, weak_equal,
)

MAX_QUERY_DEPTH = 64

_BOOL_OPS = {"and": "and", "or": "or", "xor": "xor", "implies": "implies"}


def eval_oclIsNew(obj_id: str, pre: Snapshot, post: Snapshot) -> Bool3:
    if obj_id not in post.objects:
        return Bool3.UNDEF
    return Bool3.of(obj_id not in pre.objects)


class Evaluator:
    def __init__(self, model: ClassModel, snap: Snapshot, pre: Snapshot | None = None,
                 info: TypeInfo | None = None, depth: int = 0):
        self.model = model
        self.snap = snap
        self.pre = pre
        self.info = info
        self.depth = depth

    def _with(self, snap: Snapshot | None = None, info: TypeInfo | None = None) -> "Evaluator":
        return Evaluator(self.model, snap or self.snap, self.pre, info or self.info, self.depth)

    def _pre_state(self) -> "Evaluator":
        if self.pre is None:
            raise EvaluationError("'@pre' evaluated without a pre-state snapshot")
        return self._with(snap=self.pre)

    def type_of(self, node) -> TypeRef:
        try:
            return self.info.types[id(node)]
        except KeyError:
            raise EvaluationError(f"node was not type checked: {node!r}") from None

    def ref(self, node) -> Ref:
        try:
            return self.info.refs[id(node)]
        except KeyError:
            raise EvaluationError(f"unresolved node: {node!r}") from None

    # -- entry -------------------------------------------------------------

    def eval(self, e, env: Mapping[str, Value]) -> Value:
        method = getattr(self, "_eval_" + type(e).__name__, None)
        if method is None:
            raise EvaluationError(f"cannot evaluate {type(e).__name__}")
        return method(e, env)

    def _eval_BoolLit(self, e, env):
        return Bool3.of(e.value)

    def _eval_IntLit(self, e, env):
        return check_int(e.value)

    def _eval_RealLit(self, e, env):
        return real(e.value)

    def _eval_StrLit(self, e, env):
        return e.value

    def _eval_SelfExpr(self, e, env):
        return env["self"]

    def _eval_Name(self, e, env):
        ref = self.ref(e)
        if ref.kind == "var":
            return env[ref.name]
        source = env[ref.via]
        ev = self._pre_state() if e.at_pre else self
        return ev._feature(source, ref, self.type_of(e))

    def _eval_Nav(self, e, env):
        ref = self.ref(e)
        if ref.kind == "static":
            return self._static(ref, self.type_of(e), e.at_pre)
        source = self.eval(e.source, env)
        if ref.kind == "builtin":
            return self._builtin(e, ref.name, source, [], self.type_of(e))
        ev = self._pre_state() if e.at_pre else self
        return ev._feature(source, ref, self.type_of(e))

    # -- features ----------------------------------------------------------

    def _static(self, ref: Ref, t: TypeRef, at_pre: bool) -> Value:
        snap = self.pre if at_pre else self.snap
        for c in self.model.linearization(ref.owner):
            values = snap.statics.get(c, {})
            if ref.name in values:
                return values[ref.name]
        return undef(t)

    def _feature(self, source: Value, ref: Ref, t: TypeRef) -> Value:
        if ref.collect:
            if is_undef(source):
                return undef(t)
            out = []
            for item in source.items:
                v = self._read(item, ref, self._single_type(ref))
                if is_undef(v):
                    return undef(t)
                if isinstance(v, CollV):
                    out.extend(v.items)
                else:
                    out.append(v)
            return make_coll(t.kind, out, t.elem)
        return self._read(source, ref, t)

    def _single_type(self, ref: Ref) -> TypeRef:
        if ref.kind == "attr":
            return ref.decl.type
        end = ref.decl.end
        return ClassType(end.cls) if end.multiplicity.is_single else CollType("Set", ClassType(end.cls))

    def _read(self, obj: Value, ref: Ref, t: TypeRef) -> Value:
        if not isinstance(obj, ObjRef):
            return undef(t)
        rec = self.snap.objects.get(obj.id)
        if rec is None:
            return undef(t)
        if ref.kind == "attr":
            v = rec.attrs.get(ref.name)
            return undef(t) if v is None else v
        role = ref.decl
        ids = self.snap.linked(role.assoc.name, role.target, obj.id)
        if role.end.multiplicity.is_single:
            return ObjRef(ids[0]) if ids else undef(t)
        return make_coll("Set", [ObjRef(i) for i in ids])

    # -- calls -------------------------------------------------------------

    def _eval_Call(self, e, env):
        ref = self.ref(e)
        t = self.type_of(e)
        if ref.kind == "builtin" and ref.name == "allInstances":
            snap = self.pre if e.at_pre else self.snap
            cls = self.ref(e.source).name
            return make_coll("Set", [ObjRef(i) for i in objects_of_kind(snap, self.model, cls)])
        if e.source is None:
            source = env[ref.via]
        else:
            source = self.eval(e.source, env)
        args = [self.eval(a, env) for a in e.args if not _is_meta_arg(a)]
        ev = self._pre_state() if e.at_pre else self
        if ref.kind == "query":
            if ref.collect:
                if is_undef(source):
                    return undef(t)
                out = []
                for item in source.items:
                    v = ev._query(item, ref, args, ref.decl.returns)
                    if is_undef(v):
                        return undef(t)
                    out.extend(v.items if isinstance(v, CollV) else [v])
                return make_coll(t.kind, out, t.elem)
            return ev._query(source, ref, args, t)
        return ev._builtin(e, ref.name, source, args, t)

    def _query(self, obj: Value, ref: Ref, args: list, t: TypeRef) -> Value:
        if not isinstance(obj, ObjRef) or obj.id not in self.snap.objects:
            return undef(t)
        if ref.static_dispatch:
            owner, op = ref.owner, ref.decl
        else:
            owner, op = self.model.dispatch_operation(self.snap.class_of(obj.id), ref.name)
        if op.body is None:
            stored = self.snap.objects[obj.id].attrs.get(ref.name)
            return undef(t) if stored is None else stored
        body = self.info.queries.get((owner, op.name))
        if body is None:
            raise EvaluationError(f"query body {owner}::{op.name} was not compiled")
        if self.depth >= MAX_QUERY_DEPTH:
            raise EvaluationError(f"query recursion deeper than {MAX_QUERY_DEPTH} in {owner}::{op.name}")
        env = {"self": obj, **{p.name: a for p, a in zip(op.params, args)}}
        sub = Evaluator(self.model, self.snap, self.pre, body.info, self.depth + 1)
        v = sub.eval(body.expr, env)
        if op.returns == REAL and isinstance(v, int):
            return float(v)
        return v

    def _builtin(self, e, name: str, src: Value, args: list, t: TypeRef) -> Value:
        if name in ("oclIsTypeOf", "oclIsKindOf", "oclAsType"):
            target = self.ref(e.args[0]).decl
            if is_undef(src):
                return undef(t)
            dyn = dynamic_type(src, self.snap.class_of)
            if isinstance(src, ObjRef) and self.snap.class_of(src.id) is None:
                return undef(t)
            if name == "oclIsTypeOf":
                return Bool3.of(dyn == target)
            ok = conforms_to(dyn, target, self.model)
            if name == "oclIsKindOf":
                return Bool3.of(ok)
            if not ok:
                return undef(t)
            return float(src) if target == REAL and isinstance(src, int) else src
        if name == "oclInState":
            path = self.ref(e.args[0]).path
            if not isinstance(src, ObjRef) or src.id not in self.snap.objects:
                return Bool3.UNDEF
            state = self.snap.objects[src.id].state
            return Bool3.of(state is not None and tuple(state[:len(path)]) == tuple(path))
        if name == "oclIsNew":
            if not isinstance(src, ObjRef):
                return Bool3.UNDEF
            if self.pre is None:
                raise EvaluationError("oclIsNew evaluated without a pre-state snapshot")
            return eval_oclIsNew(src.id, self.pre, self.snap)
        if is_undef(src) or any(is_undef(a) for a in args):
            return undef(t)
        if name == "abs":
            return check_int(abs(src)) if isinstance(src, int) else abs(src)
        if name == "floor":
            return _to_int(math.floor(src), t)
        if name == "round":
            return _to_int(math.floor(src + 0.5), t)
        if name == "sqrt":
            return real(math.sqrt(src)) if src >= 0 else undef(REAL)
        if name in ("max", "min"):
            v = max(src, args[0]) if name == "max" else min(src, args[0])
            return float(v) if t == REAL else v
        if name in ("div", "mod"):
            d = args[0]
            if d == 0:
                return undef(INTEGER)
            q = abs(src) // abs(d) * (1 if (src >= 0) == (d >= 0) else -1)
            return check_int(q) if name == "div" else check_int(src - d * q)
        if name == "size":
            return len(src)
        if name == "concat":
            return src + args[0]
        if name == "toUpper":
            return src.upper()
        if name == "toLower":
            return src.lower()
        raise EvaluationError(f"unknown built-in operation {name}")

    # -- collections -------------------------------------------------------

    def _eval_CollOp(self, e, env):
        ref = self.ref(e)
        t = self.type_of(e)
        source = self.eval(e.source, env)
        if ref.coerce:
            source = CollV("Set", ()) if is_undef(source) else CollV("Set", (source,))
        if ref.iterators:
            def body(values):
                return self.eval(e.args[0], {**env, **dict(zip(ref.iterators, values))})
            return eval_collection_op(e.op, source, body, t, iterators=len(ref.iterators))
        args = [self.eval(a, env) for a in e.args]
        if ref.path == ("coerce-arg",):
            args = [CollV("Set", ()) if is_undef(args[0]) else CollV("Set", (args[0],))]
        return eval_collection_op(e.op, source, None, t, args)

    # -- operators ---------------------------------------------------------

    def _eval_Unary(self, e, env):
        v = self.eval(e.operand, env)
        if e.op == "not":
            return bool_not(v)
        if is_undef(v):
            return v
        return check_int(-v) if isinstance(v, int) else -v

    def _eval_Binary(self, e, env):
        op = e.op
        a = self.eval(e.left, env)
        b = self.eval(e.right, env)
        if op in _BOOL_OPS:
            return bool_binop(op, a, b)
        if op == "=":
            return strong_equal(a, b)
        if op == "==":
            return weak_equal(a, b)
        if op == "<>":
            return bool_not(strong_equal(a, b))
        t = self.type_of(e)
        if is_undef(a) or is_undef(b):
            return undef(t)
        if op == "<":
            return Bool3.of(a < b)
        if op == ">":
            return Bool3.of(a > b)
        if op == "<=":
            return Bool3.of(a <= b)
        if op == ">=":
            return Bool3.of(a >= b)
        if op == "/":
            if b == 0:
                return undef(REAL)
            return real(a / b)
        if op == "+":
            v = a + b
        elif op == "-":
            v = a - b
        elif op == "*":
            v = a * b
        else:
            raise EvaluationError(f"unknown operator {op}")
        if t == INTEGER:
            return check_int(v)
        return real(v)

    def _eval_If(self, e, env):
        c = self.eval(e.cond, env)
        t = self.type_of(e)
        if c is Bool3.UNDEF:
            return undef(t)
        v = self.eval(e.then if c is Bool3.TRUE else e.else_, env)
        if t == REAL and isinstance(v, int):
            return float(v)
        return v

    def _eval_Let(self, e, env):
        v = self.eval(e.value, env)
        if e.type == REAL and isinstance(v, int):
            v = float(v)
        return self.eval(e.body, {**env, e.name: v})

    def _eval_PathName(self, e, env):
        raise EvaluationError("a class name is not a value")


def _is_meta_arg(a) -> bool:
    return type(a).__name__ in ("TypeArg", "StateArg")


def _to_int(x, t) -> Value:
    try:
        return check_int(int(x))
    except (OverflowError, ValueError):
        return undef(t)


def _coll_of(kind: str, items, t: TypeRef) -> Value:
    elem = t.elem if isinstance(t, CollType) else None
    return make_coll(kind if kind != "Collection" else "Bag", items, elem)


def eval_collection_op(op: str, source: Value, body, t: TypeRef, args: list | None = None,
                       iterators: int = 1) -> Value:
    """Apply a collection operation. ``body`` maps a tuple of iterator values to a value."""
    if is_undef(source):
        return undef(t)
    items = source.items
    if body is not None:
        if op in ("exists", "forAll"):
            tuples = itertools.product(items, repeat=iterators)
            values = (body(tup) for tup in tuples)
            return fold_or(values) if op == "exists" else fold_and(values)
        values = [body((x,)) for x in items]
        if op in ("select", "reject"):
            if any(v is Bool3.UNDEF for v in values):
                return undef(t)
            keep = Bool3.TRUE if op == "select" else Bool3.FALSE
            return _coll_of(t.kind, [x for x, v in zip(items, values) if v is keep], t)
        if op == "collect":
            out = []
            for v in values:
                if is_undef(v):
                    return undef(t)
                out.extend(v.items if isinstance(v, CollV) else [v])
            return _coll_of(t.kind, out, t)
        if op == "isUnique":
            if any(is_undef(v) for v in values):
                return Bool3.UNDEF
            for (x1, v1), (x2, v2) in itertools.combinations(zip(items, values), 2):
                if strong_equal(x1, x2) is Bool3.FALSE and strong_equal(v1, v2) is Bool3.TRUE:
                    return Bool3.FALSE
            return Bool3.TRUE
        if op == "any":
            if any(v is Bool3.UNDEF for v in values):
                return undef(t)
            for x, v in zip(items, values):
                if v is Bool3.TRUE:
                    return x
            return undef(t)
        if op == "one":
            hits = sum(1 for v in values if v is Bool3.TRUE)
            if hits > 1:
                return Bool3.FALSE
            if any(v is Bool3.UNDEF for v in values):
                return Bool3.UNDEF
            return Bool3.of(hits == 1)
        raise EvaluationError(f"unknown iterator operation {op}")
    args = args or []
    if op == "size":
        return len(items)
    if op == "isEmpty":
        return Bool3.of(not items)
    if op == "notEmpty":
        return Bool3.of(bool(items))
    if op == "sum":
        total = 0.0 if t == REAL else 0
        for x in items:
            total += x
        return check_int(total) if t == INTEGER else real(total)
    if op in ("asSet", "asBag", "asSequence"):
        return make_coll(op[2:], items, t.elem)
    arg = args[0]
    if is_undef(arg):
        return undef(t)
    if op in ("includes", "excludes", "count"):
        n = sum(1 for x in items if strong_equal(x, arg) is Bool3.TRUE)
        if op == "count":
            return n
        return Bool3.of((n > 0) == (op == "includes"))
    if op == "including":
        return _coll_of(t.kind, list(items) + [arg], t)
    if op == "excluding":
        return _coll_of(t.kind, [x for x in items if strong_equal(x, arg) is not Bool3.TRUE], t)
    if op == "union":
        return _coll_of(t.kind, list(items) + list(arg.items), t)
    if op == "intersection":
        if t.kind == "Set":
            keys = {value_key(y) for y in arg.items}
            return _coll_of("Set", [x for x in items if value_key(x) in keys], t)
        remaining: dict = {}
        for y in arg.items:
            remaining[value_key(y)] = remaining.get(value_key(y), 0) + 1
        out = []
        for x in items:
            k = value_key(x)
            if remaining.get(k, 0) > 0:
                remaining[k] -= 1
                out.append(x)
        return _coll_of("Bag", out, t)
    raise EvaluationError(f"unknown collection operation {op}")


def evaluate(typed: TypedExpr, env: Mapping[str, Value], snap: Snapshot, model: ClassModel,
             pre_snap: Snapshot | None = None) -> Value:
    """Evaluate a typed expression; ``pre_snap`` backs ``@pre`` and ``oclIsNew``."""
    try:
        return Evaluator(model, snap, pre_snap, typed.info).eval(typed.expr, env)
    except RecursionError:
        raise EvaluationError("expression nests too deeply to evaluate") from None


eval = evaluate  # noqa: A001
