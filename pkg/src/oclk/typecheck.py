"""Static type checking of constraint declarations against a class model.

The checker annotates every expression node with its type and records how
each name, navigation and call was resolved; the evaluator consumes both.
Annotations are keyed by node identity, so a ``TypeInfo`` is only valid
together with the very tree it was computed for.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .diagnostics import NOPOS, Diagnostic, DiagnosticSink, ParseError, Pos, TypeCheckError
from .model import AttributeDecl, ClassModel, OperationDecl, RoleRef
from .syntax.ast import (
    ActionConstraint, Binary, BoolLit, Call, CollOp, ConstantDecl, DerivedDef, If, IntLit,
    Invariant, Let, Message, MsgIf, Name, Nav, OperationSpec, PathName, RealLit, SelfExpr,
    StateArg, StrLit, TypeArg, Unary, walk,
)
from .syntax.parser import parse_expression
from .types import (
    BOOLEAN, INTEGER, OCLANY, REAL, STRING, AmbiguityError, Basic, ClassType, CollType,
    NoCommonSupertype, TypeRef, UnknownClass, conforms_to, is_collection, is_numeric,
    least_common_supertype,
)

BODY_OPS = frozenset({"exists", "forAll", "select", "reject", "collect", "isUnique", "any", "one"})
MULTI_ITERATOR_OPS = frozenset({"exists", "forAll"})
OCLANY_OPS = frozenset({"oclIsTypeOf", "oclIsKindOf", "oclAsType", "oclInState", "oclIsNew"})


@dataclass(frozen=True)
class MetaType:
    """Type of a bare class or basic-type name; only valid as a call/navigation source."""
    of: TypeRef

    def __str__(self) -> str:
        return f"type {self.of}"


@dataclass(frozen=True)
class Ref:
    """How a name, navigation or call was resolved."""
    kind: str  # var, attr, role, static, query, builtin, class, collop, type, state
    name: str = ""
    via: str | None = None  # variable supplying an unqualified feature
    owner: str | None = None
    decl: object = None  # AttributeDecl, OperationDecl, TypeRef, or RoleRef
    collect: bool = False  # feature applied elementwise over a collection source
    static_dispatch: bool = False
    iterators: tuple[str, ...] = ()
    coerce: bool = False  # single value treated as a 0/1-element Set
    path: tuple[str, ...] = ()


@dataclass
class TypeInfo:
    types: dict = field(default_factory=dict)
    refs: dict = field(default_factory=dict)
    queries: dict = field(default_factory=dict)  # (owner, op name) -> TypedExpr

    def type_of(self, node) -> TypeRef:
        return self.types[id(node)]


@dataclass
class TypedExpr:
    expr: object
    info: TypeInfo

    @property
    def type(self) -> TypeRef:
        return self.info.type_of(self.expr)


@dataclass
class TypedConstraint:
    decl: object
    info: TypeInfo
    context: str | None = None
    params: tuple = ()  # (name, TypeRef)
    receivers: tuple = ()  # (name, TypeRef)
    returns: TypeRef | None = None

    def typed(self, expr) -> TypedExpr:
        return TypedExpr(expr, self.info)


@dataclass
class Scope:
    vars: dict
    implicit: tuple = ()
    mode: str = "inv"  # inv, pre, post, called, query
    self_error: str | None = None
    void_result: bool = False

    def bind(self, name: str, t: TypeRef, implicit: bool = False) -> "Scope":
        return Scope({**self.vars, name: t}, ((name,) + self.implicit) if implicit else self.implicit,
                     self.mode, self.self_error, self.void_result)

    @property
    def allows_pre(self) -> bool:
        return self.mode in ("post", "called")


class Checker:
    def __init__(self, model: ClassModel, file: str = "<input>", info: TypeInfo | None = None):
        self.model = model
        self.sink = DiagnosticSink(file)
        self.info = info or TypeInfo()
        self._fresh = itertools.count(1)

    # -- helpers -----------------------------------------------------------

    def error(self, msg: str, node=None, pos: Pos | None = None) -> None:
        self.sink.error(msg, pos or getattr(node, "pos", None) or NOPOS)

    def _reported_at(self, node) -> bool:
        return any(d.pos == node.pos for d in self.sink.items)

    def record(self, node, t, ref: Ref | None = None):
        if t is not None and not isinstance(t, MetaType):
            self.info.types[id(node)] = t
        if ref is not None:
            self.info.refs[id(node)] = ref
        return t

    def resolve_type(self, t: TypeRef, node) -> TypeRef | None:
        if isinstance(t, CollType):
            elem = self.resolve_type(t.elem, node)
            return None if elem is None else CollType(t.kind, elem)
        if isinstance(t, ClassType):
            try:
                return ClassType(self.model.resolve_class(t.name))
            except UnknownClass as exc:
                self.error(str(exc), node)
                return None
        return t

    def resolve_class(self, name: str, node) -> str | None:
        try:
            return self.model.resolve_class(name)
        except UnknownClass as exc:
            self.error(str(exc), node)
            return None

    def conforms(self, a: TypeRef, b: TypeRef) -> bool:
        return conforms_to(a, b, self.model)

    def expect_type(self, node, scope: Scope, want: TypeRef, what: str):
        t = self.value(node, scope)
        if t is not None and not self.conforms(t, want):
            self.error(f"{what} must be {want}, found {t}", node)
            return None
        return t

    def value(self, node, scope: Scope):
        t = self.check(node, scope)
        if isinstance(t, MetaType):
            self.error(f"{t} cannot be used as a value", node)
            return None
        return t

    # -- features ----------------------------------------------------------

    def _feature(self, cls: str, name: str, node):
        """Resolve an attribute or role of ``cls``; returns (type, Ref) or (None, None)."""
        attrs = [(o, a) for o, a in self.model.find_attribute(cls, name) if not a.static]
        roles = self.model.find_role(cls, name)
        if len(attrs) + len(roles) > 1:
            owners = [o for o, _ in attrs] + [r.assoc.name for r in roles]
            self.error(f"feature '{name}' of {cls} is ambiguous ({', '.join(owners)}); "
                       f"use oclAsType to select one", node)
            return None, None
        if attrs:
            owner, decl = attrs[0]
            return decl.type, Ref("attr", name, owner=owner, decl=decl)
        if roles:
            role = roles[0]
            end = role.end
            t = ClassType(end.cls) if end.multiplicity.is_single else CollType("Set", ClassType(end.cls))
            return t, Ref("role", name, decl=role)
        return None, None

    def _has_feature(self, t: TypeRef, name: str, call: bool) -> bool:
        if not isinstance(t, ClassType):
            return False
        if call:
            return bool(self.model.find_operation(t.name, name)) or name in OCLANY_OPS
        return bool([a for _, a in self.model.find_attribute(t.name, name) if not a.static]
                    or self.model.find_role(t.name, name))

    def _collected(self, src: CollType, result: TypeRef) -> TypeRef:
        flat = result.elem if isinstance(result, CollType) else result
        if src.kind == "Sequence":
            kind = "Sequence"
        elif src.kind == "Set" and isinstance(flat, ClassType):
            kind = "Set"
        else:
            kind = "Bag"
        return CollType(kind, flat)

    # -- expressions -------------------------------------------------------

    def check(self, e, scope: Scope):
        method = getattr(self, "_check_" + type(e).__name__)
        return method(e, scope)

    def _check_BoolLit(self, e, scope):
        return self.record(e, BOOLEAN)

    def _check_IntLit(self, e, scope):
        return self.record(e, INTEGER)

    def _check_RealLit(self, e, scope):
        return self.record(e, REAL)

    def _check_StrLit(self, e, scope):
        return self.record(e, STRING)

    def _check_SelfExpr(self, e, scope):
        if "self" not in scope.vars:
            self.error(scope.self_error or "'self' is not available here", e)
            return None
        return self.record(e, scope.vars["self"], Ref("var", "self"))

    def _check_PathName(self, e, scope):
        path = "::".join(e.parts)
        try:
            cls = self.model.resolve_class(path)
        except UnknownClass:
            self.error(f"'{path}' does not name a class; '::' is only for package pathnames", e)
            return None
        self.record(e, None, Ref("class", cls))
        return MetaType(ClassType(cls))

    def _check_Name(self, e, scope):
        if e.name in scope.vars:
            if e.at_pre:
                self.error(f"'@pre' applies to properties, not to the variable '{e.name}'", e)
                return None
            return self.record(e, scope.vars[e.name], Ref("var", e.name))
        for via in scope.implicit:
            vt = scope.vars[via]
            if isinstance(vt, ClassType) and self._has_feature(vt, e.name, call=False):
                t, ref = self._feature(vt.name, e.name, e)
                if t is None:
                    return None
                if e.at_pre and not scope.allows_pre:
                    self.error("'@pre' is only allowed in postconditions", e)
                    return None
                return self.record(e, t, Ref(**{**ref.__dict__, "via": via}))
        if e.name == "result" and scope.void_result:
            self.error("'result' is not available: the operation has no return type", e)
            return None
        if e.name in ("Boolean", "Integer", "Real", "String", "OclAny"):
            return MetaType(Basic(e.name))
        try:
            cls = self.model.resolve_class(e.name)
        except UnknownClass:
            if "self" not in scope.vars and scope.self_error and not scope.implicit:
                self.error(f"unknown name '{e.name}' ({scope.self_error})", e)
            else:
                self.error(f"unknown name '{e.name}'", e)
            return None
        self.record(e, None, Ref("class", cls))
        return MetaType(ClassType(cls))

    def _check_Nav(self, e, scope):
        src = self.check(e.source, scope)
        if src is None:
            return None
        if e.at_pre and not scope.allows_pre:
            self.error("'@pre' is only allowed in postconditions", e)
            return None
        if isinstance(src, MetaType):
            if isinstance(src.of, ClassType):
                decl = self.model.classes[src.of.name].attribute(e.name)
                if decl is None:
                    for c in self.model.linearization(src.of.name):
                        decl = self.model.classes[c].attribute(e.name)
                        if decl is not None:
                            break
                if decl is not None and decl.static:
                    return self.record(e, decl.type, Ref("static", e.name, owner=src.of.name, decl=decl))
            self.error(f"{src.of} has no class-scope attribute '{e.name}'", e)
            return None
        if isinstance(src, ClassType):
            t, ref = self._feature(src.name, e.name, e)
            if t is None:
                if ref is None and not self._reported_at(e):
                    self._no_feature(src, e)
                return None
            return self.record(e, t, ref)
        if isinstance(src, CollType) and isinstance(src.elem, ClassType):
            t, ref = self._feature(src.elem.name, e.name, e)
            if t is None:
                if not self._reported_at(e):
                    self._no_feature(src.elem, e)
                return None
            return self.record(e, self._collected(src, t), Ref(**{**ref.__dict__, "collect": True}))
        if src == STRING and e.name in ("size", "toUpper", "toLower"):
            return self._string_op(e, [], None)
        if is_numeric(src) and e.name in ("abs", "floor", "round", "sqrt"):
            return self._numeric_op(e, src, [], None)
        self.error(f"{src} has no property '{e.name}'", e)
        return None

    def _no_feature(self, cls: ClassType, e):
        if self.model.find_operation(cls.name, e.name):
            self.error(f"'{e.name}' is an operation of {cls}; call it with parentheses", e)
        else:
            self.error(f"{cls} has no attribute or role '{e.name}'", e)

    def _check_Call(self, e, scope):
        if e.source is None:
            for via in scope.implicit:
                vt = scope.vars[via]
                if self._has_feature(vt, e.name, call=True):
                    return self._call_on(e, vt, scope, via=via)
            self.error(f"unknown operation '{e.name}'", e)
            return None
        src = self.check(e.source, scope)
        if src is None:
            return None
        return self._call_on(e, src, scope)

    def _call_on(self, e, src, scope, via=None):
        name = e.name
        if e.at_pre and not scope.allows_pre:
            self.error("'@pre' is only allowed in postconditions", e)
            return None
        if name == "allInstances":
            if e.args:
                self.error("allInstances takes no arguments", e)
                return None
            if isinstance(src, MetaType) and isinstance(src.of, ClassType):
                return self.record(e, CollType("Set", src.of), Ref("builtin", name))
            if isinstance(src, MetaType):
                self.error(f"{src.of}.allInstances is undefined: the extent of a basic type is "
                           f"infinite; navigate from a context object instead", e)
                return None
            self.error("allInstances applies to class names only", e)
            return None
        if isinstance(src, MetaType):
            self.error(f"{src} cannot be used as a value", e.source or e)
            return None
        if name in OCLANY_OPS:
            return self._oclany_op(e, src, scope, via)
        arg_types = [self.value(a, scope) for a in e.args]
        if any(t is None for t in arg_types):
            return None
        if src in (INTEGER, REAL):
            return self._numeric_op(e, src, arg_types, via)
        if src == STRING:
            return self._string_op(e, arg_types, via)
        if isinstance(src, ClassType):
            return self._query(e, src, arg_types, src, via)
        if isinstance(src, CollType) and isinstance(src.elem, ClassType):
            t = self._query(e, src.elem, arg_types, src, via)
            if t is None:
                return None
            ref = self.info.refs[id(e)]
            self.info.refs[id(e)] = Ref(**{**ref.__dict__, "collect": True})
            return self.record(e, self._collected(src, t))
        self.error(f"{src} has no operation '{name}'", e)
        return None

    def _query(self, e, cls: ClassType, arg_types, src, via):
        found = self.model.find_operation(cls.name, e.name)
        if not found:
            self.error(f"{cls} has no operation '{e.name}'", e)
            return None
        if len(found) > 1:
            self.error(f"operation '{e.name}' of {cls} is ambiguous "
                       f"({', '.join(o for o, _ in found)}); use oclAsType", e)
            return None
        owner, op = found[0]
        if op.returns is None:
            self.error(f"operation '{e.name}' has no return type and cannot be used in an expression", e)
            return None
        if len(op.params) != len(arg_types):
            self.error(f"operation '{e.name}' expects {len(op.params)} argument(s), got {len(arg_types)}", e)
            return None
        for p, at, arg in zip(op.params, arg_types, e.args):
            if not self.conforms(at, p.type):
                self.error(f"argument '{p.name}' of '{e.name}' must be {p.type}, found {at}", arg)
                return None
        static = isinstance(e.source, Call) and e.source.name == "oclAsType"
        return self.record(e, op.returns, Ref("query", e.name, via=via, owner=owner, decl=op,
                                              static_dispatch=static))

    def _oclany_op(self, e, src, scope, via):
        name = e.name
        if is_collection(src):
            self.error(f"{name} is defined on OclAny, and collection types do not conform to OclAny", e)
            return None
        ref = Ref("builtin", name, via=via)
        if name in ("oclIsTypeOf", "oclIsKindOf", "oclAsType"):
            if len(e.args) != 1 or not isinstance(e.args[0], TypeArg):
                self.error(f"{name} takes one type argument", e)
                return None
            target = self.resolve_type(e.args[0].type, e.args[0])
            if target is None:
                return None
            self.record(e.args[0], None, Ref("type", decl=target))
            if is_collection(target):
                self.error(f"{name}: {target} is not a subtype of OclAny", e.args[0])
                return None
            if name == "oclAsType":
                if not (self.conforms(target, src) or self.conforms(src, target)):
                    self.error(f"oclAsType({target}) is unrelated to the static type {src}", e)
                    return None
                return self.record(e, target, ref)
            return self.record(e, BOOLEAN, ref)
        if name == "oclInState":
            if len(e.args) != 1 or not isinstance(e.args[0], StateArg):
                self.error("oclInState takes one state name", e)
                return None
            if not isinstance(src, ClassType):
                self.error(f"oclInState needs an object, found {src}", e)
                return None
            sm = self.model.state_machine(src.name)
            if sm is None:
                self.error(f"class {src} has no state machine", e)
                return None
            try:
                path = sm.resolve(e.args[0].parts)
            except KeyError as exc:
                self.error(exc.args[0], e.args[0])
                return None
            self.record(e.args[0], None, Ref("state", path=path))
            return self.record(e, BOOLEAN, ref)
        # oclIsNew
        if e.args:
            self.error("oclIsNew takes no arguments", e)
            return None
        if scope.mode != "post":
            self.error("oclIsNew can only be used in a postcondition", e)
            return None
        if not isinstance(src, ClassType):
            self.error(f"oclIsNew needs an object, found {src}", e)
            return None
        return self.record(e, BOOLEAN, ref)

    def _numeric_op(self, e, src, args, via):
        name = e.name
        ref = Ref("builtin", name, via=via)
        unary = {"abs": src, "floor": INTEGER, "round": INTEGER, "sqrt": REAL}
        if name in unary and not args:
            return self.record(e, unary[name], ref)
        if name in ("max", "min") and len(args) == 1 and is_numeric(args[0]):
            return self.record(e, INTEGER if src == args[0] == INTEGER else REAL, ref)
        if name in ("div", "mod") and src == INTEGER and args == [INTEGER]:
            return self.record(e, INTEGER, ref)
        self.error(f"{src} has no operation {name} with argument types ({', '.join(map(str, args))})", e)
        return None

    def _string_op(self, e, args, via):
        ref = Ref("builtin", e.name, via=via)
        if e.name == "size" and not args:
            return self.record(e, INTEGER, ref)
        if e.name == "concat" and args == [STRING]:
            return self.record(e, STRING, ref)
        if e.name in ("toUpper", "toLower") and not args:
            return self.record(e, STRING, ref)
        self.error(f"String has no operation {e.name} with argument types "
                   f"({', '.join(map(str, args))})", e)
        return None

    def _check_CollOp(self, e, scope):
        src = self.value(e.source, scope)
        if src is None:
            return None
        coerce = not isinstance(src, CollType)
        if coerce:
            src = CollType("Set", src)
        op = e.op
        elem = src.elem
        if op in BODY_OPS:
            return self._body_op(e, src, elem, coerce, scope)
        if e.iterators:
            self.error(f"'{op}' does not take iterator variables", e)
            return None
        args = [self.value(a, scope) for a in e.args]
        if any(a is None for a in args):
            return None
        ref = Ref("collop", op, coerce=coerce)

        def arity(n):
            if len(args) != n:
                self.error(f"'{op}' expects {n} argument(s), got {len(args)}", e)
                return False
            return True

        if op in ("size", "isEmpty", "notEmpty", "sum", "asSet", "asBag", "asSequence"):
            if not arity(0):
                return None
            if op == "size":
                return self.record(e, INTEGER, ref)
            if op in ("isEmpty", "notEmpty"):
                return self.record(e, BOOLEAN, ref)
            if op == "sum":
                if not is_numeric(elem):
                    self.error(f"sum needs a numeric collection, found {src}", e)
                    return None
                return self.record(e, elem, ref)
            return self.record(e, CollType(op[2:], elem), ref)
        if op in ("includes", "excludes", "count", "including", "excluding"):
            if not arity(1):
                return None
            try:
                joined = least_common_supertype(elem, args[0], self.model)
            except NoCommonSupertype:
                self.error(f"'{op}': {args[0]} is not comparable with elements of {src}", e)
                return None
            except AmbiguityError as exc:
                joined = exc.candidates[0] if op in ("including",) else OCLANY
                if op == "including":
                    self.error(f"'including': {exc}", e)
                    return None
            if op == "count":
                return self.record(e, INTEGER, ref)
            if op in ("including", "excluding"):
                return self.record(e, CollType(src.kind if src.kind != "Collection" else "Bag",
                                               joined if op == "including" else elem), ref)
            return self.record(e, BOOLEAN, ref)
        if op in ("union", "intersection"):
            if not arity(1):
                return None
            other = args[0]
            if not isinstance(other, CollType):
                other = CollType("Set", other)
                ref = Ref("collop", op, coerce=coerce, path=("coerce-arg",))
            try:
                joined = least_common_supertype(elem, other.elem, self.model)
            except (NoCommonSupertype, AmbiguityError) as exc:
                self.error(f"'{op}': {exc}", e)
                return None
            kinds = {src.kind, other.kind}
            if "Sequence" in kinds and kinds != {"Sequence"}:
                self.error(f"'{op}' cannot mix Sequence with {src.kind if src.kind != 'Sequence' else other.kind}", e)
                return None
            if op == "union":
                kind = src.kind if src.kind == other.kind else "Bag"
            else:
                if "Sequence" in kinds:
                    self.error("'intersection' is not defined on sequences", e)
                    return None
                kind = "Bag" if kinds == {"Bag"} else "Set"
            if kind == "Collection":
                kind = "Bag"
            return self.record(e, CollType(kind, joined), ref)
        self.error(f"unknown collection operation '{op}'", e)
        return None

    def _body_op(self, e, src: CollType, elem, coerce, scope):
        op = e.op
        if len(e.args) != 1:
            self.error(f"'{op}' expects one body expression", e)
            return None
        if len(e.iterators) > 1 and op not in MULTI_ITERATOR_OPS:
            self.error(f"'{op}' takes at most one iterator variable", e)
            return None
        inner = scope
        names = []
        if not e.iterators:
            hidden = f"$it{next(self._fresh)}"
            inner = inner.bind(hidden, elem, implicit=True)
            names.append(hidden)
        else:
            for v in e.iterators:
                t = elem
                if v.type is not None:
                    t = self.resolve_type(v.type, v)
                    if t is None:
                        return None
                    if not self.conforms(elem, t):
                        self.error(f"iterator '{v.name}' declared {t}, but elements are {elem}", v)
                        return None
                inner = inner.bind(v.name, t)
                names.append(v.name)
        body = self.value(e.args[0], inner)
        if body is None:
            return None
        ref = Ref("collop", op, iterators=tuple(names), coerce=coerce)
        if op in ("exists", "forAll", "select", "reject", "one", "any"):
            if body != BOOLEAN:
                self.error(f"body of '{op}' must be Boolean, found {body}", e.args[0])
                return None
        if op in ("exists", "forAll", "isUnique", "one"):
            return self.record(e, BOOLEAN, ref)
        if op in ("select", "reject"):
            kind = src.kind if src.kind != "Collection" else "Bag"
            return self.record(e, CollType(kind, elem), ref)
        if op == "any":
            return self.record(e, elem, ref)
        flat = body.elem if isinstance(body, CollType) else body
        kind = "Sequence" if src.kind == "Sequence" else "Bag"
        return self.record(e, CollType(kind, flat), ref)

    def _check_Unary(self, e, scope):
        if e.op == "not":
            t = self.expect_type(e.operand, scope, BOOLEAN, "operand of 'not'")
            return None if t is None else self.record(e, BOOLEAN)
        t = self.value(e.operand, scope)
        if t is None:
            return None
        if not is_numeric(t):
            self.error(f"unary '-' needs a number, found {t}", e)
            return None
        return self.record(e, t)

    def _check_Binary(self, e, scope):
        op = e.op
        if op in ("and", "or", "xor", "implies"):
            lt = self.expect_type(e.left, scope, BOOLEAN, f"left operand of '{op}'")
            rt = self.expect_type(e.right, scope, BOOLEAN, f"right operand of '{op}'")
            return None if lt is None or rt is None else self.record(e, BOOLEAN)
        lt = self.value(e.left, scope)
        rt = self.value(e.right, scope)
        if lt is None or rt is None:
            return None
        if op in ("=", "==", "<>"):
            try:
                least_common_supertype(lt, rt, self.model)
            except NoCommonSupertype:
                self.error(f"cannot compare {lt} with {rt}: no common supertype", e)
                return None
            except AmbiguityError:
                pass
            return self.record(e, BOOLEAN)
        if op in ("<", ">", "<=", ">="):
            if (is_numeric(lt) and is_numeric(rt)) or (lt == rt == STRING):
                return self.record(e, BOOLEAN)
            self.error(f"'{op}' needs two numbers or two strings, found {lt} and {rt}", e)
            return None
        if not (is_numeric(lt) and is_numeric(rt)):
            self.error(f"'{op}' needs numbers, found {lt} and {rt}", e)
            return None
        if op == "/":
            return self.record(e, REAL)
        return self.record(e, INTEGER if lt == rt == INTEGER else REAL)

    def _check_If(self, e, scope):
        ct = self.expect_type(e.cond, scope, BOOLEAN, "if-condition")
        tt = self.value(e.then, scope)
        et = self.value(e.else_, scope)
        if ct is None or tt is None or et is None:
            return None
        try:
            t = least_common_supertype(tt, et, self.model)
        except AmbiguityError as exc:
            cands = ", ".join(str(c) for c in exc.candidates)
            self.error(f"if-expression branches have types {tt} and {et} with no unique least common "
                       f"supertype (candidates: {cands}); add an explicit oclAsType", e)
            return None
        except NoCommonSupertype:
            self.error(f"if-expression branches have incompatible types {tt} and {et}", e)
            return None
        return self.record(e, t)

    def _check_Let(self, e, scope):
        vt = self.value(e.value, scope)
        if vt is None:
            return None
        if e.type is not None:
            declared = self.resolve_type(e.type, e)
            if declared is None:
                return None
            if not self.conforms(vt, declared):
                self.error(f"let '{e.name}' declared {declared}, but its value is {vt}", e)
                return None
            vt = declared
        bt = self.value(e.body, scope.bind(e.name, vt))
        if bt is None:
            return None
        self.record(e, bt, Ref("var", e.name))
        return bt

    def _check_TypeArg(self, e, scope):
        self.error("type names are only allowed as arguments of oclIsTypeOf, oclIsKindOf and oclAsType", e)
        return None

    def _check_StateArg(self, e, scope):
        self.error("state names are only allowed as the argument of oclInState", e)
        return None

    # -- messages ----------------------------------------------------------

    def message_items(self, items, scope: Scope, forbid_if: bool = False):
        for item in items:
            if isinstance(item, MsgIf):
                if forbid_if:
                    self.error("action message lists cannot be conditional", item)
                    continue
                self.expect_type(item.cond, scope, BOOLEAN, "message condition")
                self.message_items(item.then, scope)
                self.message_items(item.else_, scope)
            else:
                self.message(item, scope)

    def message(self, m: Message, scope: Scope):
        if m.target is None:
            if "self" not in scope.vars:
                self.error(f"message '{m.op}' needs an explicit target", m)
                return
            target = scope.vars["self"]
        else:
            for node in walk(m.target):
                if isinstance(node, Call) and node.name == "allInstances":
                    self.error("messages may only go to the contextual object or objects navigable from it",
                               node)
                    return
            target = self.value(m.target, scope)
            if target is None:
                return
        cls = target.elem if isinstance(target, CollType) else target
        if not isinstance(cls, ClassType):
            self.error(f"message target must be an object, found {target}", m)
            return
        found = self.model.find_operation(cls.name, m.op)
        if not found:
            self.error(f"{cls} has no operation '{m.op}'", m)
            return
        op = found[0][1]
        args = [self.value(a, scope) for a in m.args]
        if any(a is None for a in args):
            return
        if len(args) != len(op.params):
            self.error(f"message '{m.op}' expects {len(op.params)} argument(s), got {len(args)}", m)
            return
        for p, at, arg in zip(op.params, args, m.args):
            if not self.conforms(at, p.type):
                self.error(f"argument '{p.name}' of '{m.op}' must be {p.type}, found {at}", arg)


# -- query bodies ----------------------------------------------------------

def compile_queries(model: ClassModel) -> dict:
    """Parse and check every query body in the model once; cached on the model."""
    if "queries" in model._cache:
        cached = model._cache["queries"]
        if isinstance(cached, TypeCheckError):
            raise cached
        return cached
    table: dict = {}
    diags: list[Diagnostic] = []
    for q, decl in model.classes.items():
        for op in decl.operations:
            if op.body is None:
                continue
            try:
                expr = parse_expression(op.body, f"<query {q}::{op.name}>")
            except ParseError as exc:
                diags.extend(exc.diagnostics)
                continue
            checker = Checker(model, f"<query {q}::{op.name}>")
            scope = Scope({"self": ClassType(q), **{p.name: p.type for p in op.params}}, ("self",),
                          "query")
            t = checker.value(expr, scope)
            if t is not None and op.returns is not None and not conforms_to(t, op.returns, model):
                checker.error(f"body of {q}::{op.name} has type {t}, declared {op.returns}", expr)
            diags.extend(checker.sink.items)
            table[(q, op.name)] = TypedExpr(expr, checker.info)
    if any(d.is_error for d in diags):
        err = TypeCheckError(diags)
        model._cache["queries"] = err
        raise err
    for typed in table.values():
        typed.info.queries = table
    model._cache["queries"] = table
    return table


# -- declarations ----------------------------------------------------------

def typecheck(decl, model: ClassModel, file: str = "<input>") -> TypedConstraint:
    """Type check one constraint declaration; raises ``TypeCheckError``."""
    queries = compile_queries(model)
    checker = Checker(model, file, TypeInfo(queries=queries))
    decl = promote_derived(decl, model)
    result = TypedConstraint(decl, checker.info)
    if isinstance(decl, (Invariant, DerivedDef, ConstantDecl, ActionConstraint)):
        ctx = checker.resolve_class(decl.context, decl)
        if ctx is None:
            raise TypeCheckError(checker.sink.items)
        result.context = ctx
        scope = Scope({"self": ClassType(ctx)}, ("self",), "inv")
        if getattr(decl, "self_name", None):
            scope = scope.bind(decl.self_name, ClassType(ctx))
        if isinstance(decl, Invariant):
            checker.expect_type(decl.expr, scope, BOOLEAN, "invariant")
        elif isinstance(decl, DerivedDef):
            _check_derived(checker, decl, ctx, scope)
        elif isinstance(decl, ConstantDecl):
            _check_constant(checker, decl, ctx)
        else:
            checker.expect_type(decl.condition, scope, BOOLEAN, "action condition")
            checker.message_items(decl.messages, scope, forbid_if=True)
    elif isinstance(decl, OperationSpec):
        _check_operation(checker, decl, result)
    else:
        raise TypeError(f"not a constraint declaration: {decl!r}")
    checker.sink.raise_if_errors(TypeCheckError)
    return result


def promote_derived(decl, model: ClassModel):
    """Read an invariant ``attr = expr`` on a derived attribute as its definition."""
    if not isinstance(decl, Invariant):
        return decl
    e = decl.expr
    if not (isinstance(e, Binary) and e.op == "=" and isinstance(e.left, Name) and not e.left.at_pre):
        return decl
    try:
        ctx = model.resolve_class(decl.context)
    except UnknownClass:
        return decl
    found = model.find_attribute(ctx, e.left.name)
    if len(found) != 1 or not found[0][1].derived:
        return decl
    return DerivedDef(decl.context, e.left.name, e.right, "default", decl.self_name, decl.label,
                      pos=e.left.pos)


def _check_derived(checker: Checker, decl: DerivedDef, ctx: str, scope: Scope) -> None:
    found = checker.model.find_attribute(ctx, decl.attr)
    if not found:
        checker.error(f"{ctx} has no attribute '{decl.attr}' to define", decl)
        return
    attr = found[0][1]
    if not attr.derived:
        checker.error(f"attribute '{decl.attr}' of {ctx} is not declared derived", decl)
        return
    t = checker.value(decl.expr, scope)
    if t is not None and not checker.conforms(t, attr.type):
        checker.error(f"definition of '{decl.attr}' has type {t}, declared {attr.type}", decl.expr)


def _check_constant(checker: Checker, decl: ConstantDecl, ctx: str) -> None:
    model = checker.model
    if decl.is_query:
        ops = model.find_operation(ctx, decl.feature)
        if not ops or ops[0][1].returns is None:
            checker.error(f"{ctx} has no query '{decl.feature}()'", decl)
        return
    if model.find_attribute(ctx, decl.feature) or model.find_role(ctx, decl.feature):
        return
    checker.error(f"{ctx} has no attribute or role '{decl.feature}'", decl)


def _check_operation(checker: Checker, decl: OperationSpec, result: TypedConstraint) -> None:
    model = checker.model
    params = []
    for p in decl.params:
        t = checker.resolve_type(p.type, p)
        if t is not None:
            params.append((p.name, t))
    receivers = []
    for r in decl.receivers:
        t = checker.resolve_type(r.type, r)
        if t is not None:
            receivers.append((r.name, t))
    returns = None
    if decl.returns is not None:
        returns = checker.resolve_type(decl.returns, decl)
    if checker.sink.has_errors:
        return
    names = [n for n, _ in receivers] + [n for n, _ in params]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        checker.error(f"duplicate parameter name(s): {', '.join(sorted(dup))}", decl)
        return
    base: dict = {}
    implicit: tuple = ()
    self_error = None
    if decl.kind == "operation":
        ctx = checker.resolve_class(decl.context, decl)
        if ctx is None:
            return
        result.context = ctx
        found = model.find_operation(ctx, decl.op)
        if not found:
            checker.error(f"class {ctx} declares no operation '{decl.op}'", decl)
            return
        op = found[0][1]
        declared = [p.type for p in op.params]
        if declared != [t for _, t in params]:
            checker.error(f"signature of {ctx}::{decl.op} does not match the model "
                          f"({', '.join(map(str, declared))})", decl)
            return
        if decl.returns is None:
            returns = op.returns
        elif returns != op.returns:
            checker.error(f"return type of {ctx}::{decl.op} is {op.returns or 'void'} in the model", decl)
            return
        base["self"] = ClassType(ctx)
        implicit = ("self",)
    elif decl.kind == "joint":
        self_error = "'self' is ambiguous in a joint action; use the receiver names"
    else:
        self_error = "an event has no receiver, so 'self' has nothing to refer to"
    base.update(dict(receivers))
    base.update(dict(params))
    result.params = tuple(params)
    result.receivers = tuple(receivers)
    result.returns = returns
    if decl.pre is not None:
        checker.expect_type(decl.pre, Scope(dict(base), implicit, "pre", self_error), BOOLEAN, "precondition")
    post_vars = dict(base)
    if returns is not None:
        post_vars["result"] = returns
    if decl.post is not None:
        checker.expect_type(decl.post, Scope(post_vars, implicit, "post", self_error, returns is None),
                            BOOLEAN, "postcondition")
    if decl.called is not None:
        checker.message_items(decl.called, Scope(dict(base), implicit, "called", self_error))


def typecheck_file(cfile, model: ClassModel) -> list[TypedConstraint]:
    """Type check every declaration, collecting all diagnostics before raising."""
    out, diags = [], []
    for decl in cfile.decls:
        try:
            out.append(typecheck(decl, model, cfile.file))
        except TypeCheckError as exc:
            diags.extend(exc.diagnostics)
    if diags:
        raise TypeCheckError(diags)
    return out


def typecheck_expression(text_or_expr, model: ClassModel, self_class: str | None = None,
                         variables: dict | None = None, file: str = "<expr>",
                         with_pre: bool = False) -> TypedExpr:
    """Type check a standalone expression (used by ``oclk eval`` and tests).

    ``with_pre`` admits ``@pre`` and ``oclIsNew``, for evaluation against a
    pre/post snapshot pair.
    """
    expr = parse_expression(text_or_expr, file) if isinstance(text_or_expr, str) else text_or_expr
    queries = compile_queries(model)
    checker = Checker(model, file, TypeInfo(queries=queries))
    vars_ = dict(variables or {})
    implicit: tuple = ()
    if self_class is not None:
        cls = checker.resolve_class(self_class, expr)
        checker.sink.raise_if_errors(TypeCheckError)
        vars_["self"] = ClassType(cls)
        implicit = ("self",)
    checker.value(expr, Scope(vars_, implicit, "post" if with_pre else "inv", "no 'self' is bound; pass --self"))
    checker.sink.raise_if_errors(TypeCheckError)
    return TypedExpr(expr, checker.info)
