"""Abstract syntax of OCL expressions and constraint declarations.

Positions never take part in equality, so a re-parsed pretty print compares
equal to the original tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from ..diagnostics import NOPOS, Pos
from ..types import TypeRef


def _pos():
    return field(default=NOPOS, compare=False, kw_only=True)


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class RealLit:
    value: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class StrLit:
    value: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SelfExpr:
    pos: Pos = _pos()


@dataclass(frozen=True)
class Name:
    name: str
    at_pre: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class PathName:
    parts: tuple[str, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Nav:
    source: "Expr"
    name: str
    at_pre: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call:
    """``source.name(args)``; ``source`` is None for an unqualified call."""
    source: "Expr | None"
    name: str
    args: tuple["Expr", ...] = ()
    at_pre: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class IterVar:
    name: str
    type: TypeRef | None = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class CollOp:
    """``source->op(iterators | args)``."""
    source: "Expr"
    op: str
    iterators: tuple[IterVar, ...] = ()
    args: tuple["Expr", ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class TypeArg:
    type: TypeRef
    pos: Pos = _pos()


@dataclass(frozen=True)
class StateArg:
    parts: tuple[str, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary:
    op: str  # not, -
    operand: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    else_: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Let:
    name: str
    type: TypeRef | None
    value: "Expr"
    body: "Expr"
    pos: Pos = _pos()


Expr = Union[BoolLit, IntLit, RealLit, StrLit, SelfExpr, Name, PathName, Nav, Call, CollOp,
             TypeArg, StateArg, Unary, Binary, If, Let]


def children(e) -> tuple:
    if isinstance(e, (Nav,)):
        return (e.source,)
    if isinstance(e, Call):
        return ((e.source,) if e.source is not None else ()) + e.args
    if isinstance(e, CollOp):
        return (e.source,) + e.args
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, If):
        return (e.cond, e.then, e.else_)
    if isinstance(e, Let):
        return (e.value, e.body)
    return ()


def walk(e) -> Iterator:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


# -- messages ----------------------------------------------------------------

@dataclass(frozen=True)
class Message:
    target: Expr | None  # None: the contextual object
    op: str
    args: tuple[Expr, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class MsgIf:
    cond: Expr
    then: tuple["MsgItem", ...]
    else_: tuple["MsgItem", ...] = ()
    pos: Pos = _pos()


MsgItem = Union[Message, MsgIf]


# -- declarations ------------------------------------------------------------

RECURSION_MODES = ("default", "executable", "loose")


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeRef | None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Invariant:
    context: str
    expr: Expr
    self_name: str | None = None
    label: str | None = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class DerivedDef:
    context: str
    attr: str
    expr: Expr
    mode: str = "default"
    self_name: str | None = None
    label: str | None = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class ConstantDecl:
    context: str
    feature: str
    is_query: bool = False
    label: str | None = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class OperationSpec:
    """Operation (``kind='operation'``), joint action or event specification."""
    kind: str
    op: str
    params: tuple[Param, ...]
    context: str | None = None
    receivers: tuple[Param, ...] = ()
    returns: TypeRef | None = None
    pre: Expr | None = None
    post: Expr | None = None
    called: tuple[MsgItem, ...] | None = None
    pos: Pos = _pos()

    @property
    def label(self) -> str:
        if self.kind == "operation":
            return f"{self.context}::{self.op}"
        if self.kind == "joint":
            return f"({', '.join(r.name for r in self.receivers)})::{self.op}"
        return f"event {self.op}"


@dataclass(frozen=True)
class ActionConstraint:
    context: str
    condition: Expr
    messages: tuple[Message, ...]
    label: str | None = None
    pos: Pos = _pos()


ConstraintDecl = Union[Invariant, DerivedDef, ConstantDecl, OperationSpec, ActionConstraint]


@dataclass(frozen=True)
class ConstraintFile:
    decls: tuple[ConstraintDecl, ...]
    file: str = field(default="<input>", compare=False)

    def of_kind(self, kind) -> list:
        return [d for d in self.decls if isinstance(d, kind)]


def decl_id(decl) -> str:
    """Stable identifier for reports: context plus label or source line."""
    if isinstance(decl, OperationSpec):
        return decl.label
    tag = decl.label or f"line{decl.pos.line}"
    if isinstance(decl, DerivedDef):
        return f"{decl.context}.{decl.attr}"
    if isinstance(decl, ActionConstraint):
        return f"{decl.context}:action:{tag}"
    return f"{decl.context}:{tag}"
