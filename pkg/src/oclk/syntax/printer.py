"""Pretty printing of expressions and constraint files.

``print_expr`` inserts only the parentheses the grammar needs, so parsing its
output gives back an equal tree. ``print_expr(e, full=True)`` brackets every
compound subexpression, which makes the parsed grouping visible.
"""

from __future__ import annotations

from .ast import (
    ActionConstraint, Binary, BoolLit, Call, CollOp, ConstantDecl, ConstraintFile, DerivedDef,
    If, IntLit, Invariant, Let, Message, MsgIf, Name, Nav, OperationSpec, PathName, RealLit,
    SelfExpr, StateArg, StrLit, TypeArg, Unary,
)

_BINARY_PREC = {
    "implies": 1,
    "and": 2, "or": 2, "xor": 2,
    "=": 3, "==": 3, "<>": 3,
    "<": 4, ">": 4, "<=": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6,
}
_UNARY, _POSTFIX, _ATOM = 7, 8, 9


def _prec(e) -> int:
    if isinstance(e, Binary):
        return _BINARY_PREC[e.op]
    if isinstance(e, Unary):
        return _UNARY
    if isinstance(e, (Nav, Call, CollOp)):
        return _POSTFIX
    if isinstance(e, Let):
        return 0
    return _ATOM


def _real(v: float) -> str:
    text = repr(v)
    mantissa, e, exponent = text.partition("e")
    if "." not in mantissa:
        mantissa += ".0"
    return mantissa + e + exponent


def _str(v: str) -> str:
    return "'" + v.replace("\\", "\\\\").replace("'", "\\'") + "'"


def print_expr(e, full: bool = False) -> str:
    def wrap(sub, needed: bool) -> str:
        text = go(sub)
        if needed or (full and _prec(sub) < _ATOM):
            return f"({text})"
        return text

    def go(e) -> str:
        if isinstance(e, BoolLit):
            return "true" if e.value else "false"
        if isinstance(e, IntLit):
            return str(e.value)
        if isinstance(e, RealLit):
            return _real(e.value)
        if isinstance(e, StrLit):
            return _str(e.value)
        if isinstance(e, SelfExpr):
            return "self"
        if isinstance(e, Name):
            return e.name + ("@pre" if e.at_pre else "")
        if isinstance(e, PathName):
            return "::".join(e.parts)
        if isinstance(e, TypeArg):
            return str(e.type)
        if isinstance(e, StateArg):
            return "::".join(e.parts)
        if isinstance(e, Nav):
            return f"{wrap(e.source, _prec(e.source) < _POSTFIX)}.{e.name}{'@pre' if e.at_pre else ''}"
        if isinstance(e, Call):
            head = "" if e.source is None else wrap(e.source, _prec(e.source) < _POSTFIX) + "."
            args = ", ".join(go(a) for a in e.args)
            return f"{head}{e.name}{'@pre' if e.at_pre else ''}({args})"
        if isinstance(e, CollOp):
            src = wrap(e.source, _prec(e.source) < _POSTFIX)
            inner = ", ".join(go(a) for a in e.args)
            if e.iterators:
                decls = ", ".join(v.name + (f" : {v.type}" if v.type is not None else "")
                                  for v in e.iterators)
                inner = f"{decls} | {inner}"
            return f"{src}->{e.op}({inner})"
        if isinstance(e, Unary):
            operand = wrap(e.operand, _prec(e.operand) < _UNARY)
            if e.op == "not":
                return f"not {operand}"
            if operand.startswith("-"):
                operand = f"({operand})"
            return f"-{operand}"
        if isinstance(e, Binary):
            p = _BINARY_PREC[e.op]
            if e.op == "implies":
                left = wrap(e.left, _prec(e.left) <= p)
                right = wrap(e.right, _prec(e.right) < p)
            else:
                left = wrap(e.left, _prec(e.left) < p)
                right = wrap(e.right, _prec(e.right) <= p)
            return f"{left} {e.op} {right}"
        if isinstance(e, If):
            return f"if {go(e.cond)} then {go(e.then)} else {go(e.else_)} endif"
        if isinstance(e, Let):
            t = f" : {e.type}" if e.type is not None else ""
            return f"let {e.name}{t} = {go(e.value)} in {go(e.body)}"
        raise TypeError(f"cannot print {e!r}")

    return go(e)


def print_message(m) -> str:
    if isinstance(m, MsgIf):
        text = f"if {print_expr(m.cond)} then {', '.join(print_message(x) for x in m.then)}"
        if m.else_:
            text += f" else {', '.join(print_message(x) for x in m.else_)}"
        return text + " endif"
    args = ", ".join(print_expr(a) for a in m.args)
    if m.target is None:
        return f"{m.op}({args})"
    target = print_expr(m.target)
    if _prec(m.target) < _POSTFIX:
        target = f"({target})"
    return f"{target}.{m.op}({args})"


def _params(params) -> str:
    return ", ".join(f"{p.name} : {p.type}" for p in params)


def _context_head(context: str, self_name: str | None) -> str:
    return f"context {self_name} : {context}" if self_name else f"context {context}"


def print_decl(d) -> str:
    if isinstance(d, Invariant):
        label = f" {d.label}" if d.label else ""
        return f"{_context_head(d.context, d.self_name)} invariant{label}:\n  {print_expr(d.expr)}"
    if isinstance(d, ConstantDecl):
        label = f" {d.label}" if d.label else ""
        return f"context {d.context} invariant{label}:\n  constant {d.feature}{'()' if d.is_query else ''}"
    if isinstance(d, ActionConstraint):
        msgs = ", ".join(print_message(m) for m in d.messages)
        return f"context {d.context} action:\n  on {print_expr(d.condition)} do {msgs}"
    if isinstance(d, OperationSpec):
        if d.kind == "operation":
            head = f"context {d.context}::{d.op}({_params(d.params)})"
        elif d.kind == "joint":
            head = f"action ({_params(d.receivers)})::{d.op}({_params(d.params)})"
        else:
            head = f"event {d.op}({_params(d.params)})"
        if d.returns is not None:
            head += f" : {d.returns}"
        lines = [head]
        if d.pre is not None:
            lines.append(f"pre: {print_expr(d.pre)}")
        if d.post is not None:
            lines.append(f"post: {print_expr(d.post)}")
        if d.called is not None:
            lines.append(f"called: {', '.join(print_message(m) for m in d.called)}")
        return "\n".join(lines)
    raise TypeError(f"cannot print {d!r}")


def _derived_block(defs: list[DerivedDef]) -> str:
    d0 = defs[0]
    label = f" {d0.label}" if d0.label else ""
    mode = f" {d0.mode}" if d0.mode != "default" else ""
    body = ";\n  ".join(f"{d.attr} = {print_expr(d.expr)}" for d in defs)
    return f"{_context_head(d0.context, d0.self_name)} invariant{label}{mode}:\n  {body};"


def print_file(f: ConstraintFile) -> str:
    chunks = []
    i = 0
    decls = list(f.decls)
    while i < len(decls):
        d = decls[i]
        if isinstance(d, DerivedDef):
            block = [d]
            while (i + 1 < len(decls) and isinstance(decls[i + 1], DerivedDef)
                   and (decls[i + 1].context, decls[i + 1].mode, decls[i + 1].self_name, decls[i + 1].label)
                   == (d.context, d.mode, d.self_name, d.label)):
                i += 1
                block.append(decls[i])
            chunks.append(_derived_block(block))
        else:
            chunks.append(print_decl(d))
        i += 1
    return "\n\n".join(chunks) + "\n"
