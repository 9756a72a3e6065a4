"""Recursive-descent parser for OCL expressions and constraint files.

Operator precedence, loosest first::

    implies            (right associative)
    and or xor         (left)
    = == <>            (left)
    < > <= >=          (left)
    + -                (left)
    * /                (left)
    not, unary -
    . -> @pre          (postfix)
"""

from __future__ import annotations

from ..diagnostics import Diagnostic, ParseError, Pos
from ..types import BASIC_NAMES, COLLECTION_KINDS, Basic, ClassType, CollType, TypeRef
from .ast import (
    ActionConstraint, Binary, BoolLit, Call, CollOp, ConstantDecl, ConstraintFile, DerivedDef,
    If, IntLit, Invariant, IterVar, Let, Message, MsgIf, Name, Nav, OperationSpec, Param,
    PathName, RealLit, SelfExpr, StateArg, StrLit, TypeArg, Unary,
)
from .lexer import KEYWORDS, Token, tokenize

TYPE_ARG_OPS = frozenset({"oclIsTypeOf", "oclIsKindOf", "oclAsType"})
PROPERTY_CALLS = frozenset({"allInstances", "oclIsNew"})
OP_ALIASES = {"forall": "forAll"}

_LOGIC_OPS = {"and": "and", "or": "or", "xor": "xor"}
_EQ_OPS = {"eq": "=", "weq": "==", "neq": "<>"}
_REL_OPS = {"lt": "<", "gt": ">", "leq": "<=", "geq": ">="}
_ADD_OPS = {"plus": "+", "minus": "-"}
_MUL_OPS = {"star": "*", "slash": "/"}

_DECL_START = ("context", "action", "event")
_CLAUSES = ("pre", "post", "called")


class Parser:
    def __init__(self, tokens: list[Token], file: str = "<input>"):
        self.toks = tokens
        self.i = 0
        self.file = file

    # -- token helpers -----------------------------------------------------

    def peek(self, k: int = 0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at(self, *kinds: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.kind in kinds

    def here(self) -> Pos:
        t = self.peek()
        if t is not None:
            return t.pos
        if self.toks:
            last = self.toks[-1]
            return Pos(last.pos.line, last.pos.col + len(last.text))
        return Pos(1, 1)

    def error(self, msg: str, pos: Pos | None = None):
        raise ParseError(Diagnostic(msg, pos or self.here(), file=self.file))

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            self.error("unexpected end of input")
        self.i += 1
        return t

    def accept(self, kind: str) -> Token | None:
        if self.at(kind):
            return self.next()
        return None

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.at(kind):
            return self.next()
        t = self.peek()
        found = "end of input" if t is None else repr(t.text)
        self.error(f"expected {what or repr(kind)}, found {found}")

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    # -- expressions -------------------------------------------------------

    def expression(self):
        return self.implies_expr()

    def implies_expr(self):
        left = self.logic_expr()
        if self.at("implies"):
            tok = self.next()
            right = self.implies_expr()
            return Binary("implies", left, right, pos=tok.pos)
        return left

    def _left_assoc(self, sub, ops: dict):
        left = sub()
        while self.peek() is not None and self.peek().kind in ops:
            tok = self.next()
            right = sub()
            left = Binary(ops[tok.kind], left, right, pos=tok.pos)
        return left

    def logic_expr(self):
        return self._left_assoc(self.eq_expr, _LOGIC_OPS)

    def eq_expr(self):
        return self._left_assoc(self.rel_expr, _EQ_OPS)

    def rel_expr(self):
        return self._left_assoc(self.add_expr, _REL_OPS)

    def add_expr(self):
        return self._left_assoc(self.mul_expr, _ADD_OPS)

    def mul_expr(self):
        return self._left_assoc(self.unary_expr, _MUL_OPS)

    def unary_expr(self):
        if self.at("not"):
            tok = self.next()
            return Unary("not", self.unary_expr(), pos=tok.pos)
        if self.at("minus"):
            tok = self.next()
            return Unary("-", self.unary_expr(), pos=tok.pos)
        return self.postfix_expr()

    def postfix_expr(self):
        e = self.primary()
        while True:
            if self.at("dot"):
                self.next()
                if not self.at("ident"):
                    self.error("expected a feature name after '.'")
                tok = self.next()
                if tok.text == "oclType":
                    self.error("oclType has been removed from the language; use oclIsTypeOf or "
                               "oclIsKindOf", tok.pos)
                if self.at("dcolon"):
                    self.error("'::' is only allowed in package pathnames; "
                               "use oclAsType to reach a redefined feature")
                at_pre = self.accept("atpre") is not None
                if self.at("lparen"):
                    e = Call(e, tok.text, self.call_args(tok.text), at_pre, pos=tok.pos)
                elif tok.text in PROPERTY_CALLS:
                    e = Call(e, tok.text, (), at_pre, pos=tok.pos)
                else:
                    e = Nav(e, tok.text, at_pre, pos=tok.pos)
            elif self.at("arrow"):
                arrow = self.next()
                if not self.at("ident"):
                    self.error("dangling '->' without a collection operation", arrow.pos)
                tok = self.next()
                op = OP_ALIASES.get(tok.text, tok.text)
                iters, args = ((), ())
                if self.at("lparen"):
                    iters, args = self.coll_args()
                e = CollOp(e, op, iters, args, pos=tok.pos)
            elif self.at("atpre"):
                self.error("'@pre' must directly follow a property name")
            else:
                return e

    def primary(self):
        t = self.peek()
        if t is None:
            self.error("unexpected end of input, expected an expression")
        k = t.kind
        if k == "intlit":
            self.next()
            return IntLit(t.value, pos=t.pos)
        if k == "reallit":
            self.next()
            return RealLit(t.value, pos=t.pos)
        if k == "strlit":
            self.next()
            return StrLit(t.value, pos=t.pos)
        if k in ("true", "false"):
            self.next()
            return BoolLit(k == "true", pos=t.pos)
        if k == "self":
            self.next()
            return SelfExpr(pos=t.pos)
        if k == "lparen":
            self.next()
            e = self.expression()
            self.expect("rparen", "')'")
            return e
        if k == "if":
            return self.if_expr()
        if k == "let":
            return self.let_expr()
        if k == "ident":
            self.next()
            parts = [t.text]
            while self.at("dcolon"):
                self.next()
                parts.append(self.expect("ident", "a name after '::'").text)
            if len(parts) > 1:
                return PathName(tuple(parts), pos=t.pos)
            at_pre = self.accept("atpre") is not None
            if self.at("lparen"):
                return Call(None, t.text, self.call_args(t.text), at_pre, pos=t.pos)
            return Name(t.text, at_pre, pos=t.pos)
        self.error(f"unexpected token {t.text!r}")

    def if_expr(self):
        tok = self.next()
        cond = self.expression()
        self.expect("then", "'then'")
        then = self.expression()
        if self.at("endif"):
            self.error("if-expression requires an else branch")
        if not self.at("else"):
            self.error("missing 'else' in if-expression")
        self.next()
        else_ = self.expression()
        if not self.at("endif"):
            self.error("missing 'endif'")
        self.next()
        return If(cond, then, else_, pos=tok.pos)

    def let_expr(self):
        tok = self.next()
        name = self.expect("ident", "a variable name").text
        if self.at("lparen"):
            self.error("let only binds variables; local function definitions are not supported")
        type_ = None
        if self.accept("colon"):
            type_ = self.type_ref()
        self.expect("eq", "'='")
        value = self.expression()
        self.expect("in", "'in'")
        body = self.expression()
        return Let(name, type_, value, body, pos=tok.pos)

    def call_args(self, name: str) -> tuple:
        self.expect("lparen", "'('")
        if name in TYPE_ARG_OPS:
            pos = self.here()
            arg = TypeArg(self.type_ref(), pos=pos)
            self.expect("rparen", "')'")
            return (arg,)
        if name == "oclInState":
            pos = self.here()
            parts = [self.state_name()]
            while self.accept("dcolon"):
                parts.append(self.state_name())
            self.expect("rparen", "')'")
            return (StateArg(tuple(parts), pos=pos),)
        args = []
        if not self.at("rparen"):
            args.append(self.expression())
            while self.accept("comma"):
                args.append(self.expression())
        self.expect("rparen", "')'")
        return tuple(args)

    def coll_args(self):
        self.expect("lparen", "'('")
        if self.accept("rparen"):
            return (), ()
        iters = self._try_iterators()
        args = [self.expression()]
        while self.accept("comma"):
            args.append(self.expression())
        self.expect("rparen", "')'")
        return iters, tuple(args)

    def _try_iterators(self) -> tuple:
        start = self.i
        iters = []
        try:
            while True:
                if not self.at("ident"):
                    raise _Backtrack
                tok = self.next()
                type_ = None
                if self.at("colon"):
                    self.next()
                    type_ = self.type_ref()
                iters.append(IterVar(tok.text, type_, pos=tok.pos))
                if self.accept("bar"):
                    return tuple(iters)
                if not self.accept("comma"):
                    raise _Backtrack
        except (_Backtrack, ParseError):
            self.i = start
            return ()

    def type_ref(self) -> TypeRef:
        tok = self.expect("ident", "a type name")
        if tok.text in COLLECTION_KINDS and self.at("lparen"):
            self.next()
            elem = self.type_ref()
            self.expect("rparen", "')'")
            return CollType(tok.text, elem)
        parts = [tok.text]
        while self.accept("dcolon"):
            parts.append(self.expect("ident", "a name after '::'").text)
        if len(parts) == 1 and (tok.text in BASIC_NAMES or tok.text in ("OclAny", "OclState")):
            return Basic(tok.text)
        return ClassType("::".join(parts))

    # -- constraint files --------------------------------------------------

    def constraint_file(self) -> ConstraintFile:
        decls = []
        while not self.at_end():
            if self.at("context"):
                decls.extend(self.context_decl())
            elif self.at("action"):
                decls.append(self.joint_action())
            elif self.at("event"):
                decls.append(self.event_decl())
            else:
                self.error(f"expected 'context', 'action' or 'event', found {self.peek().text!r}")
        return ConstraintFile(tuple(decls), self.file)

    def context_decl(self) -> list:
        start = self.next()
        self_name = None
        if self.at("ident") and self.at("colon", k=1):
            self_name = self.next().text
            self.next()
        parts = [self.expect("ident", "a class name").text]
        while self.accept("dcolon"):
            parts.append(self.expect("ident", "a name after '::'").text)
        if self.at("lparen"):
            if len(parts) < 2:
                self.error("operation context needs the form Class::operation(...)")
            context = "::".join(parts[:-1])
            params = self.param_list()
            returns = self.return_type()
            pre, post, called = self.op_clauses()
            return [OperationSpec("operation", parts[-1], params, context, (), returns,
                                  pre, post, called, pos=start.pos)]
        context = "::".join(parts)
        if self.at("invariant"):
            return self.invariant_body(context, self_name, start.pos)
        if self.at("action"):
            self.next()
            self.expect("colon", "':'")
            self.expect("on", "'on'")
            cond = self.expression()
            self.expect("do", "'do'")
            msgs = [self.message()]
            while self.accept("comma"):
                msgs.append(self.message())
            return [ActionConstraint(context, cond, tuple(msgs), pos=start.pos)]
        t = self.peek()
        if t is not None and t.kind == "ident" and self.at("colon", k=1):
            self.error(f"unknown constraint stereotype '{t.text}'")
        self.error("expected 'invariant', 'action' or an operation signature")

    def invariant_body(self, context, self_name, pos) -> list:
        self.next()
        label = self.next().text if self.at("ident") else None
        mode = None
        if self.at("executable", "loose"):
            mode = self.next().kind
        self.expect("colon", "':'")
        if self.at("constant"):
            if mode is not None:
                self.error("constant declarations take no recursion keyword")
            out = []
            while self.at("constant"):
                ctok = self.next()
                feature = self.expect("ident", "an attribute, query or role name").text
                is_query = False
                if self.accept("lparen"):
                    self.expect("rparen", "')'")
                    is_query = True
                out.append(ConstantDecl(context, feature, is_query, label, pos=ctok.pos))
            return out
        exprs = [self.expression()]
        saw_semi = False
        while self.accept("semi"):
            saw_semi = True
            if self.at_end() or self.at(*_DECL_START):
                break
            exprs.append(self.expression())
        if mode is None and not saw_semi:
            return [Invariant(context, exprs[0], self_name, label, pos=pos)]
        out = []
        for e in exprs:
            if not (isinstance(e, Binary) and e.op == "=" and isinstance(e.left, Name)
                    and not e.left.at_pre):
                self.error("recursive definition must have the form 'name = expression'", e.pos)
            out.append(DerivedDef(context, e.left.name, e.right, mode or "default", self_name, label,
                                  pos=e.left.pos))
        return out

    def state_name(self) -> str:
        # state names live in their own namespace, so keywords such as 'on' are fine
        t = self.peek()
        if t is not None and (t.kind == "ident" or t.kind in KEYWORDS):
            return self.next().text
        return self.expect("ident", "a state name").text

    def param_list(self, what: str = "parameter") -> tuple:
        self.expect("lparen", "'('")
        params = []
        if not self.at("rparen"):
            while True:
                tok = self.expect("ident", f"a {what} name")
                self.expect("colon", "':'")
                params.append(Param(tok.text, self.type_ref(), pos=tok.pos))
                if not self.accept("comma"):
                    break
        self.expect("rparen", "')'")
        return tuple(params)

    def return_type(self):
        if self.accept("colon"):
            if self.at("ident") and self.peek().text in ("void", "Void", "OclVoid"):
                self.next()
                return None
            return self.type_ref()
        return None

    def _clause_ends(self) -> bool:
        return self.at_end() or self.at(*_CLAUSES) or self.at(*_DECL_START)

    def op_clauses(self):
        found = {}
        while self.at(*_CLAUSES):
            tok = self.next()
            if tok.kind in found:
                self.error(f"duplicate '{tok.kind}:' clause", tok.pos)
            self.expect("colon", "':'")
            if tok.kind == "called":
                found["called"] = self.message_list()
            else:
                found[tok.kind] = None if self._clause_ends() else self.expression()
        return found.get("pre"), found.get("post"), found.get("called")

    def joint_action(self) -> OperationSpec:
        start = self.next()
        receivers = self.param_list("receiver")
        if len(receivers) < 2:
            self.error("a joint action names at least two receivers", start.pos)
        self.expect("dcolon", "'::'")
        op = self.expect("ident", "an action name").text
        params = self.param_list()
        returns = self.return_type()
        pre, post, called = self.op_clauses()
        return OperationSpec("joint", op, params, None, receivers, returns, pre, post, called,
                             pos=start.pos)

    def event_decl(self) -> OperationSpec:
        start = self.next()
        op = self.expect("ident", "an event name").text
        params = self.param_list()
        returns = self.return_type()
        pre, post, called = self.op_clauses()
        return OperationSpec("event", op, params, None, (), returns, pre, post, called, pos=start.pos)

    def message_list(self) -> tuple:
        items = [self.message_item()]
        while self.accept("comma"):
            items.append(self.message_item())
        return tuple(items)

    def message_item(self):
        if self.at("if"):
            tok = self.next()
            cond = self.expression()
            self.expect("then", "'then'")
            then = self.message_list()
            else_ = ()
            if self.accept("else"):
                else_ = self.message_list()
            self.expect("endif", "'endif'")
            return MsgIf(cond, then, else_, pos=tok.pos)
        return self.message()

    def message(self) -> Message:
        pos = self.here()
        e = self.postfix_expr()
        if not isinstance(e, Call) or e.at_pre:
            self.error("a message must be an operation call such as target.op(args)", pos)
        return Message(e.source, e.name, e.args, pos=e.pos)


class _Backtrack(Exception):
    pass


def parse_expression(tokens_or_text, file: str = "<input>"):
    tokens = tokenize(tokens_or_text, file) if isinstance(tokens_or_text, str) else list(tokens_or_text)
    p = Parser(tokens, file)
    e = p.expression()
    if not p.at_end():
        p.error(f"unexpected token {p.peek().text!r}")
    return e


def parse_constraint_file(text: str, file: str = "<input>") -> ConstraintFile:
    return Parser(tokenize(text, file), file).constraint_file()
