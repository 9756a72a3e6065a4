from __future__ import annotations

import re
from dataclasses import dataclass

from ..diagnostics import Diagnostic, ParseError, Pos

KEYWORDS = frozenset({
    "context", "invariant", "pre", "post", "let", "in", "if", "then", "else", "endif",
    "implies", "and", "or", "xor", "not", "action", "on", "do", "called", "event",
    "constant", "executable", "loose", "true", "false", "self",
})

# longest match first
_SYMBOLS = [
    ("->", "arrow"), ("::", "dcolon"), ("<=", "leq"), (">=", "geq"), ("<>", "neq"),
    ("==", "weq"), ("@pre", "atpre"),
    ("=", "eq"), ("<", "lt"), (">", "gt"), ("+", "plus"), ("-", "minus"), ("*", "star"),
    ("/", "slash"), (".", "dot"), (",", "comma"), (":", "colon"), (";", "semi"),
    ("|", "bar"), ("(", "lparen"), (")", "rparen"),
]

_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Token:
    kind: str  # ident, intlit, reallit, strlit, keyword text, or symbol name
    text: str
    pos: Pos
    value: object = None

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.pos})"


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def fail(msg, at_line, at_col):
        raise ParseError(Diagnostic(msg, Pos(at_line, at_col), file=file))

    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r\f":
            i, col = i + 1, col + 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        pos = Pos(line, col)
        if ch in "'\"":
            j = i + 1
            buf = []
            while j < n and text[j] != ch:
                if text[j] == "\n":
                    fail("unterminated string", pos.line, pos.col)
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                    continue
                buf.append(text[j])
                j += 1
            if j >= n:
                fail("unterminated string", pos.line, pos.col)
            tokens.append(Token("strlit", text[i:j + 1], pos, "".join(buf)))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit():
            m = _NUMBER.match(text, i)
            lit = m.group(0)
            # "1..2" style ranges are not expressions; keep "1." out of reals
            if m.group(1) is None and m.group(2) is None:
                tokens.append(Token("intlit", lit, pos, int(lit)))
            else:
                tokens.append(Token("reallit", lit, pos, float(lit)))
            i, col = m.end(), col + len(lit)
            continue
        if ch.isalpha() or ch == "_":
            m = _IDENT.match(text, i)
            word = m.group(0)
            kind = word if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, pos))
            i, col = m.end(), col + len(word)
            continue
        for sym, kind in _SYMBOLS:
            if text.startswith(sym, i):
                if kind == "atpre" and i + 4 < n and (text[i + 4].isalnum() or text[i + 4] == "_"):
                    continue
                tokens.append(Token(kind, sym, pos))
                i, col = i + len(sym), col + len(sym)
                break
        else:
            fail(f"illegal character {ch!r}", line, col)
    return tokens
