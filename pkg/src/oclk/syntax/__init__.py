"""Tokenizer, parser and pretty-printer for OCL constraint files."""

from .ast import ConstraintFile, decl_id
from .lexer import KEYWORDS, Token, tokenize
from .parser import parse_constraint_file, parse_expression
from .printer import print_expr, print_file

__all__ = [
    "ConstraintFile", "KEYWORDS", "Token", "decl_id", "parse_constraint_file",
    "parse_expression", "print_expr", "print_file", "tokenize",
]
