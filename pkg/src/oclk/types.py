"""Type references, conformance and least common supertypes.

OclAny sits above the basic types and every model class but above no
collection type; collections are covariant in their element type and each
concrete kind conforms to ``Collection(T)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

if TYPE_CHECKING:
    from .model import ClassModel


BASIC_NAMES = ("Boolean", "Integer", "Real", "String")
COLLECTION_KINDS = ("Set", "Bag", "Sequence", "Collection")


@dataclass(frozen=True)
class Basic:
    name: str  # Boolean, Integer, Real, String, OclAny, OclState

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ClassType:
    name: str  # qualified name

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class CollType:
    kind: str
    elem: "TypeRef"

    def __str__(self) -> str:
        return f"{self.kind}({self.elem})"


TypeRef = Union[Basic, ClassType, CollType]

BOOLEAN = Basic("Boolean")
INTEGER = Basic("Integer")
REAL = Basic("Real")
STRING = Basic("String")
OCLANY = Basic("OclAny")
OCLSTATE = Basic("OclState")

_BASIC = {t.name: t for t in (BOOLEAN, INTEGER, REAL, STRING, OCLANY, OCLSTATE)}


class TypeErrorBase(Exception):
    pass


class UnknownClass(TypeErrorBase):
    def __init__(self, name: str):
        super().__init__(f"unknown class '{name}'")
        self.name = name


class AmbiguityError(TypeErrorBase):
    """Several minimal common supertypes exist (multiple inheritance)."""

    def __init__(self, a: TypeRef, b: TypeRef, candidates: list[TypeRef]):
        self.candidates = sorted(candidates, key=str)
        names = ", ".join(str(c) for c in self.candidates)
        super().__init__(f"no least common supertype of {a} and {b}; candidates: {names}")


class NoCommonSupertype(TypeErrorBase):
    def __init__(self, a: TypeRef, b: TypeRef):
        super().__init__(f"{a} and {b} have no common supertype")


_TYPE_TOKEN = re.compile(r"\s*(::|[A-Za-z_][A-Za-z0-9_]*|\(|\))")


def parse_type(text: str, resolve=None) -> TypeRef:
    """Parse ``Integer``, ``Set(Person)``, ``Pkg::Class`` and friends.

    ``resolve`` maps a class path to its qualified name and raises
    ``UnknownClass`` when the class does not exist; without it class names
    are taken verbatim.
    """
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TYPE_TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"malformed type expression {text!r}")
        tokens.append(m.group(1))
        pos = m.end()
    ref, rest = _parse_type_tokens(tokens, resolve)
    if rest:
        raise ValueError(f"trailing input in type expression {text!r}")
    return ref


def _parse_type_tokens(tokens: list[str], resolve):
    if not tokens:
        raise ValueError("empty type expression")
    head = tokens[0]
    if head in COLLECTION_KINDS and len(tokens) > 1 and tokens[1] == "(":
        elem, rest = _parse_type_tokens(tokens[2:], resolve)
        if not rest or rest[0] != ")":
            raise ValueError("missing ')' in collection type")
        return CollType(head, elem), rest[1:]
    parts = [head]
    rest = tokens[1:]
    while len(rest) >= 2 and rest[0] == "::":
        parts.append(rest[1])
        rest = rest[2:]
    if not all(p[0].isalpha() or p[0] == "_" for p in parts):
        raise ValueError(f"malformed type name {'::'.join(parts)!r}")
    if len(parts) == 1 and parts[0] in _BASIC:
        return _BASIC[parts[0]], rest
    path = "::".join(parts)
    return ClassType(resolve(path) if resolve else path), rest


def is_collection(t: TypeRef) -> bool:
    return isinstance(t, CollType)


def is_numeric(t: TypeRef) -> bool:
    return t in (INTEGER, REAL)


def conforms_to(sub: TypeRef, sup: TypeRef, model: "ClassModel") -> bool:
    _check_known(sub, model)
    _check_known(sup, model)
    return _conforms(sub, sup, model)


def _conforms(sub: TypeRef, sup: TypeRef, model) -> bool:
    if sub == sup:
        return True
    if isinstance(sub, CollType) or isinstance(sup, CollType):
        if not (isinstance(sub, CollType) and isinstance(sup, CollType)):
            return False
        if sub.kind != sup.kind and sup.kind != "Collection":
            return False
        return _conforms(sub.elem, sup.elem, model)
    if sup == OCLANY:
        return sub != OCLSTATE
    if sub == INTEGER and sup == REAL:
        return True
    if isinstance(sub, ClassType) and isinstance(sup, ClassType):
        return model.is_subclass(sub.name, sup.name)
    return False


def _check_known(t: TypeRef, model) -> None:
    if isinstance(t, CollType):
        _check_known(t.elem, model)
    elif isinstance(t, ClassType) and t.name not in model.classes:
        raise UnknownClass(t.name)


def least_common_supertype(a: TypeRef, b: TypeRef, model: "ClassModel") -> TypeRef:
    _check_known(a, model)
    _check_known(b, model)
    return _lcs(a, b, model)


def _lcs(a: TypeRef, b: TypeRef, model) -> TypeRef:
    if _conforms(a, b, model):
        return b
    if _conforms(b, a, model):
        return a
    if isinstance(a, CollType) and isinstance(b, CollType):
        kind = a.kind if a.kind == b.kind else "Collection"
        return CollType(kind, _lcs(a.elem, b.elem, model))
    if isinstance(a, CollType) or isinstance(b, CollType):
        raise NoCommonSupertype(a, b)
    if OCLSTATE in (a, b):
        raise NoCommonSupertype(a, b)
    if isinstance(a, ClassType) and isinstance(b, ClassType):
        common = model.ancestors(a.name) & model.ancestors(b.name)
        minimal = [c for c in common
                   if not any(d != c and model.is_subclass(d, c) for d in common)]
        if len(minimal) == 1:
            return ClassType(minimal[0])
        if len(minimal) > 1:
            raise AmbiguityError(a, b, [ClassType(c) for c in minimal])
    return OCLANY


def element_type(t: TypeRef) -> TypeRef:
    return t.elem if isinstance(t, CollType) else t
