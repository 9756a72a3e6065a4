"""Runtime values.

Booleans are ``Bool3`` members (``Bool3.UNDEF`` is the undefined Boolean),
Integers are ``int`` with 64-bit checked overflow, Reals are ``float``,
Strings are ``str``. Objects are ``ObjRef``, collections ``CollV`` and every
other undefined value is ``Undef(type)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

from .diagnostics import IntegerOverflow
from .logic import Bool3
from .types import BOOLEAN, INTEGER, REAL, STRING, Basic, ClassType, CollType, TypeRef

INT_MIN = -(2 ** 63)
INT_MAX = 2 ** 63 - 1


@dataclass(frozen=True)
class ObjRef:
    id: str

    def __str__(self) -> str:
        return self.id


@dataclass(frozen=True)
class Undef:
    type: TypeRef

    def __str__(self) -> str:
        return "undefined"


@dataclass(frozen=True)
class CollV:
    kind: str  # Set, Bag, Sequence
    items: tuple

    def __str__(self) -> str:
        return f"{self.kind}{{{', '.join(format_value(v) for v in self.items)}}}"

    def __len__(self) -> int:
        return len(self.items)


Value = Union[Bool3, int, float, str, ObjRef, CollV, Undef]


def undef(t: TypeRef) -> Value:
    if t == BOOLEAN:
        return Bool3.UNDEF
    return Undef(t)


def is_undef(v: Value) -> bool:
    return v is Bool3.UNDEF or isinstance(v, Undef)


def check_int(n: int) -> int:
    if n < INT_MIN or n > INT_MAX:
        raise IntegerOverflow(f"Integer overflow: {n} outside 64-bit range")
    return n


def real(x: float) -> Value:
    if math.isfinite(x):
        return float(x)
    return Undef(REAL)


def value_key(v: Value):
    """Total sort key; equal keys iff strongly equal (for defined values)."""
    if isinstance(v, Bool3):
        return (0, v.value)
    if isinstance(v, (int, float)):
        return (1, v)
    if isinstance(v, str):
        return (2, v)
    if isinstance(v, ObjRef):
        return (3, v.id)
    if isinstance(v, CollV):
        return (4, v.kind, tuple(value_key(x) for x in v.items))
    if isinstance(v, Undef):
        return (5, str(v.type))
    raise TypeError(f"not a value: {v!r}")


def make_coll(kind: str, items: Iterable[Value], elem_type: TypeRef | None = None) -> Value:
    """Build a canonical collection, or undefined if any element is undefined."""
    items = list(items)
    for x in items:
        if is_undef(x):
            return Undef(CollType(kind, elem_type or _guess_type(items)))
    if elem_type == REAL:
        items = [float(x) if isinstance(x, int) and not isinstance(x, Bool3) else x for x in items]
    if kind == "Set":
        seen = {}
        for x in items:
            seen.setdefault(value_key(x), x)
        items = [seen[k] for k in sorted(seen)]
    elif kind == "Bag":
        items = sorted(items, key=value_key)
    elif kind != "Sequence":
        raise ValueError(f"cannot build a value of abstract kind {kind}")
    return CollV(kind, tuple(items))


def _guess_type(items) -> TypeRef:
    for x in items:
        if not is_undef(x):
            return dynamic_type(x, None)
        if isinstance(x, Undef):
            return x.type
    return Basic("OclAny")


def dynamic_type(v: Value, class_of) -> TypeRef:
    """Runtime type of a defined value. ``class_of`` maps object ids to class names."""
    if isinstance(v, Bool3):
        return BOOLEAN
    if isinstance(v, int):
        return INTEGER
    if isinstance(v, float):
        return REAL
    if isinstance(v, str):
        return STRING
    if isinstance(v, ObjRef):
        name = class_of(v.id) if class_of else None
        return ClassType(name) if name else Basic("OclAny")
    if isinstance(v, CollV):
        elem = dynamic_type(v.items[0], class_of) if v.items else Basic("OclAny")
        return CollType(v.kind, elem)
    if isinstance(v, Undef):
        return v.type
    raise TypeError(f"not a value: {v!r}")


def strong_equal(a: Value, b: Value) -> Bool3:
    """Total equality: undefined equals undefined of the same (numeric) type."""
    a_undef, b_undef = is_undef(a), is_undef(b)
    if a_undef or b_undef:
        if not (a_undef and b_undef):
            return Bool3.FALSE
        ta = BOOLEAN if a is Bool3.UNDEF else a.type
        tb = BOOLEAN if b is Bool3.UNDEF else b.type
        if ta == tb or {ta, tb} == {INTEGER, REAL}:
            return Bool3.TRUE
        return Bool3.FALSE
    if isinstance(a, Bool3) or isinstance(b, Bool3):
        return Bool3.of(a is b)
    if isinstance(a, CollV) and isinstance(b, CollV):
        if a.kind != b.kind or len(a.items) != len(b.items):
            return Bool3.FALSE
        return Bool3.of(all(value_key(x) == value_key(y) for x, y in zip(a.items, b.items)))
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return Bool3.of(a == b)
    if type(a) is not type(b):
        return Bool3.FALSE
    return Bool3.of(a == b)


def weak_equal(a: Value, b: Value) -> Bool3:
    if is_undef(a) or is_undef(b):
        return Bool3.UNDEF
    return strong_equal(a, b)


def format_value(v: Value) -> str:
    if isinstance(v, Bool3):
        return str(v)
    if isinstance(v, Undef):
        return "undefined"
    if isinstance(v, float):
        text = repr(v)
        mantissa, e, exponent = text.partition("e")
        if "." not in mantissa:
            mantissa += ".0"
        return mantissa + e + exponent
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return "'" + v.replace("\\", "\\\\").replace("'", "\\'") + "'"
    if isinstance(v, (ObjRef, CollV)):
        return str(v)
    raise TypeError(f"not a value: {v!r}")
