"""Three-valued (Kleene) Boolean kernel.

Every binary operator is a literal 9-entry table. ``xor`` and ``implies`` are
transcribed as tables too rather than computed from ``and``/``or``/``not``,
so the definitional laws stay checkable against an independent source.
"""

from __future__ import annotations

import enum
from typing import Iterable


class Bool3(enum.Enum):
    FALSE = 0
    TRUE = 1
    UNDEF = 2

    @classmethod
    def of(cls, b: bool) -> "Bool3":
        return cls.TRUE if b else cls.FALSE

    @property
    def is_defined(self) -> bool:
        return self is not Bool3.UNDEF

    def __bool__(self) -> bool:
        raise TypeError("Bool3 has no two-valued truth; compare with Bool3.TRUE explicitly")

    def __str__(self) -> str:
        return {Bool3.FALSE: "false", Bool3.TRUE: "true", Bool3.UNDEF: "undefined"}[self]

    def __repr__(self) -> str:
        return f"Bool3.{self.name}"


F, T, U = Bool3.FALSE, Bool3.TRUE, Bool3.UNDEF

NOT_TABLE = {T: F, F: T, U: U}

AND_TABLE = {
    (F, F): F, (F, T): F, (F, U): F,
    (T, F): F, (T, T): T, (T, U): U,
    (U, F): F, (U, T): U, (U, U): U,
}

OR_TABLE = {
    (F, F): F, (F, T): T, (F, U): U,
    (T, F): T, (T, T): T, (T, U): T,
    (U, F): U, (U, T): T, (U, U): U,
}

XOR_TABLE = {
    (F, F): F, (F, T): T, (F, U): U,
    (T, F): T, (T, T): F, (T, U): U,
    (U, F): U, (U, T): U, (U, U): U,
}

IMPLIES_TABLE = {
    (F, F): T, (F, T): T, (F, U): T,
    (T, F): F, (T, T): T, (T, U): U,
    (U, F): U, (U, T): T, (U, U): U,
}

# total: can observe undefinedness
STRONG_EQ_TABLE = {
    (F, F): T, (F, T): F, (F, U): F,
    (T, F): F, (T, T): T, (T, U): F,
    (U, F): F, (U, T): F, (U, U): T,
}

# strict in both arguments
WEAK_EQ_TABLE = {
    (F, F): T, (F, T): F, (F, U): U,
    (T, F): F, (T, T): T, (T, U): U,
    (U, F): U, (U, T): U, (U, U): U,
}

BINARY_TABLES = {
    "and": AND_TABLE,
    "or": OR_TABLE,
    "xor": XOR_TABLE,
    "implies": IMPLIES_TABLE,
    "strongEq": STRONG_EQ_TABLE,
    "weakEq": WEAK_EQ_TABLE,
}


def bool_not(b: Bool3) -> Bool3:
    return NOT_TABLE[b]


def bool_binop(op: str, a: Bool3, b: Bool3) -> Bool3:
    try:
        table = BINARY_TABLES[op]
    except KeyError:
        raise ValueError(f"unknown Boolean operator {op!r}") from None
    return table[a, b]


def fold_and(values: Iterable[Bool3]) -> Bool3:
    acc = T
    for v in values:
        acc = AND_TABLE[acc, v]
    return acc


def fold_or(values: Iterable[Bool3]) -> Bool3:
    acc = F
    for v in values:
        acc = OR_TABLE[acc, v]
    return acc
