"""Independent oracles, transcribed by hand from the published truth tables.

Nothing here imports the engine's tables: each operator table is written
as text, row by row, and parsed.
"""

from __future__ import annotations

from itertools import product

from oclk.logic import Bool3

_WORD = {"true": Bool3.TRUE, "false": Bool3.FALSE, "undefined": Bool3.UNDEF}


def _table(text: str) -> dict:
    rows = {}
    for line in text.strip().splitlines():
        *args, result = line.split()
        rows[tuple(_WORD[a] for a in args)] = _WORD[result]
    return rows


STRONG_EQ = _table("""
false false true
false true false
true false false
true true true
undefined true false
undefined false false
true undefined false
false undefined false
undefined undefined true
""")

WEAK_EQ = _table("""
false false true
false true false
true false false
true true true
undefined true undefined
undefined false undefined
true undefined undefined
false undefined undefined
undefined undefined undefined
""")

NOT = _table("""
true false
false true
undefined undefined
""")

AND = _table("""
false false false
false true false
false undefined false
true false false
true true true
true undefined undefined
undefined false false
undefined true undefined
undefined undefined undefined
""")

OR = _table("""
false false false
false true true
false undefined undefined
true false true
true true true
true undefined true
undefined false undefined
undefined true true
undefined undefined undefined
""")

XOR = _table("""
false false false
false true true
false undefined undefined
true false true
true true false
true undefined undefined
undefined false undefined
undefined true undefined
undefined undefined undefined
""")

IMPLIES = _table("""
false false true
false true true
false undefined true
true false false
true true true
true undefined undefined
undefined false undefined
undefined true true
undefined undefined undefined
""")

# operator spelling in OCL -> oracle table
BINARY = {"=": STRONG_EQ, "==": WEAK_EQ, "and": AND, "or": OR, "xor": XOR, "implies": IMPLIES}

# two-valued definitions, straight from the defining equations
TWO_VALUED = {
    "=": lambda a, b: a == b,
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
    "xor": lambda a, b: (a or b) and not (a and b),
    "implies": lambda a, b: b if a else True,
}

# algebraic laws over b1, b2, b3; each must evaluate to true
LAWS = [
    "(b1 = b2) = (b2 = b1)",
    "(b1 == b2) = (b2 == b1)",
    "(not not b1) = b1",
    "(b1 and b2) = (b2 and b1)",
    "((b1 and b2) and b3) = (b1 and (b2 and b3))",
    "(b1 and false) = false",
    "(false and b1) = false",
    "(b1 and true) = b1",
    "(true and b1) = b1",
    "(b1 and b1) = b1",
    "(b1 or b2) = (b2 or b1)",
    "((b1 or b2) or b3) = (b1 or (b2 or b3))",
    "(b1 or true) = true",
    "(true or b1) = true",
    "(b1 or false) = b1",
    "(false or b1) = b1",
    "(b1 or b1) = b1",
    "(b1 xor b2) = (b2 xor b1)",
    "((b1 xor b2) xor b3) = (b1 xor (b2 xor b3))",
    "(b1 xor b2) = ((b1 or b2) and not (b1 and b2))",
    "(b1 implies b2) = ((not b1) or b2)",
    "(b1 implies (b2 implies b3)) = ((b1 and b2) implies b3)",
    "(if b1 then b2 else b3 endif) = (if not b1 then b3 else b2 endif)",
    "(false implies b1) = true",
    "(true implies b1) = b1",
]


VALUES = (Bool3.TRUE, Bool3.FALSE, Bool3.UNDEF)


def assignments(k: int):
    return product(VALUES, repeat=k)


def unique_pairwise(values, eq) -> bool | None:
    """isUnique by its definition: all pairs of distinct positions differ.

    ``eq`` compares two body values; ``None`` anywhere makes the answer undefined.
    """
    if any(v is None for v in values):
        return None
    n = len(values)
    return all(not eq(values[i], values[j]) for i in range(n) for j in range(n) if i != j)
