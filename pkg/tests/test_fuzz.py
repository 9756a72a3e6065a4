from oclk.types import CollType, REAL, conforms_to
from oclk.typecheck import typecheck_expression
from oclk.evaluator import evaluate
from oclk.logic import Bool3
from oclk.values import CollV, ObjRef, dynamic_type, is_undef, strong_equal

from helpers import model_of, snapshot_of
from hotel_gen import Gen

HOTEL = model_of("hotel")
SNAPS = [snapshot_of("hotel", f"{n}.yaml", HOTEL) for n in ("ok", "mutant_rule1", "mutant_rule3")]
SELF = ["r1", "r2", "r3"]


def inhabits(v, t, snap) -> bool:
    """The runtime value fits its static type."""
    if is_undef(v):
        return True
    if isinstance(v, CollV):
        if not isinstance(t, CollType) or t.kind not in (v.kind, "Collection"):
            return False
        return all(inhabits(x, t.elem, snap) for x in v.items)
    if isinstance(v, ObjRef) and snap.class_of(v.id) is None:
        return False
    return conforms_to(dynamic_type(v, snap.class_of), t, HOTEL) or (isinstance(v, int) and t == REAL)


def run_fuzz(n: int = 1000, seed: int = 0):
    """Generate ``n`` expressions; return (problems, kinds seen)."""
    problems, kinds = [], set()
    for i in range(n):
        text, kind = Gen(seed * 100_000 + i).expression("Room")
        kinds.add(kind)
        snap = SNAPS[i % len(SNAPS)]
        try:
            typed = typecheck_expression(text, HOTEL, "Room")
            env = {"self": ObjRef(SELF[i % len(SELF)])}
            a = evaluate(typed, env, snap, HOTEL)
            b = evaluate(typed, env, snap, HOTEL)
        except Exception as exc:  # noqa: BLE001 - any escape is a finding
            problems.append((text, f"{type(exc).__name__}: {exc}"))
            continue
        if strong_equal(a, b) is not Bool3.TRUE:
            problems.append((text, f"nondeterministic: {a!r} vs {b!r}"))
        elif not inhabits(a, typed.type, snap):
            problems.append((text, f"value {a!r} does not inhabit {typed.type}"))
    return problems, kinds


def test_thousand_generated_expressions_evaluate_soundly():
    problems, kinds = run_fuzz(1000)
    assert problems == []
    assert kinds == {"Boolean", "Integer", "Real", "String", "obj", "set"}


def test_generator_is_reproducible():
    assert Gen(7).expression() == Gen(7).expression()
