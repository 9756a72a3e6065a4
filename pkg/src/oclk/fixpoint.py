"""Recursive derived attributes: minimal fixpoints and loose checking.

Definitions are grouped into strongly connected components of their
reference graph. Executable (and default) groups are solved by simultaneous
iteration from the bottom element; loose groups are only checked against
the values the snapshot already carries.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import networkx as nx

from .diagnostics import IntegerOverflow
from .evaluator import evaluate
from .logic import Bool3, fold_and
from .model import ClassModel, Snapshot, objects_of_kind
from .syntax.ast import DerivedDef, decl_id, walk
from .typecheck import TypedConstraint, typecheck
from .types import CollType, TypeRef
from .values import CollV, ObjRef, Value, format_value, is_undef, strong_equal, undef, value_key

DEFAULT_MAX_ITER = 10_000


class DivergenceError(Exception):
    """Iteration did not stabilise; ``iterates`` maps object id to its last two values."""

    def __init__(self, attr: str, iterates: dict, iterations: int, reason: str = ""):
        self.attr = attr
        self.iterates = iterates
        self.iterations = iterations
        lines = [f"derived attribute '{attr}' diverges after {iterations} iteration(s)"
                 + (f" ({reason})" if reason else "")]
        for oid in sorted(iterates):
            prev, last = iterates[oid]
            lines.append(f"  {oid}: {_show(prev)} -> {_show(last)}")
        super().__init__("\n".join(lines))


class NonMonotoneWarning(UserWarning):
    pass


class MissingValue(Exception):
    def __init__(self, attr: str, obj: str):
        self.attr, self.obj = attr, obj
        super().__init__(f"loose definition of '{attr}' needs an explicit value on object '{obj}'")


def _show(v) -> str:
    return "overflow" if v is None else format_value(v)


@dataclass
class Definition:
    context: str
    attr: str
    owner: str  # class declaring the attribute
    type: TypeRef
    typed: TypedConstraint
    seed: Value | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.owner, self.attr)

    @property
    def expr(self):
        return self.typed.decl.expr


@dataclass
class DerivedGroup:
    context: str
    definitions: list[Definition]
    mode: str = "default"
    depends_on: set = field(default_factory=set)  # keys of definitions in other groups

    @property
    def is_set_valued(self) -> bool:
        return all(isinstance(d.type, CollType) for d in self.definitions)

    @property
    def recursive(self) -> bool:
        keys = {d.key for d in self.definitions}
        return len(keys) > 1 or any(d.key in _refs(d) for d in self.definitions)


def _refs(d: Definition) -> set:
    out = set()
    for node in walk(d.expr):
        ref = d.typed.info.refs.get(id(node))
        if ref is not None and ref.kind == "attr" and ref.decl.derived:
            out.add((ref.owner, ref.name))
    return out


def collect_groups(defs, model: ClassModel) -> list[DerivedGroup]:
    """Group derived definitions into SCCs, returned in dependency order."""
    items = []
    for d in defs:
        tc = d if isinstance(d, TypedConstraint) else typecheck(d, model)
        if not isinstance(tc.decl, DerivedDef):
            continue
        owner, attr = model.find_attribute(tc.context, tc.decl.attr)[0]
        items.append(Definition(tc.context, tc.decl.attr, owner, attr.type, tc, attr.seed))
    graph = nx.DiGraph()
    by_key: dict = {}
    for d in items:
        graph.add_node(d.key)
        by_key.setdefault(d.key, []).append(d)
    for d in items:
        for k in _refs(d):
            if k in by_key:
                graph.add_edge(d.key, k)  # d depends on k
    cond = nx.condensation(graph)
    groups = []
    for comp in reversed(list(nx.topological_sort(cond))):
        keys = sorted(cond.nodes[comp]["members"])
        members = [d for k in keys for d in by_key[k]]
        modes = {d.typed.decl.mode for d in members}
        mode = "loose" if "loose" in modes else ("executable" if "executable" in modes else "default")
        deps = {k2 for k in keys for k2 in graph.successors(k)} - set(keys)
        groups.append(DerivedGroup(members[0].context, members, mode, deps))
    return groups


def _bottom(d: Definition) -> Value:
    if isinstance(d.type, CollType):
        return CollV(d.type.kind if d.type.kind != "Collection" else "Bag", ())
    return d.seed if d.seed is not None else undef(d.type)


def _shrinks(old: Value, new: Value) -> bool:
    if not (isinstance(old, CollV) and isinstance(new, CollV)):
        return False
    have = {value_key(x) for x in new.items}
    return any(value_key(x) not in have for x in old.items)


def iterate_minimal(group: DerivedGroup, snap: Snapshot, model: ClassModel,
                    max_iter: int = DEFAULT_MAX_ITER) -> tuple[Snapshot, int]:
    """Jacobi iteration from bottom; returns the solved snapshot and the iteration count."""
    targets = [(d, oid) for d in group.definitions for oid in sorted(objects_of_kind(snap, model, d.context))]
    current = snap.with_attrs({(oid, d.attr): _bottom(d) for d, oid in targets})
    previous: dict = {}
    for iteration in range(1, max_iter + 1):
        updates = {}
        for d, oid in targets:
            try:
                v = evaluate(d.typed.typed(d.expr), {"self": ObjRef(oid)}, current, model)
            except IntegerOverflow:
                old = current.objects[oid].attrs.get(d.attr)
                raise DivergenceError(d.attr, {oid: (old, None)}, iteration,
                                      "Integer overflow, the iterates grow without bound") from None
            updates[(oid, d.attr)] = v
        changed = False
        for d, oid in targets:
            old, v = current.objects[oid].attrs.get(d.attr), updates[(oid, d.attr)]
            if strong_equal(old, v) is Bool3.TRUE:
                continue
            changed = True
            if _shrinks(old, v):
                warnings.warn(NonMonotoneWarning(
                    f"iterate of '{d.attr}' on '{oid}' shrank from {format_value(old)} to {format_value(v)}"),
                    stacklevel=2)
            if not isinstance(d.type, CollType) and not is_undef(old) and is_undef(v):
                raise DivergenceError(d.attr, {oid: (old, v)}, iteration,
                                      "the iterates left the representable range")
        previous = {k: current.objects[k[0]].attrs.get(k[1]) for k in updates}
        current = current.with_attrs(updates)
        if not changed:
            return current, iteration
    attr = group.definitions[0].attr
    iterates = {oid: (previous[(oid, a)], current.objects[oid].attrs.get(a))
                for (oid, a) in previous if a == attr}
    raise DivergenceError(attr, iterates, max_iter, "iteration cap reached")


def solve_minimal(group: DerivedGroup, snap: Snapshot, model: ClassModel,
                  max_iter: int = DEFAULT_MAX_ITER) -> Snapshot:
    """Extend ``snap`` with the least fixpoint of the group's equations."""
    return iterate_minimal(group, snap, model, max_iter)[0]


def loose_rows(group: DerivedGroup, snap: Snapshot, model: ClassModel) -> list[tuple[Definition, str, Bool3]]:
    """Evaluate each equation, left side strong-equal right side, on every object."""
    rows = []
    for d in group.definitions:
        for oid in sorted(objects_of_kind(snap, model, d.context)):
            stored = snap.objects[oid].attrs.get(d.attr)
            if stored is None:
                raise MissingValue(d.attr, oid)
            rhs = evaluate(d.typed.typed(d.expr), {"self": ObjRef(oid)}, snap, model)
            rows.append((d, oid, strong_equal(stored, rhs)))
    return rows


def check_loose(group: DerivedGroup, snap: Snapshot, model: ClassModel) -> dict[str, Bool3]:
    """Per definition: does the snapshot's explicit solution satisfy the equation?"""
    per_def: dict[str, list] = {d.attr: [] for d in group.definitions}
    for d, _, v in loose_rows(group, snap, model):
        per_def[d.attr].append(v)
    return {attr: fold_and(vs) for attr, vs in per_def.items()}


def minimality_certificate(group: DerivedGroup, snap: Snapshot, candidate: Snapshot, model: ClassModel,
                           max_iter: int = DEFAULT_MAX_ITER) -> bool:
    """True iff the minimal solution is pointwise contained in ``candidate``.

    Only meaningful for set-valued definitions; the caller is expected to have
    checked that ``candidate`` satisfies the equations.
    """
    if not group.is_set_valued:
        raise ValueError("minimality certificates apply to set-valued definitions only")
    minimal = solve_minimal(group, snap, model, max_iter)
    for d in group.definitions:
        for oid in objects_of_kind(snap, model, d.context):
            have = candidate.objects[oid].attrs.get(d.attr) if oid in candidate.objects else None
            if have is None or is_undef(have):
                return False
            keys = {value_key(x) for x in have.items}
            if any(value_key(x) not in keys for x in minimal.objects[oid].attrs[d.attr].items):
                return False
    return True


@dataclass
class Resolution:
    snapshot: Snapshot
    loose: list  # (decl id, object id, Bool3)
    iterations: dict  # group index -> iteration count


def resolve_derived(defs, snap: Snapshot, model: ClassModel, max_iter: int = DEFAULT_MAX_ITER) -> Resolution:
    """Solve executable groups in dependency order; check loose groups as given."""
    groups = collect_groups(defs, model)
    loose, iterations = [], {}
    for i, g in enumerate(groups):
        if g.mode == "loose":
            loose.extend((decl_id(d.typed.decl), oid, v) for d, oid, v in loose_rows(g, snap, model))
            continue
        snap, n = iterate_minimal(g, snap, model, max_iter)
        iterations[i] = n
    return Resolution(snap, loose, iterations)
