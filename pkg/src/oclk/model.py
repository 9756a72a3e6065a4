"""Class models and object snapshots.

Both are loaded from YAML documents (schema in ``docs/formats.md``), validated
as a whole and immutable afterwards. Loading either returns a complete value
or raises ``LoadError`` with every problem found; no partial model escapes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple

from .diagnostics import Diagnostic, DiagnosticSink, LoadError, IntegerOverflow, Pos, NOPOS
from .logic import Bool3
from .types import (
    BOOLEAN, INTEGER, OCLANY, REAL, STRING, ClassType, CollType, TypeRef,
    UnknownClass, parse_type,
)
from .values import CollV, ObjRef, Undef, Value, check_int, is_undef, make_coll, undef
from .yamldoc import PDict, PList, dump_document, load_document

ACCESS_LEVELS = ("public", "protected", "private")
_ACCESS_RANK = {name: i for i, name in enumerate(ACCESS_LEVELS)}
_SHORTCUTS = {"pubread", "protread", "protwrite"}


# --------------------------------------------------------------------------
# Class model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Multiplicity:
    lower: int
    upper: int | None  # None is unbounded

    def __str__(self) -> str:
        return f"{self.lower}..{'*' if self.upper is None else self.upper}"

    @property
    def is_single(self) -> bool:
        return self.upper is not None and self.upper <= 1

    def admits(self, n: int) -> bool:
        return n >= self.lower and (self.upper is None or n <= self.upper)


_MULT = re.compile(r"^\s*(\d+)\s*(?:\.\.\s*(\d+|\*))?\s*$")


def parse_multiplicity(text) -> Multiplicity:
    text = str(text)
    if text.strip() == "*":
        return Multiplicity(0, None)
    m = _MULT.match(text)
    if not m:
        raise ValueError(f"malformed multiplicity {text!r}")
    lower = int(m.group(1))
    if m.group(2) is None:
        return Multiplicity(lower, lower)
    upper = None if m.group(2) == "*" else int(m.group(2))
    if upper is not None and lower > upper:
        raise ValueError(f"multiplicity {text!r} has lower bound above upper bound")
    return Multiplicity(lower, upper)


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    type: TypeRef
    read_access: str = "public"
    write_access: str = "public"
    constant: bool = False
    derived: bool = False
    static: bool = False
    seed: Value | None = None  # starting iterate for derived scalars

    @property
    def access_text(self) -> str:
        if self.read_access == self.write_access:
            return self.read_access
        if self.write_access == "private":
            return f"{self.read_access} read"
        return f"{self.read_access} read {self.write_access} write"


@dataclass(frozen=True)
class ParamDecl:
    name: str
    type: TypeRef


@dataclass(frozen=True)
class OperationDecl:
    name: str
    params: tuple[ParamDecl, ...] = ()
    returns: TypeRef | None = None
    body: str | None = None  # OCL query body, evaluated with self and params bound
    body_pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class StateNode:
    name: str
    children: tuple["StateNode", ...] = ()


@dataclass(frozen=True)
class StateMachine:
    name: str
    states: tuple[StateNode, ...]

    def paths(self) -> list[tuple[str, ...]]:
        out = []

        def walk(node, prefix):
            path = prefix + (node.name,)
            out.append(path)
            for child in node.children:
                walk(child, path)

        for top in self.states:
            walk(top, ())
        return out

    def resolve(self, text_or_parts) -> tuple[str, ...]:
        """Resolve a (possibly partial) state path to the full path from the root.

        Accepted: a full path, a full path prefixed by the machine name, or a
        bare name that is unique in the tree.
        """
        parts = tuple(text_or_parts.split("::")) if isinstance(text_or_parts, str) else tuple(text_or_parts)
        all_paths = self.paths()
        if parts and parts[0] == self.name and parts[1:] in all_paths:
            return parts[1:]
        if parts in all_paths:
            return parts
        if len(parts) == 1:
            hits = [p for p in all_paths if p[-1] == parts[0]]
            if len(hits) == 1:
                return hits[0]
            if len(hits) > 1:
                raise KeyError(f"state name '{parts[0]}' is ambiguous in machine {self.name}; "
                               f"qualify it ({', '.join('::'.join(h) for h in hits)})")
        raise KeyError(f"no state '{'::'.join(parts)}' in state machine {self.name}")


@dataclass(frozen=True)
class ClassDecl:
    name: str
    package: str = ""
    supertypes: tuple[str, ...] = ()  # qualified names
    attributes: tuple[AttributeDecl, ...] = ()
    operations: tuple[OperationDecl, ...] = ()
    state_machine: StateMachine | None = None

    @property
    def qualified(self) -> str:
        return f"{self.package}::{self.name}" if self.package else self.name

    def attribute(self, name: str) -> AttributeDecl | None:
        return next((a for a in self.attributes if a.name == name), None)

    def operation(self, name: str) -> OperationDecl | None:
        return next((o for o in self.operations if o.name == name), None)


@dataclass(frozen=True)
class AssocEnd:
    cls: str  # qualified
    role: str
    multiplicity: Multiplicity = Multiplicity(0, None)
    constant: bool = False


@dataclass(frozen=True)
class AssocDecl:
    name: str
    ends: tuple[AssocEnd, AssocEnd]
    package: str = ""


@dataclass(frozen=True)
class PackageDecl:
    name: str
    classes: tuple[str, ...] = ()  # qualified names, declaration order
    associations: tuple[str, ...] = ()


class RoleRef(NamedTuple):
    assoc: AssocDecl
    target: int  # index of the end being navigated to

    @property
    def end(self) -> AssocEnd:
        return self.assoc.ends[self.target]

    @property
    def source_end(self) -> AssocEnd:
        return self.assoc.ends[1 - self.target]


@dataclass(frozen=True)
class ClassModel:
    packages: tuple[PackageDecl, ...]
    classes: Mapping[str, ClassDecl]
    associations: Mapping[str, AssocDecl]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    # -- class graph -------------------------------------------------------

    def resolve_class(self, path: str, package: str = "") -> str:
        if path in self.classes:
            return path
        if package and f"{package}::{path}" in self.classes:
            return f"{package}::{path}"
        if "::" not in path:
            hits = [q for q, c in self.classes.items() if c.name == path]
            if len(hits) == 1:
                return hits[0]
            if len(hits) > 1:
                raise UnknownClass(f"{path} (ambiguous: {', '.join(sorted(hits))})")
        raise UnknownClass(path)

    def ancestors(self, cls: str) -> frozenset[str]:
        """``cls`` and all its transitive supertypes."""
        key = ("anc", cls)
        if key not in self._cache:
            seen = {cls}
            stack = [cls]
            while stack:
                for sup in self.classes[stack.pop()].supertypes:
                    if sup not in seen:
                        seen.add(sup)
                        stack.append(sup)
            self._cache[key] = frozenset(seen)
        return self._cache[key]

    def is_subclass(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def descendants(self, cls: str) -> frozenset[str]:
        return frozenset(c for c in self.classes if self.is_subclass(c, cls))

    def linearization(self, cls: str) -> list[str]:
        """Breadth-first supertype order used for dynamic dispatch."""
        order, queue = [], [cls]
        while queue:
            c = queue.pop(0)
            if c not in order:
                order.append(c)
                queue.extend(self.classes[c].supertypes)
        return order

    def _most_derived(self, owners: list[str]) -> list[str]:
        return [o for o in owners
                if not any(p != o and self.is_subclass(p, o) for p in owners)]

    # -- features ----------------------------------------------------------

    def find_attribute(self, cls: str, name: str) -> list[tuple[str, AttributeDecl]]:
        owners = [c for c in self.ancestors(cls) if self.classes[c].attribute(name)]
        return [(o, self.classes[o].attribute(name)) for o in sorted(self._most_derived(owners))]

    def find_operation(self, cls: str, name: str) -> list[tuple[str, OperationDecl]]:
        owners = [c for c in self.ancestors(cls) if self.classes[c].operation(name)]
        return [(o, self.classes[o].operation(name)) for o in sorted(self._most_derived(owners))]

    def find_role(self, cls: str, role: str) -> list[RoleRef]:
        anc = self.ancestors(cls)
        hits = []
        for assoc in self.associations.values():
            for target in (0, 1):
                if assoc.ends[target].role == role and assoc.ends[1 - target].cls in anc:
                    hits.append(RoleRef(assoc, target))
        return hits

    def roles_of(self, cls: str) -> list[RoleRef]:
        anc = self.ancestors(cls)
        return [RoleRef(a, t) for a in self.associations.values() for t in (0, 1)
                if a.ends[1 - t].cls in anc]

    def dispatch_operation(self, cls: str, name: str) -> tuple[str, OperationDecl] | None:
        for c in self.linearization(cls):
            op = self.classes[c].operation(name)
            if op is not None:
                return c, op
        return None

    def state_machine(self, cls: str) -> StateMachine | None:
        for c in self.linearization(cls):
            sm = self.classes[c].state_machine
            if sm is not None:
                return sm
        return None


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------

def _as_list(node, what: str, sink: DiagnosticSink, pos: Pos) -> list:
    if node is None:
        return []
    if not isinstance(node, list):
        sink.error(f"'{what}' must be a list", pos)
        return []
    return node


def _parse_access(text: str) -> tuple[str, str]:
    words = str(text).split()
    if len(words) == 1 and words[0] in _SHORTCUTS:
        raise ValueError(f"access shortcut '{words[0]}' is not accepted; use the long form")
    if len(words) == 1 and words[0] in ACCESS_LEVELS:
        return words[0], words[0]
    if len(words) == 2 and words[0] in ACCESS_LEVELS and words[1] == "read":
        return words[0], "private"
    if (len(words) == 4 and words[0] in ACCESS_LEVELS and words[1] == "read"
            and words[2] in ACCESS_LEVELS and words[3] == "write"):
        return words[0], words[2]
    raise ValueError(f"malformed access modifier {text!r}")


def _parse_states(node, sink, pos) -> tuple[StateNode, ...]:
    out = []
    names = set()
    for i, item in enumerate(_as_list(node, "states", sink, pos)):
        ipos = node.pos_of(i) if isinstance(node, PList) else pos
        if isinstance(item, str):
            state = StateNode(item)
        elif isinstance(item, dict) and len(item) == 1:
            (name, children), = item.items()
            state = StateNode(str(name), _parse_states(children, sink, ipos))
        else:
            sink.error("a state is a name or a single-key mapping name: [substates]", ipos)
            continue
        if state.name in names:
            sink.error(f"duplicate sibling state '{state.name}'", ipos)
        names.add(state.name)
        out.append(state)
    return tuple(out)


class _ModelBuilder:
    def __init__(self, doc: PDict, file: str):
        self.doc = doc
        self.sink = DiagnosticSink(file)
        self.raw_classes = []  # (package, PDict)
        self.raw_assocs = []
        self.package_order = []

    def build(self) -> ClassModel:
        doc, sink = self.doc, self.sink
        if not isinstance(doc, dict):
            sink.error("model document must be a mapping")
            raise LoadError(sink.items)
        for key in doc:
            if key not in ("classes", "associations", "packages"):
                sink.error(f"unknown model key '{key}'", doc.pos_of(key))
        self._collect("", doc)
        for i, pkg in enumerate(_as_list(doc.get("packages"), "packages", sink, doc.pos_of("packages"))):
            if not isinstance(pkg, dict) or not pkg.get("name"):
                sink.error("package needs a name", doc["packages"].pos_of(i))
                continue
            self._collect(str(pkg["name"]), pkg)

        # pass 1: names
        names: dict[str, Pos] = {}
        for package, raw in self.raw_classes:
            q = f"{package}::{raw['name']}" if package else str(raw["name"])
            if q in names:
                sink.error(f"duplicate class '{q}'", raw.pos)
            names[q] = raw.pos
        shell = ClassModel((), {q: ClassDecl(q.split("::")[-1], q.rpartition("::")[0]) for q in names}, {})

        def resolve(path, package):
            return shell.resolve_class(path, package)

        # pass 2: class bodies
        classes: dict[str, ClassDecl] = {}
        for package, raw in self.raw_classes:
            decl = self._class(package, raw, resolve)
            if decl is not None:
                classes.setdefault(decl.qualified, decl)
        assocs: dict[str, AssocDecl] = {}
        for package, raw in self.raw_assocs:
            a = self._assoc(package, raw, resolve)
            if a is None:
                continue
            if a.name in assocs:
                sink.error(f"duplicate association '{a.name}'", raw.pos)
                continue
            assocs[a.name] = a
        packages = []
        for pkg_name in self.package_order:
            packages.append(PackageDecl(
                pkg_name,
                tuple(q for p, r in self.raw_classes if p == pkg_name
                      for q in [f"{p}::{r['name']}" if p else str(r["name"])] if q in classes),
                tuple(str(r["name"]) for p, r in self.raw_assocs if p == pkg_name and str(r.get("name")) in assocs),
            ))
        model = ClassModel(tuple(packages), classes, assocs)
        sink.raise_if_errors(LoadError)
        self._check_cycles(model)
        sink.raise_if_errors(LoadError)
        self._check_feature_names(model)
        sink.raise_if_errors(LoadError)
        return model

    def _collect(self, package: str, node) -> None:
        sink = self.sink
        if package not in self.package_order:
            self.package_order.append(package)
        for i, raw in enumerate(_as_list(node.get("classes"), "classes", sink, node.pos_of("classes"))):
            if not isinstance(raw, dict) or not raw.get("name"):
                sink.error("class needs a name", node["classes"].pos_of(i))
                continue
            self.raw_classes.append((package, raw))
        for i, raw in enumerate(_as_list(node.get("associations"), "associations", sink,
                                         node.pos_of("associations"))):
            if not isinstance(raw, dict) or not raw.get("name"):
                sink.error("association needs a name", node["associations"].pos_of(i))
                continue
            self.raw_assocs.append((package, raw))

    def _type(self, text, package, resolve, pos) -> TypeRef | None:
        try:
            return parse_type(str(text), lambda p: resolve(p, package))
        except UnknownClass as exc:
            self.sink.error(f"dangling type reference: {exc}", pos)
        except ValueError as exc:
            self.sink.error(str(exc), pos)
        return None

    def _class(self, package, raw, resolve) -> ClassDecl | None:
        sink = self.sink
        for key in raw:
            if key not in ("name", "supertypes", "attributes", "operations", "stateMachine"):
                sink.error(f"unknown class key '{key}'", raw.pos_of(key))
        supers = []
        for i, s in enumerate(_as_list(raw.get("supertypes"), "supertypes", sink, raw.pos_of("supertypes"))):
            try:
                supers.append(resolve(str(s), package))
            except UnknownClass as exc:
                sink.error(f"dangling supertype: {exc}", raw["supertypes"].pos_of(i))
        attrs = []
        for i, a in enumerate(_as_list(raw.get("attributes"), "attributes", sink, raw.pos_of("attributes"))):
            apos = raw["attributes"].pos_of(i)
            if not isinstance(a, dict) or "name" not in a or "type" not in a:
                sink.error("attribute needs 'name' and 'type'", apos)
                continue
            for key in a:
                if key not in ("name", "type", "access", "constant", "derived", "static", "seed"):
                    sink.error(f"unknown attribute key '{key}'", a.pos_of(key))
            t = self._type(a["type"], package, resolve, a.pos_of("type"))
            try:
                read, write = _parse_access(a.get("access", "public"))
            except ValueError as exc:
                sink.error(str(exc), a.pos_of("access"))
                read, write = "public", "public"
            if _ACCESS_RANK[write] < _ACCESS_RANK[read]:
                sink.error(f"attribute '{a['name']}': write access ({write}) is less constrained "
                           f"than read access ({read})", a.pos_of("access"))
            if any(x.name == a["name"] for x in attrs):
                sink.error(f"duplicate attribute '{a['name']}'", apos)
            if t is None:
                continue
            seed = None
            if "seed" in a:
                try:
                    seed = coerce_literal(a["seed"], t)
                except ValueError as exc:
                    sink.error(f"seed of '{a['name']}': {exc}", a.pos_of("seed"))
            attrs.append(AttributeDecl(str(a["name"]), t, read, write, bool(a.get("constant", False)),
                                       bool(a.get("derived", False)), bool(a.get("static", False)), seed))
        ops = []
        for i, o in enumerate(_as_list(raw.get("operations"), "operations", sink, raw.pos_of("operations"))):
            opos = raw["operations"].pos_of(i)
            if not isinstance(o, dict) or "name" not in o:
                sink.error("operation needs a name", opos)
                continue
            params = []
            for j, p in enumerate(_as_list(o.get("params"), "params", sink, o.pos_of("params"))):
                if not isinstance(p, dict) or "name" not in p or "type" not in p:
                    sink.error("parameter needs 'name' and 'type'", o["params"].pos_of(j))
                    continue
                pt = self._type(p["type"], package, resolve, p.pos_of("type"))
                if pt is not None:
                    params.append(ParamDecl(str(p["name"]), pt))
            ret = None
            if o.get("returns") not in (None, "void", "Void", "OclVoid"):
                ret = self._type(o["returns"], package, resolve, o.pos_of("returns"))
            if any(x.name == o["name"] for x in ops):
                sink.error(f"duplicate operation '{o['name']}'", opos)
            body = o.get("body")
            if body is not None and ret is None:
                sink.error(f"operation '{o['name']}' has a body but no return type", o.pos_of("body"))
            ops.append(OperationDecl(str(o["name"]), tuple(params), ret,
                                     None if body is None else str(body), o.pos_of("body")))
        sm = None
        if raw.get("stateMachine") is not None:
            smraw = raw["stateMachine"]
            if not isinstance(smraw, dict):
                sink.error("stateMachine must be a mapping with 'name' and 'states'", raw.pos_of("stateMachine"))
            else:
                sm = StateMachine(str(smraw.get("name", raw["name"])),
                                  _parse_states(smraw.get("states"), sink, smraw.pos_of("states")))
        return ClassDecl(str(raw["name"]), package, tuple(supers), tuple(attrs), tuple(ops), sm)

    def _assoc(self, package, raw, resolve) -> AssocDecl | None:
        sink = self.sink
        ends_raw = raw.get("ends")
        if not isinstance(ends_raw, list) or len(ends_raw) != 2:
            sink.error(f"association '{raw['name']}' needs exactly two ends", raw.pos)
            return None
        ends = []
        for i, e in enumerate(ends_raw):
            epos = ends_raw.pos_of(i)
            if not isinstance(e, dict) or "class" not in e:
                sink.error("association end needs a class", epos)
                return None
            try:
                cls = resolve(str(e["class"]), package)
            except UnknownClass as exc:
                sink.error(f"association end references undeclared class: {exc}", e.pos_of("class"))
                return None
            try:
                mult = parse_multiplicity(e.get("multiplicity", "0..*"))
            except ValueError as exc:
                sink.error(str(exc), e.pos_of("multiplicity"))
                return None
            role = str(e.get("role") or cls.split("::")[-1][:1].lower() + cls.split("::")[-1][1:])
            ends.append(AssocEnd(cls, role, mult, bool(e.get("constant", False))))
        return AssocDecl(str(raw["name"]), (ends[0], ends[1]), package)

    def _check_cycles(self, model: ClassModel) -> None:
        state: dict[str, int] = {}

        def visit(c, trail):
            state[c] = 1
            for s in model.classes[c].supertypes:
                if state.get(s) == 1:
                    cyc = trail[trail.index(s):] + [s] if s in trail else [c, s]
                    self.sink.error(f"cyclic inheritance: {' -> '.join(cyc)}")
                elif s not in state:
                    visit(s, trail + [s])
            state[c] = 2

        for c in model.classes:
            if c not in state:
                visit(c, [c])

    def _check_feature_names(self, model: ClassModel) -> None:
        for q, decl in model.classes.items():
            own_roles = [r for r in model.roles_of(q)]
            seen: dict[str, str] = {}
            for r in own_roles:
                key = r.end.role
                where = f"association {r.assoc.name}"
                if key in seen and seen[key] != where:
                    self.sink.error(f"class {q}: role name '{key}' is not unique "
                                    f"({seen[key]} and {where})")
                seen[key] = where
            for a in decl.attributes:
                if a.name in seen:
                    self.sink.error(f"class {q}: attribute '{a.name}' clashes with a role name")
            for o in decl.operations:
                if decl.attribute(o.name) and o.body is not None:
                    self.sink.error(f"class {q}: operation '{o.name}' with a body clashes with an attribute")


def load_class_model(text: str, file: str = "<model>") -> ClassModel:
    doc = load_document(text, file)
    try:
        return _ModelBuilder(doc, file).build()
    except LoadError as exc:
        raise exc.in_file(file)


def load_class_model_file(path) -> ClassModel:
    with open(path, encoding="utf-8") as fh:
        return load_class_model(fh.read(), str(path))


def _states_doc(nodes: tuple[StateNode, ...]) -> list:
    return [n.name if not n.children else {n.name: _states_doc(n.children)} for n in nodes]


def _type_text(t: TypeRef) -> str:
    return str(t)


def dump_class_model(model: ClassModel) -> str:
    def class_doc(q):
        c = model.classes[q]
        out: dict = {"name": c.name}
        if c.supertypes:
            out["supertypes"] = list(c.supertypes)
        if c.attributes:
            out["attributes"] = []
            for a in c.attributes:
                ad: dict = {"name": a.name, "type": _type_text(a.type)}
                if a.access_text != "public":
                    ad["access"] = a.access_text
                for flag in ("constant", "derived", "static"):
                    if getattr(a, flag):
                        ad[flag] = True
                if a.seed is not None:
                    ad["seed"] = to_plain(a.seed)
                out["attributes"].append(ad)
        if c.operations:
            out["operations"] = []
            for o in c.operations:
                od: dict = {"name": o.name}
                if o.params:
                    od["params"] = [{"name": p.name, "type": _type_text(p.type)} for p in o.params]
                if o.returns is not None:
                    od["returns"] = _type_text(o.returns)
                if o.body is not None:
                    od["body"] = o.body
                out["operations"].append(od)
        if c.state_machine is not None:
            out["stateMachine"] = {"name": c.state_machine.name,
                                   "states": _states_doc(c.state_machine.states)}
        return out

    def assoc_doc(name):
        a = model.associations[name]
        ends = []
        for e in a.ends:
            ed = {"class": e.cls, "role": e.role, "multiplicity": str(e.multiplicity)}
            if e.constant:
                ed["constant"] = True
            ends.append(ed)
        return {"name": a.name, "ends": ends}

    doc: dict = {}
    pkgs = []
    for p in model.packages:
        body = {}
        if p.classes:
            body["classes"] = [class_doc(q) for q in p.classes]
        if p.associations:
            body["associations"] = [assoc_doc(n) for n in p.associations]
        if p.name == "":
            doc.update(body)
        elif body:
            pkgs.append({"name": p.name, **body})
    if pkgs:
        doc["packages"] = pkgs
    return dump_document(doc)


# --------------------------------------------------------------------------
# Snapshots
# --------------------------------------------------------------------------

class Link(NamedTuple):
    assoc: str
    source: str  # plays ends[0]
    target: str  # plays ends[1]


@dataclass(frozen=True)
class ObjectRecord:
    id: str
    cls: str
    attrs: Mapping[str, Value]
    state: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Snapshot:
    objects: Mapping[str, ObjectRecord]
    links: frozenset[Link] = frozenset()
    statics: Mapping[str, Mapping[str, Value]] = field(default_factory=dict)
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def class_of(self, obj_id: str) -> str | None:
        rec = self.objects.get(obj_id)
        return rec.cls if rec else None

    def linked(self, assoc: str, target: int, obj_id: str) -> tuple[str, ...]:
        """Ids at end ``target`` of ``assoc`` linked to ``obj_id`` at the other end."""
        if not self._index:
            idx: dict = {}
            for link in self.links:
                idx.setdefault((link.assoc, 1, link.source), []).append(link.target)
                idx.setdefault((link.assoc, 0, link.target), []).append(link.source)
            for k, v in idx.items():
                self._index[k] = tuple(sorted(v))
            self._index["_built"] = ()
        return self._index.get((assoc, target, obj_id), ())

    def with_attrs(self, updates: Mapping[tuple[str, str], Value]) -> "Snapshot":
        objects = dict(self.objects)
        by_obj: dict[str, dict] = {}
        for (oid, name), v in updates.items():
            by_obj.setdefault(oid, {})[name] = v
        for oid, changes in by_obj.items():
            rec = objects[oid]
            objects[oid] = replace(rec, attrs={**rec.attrs, **changes})
        return Snapshot(objects, self.links, self.statics)


def coerce_literal(raw, t: TypeRef) -> Value:
    """Convert a plain document scalar/list into a value of type ``t``.

    Object references are returned as unchecked ``ObjRef`` values.
    """
    if raw is None:
        return undef(t)
    if isinstance(t, CollType):
        if t.kind == "Collection":
            raise ValueError("abstract Collection type cannot hold stored values")
        if not isinstance(raw, list):
            raise ValueError(f"expected a list for {t}")
        return make_coll(t.kind, [coerce_literal(x, t.elem) for x in raw], t.elem)
    if t == BOOLEAN:
        if isinstance(raw, bool):
            return Bool3.of(raw)
    elif t == INTEGER:
        if isinstance(raw, int) and not isinstance(raw, bool):
            try:
                return check_int(raw)
            except IntegerOverflow as exc:
                raise ValueError(str(exc)) from None
    elif t == REAL:
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return float(raw)
    elif t == STRING:
        if isinstance(raw, str):
            return raw
    elif isinstance(t, ClassType):
        if isinstance(raw, str):
            return ObjRef(raw)
    elif t == OCLANY:
        if isinstance(raw, bool):
            return Bool3.of(raw)
        if isinstance(raw, (int, float, str)):
            return raw if not isinstance(raw, int) else check_int(raw)
        if isinstance(raw, dict) and set(raw) == {"ref"}:
            return ObjRef(str(raw["ref"]))
    raise ValueError(f"value {raw!r} does not conform to {t}")


def to_plain(v: Value):
    if isinstance(v, Bool3):
        return None if v is Bool3.UNDEF else v is Bool3.TRUE
    if isinstance(v, Undef):
        return None
    if isinstance(v, ObjRef):
        return v.id
    if isinstance(v, CollV):
        return [to_plain(x) for x in v.items]
    return v


def _check_refs(v: Value, t: TypeRef, objects: Mapping[str, ObjectRecord], model: ClassModel) -> str | None:
    if isinstance(v, ObjRef):
        rec = objects.get(v.id)
        if rec is None:
            return f"reference to nonexistent object '{v.id}'"
        if isinstance(t, ClassType) and not model.is_subclass(rec.cls, t.name):
            return f"object '{v.id}' of class {rec.cls} does not conform to {t}"
    elif isinstance(v, CollV):
        for x in v.items:
            msg = _check_refs(x, t.elem if isinstance(t, CollType) else t, objects, model)
            if msg:
                return msg
    return None


def load_snapshot(text: str, model: ClassModel, file: str = "<snapshot>") -> Snapshot:
    doc = load_document(text, file)
    sink = DiagnosticSink(file)
    if not isinstance(doc, dict):
        sink.error("snapshot document must be a mapping")
        raise LoadError(sink.items)
    for key in doc:
        if key not in ("objects", "links", "statics"):
            sink.error(f"unknown snapshot key '{key}'", doc.pos_of(key))

    raw_objects = _as_list(doc.get("objects"), "objects", sink, doc.pos_of("objects"))
    pending = []
    ids: dict[str, Pos] = {}
    for i, o in enumerate(raw_objects):
        opos = doc["objects"].pos_of(i)
        if not isinstance(o, dict) or "id" not in o or "class" not in o:
            sink.error("object needs 'id' and 'class'", opos)
            continue
        oid = str(o["id"])
        if oid in ids:
            sink.error(f"duplicate object id '{oid}'", opos)
            continue
        ids[oid] = opos
        try:
            cls = model.resolve_class(str(o["class"]))
        except UnknownClass as exc:
            sink.error(f"object '{oid}': {exc}", o.pos_of("class"))
            continue
        for key in o:
            if key not in ("id", "class", "attrs", "state"):
                sink.error(f"unknown object key '{key}'", o.pos_of(key))
        attrs = {}
        raw_attrs = o.get("attrs") or {}
        if not isinstance(raw_attrs, dict):
            sink.error("'attrs' must be a mapping", o.pos_of("attrs"))
            raw_attrs = {}
        for name, raw in raw_attrs.items():
            apos = raw_attrs.pos_of(name) if isinstance(raw_attrs, PDict) else opos
            found = model.find_attribute(cls, str(name))
            if not found:
                sink.error(f"object '{oid}': unknown attribute '{name}' for class {cls}", apos)
                continue
            decl = found[0][1]
            if decl.static:
                sink.error(f"object '{oid}': '{name}' is a class-scope attribute; set it under 'statics'", apos)
                continue
            try:
                attrs[str(name)] = coerce_literal(raw, decl.type)
            except ValueError as exc:
                sink.error(f"object '{oid}', attribute '{name}': type mismatch: {exc}", apos)
        state = None
        if o.get("state") is not None:
            sm = model.state_machine(cls)
            if sm is None:
                sink.error(f"object '{oid}': class {cls} has no state machine", o.pos_of("state"))
            else:
                try:
                    raw_state = o["state"]
                    state = sm.resolve([str(x) for x in raw_state] if isinstance(raw_state, list)
                                       else str(raw_state))
                except KeyError as exc:
                    sink.error(f"object '{oid}': unknown state name: {exc.args[0]}", o.pos_of("state"))
        pending.append((ObjectRecord(oid, cls, attrs, state), opos))

    objects = {rec.id: rec for rec, _ in pending}
    for rec, opos in pending:
        for name, v in rec.attrs.items():
            decl = model.find_attribute(rec.cls, name)[0][1]
            msg = _check_refs(v, decl.type, objects, model)
            if msg:
                sink.error(f"object '{rec.id}', attribute '{name}': {msg}", opos)

    links = set()
    for i, l in enumerate(_as_list(doc.get("links"), "links", sink, doc.pos_of("links"))):
        lpos = doc["links"].pos_of(i)
        if not isinstance(l, dict) or not {"assoc", "from", "to"} <= set(l):
            sink.error("link needs 'assoc', 'from' and 'to'", lpos)
            continue
        assoc = model.associations.get(str(l["assoc"]))
        if assoc is None:
            sink.error(f"unknown association '{l['assoc']}'", lpos)
            continue
        ok = True
        for key, end in (("from", assoc.ends[0]), ("to", assoc.ends[1])):
            rec = objects.get(str(l[key]))
            if rec is None:
                sink.error(f"link to nonexistent object '{l[key]}'", l.pos_of(key))
                ok = False
            elif not model.is_subclass(rec.cls, end.cls):
                sink.error(f"link {assoc.name}: object '{rec.id}' ({rec.cls}) cannot play end {end.role} "
                           f"({end.cls})", l.pos_of(key))
                ok = False
        if ok:
            links.add(Link(assoc.name, str(l["from"]), str(l["to"])))

    statics: dict[str, dict] = {}
    raw_statics = doc.get("statics") or {}
    if not isinstance(raw_statics, dict):
        sink.error("'statics' must be a mapping", doc.pos_of("statics"))
        raw_statics = {}
    for cname, values in raw_statics.items():
        spos = raw_statics.pos_of(cname)
        try:
            cls = model.resolve_class(str(cname))
        except UnknownClass as exc:
            sink.error(f"statics: {exc}", spos)
            continue
        if not isinstance(values, dict):
            sink.error("statics entry must map attribute names to values", spos)
            continue
        for name, raw in values.items():
            decl = model.classes[cls].attribute(str(name))
            if decl is None or not decl.static:
                sink.error(f"statics: {cls} has no class-scope attribute '{name}'", spos)
                continue
            try:
                v = coerce_literal(raw, decl.type)
            except ValueError as exc:
                sink.error(f"statics {cls}.{name}: type mismatch: {exc}", spos)
                continue
            msg = _check_refs(v, decl.type, objects, model)
            if msg:
                sink.error(f"statics {cls}.{name}: {msg}", spos)
                continue
            statics.setdefault(cls, {})[str(name)] = v

    sink.raise_if_errors(LoadError)
    return Snapshot(objects, frozenset(links), statics)


def load_snapshot_file(path, model: ClassModel) -> Snapshot:
    with open(path, encoding="utf-8") as fh:
        return load_snapshot(fh.read(), model, str(path))


def empty_snapshot() -> Snapshot:
    return Snapshot({}, frozenset(), {})


def dump_snapshot(snap: Snapshot) -> str:
    objects = []
    for oid in sorted(snap.objects):
        rec = snap.objects[oid]
        od: dict = {"id": rec.id, "class": rec.cls}
        if rec.attrs:
            od["attrs"] = {k: to_plain(v) for k, v in sorted(rec.attrs.items())}
        if rec.state is not None:
            od["state"] = "::".join(rec.state)
        objects.append(od)
    doc: dict = {"objects": objects}
    if snap.links:
        doc["links"] = [{"assoc": l.assoc, "from": l.source, "to": l.target} for l in sorted(snap.links)]
    if snap.statics:
        doc["statics"] = {c: {k: to_plain(v) for k, v in sorted(vals.items())}
                          for c, vals in sorted(snap.statics.items())}
    return dump_document(doc)


# --------------------------------------------------------------------------
# Queries over snapshots
# --------------------------------------------------------------------------

def objects_of_kind(snap: Snapshot, model: ClassModel, class_name: str) -> frozenset[str]:
    """Extent of a class (including subclasses) within the snapshot."""
    cls = model.resolve_class(class_name)
    return frozenset(oid for oid, rec in snap.objects.items() if model.is_subclass(rec.cls, cls))


def validate_multiplicities(snap: Snapshot, model: ClassModel, file: str = "<snapshot>") -> list[Diagnostic]:
    out = []
    for name in sorted(model.associations):
        assoc = model.associations[name]
        for target in (0, 1):
            end, source = assoc.ends[target], assoc.ends[1 - target]
            for oid in sorted(objects_of_kind(snap, model, source.cls)):
                n = len(snap.linked(assoc.name, target, oid))
                if not end.multiplicity.admits(n):
                    out.append(Diagnostic(
                        f"object '{oid}' has {n} link(s) at end '{end.role}' of {assoc.name}, "
                        f"multiplicity is {end.multiplicity}", NOPOS, "error", file))
    return out
