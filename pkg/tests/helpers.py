"""Shared helpers for the test suite."""

from __future__ import annotations

import io
from pathlib import Path

from oclk.cli import main
from oclk.evaluator import evaluate
from oclk.logic import Bool3
from oclk.model import empty_snapshot, load_class_model, load_class_model_file, load_snapshot_file
from oclk.typecheck import typecheck_expression
from oclk.types import BOOLEAN, INTEGER, REAL, STRING

CORPUS = Path(__file__).parent / "corpus"

EMPTY_MODEL = load_class_model("classes: []\n")


def corpus(*parts) -> Path:
    return CORPUS.joinpath(*parts)


def model_of(name: str):
    return load_class_model_file(corpus(name, "model.yaml"))


def snapshot_of(name: str, snap: str, model=None):
    model = model or model_of(name)
    return load_snapshot_file(corpus(name, snap), model)


def _type_of(v):
    if isinstance(v, Bool3):
        return BOOLEAN
    if isinstance(v, bool):
        raise TypeError("use Bool3, not bool")
    if isinstance(v, int):
        return INTEGER
    if isinstance(v, float):
        return REAL
    if isinstance(v, str):
        return STRING
    raise TypeError(f"no literal type for {v!r}")


def ev(text: str, model=None, snap=None, self_id=None, pre=None, types=None, **env):
    """Type check and evaluate ``text``; keyword arguments bind variables."""
    model = model or EMPTY_MODEL
    snap = snap or empty_snapshot()
    variables = {k: (types or {}).get(k) or _type_of(v) for k, v in env.items()}
    self_cls = None
    if self_id is not None:
        self_cls = snap.class_of(self_id)
        from oclk.values import ObjRef
        env["self"] = ObjRef(self_id)
    typed = typecheck_expression(text, model, self_cls, variables, with_pre=pre is not None)
    return evaluate(typed, env, snap, model, pre)


def run_cli(*argv, cwd: Path | None = None) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    args = [str(a) for a in argv]
    code = main(args, out, err)
    return code, out.getvalue(), err.getvalue()


def typed_file(name: str, file: str, model=None):
    from oclk.syntax import parse_constraint_file
    from oclk.typecheck import typecheck_file
    model = model or model_of(name)
    path = corpus(name, file)
    return typecheck_file(parse_constraint_file(path.read_text(), str(path)), model)


def groups_of(name: str, file: str, model=None):
    from oclk.fixpoint import collect_groups
    model = model or model_of(name)
    return collect_groups(typed_file(name, file, model), model)


def persons_snapshot(model, people, parents, ancestors=None):
    """Build a Person snapshot; ``parents`` holds (child, parent) pairs."""
    from oclk.model import load_snapshot
    import yaml
    objs = []
    for p in people:
        o = {"id": p, "class": "Person"}
        if ancestors is not None:
            o["attrs"] = {"ancestors": sorted(ancestors[p])}
        objs.append(o)
    links = [{"assoc": "Parenthood", "from": c, "to": p} for c, p in sorted(parents)]
    return load_snapshot(yaml.safe_dump({"objects": objs, "links": links}), model)


def attr_sets(snap, attr):
    return {oid: {x.id for x in o.attrs[attr].items} for oid, o in snap.objects.items() if attr in o.attrs}


def closure(people, parents):
    """Transitive closure of the parents relation, computed naively."""
    anc = {p: {q for c, q in parents if c == p} for p in people}
    changed = True
    while changed:
        changed = False
        for p in people:
            extra = set().union(*(anc[q] for q in anc[p])) - anc[p] if anc[p] else set()
            if extra:
                anc[p] |= extra
                changed = True
    return anc
