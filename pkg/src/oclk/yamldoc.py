"""YAML loading that remembers where each mapping, sequence and key came from."""

from __future__ import annotations

import re

import yaml

from .diagnostics import LoadError, Diagnostic, Pos


class PDict(dict):
    pos: Pos = Pos()
    key_pos: dict

    def pos_of(self, key) -> Pos:
        return self.key_pos.get(key, self.pos)


class PList(list):
    pos: Pos = Pos()
    item_pos: list

    def pos_of(self, index: int) -> Pos:
        if 0 <= index < len(self.item_pos):
            return self.item_pos[index]
        return self.pos


class _Loader(yaml.SafeLoader):
    """Safe loader with YAML 1.2 booleans: ``on``, ``off``, ``yes`` and ``no`` stay strings."""


_Loader.yaml_implicit_resolvers = {
    ch: [(tag, rx) for tag, rx in resolvers if tag != "tag:yaml.org,2002:bool"]
    for ch, resolvers in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver("tag:yaml.org,2002:bool", re.compile(r"^(?:true|True|TRUE|false|False|FALSE)$"),
                              list("tTfF"))


def _mark(node) -> Pos:
    return Pos(node.start_mark.line + 1, node.start_mark.column + 1)


def _convert(node, loader):
    if isinstance(node, yaml.MappingNode):
        out = PDict()
        out.pos = _mark(node)
        out.key_pos = {}
        for key_node, value_node in node.value:
            key = loader.construct_object(key_node, deep=True)
            if not isinstance(key, (str, int, float, bool)) and key is not None:
                raise LoadError(Diagnostic("mapping keys must be scalars", _mark(key_node)))
            if key in out:
                raise LoadError(Diagnostic(f"duplicate key {key!r}", _mark(key_node)))
            out[key] = _convert(value_node, loader)
            out.key_pos[key] = _mark(key_node)
        return out
    if isinstance(node, yaml.SequenceNode):
        out = PList()
        out.pos = _mark(node)
        out.item_pos = []
        for item in node.value:
            out.append(_convert(item, loader))
            out.item_pos.append(_mark(item))
        return out
    return loader.construct_object(node, deep=True)


def load_document(text: str, file: str = "<input>"):
    loader = _Loader(text)
    try:
        node = loader.get_single_node()
        if node is None:
            return _empty()
        return _convert(node, loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        pos = Pos(mark.line + 1, mark.column + 1) if mark else Pos()
        raise LoadError(Diagnostic(f"malformed document: {getattr(exc, 'problem', exc)}", pos, file=file))
    except LoadError as exc:
        raise exc.in_file(file)
    finally:
        loader.dispose()


def _empty() -> PDict:
    out = PDict()
    out.key_pos = {}
    return out


def dump_document(data) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, allow_unicode=True)
