"""XML projection of HL programs and a small XPath dialect over it.

Only the child (``/``) and descendant (``//``) axes are supported. Predicates
may test attributes with ``@a='x'`` and ``contains(@a,'x')`` and combine them
with ``not()``, ``and``, ``or`` and parentheses.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .syntax import K, Node, get_path

Path = tuple[int, ...]

TAGS = ("joinpoint", "macro", "macrocall", "module", "function", "call", "struct", "ref",
        "assign", "for")

# attribute order per tag; "attr" may follow any of them
ATTR_ORDER = {
    "module": ("name", "bare"),
    "function": ("name", "args"),
    "call": ("name", "ref", "argc", "parallel"),
    "struct": ("name", "mutable"),
    "ref": ("name", "ref"),
    "assign": ("name", "ref", "op"),
    "for": ("iterc", "comprehension"),
    "macrocall": ("name",),
    "macro": ("name",),
    "joinpoint": (),
}


@dataclass(eq=False)
class XmlNode:
    tag: str
    attributes: dict[str, str] = field(default_factory=dict)
    children: list["XmlNode"] = field(default_factory=list)
    origin: Path | None = None

    def iter(self) -> Iterator["XmlNode"]:
        yield self
        for c in self.children:
            yield from c.iter()


# -- projection ----------------------------------------------------------
def _chain(path: Path, node: Node):
    """Split an access chain into (root node+path, '%'-encoded ref, inner expressions)."""
    segs: list[str] = []
    inner: list[tuple[Path, Node]] = []
    while True:
        if node.kind is K.FieldRef:
            segs.append("." + node.children[1].atom)
        elif node.kind is K.IndexRef:
            segs.append("[]")
            inner.append((path + (1,), node.children[1]))
        elif node.kind is K.Call and segs:
            args = node.children[1:]
            segs.append("(" + "," * max(len(args) - 1, 0) + ")")
            inner.extend((path + (i + 1,), a) for i, a in enumerate(args))
        else:
            break
        path, node = path + (0,), node.children[0]
    ref = "%" + "".join(reversed(segs)) if segs else None
    inner.reverse()
    return (path, node), ref, inner


class Projector:
    def project(self, program: Node) -> XmlNode:
        root = XmlNode("joinpoint")
        root.children = self.nodes((), program)
        return root

    def many(self, items) -> list[XmlNode]:
        out: list[XmlNode] = []
        for path, node in items:
            out.extend(self.nodes(path, node))
        return out

    def kids(self, path: Path, node: Node, start: int = 0):
        return [(path + (i,), c) for i, c in enumerate(node.children) if i >= start]

    def nodes(self, path: Path, node: Node) -> list[XmlNode]:
        out = self._nodes(path, node)
        if node.attrs and out and out[0].origin == path:
            out[0].attributes["attr"] = ",".join(node.attrs)
        return out

    def _nodes(self, path: Path, node: Node) -> list[XmlNode]:
        k = node.kind
        c = node.children
        if k is K.Module:
            el = XmlNode("module", {"name": c[0].atom}, origin=path)
            el.children = self.nodes(path + (1,), c[1])
            return [el]
        if k is K.FunctionDef:
            params = [p.children[0].atom for p in c[1].children]
            attrs = {"name": c[0].atom}
            if params:
                attrs["args"] = ",".join(params)
            el = XmlNode("function", attrs, origin=path)
            el.children = self.many(self.kids(path, node, 1))
            return [el]
        if k is K.StructDef:
            attrs = {"name": c[0].atom}
            if c[1].atom:
                attrs["mutable"] = "true"
            el = XmlNode("struct", attrs, origin=path)
            el.children = self.nodes(path + (2,), c[2])
            return [el]
        if k is K.Call:
            (rpath, root), ref, inner = _chain(path + (0,), c[0])
            if ref is None and root.kind is K.Symbol:
                name = root.atom
            else:
                name = root.atom if root.kind is K.Symbol else ""
                if root.kind is not K.Symbol:
                    inner.insert(0, (rpath, root))
            attrs = {"name": name}
            if ref is not None:
                attrs["ref"] = ref
            attrs["argc"] = str(sum(1 for a in c[1:] if a.kind is not K.Bind))
            el = XmlNode("call", attrs, origin=path)
            return [el] + self.many(inner) + self.many(self.kids(path, node, 1))
        if k in (K.IndexRef, K.FieldRef):
            (rpath, root), ref, inner = _chain(path, node)
            if root.kind is not K.Symbol:
                inner.insert(0, (rpath, root))
            attrs = {"name": root.atom if root.kind is K.Symbol else "", "ref": ref}
            return [XmlNode("ref", attrs, origin=path)] + self.many(inner)
        if k in (K.Assign, K.OpAssign, K.IndexAssign, K.FieldAssign):
            return self.assign(path, node)
        if k is K.For:
            el = XmlNode("for", {"iterc": str(len(c) - 1)}, origin=path)
            el.children = self.many(self.kids(path, node))
            return [el]
        if k is K.MacroCall and c[0].atom == "@time":
            el = XmlNode("macrocall", {"name": "@time"}, origin=path)
            el.children = self.many(self.kids(path, node, 1))
            return [el]
        if k in (K.Symbol, K.LineInfo) or not c:
            return []
        return self.many(self.kids(path, node))

    def assign(self, path: Path, node: Node) -> list[XmlNode]:
        k, c = node.kind, node.children
        attrs: dict[str, str] = {}
        inner: list = []
        if k is K.Assign:
            attrs["name"] = c[0].atom
        else:
            if k is K.OpAssign:
                target_path, target = path + (0,), c[0]
            else:
                # IndexAssign/FieldAssign: rebuild the chain as if it were a ref
                target_path, target = path, Node(
                    K.IndexRef if k is K.IndexAssign else K.FieldRef, c[:2])
            (rpath, root), ref, inner = _chain(target_path, target)
            if root.kind is not K.Symbol:
                inner.insert(0, (rpath, root))
            attrs["name"] = root.atom if root.kind is K.Symbol else ""
            if ref is not None:
                attrs["ref"] = ref
            if k is K.OpAssign:
                attrs["op"] = c[1].atom
        value_path = path + (len(c) - 1,)
        return [XmlNode("assign", attrs, origin=path)] + self.many(inner) + self.nodes(value_path, c[-1])


def project(program: Node) -> XmlNode:
    """Project a pre-weaved program into the join-point document."""
    return Projector().project(program)


def _escape(value: str) -> str:
    return value.replace("&", "&amp;").replace('"', "&quot;")


def _ordered(el: XmlNode) -> list[tuple[str, str]]:
    order = ATTR_ORDER.get(el.tag, ())
    keys = [a for a in order if a in el.attributes]
    keys += sorted(a for a in el.attributes if a not in order and a != "attr")
    if "attr" in el.attributes:
        keys.append("attr")
    return [(a, el.attributes[a]) for a in keys]


def render(doc: XmlNode) -> str:
    lines: list[str] = []

    def emit(el: XmlNode, depth: int) -> None:
        pad = "  " * depth
        attrs = "".join(f' {a}="{_escape(v)}"' for a, v in _ordered(el))
        if not el.children:
            lines.append(f"{pad}<{el.tag}{attrs}/>")
            return
        lines.append(f"{pad}<{el.tag}{attrs}>")
        for ch in el.children:
            emit(ch, depth + 1)
        lines.append(f"{pad}</{el.tag}>")

    emit(doc, 0)
    return "\n".join(lines) + "\n"


# -- query language ------------------------------------------------------
class QuerySyntaxError(Exception):
    def __init__(self, message: str, column: int):
        self.message = message
        self.column = column
        super().__init__(f"query syntax error at column {column}: {message}")


@dataclass(frozen=True)
class Eq:
    attr: str
    value: str


@dataclass(frozen=True)
class Contains:
    attr: str
    value: str


@dataclass(frozen=True)
class Not:
    pred: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Step:
    axis: str  # "child" | "descendant"
    tag: str  # name or "*"
    predicates: tuple = ()


@dataclass(frozen=True)
class Query:
    steps: tuple[Step, ...]


_TOKEN = re.compile(r"\s*(?:(//|/|\[|\]|\(|\)|@|=|,|\*)|('[^']*'|\"[^\"]*\")|([A-Za-z_][\w\-]*))")


def _tokens(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        col = m.start(m.lastindex) + 1
        if m.group(1):
            out.append(("op", m.group(1), col))
        elif m.group(2):
            out.append(("str", m.group(2)[1:-1], col))
        else:
            out.append(("name", m.group(3), col))
        pos = m.end()
    out.append(("end", "", len(text) + 1))
    return out


class _QueryParser:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def take(self, kind: str, value: str | None = None):
        t = self.tok
        if t[0] != kind or (value is not None and t[1] != value):
            want = value or kind
            got = t[1] or "end of query"
            raise QuerySyntaxError(f"expected {want!r}, found {got!r}", t[2])
        self.i += 1
        return t

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.tok
        return t[0] == kind and (value is None or t[1] == value)

    def query(self) -> Query:
        steps = []
        while not self.at("end"):
            if self.at("op", "//"):
                axis = "descendant"
            elif self.at("op", "/"):
                axis = "child"
            else:
                raise QuerySyntaxError("expected '/' or '//'", self.tok[2])
            self.i += 1
            if self.at("op", "*"):
                self.i += 1
                tag = "*"
            else:
                tag = self.take("name")[1]
            preds = []
            while self.at("op", "["):
                self.i += 1
                preds.append(self.or_())
                self.take("op", "]")
            steps.append(Step(axis, tag, tuple(preds)))
        if not steps:
            raise QuerySyntaxError("empty query", 1)
        return Query(tuple(steps))

    def or_(self):
        left = self.and_()
        while self.at("name", "or"):
            self.i += 1
            left = Or(left, self.and_())
        return left

    def and_(self):
        left = self.unary()
        while self.at("name", "and"):
            self.i += 1
            left = And(left, self.unary())
        return left

    def unary(self):
        if self.at("name", "not"):
            self.i += 1
            self.take("op", "(")
            inner = self.or_()
            self.take("op", ")")
            return Not(inner)
        if self.at("name", "contains"):
            self.i += 1
            self.take("op", "(")
            self.take("op", "@")
            attr = self.take("name")[1]
            self.take("op", ",")
            value = self.take("str")[1]
            self.take("op", ")")
            return Contains(attr, value)
        if self.at("op", "("):
            self.i += 1
            inner = self.or_()
            self.take("op", ")")
            return inner
        if self.at("op", "@"):
            self.i += 1
            attr = self.take("name")[1]
            self.take("op", "=")
            return Eq(attr, self.take("str")[1])
        t = self.tok
        raise QuerySyntaxError(f"unexpected {t[1] or 'end of query'!r} in predicate", t[2])


def parse_query(text: str) -> Query:
    return _QueryParser(text).query()


def holds(pred, el: XmlNode) -> bool:
    if isinstance(pred, Eq):
        return el.attributes.get(pred.attr) == pred.value
    if isinstance(pred, Contains):
        v = el.attributes.get(pred.attr)
        return v is not None and pred.value in v
    if isinstance(pred, Not):
        return not holds(pred.pred, el)
    if isinstance(pred, And):
        return holds(pred.left, el) and holds(pred.right, el)
    if isinstance(pred, Or):
        return holds(pred.left, el) or holds(pred.right, el)
    raise TypeError(f"unknown predicate {pred!r}")


def select(query: Query, doc: XmlNode) -> list[XmlNode]:
    """Evaluate ``query`` from a virtual document node whose only child is ``doc``."""
    order = {id(el): i for i, el in enumerate(doc.iter())}
    context: list[XmlNode] = [XmlNode("#document", children=[doc])]
    for step in query.steps:
        found: dict[int, XmlNode] = {}
        for ctx in context:
            pool = ctx.children if step.axis == "child" else [
                d for ch in ctx.children for d in ch.iter()]
            for el in pool:
                if step.tag != "*" and el.tag != step.tag:
                    continue
                if all(holds(p, el) for p in step.predicates):
                    found[id(el)] = el
        context = sorted(found.values(), key=lambda el: order[id(el)])
    return context


def match(query_text: str, program: Node) -> list[tuple[Path, Node]]:
    """AST sites selected by ``query_text``, in document order."""
    hits = select(parse_query(query_text), project(program))
    out, seen = [], set()
    for el in hits:
        if el.origin is None or el.origin in seen:
            continue
        seen.add(el.origin)
        out.append((el.origin, get_path(program, el.origin)))
    out.sort(key=lambda item: item[0])
    return out


def dump_xml(program: Node) -> str:
    return render(project(program))
