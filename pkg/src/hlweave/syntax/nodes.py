"""AST node types for HL, the small Julia-like language the weaver operates on."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Any, Iterator


class NodeKind(enum.Enum):
    Module = "Module"
    FunctionDef = "FunctionDef"
    ShortFuncDef = "ShortFuncDef"
    Lambda = "Lambda"
    StructDef = "StructDef"
    Call = "Call"
    MacroCall = "MacroCall"
    Assign = "Assign"
    OpAssign = "OpAssign"
    IndexAssign = "IndexAssign"
    FieldAssign = "FieldAssign"
    IndexRef = "IndexRef"
    FieldRef = "FieldRef"
    For = "For"
    If = "If"
    Let = "Let"
    TryCatchFinally = "TryCatchFinally"
    Throw = "Throw"
    Block = "Block"
    AndAnd = "AndAnd"
    OrOr = "OrOr"
    Return = "Return"
    Symbol = "Symbol"
    IntLit = "IntLit"
    FloatLit = "FloatLit"
    BoolLit = "BoolLit"
    StringLit = "StringLit"
    StringInterp = "StringInterp"
    ArrayLit = "ArrayLit"
    TupleLit = "TupleLit"
    MapLit = "MapLit"
    Range = "Range"
    Include = "Include"
    AttrAnnot = "AttrAnnot"
    Aj = "Aj"
    LineInfo = "LineInfo"
    # structural helpers
    ParamList = "ParamList"
    Param = "Param"
    VarParam = "VarParam"
    KwParam = "KwParam"
    KwVarParam = "KwVarParam"
    Iter = "Iter"
    Bind = "Bind"
    Empty = "Empty"


K = NodeKind

LITERAL_KINDS = frozenset({K.Symbol, K.IntLit, K.FloatLit, K.BoolLit, K.StringLit})
PARAM_KINDS = frozenset({K.Param, K.VarParam, K.KwParam, K.KwVarParam})


@dataclass(frozen=True)
class SourceLoc:
    file: str = ""
    line: int = 0
    provenance: str = ""

    def __str__(self) -> str:
        return f"{self.file}:{self.line}"


NOWHERE = SourceLoc()


@dataclass(frozen=True)
class Node:
    """One AST node.

    ``atom`` is set only for literal kinds. ``meta`` is used by ``Aj`` nodes
    to carry the join-point payload between weave and emit; it takes no
    part in equality.
    """

    kind: NodeKind
    children: tuple["Node", ...] = ()
    atom: Any = None
    loc: SourceLoc = NOWHERE
    attrs: tuple[str, ...] = ()
    meta: Any = field(default=None, compare=False, repr=False)

    def __repr__(self) -> str:
        if self.kind in LITERAL_KINDS:
            return f"{self.kind.value}({self.atom!r})"
        if self.kind is K.LineInfo:
            return f"LineInfo({self.loc})"
        inner = ", ".join(repr(c) for c in self.children)
        return f"{self.kind.value}[{inner}]"

    def with_children(self, children) -> "Node":
        return replace(self, children=tuple(children))

    @property
    def name(self) -> str:
        """Text of a Symbol node."""
        return self.atom


def mk(kind: NodeKind, *children: Node, loc: SourceLoc = NOWHERE, attrs=()) -> Node:
    return Node(kind, tuple(children), None, loc, tuple(attrs))


def sym(name: str, loc: SourceLoc = NOWHERE) -> Node:
    return Node(K.Symbol, (), name, loc)


def lit(value, loc: SourceLoc = NOWHERE) -> Node:
    if isinstance(value, bool):
        return Node(K.BoolLit, (), value, loc)
    if isinstance(value, int):
        return Node(K.IntLit, (), value, loc)
    if isinstance(value, float):
        return Node(K.FloatLit, (), value, loc)
    if isinstance(value, str):
        return Node(K.StringLit, (), value, loc)
    raise TypeError(f"no literal kind for {value!r}")


EMPTY = Node(K.Empty)


def line_info(loc: SourceLoc) -> Node:
    return Node(K.LineInfo, (), None, loc)


def block(stmts, loc: SourceLoc = NOWHERE) -> Node:
    """Build a Block, giving every statement a synthetic LineInfo if it lacks one."""
    items: list[Node] = []
    for s in stmts:
        if s.kind is K.LineInfo:
            items.append(s)
            continue
        if not items or items[-1].kind is not K.LineInfo:
            items.append(line_info(loc))
        items.append(s)
    return Node(K.Block, tuple(items), None, loc)


def statements(blk: Node) -> list[Node]:
    """Statements of a Block without their LineInfo markers."""
    return [c for c in blk.children if c.kind is not K.LineInfo]


def pairs(blk: Node) -> list[tuple[Node, Node]]:
    """(LineInfo, statement) pairs of a Block."""
    out = []
    pending = line_info(blk.loc)
    for c in blk.children:
        if c.kind is K.LineInfo:
            pending = c
        else:
            out.append((pending, c))
    return out


def node_equal(a: Node, b: Node, ignore_lines: bool = False) -> bool:
    if a.kind is not b.kind or a.attrs != b.attrs:
        return False
    if a.kind in LITERAL_KINDS:
        return type(a.atom) is type(b.atom) and a.atom == b.atom and (
            ignore_lines or a.loc == b.loc)
    if not ignore_lines and a.loc != b.loc:
        return False
    ca, cb = a.children, b.children
    if ignore_lines:
        ca = [c for c in ca if c.kind is not K.LineInfo]
        cb = [c for c in cb if c.kind is not K.LineInfo]
    if len(ca) != len(cb):
        return False
    return all(node_equal(x, y, ignore_lines) for x, y in zip(ca, cb))


def walk(node: Node, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], Node]]:
    """Pre-order traversal yielding (path, node)."""
    yield path, node
    for i, c in enumerate(node.children):
        yield from walk(c, path + (i,))


def get_path(node: Node, path) -> Node:
    for i in path:
        node = node.children[i]
    return node


def replace_paths(node: Node, mapping: dict, path: tuple[int, ...] = ()) -> Node:
    """Rebuild ``node`` with subtrees at the given paths replaced.

    ``mapping`` values are callables receiving the (already rebuilt) subtree,
    so nested replacements compose bottom-up.
    """
    if not any(p[: len(path)] == path for p in mapping):
        return node
    kids = tuple(replace_paths(c, mapping, path + (i,)) for i, c in enumerate(node.children))
    new = node if kids == node.children else node.with_children(kids)
    fn = mapping.get(path)
    return fn(new) if fn else new


def contains_kind(node: Node, kind: NodeKind) -> bool:
    return any(n.kind is kind for _, n in walk(node))


def symbols_in(node: Node) -> set[str]:
    return {n.atom for _, n in walk(node) if n.kind is K.Symbol}


def load_arity_table() -> dict:
    text = resources.files(__package__).joinpath("arity.json").read_text(encoding="utf-8")
    return json.loads(text)


def check_arity(node: Node, table: dict | None = None) -> list[str]:
    """Return arity violations found anywhere in ``node``."""
    table = table or load_arity_table()
    problems = []
    for path, n in walk(node):
        spec = table[n.kind.value]
        count = len(n.children)
        if n.kind is K.Block:
            count = len(statements(n))
        lo, hi = spec["min"], spec["max"]
        if count < lo or (hi is not None and count > hi):
            problems.append(f"{n.kind.value} at {path}: {count} children")
    return problems
