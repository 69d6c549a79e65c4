"""Pointcuts, join points and the AST crawler that connects them.

Internal pointcuts (``exec_func``, ``module``, ``struct``) select definition
sites, so every way of reaching the definition runs the advice. External
pointcuts (``call``, ``assign*``, ``ref*``) select use sites, so only the
syntactic occurrence that matched is affected.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .syntax import K, Node, SourceLoc, statements, walk

Path = tuple[int, ...]


class PCKind(enum.Enum):
    ExecFunc = "ExecFunc"
    Module = "Module"
    Struct = "Struct"
    CallFunc = "CallFunc"
    Assign = "Assign"
    AssignAry = "AssignAry"
    AssignSt = "AssignSt"
    RefAry = "RefAry"
    RefSt = "RefSt"
    Attr = "Attr"
    XPath = "XPath"


class JPKind(enum.Enum):
    JPExecFunc = "JPExecFunc"
    JPModule = "JPModule"
    JPStruct = "JPStruct"
    JPCallFunc = "JPCallFunc"
    JPAssign = "JPAssign"
    JPRef = "JPRef"
    JPDefault = "JPDefault"


class MatchMode(enum.Enum):
    Exact = "Exact"
    Substring = "Substring"


class ArgRole(enum.Enum):
    Positional = "A"
    Variadic = "VA"
    Keyword = "KA"
    VariadicKeyword = "KVA"


@dataclass(frozen=True)
class NamePattern:
    mode: MatchMode
    text: str

    @classmethod
    def exact(cls, text: str) -> "NamePattern":
        return cls(MatchMode.Exact, text)

    @classmethod
    def substring(cls, text: str) -> "NamePattern":
        return cls(MatchMode.Substring, text)

    def describe(self) -> str:
        if self.mode is MatchMode.Exact:
            return ":" + self.text
        return '"' + self.text + '"'


@dataclass(frozen=True)
class ArgMatcher:
    role: ArgRole
    type_name: str = "Any"
    symbol: str | None = None

    def __post_init__(self):
        if self.role is ArgRole.Keyword and not self.symbol:
            raise ValueError("keyword argument matchers require a symbol")
        if self.role is ArgRole.VariadicKeyword and self.type_name != "Any":
            raise ValueError("variadic keyword matchers only accept Any")

    def accepts(self, param: Node) -> bool:
        name, type_, _ = param.children
        declared = type_.atom if type_.kind is K.Symbol else "Any"
        if self.type_name != "Any" and self.type_name != declared:
            return False
        return self.symbol is None or self.symbol == name.atom

    def describe(self) -> str:
        head = f"{self.role.value}{self.type_name}"
        return f"{head}(:{self.symbol})" if self.symbol else head


PC_NAMES = {
    PCKind.ExecFunc: "PCExecFunc", PCKind.Module: "PCModule", PCKind.Struct: "PCStruct",
    PCKind.CallFunc: "PCCallFunc", PCKind.Assign: "PCAssign", PCKind.AssignAry: "PCAssignAry",
    PCKind.AssignSt: "PCAssignSt", PCKind.RefAry: "PCRefAry", PCKind.RefSt: "PCRefSt",
    PCKind.Attr: "PCAttr", PCKind.XPath: "PCXPath",
}


@dataclass(frozen=True)
class Pointcut:
    kind: PCKind
    pattern: NamePattern = NamePattern(MatchMode.Substring, "")
    arg_matchers: tuple[ArgMatcher, ...] | None = None
    xpath: str | None = None

    def __post_init__(self):
        if self.arg_matchers is not None and self.kind is not PCKind.ExecFunc:
            raise ValueError("argument matchers are only supported by exec_func pointcuts")
        if self.kind is PCKind.XPath and self.xpath is None:
            raise ValueError("xpath pointcut needs a query")

    @property
    def description(self) -> str:
        head = PC_NAMES[self.kind]
        if self.kind is PCKind.XPath:
            return f'{head}("{self.xpath}")'
        text = self.pattern.describe()
        if self.arg_matchers is not None:
            text += ", [" + ", ".join(m.describe() for m in self.arg_matchers) + "]"
        return f"{head}({text})"


def exec_func(pattern: NamePattern | str, matchers=None) -> Pointcut:
    return Pointcut(PCKind.ExecFunc, _pattern(pattern),
                    tuple(matchers) if matchers is not None else None)


def _pattern(p) -> NamePattern:
    return p if isinstance(p, NamePattern) else NamePattern.exact(p)


def make(kind: PCKind, pattern: NamePattern | str = "") -> Pointcut:
    return Pointcut(kind, _pattern(pattern))


def xpath(query: str) -> Pointcut:
    return Pointcut(PCKind.XPath, NamePattern.substring(""), None, query)


@dataclass(frozen=True)
class JoinPoint:
    kind: JPKind
    name: str
    original: Node
    pointcut_description: str
    arg_exprs: tuple[Node, ...] = ()
    kw_exprs: tuple[tuple[str, Node], ...] = ()
    loc: SourceLoc = field(default_factory=SourceLoc)

    @property
    def kwargs(self) -> dict[str, Node]:
        return dict(self.kw_exprs)


def match_name(pattern: NamePattern, candidate: str) -> bool:
    if pattern.mode is MatchMode.Exact:
        return candidate == pattern.text
    return pattern.text in candidate


def match_args(matchers, params: Node) -> bool:
    """Check a FunctionDef parameter list against argument matchers.

    Every parameter must be claimed by exactly one matcher and vice versa.
    """
    plist = list(params.children)
    pos = [p for p in plist if p.kind is K.Param]
    var = [p for p in plist if p.kind is K.VarParam]
    kws = [p for p in plist if p.kind is K.KwParam]
    kwvar = [p for p in plist if p.kind is K.KwVarParam]
    m_pos = [m for m in matchers if m.role is ArgRole.Positional]
    m_var = [m for m in matchers if m.role is ArgRole.Variadic]
    m_kw = [m for m in matchers if m.role is ArgRole.Keyword]
    m_kwvar = [m for m in matchers if m.role is ArgRole.VariadicKeyword]
    if len(m_pos) != len(pos) or len(m_var) != len(var) or len(m_kwvar) != len(kwvar):
        return False
    if len(m_kw) != len(kws):
        return False
    if not all(m.accepts(p) for m, p in zip(m_pos, pos)):
        return False
    if not all(m.accepts(p) for m, p in zip(m_var, var)):
        return False
    if not all(m.accepts(p) for m, p in zip(m_kwvar, kwvar)):
        return False
    by_name = {p.children[0].atom: p for p in kws}
    for m in m_kw:
        p = by_name.pop(m.symbol, None)
        if p is None or not m.accepts(p):
            return False
    return not by_name


def relaxed(matchers) -> tuple[ArgMatcher, ...]:
    """The same matchers with every type widened to Any."""
    return tuple(ArgMatcher(m.role, "Any", m.symbol) for m in matchers)


# -- JP construction -----------------------------------------------------
def callee_name(callee: Node) -> str:
    if callee.kind is K.Symbol:
        return callee.atom
    if callee.kind is K.FieldRef:
        return callee.children[1].atom
    return ""


def root_name(node: Node) -> str:
    while node.kind in (K.IndexRef, K.FieldRef, K.Call):
        node = node.children[0]
    return node.atom if node.kind is K.Symbol else ""


ASSIGN_KINDS = frozenset({K.Assign, K.OpAssign, K.IndexAssign, K.FieldAssign})


def node_name(node: Node) -> str:
    k = node.kind
    if k in (K.FunctionDef, K.ShortFuncDef, K.Module, K.StructDef):
        return node.children[0].atom
    if k is K.Call:
        return callee_name(node.children[0])
    if k in (K.Assign, K.OpAssign):
        return root_name(node.children[0])
    if k in (K.IndexAssign, K.FieldAssign, K.IndexRef, K.FieldRef):
        return root_name(node.children[0])
    if k is K.MacroCall:
        return node.children[0].atom
    return ""


def argument_slots(node: Node) -> tuple[tuple[Node, ...], tuple[tuple[str, Node], ...]]:
    """Argument expressions of a JP node: positional tuple and keyword pairs."""
    k = node.kind
    if k is K.Call:
        pos = tuple(c for c in node.children[1:] if c.kind is not K.Bind)
        kws = tuple((c.children[0].atom, c.children[1]) for c in node.children[1:] if c.kind is K.Bind)
        return pos, kws
    if k in (K.AndAnd, K.OrOr):
        return tuple(node.children), ()
    if k in ASSIGN_KINDS:
        return (node.children[-1],), ()
    if k is K.IndexRef:
        return (node.children[1],), ()
    if k is K.FunctionDef:
        params = node.children[1].children
        pos = tuple(p.children[0] for p in params if p.kind in (K.Param, K.VarParam))
        kws = tuple((p.children[0].atom, p.children[0]) for p in params
                    if p.kind in (K.KwParam, K.KwVarParam))
        return pos, kws
    return (), ()


def jp_kind_for(node: Node) -> JPKind:
    k = node.kind
    if k is K.FunctionDef:
        return JPKind.JPExecFunc
    if k is K.Module:
        return JPKind.JPModule
    if k is K.StructDef:
        return JPKind.JPStruct
    if k is K.Call:
        return JPKind.JPCallFunc
    if k in ASSIGN_KINDS:
        return JPKind.JPAssign
    if k in (K.IndexRef, K.FieldRef):
        return JPKind.JPRef
    return JPKind.JPDefault


def attr_jp_kind(node: Node) -> JPKind:
    if node.kind is K.Call:
        return JPKind.JPCallFunc
    if node.kind in ASSIGN_KINDS:
        return JPKind.JPAssign
    return JPKind.JPDefault


def make_jp(node: Node, kind: JPKind, pc: Pointcut, name: str | None = None) -> JoinPoint:
    pos, kws = argument_slots(node)
    return JoinPoint(kind, node_name(node) if name is None else name, node,
                     pc.description, pos, kws, node.loc)


# -- scanning ------------------------------------------------------------
def _candidate(pc: Pointcut, node: Node) -> str | None:
    """Name to test against the pattern, or None if the node kind never matches."""
    k, pk = node.kind, pc.kind
    if pk is PCKind.ExecFunc and k is K.FunctionDef:
        return node.children[0].atom
    if pk is PCKind.Module and k is K.Module:
        return node.children[0].atom
    if pk is PCKind.Struct and k is K.StructDef:
        return node.children[0].atom
    if pk is PCKind.CallFunc and k is K.Call:
        return callee_name(node.children[0])
    if pk is PCKind.Assign and k in (K.Assign, K.OpAssign) and node.children[0].kind is K.Symbol:
        return node.children[0].atom
    if pk is PCKind.AssignAry and (k is K.IndexAssign or (
            k is K.OpAssign and node.children[0].kind is K.IndexRef)):
        return root_name(node.children[0])
    if pk is PCKind.AssignSt and (k is K.FieldAssign or (
            k is K.OpAssign and node.children[0].kind is K.FieldRef)):
        return root_name(node.children[0])
    if pk is PCKind.RefAry and k is K.IndexRef:
        return root_name(node.children[0])
    if pk is PCKind.RefSt and k is K.FieldRef:
        return root_name(node.children[0])
    return None


KIND_OF = {
    PCKind.ExecFunc: JPKind.JPExecFunc, PCKind.Module: JPKind.JPModule,
    PCKind.Struct: JPKind.JPStruct, PCKind.CallFunc: JPKind.JPCallFunc,
    PCKind.Assign: JPKind.JPAssign, PCKind.AssignAry: JPKind.JPAssign,
    PCKind.AssignSt: JPKind.JPAssign, PCKind.RefAry: JPKind.JPRef, PCKind.RefSt: JPKind.JPRef,
}


def scan(pc: Pointcut, program: Node) -> list[tuple[Path, JoinPoint]]:
    """Every site of ``program`` selected by ``pc``, in document order."""
    if pc.kind is PCKind.XPath:
        from . import pcxpath
        return [(path, make_jp(node, jp_kind_for(node), pc))
                for path, node in pcxpath.match(pc.xpath, program)]
    found = []
    for path, node in walk(program):
        if node.kind in (K.LineInfo, K.Aj):
            continue
        if pc.kind is PCKind.Attr:
            hits = [a for a in node.attrs if match_name(pc.pattern, a)]
            if hits:
                name = node_name(node) or hits[0]
                found.append((path, make_jp(node, attr_jp_kind(node), pc, name)))
            continue
        cand = _candidate(pc, node)
        if cand is None or not match_name(pc.pattern, cand):
            continue
        if pc.arg_matchers is not None and not match_args(pc.arg_matchers, node.children[1]):
            continue
        found.append((path, make_jp(node, KIND_OF[pc.kind], pc)))
    return found


def near_misses(pc: Pointcut, program: Node) -> list[tuple[Path, Node]]:
    """ExecFunc sites whose name matched but whose argument types did not.

    A site counts only if widening every matcher type to Any would match it.
    """
    if pc.kind is not PCKind.ExecFunc or pc.arg_matchers is None:
        return []
    loose = relaxed(pc.arg_matchers)
    out = []
    for path, node in walk(program):
        if node.kind is not K.FunctionDef or not match_name(pc.pattern, node.children[0].atom):
            continue
        params = node.children[1]
        if not match_args(pc.arg_matchers, params) and match_args(loose, params):
            out.append((path, node))
    return out


def definition_members(node: Node) -> list[Node]:
    """Statements inside a Module or StructDef body."""
    return statements(node.children[-1])
