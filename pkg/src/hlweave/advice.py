"""Advice templates, fusion, aspects and the ``.asp`` file format.

An advice body is ordinary HL with a few splice holes written as macros:
``@jp(name)``, ``@jp(file)``, ``@jp(line)``, ``@jp(pointcut)``, ``@args``,
``@result``, ``@exception``, ``@original``, ``@arg_expr(i)`` and
``@transform(swap_loop)``.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .pointcut import (
    ArgMatcher, ArgRole, JoinPoint, JPKind, NamePattern, PCKind, Pointcut, exec_func, make, xpath,
)
from .syntax import K, Node, lit, parse, statements, sym, walk


class AdviceKind(enum.Enum):
    Before = "before"
    BeforeA = "before_args"
    AfterR = "after_returning"
    AfterRA = "after_returning_args"
    AfterThrowing = "after_throwing"
    AfterThrowingA = "after_throwing_args"
    After = "after"
    AfterA = "after_args"
    Around = "around"
    AppendF = "append_front"
    AppendB = "append_back"
    Nothing = "nothing"


A = AdviceKind
INSERT_KINDS = frozenset({A.Before, A.BeforeA, A.AfterR, A.AfterRA, A.AfterThrowing,
                          A.AfterThrowingA, A.After, A.AfterA})
REPLACE_KINDS = frozenset({A.Around, A.AppendF, A.AppendB})
ARGS_KINDS = frozenset({A.BeforeA, A.AfterRA, A.AfterThrowingA, A.AfterA})
BEFORE_KINDS = frozenset({A.Before, A.BeforeA})
AFTER_R_KINDS = frozenset({A.AfterR, A.AfterRA})
THROWING_KINDS = frozenset({A.AfterThrowing, A.AfterThrowingA})
AFTER_KINDS = frozenset({A.After, A.AfterA})

# hole -> kinds allowed to use it
HOLE_KINDS = {
    "@args": ARGS_KINDS,
    "@result": AFTER_R_KINDS,
    "@exception": THROWING_KINDS,
    "@original": frozenset({A.Around}),
    "@arg_expr": REPLACE_KINDS,
    "@transform": frozenset({A.Around}),
    "@jp": frozenset(AdviceKind) - {A.Nothing},
}
JP_FIELDS = ("name", "file", "line", "pointcut", "kind")
TRANSFORMS = ("swap_loop",)

# parameter the advice lambda receives, by kind
LAMBDA_PARAMS = {
    A.Before: (), A.BeforeA: ("arg",),
    A.AfterR: ("result",), A.AfterRA: ("result", "arg"),
    A.AfterThrowing: ("exception",), A.AfterThrowingA: ("exception", "arg"),
    A.After: (), A.AfterA: ("arg",),
}
HOLE_NAMES = {"@args": "arg", "@result": "result", "@exception": "exception"}


class AdviceError(Exception):
    def __init__(self, message: str, file: str = "", line: int = 0):
        self.message = message
        self.file = file
        self.line = line
        where = f"{file}:{line}: " if file else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class AdviceTemplate:
    kind: AdviceKind
    body: Node  # a Block
    file: str = ""
    line: int = 0

    def __post_init__(self):
        validate(self)

    def holes(self) -> list[Node]:
        return [n for _, n in walk(self.body) if is_hole(n)]

    def uses(self, hole: str) -> bool:
        return any(h.children[0].atom == hole for h in self.holes())


def is_hole(node: Node) -> bool:
    return node.kind is K.MacroCall and node.children[0].atom in HOLE_KINDS


def validate(t: AdviceTemplate) -> None:
    originals = 0
    for h in t.holes():
        name = h.children[0].atom
        line = h.loc.line or t.line
        if t.kind not in HOLE_KINDS[name]:
            raise AdviceError(f"{name} cannot be used in {t.kind.value} advice", t.file, line)
        if name == "@jp" and h.children[1].atom not in JP_FIELDS:
            raise AdviceError(f"unknown join-point field {h.children[1].atom!r}", t.file, line)
        if name == "@transform" and h.children[1].atom not in TRANSFORMS:
            raise AdviceError(f"unknown transform {h.children[1].atom!r}", t.file, line)
        if name == "@arg_expr" and h.children[1].atom < 1:
            raise AdviceError("@arg_expr indices start at 1", t.file, line)
        originals += name in ("@original", "@transform")
    if originals > 1:
        raise AdviceError("@original may appear at most once", t.file, t.line)
    if t.kind is A.Nothing and statements(t.body):
        raise AdviceError("nothing advice must have an empty body", t.file, t.line)


@dataclass(frozen=True)
class FusedAdvice:
    templates: tuple[AdviceTemplate, ...]

    def __post_init__(self):
        check_fusable(self.templates)

    def __and__(self, other: "FusedAdvice") -> "FusedAdvice":
        return fuse(self, other)

    def kinds(self) -> list[AdviceKind]:
        return [t.kind for t in self.templates]


def fusion_conflict(templates) -> str | None:
    kinds = [t.kind for t in templates]
    for group, label in ((frozenset({A.Around}), "around"), (AFTER_R_KINDS, "after_returning"),
                         (THROWING_KINDS, "after_throwing"), (AFTER_KINDS, "after")):
        if sum(k in group for k in kinds) > 1:
            return f"at most one {label} advice can be fused"
    return None


def check_fusable(templates) -> None:
    problem = fusion_conflict(templates)
    if problem:
        t = templates[-1]
        raise AdviceError(problem, t.file, t.line)


def fuse(a: FusedAdvice, b: FusedAdvice) -> FusedAdvice:
    return FusedAdvice(a.templates + b.templates)


def single(template: AdviceTemplate) -> FusedAdvice:
    return FusedAdvice((template,))


@dataclass(frozen=True)
class Aspect:
    name: str
    pointcut: Pointcut
    advice: FusedAdvice
    file: str = ""
    line: int = 0


# -- instantiation -------------------------------------------------------
def swap_loop(node: Node) -> Node:
    """Reverse the iterator clauses of a For node.

    A single-clause loop whose body is exactly one nested single-clause loop
    has the two loop heads exchanged instead.
    """
    if node.kind is not K.For:
        raise AdviceError(f"swap_loop expects a for loop, got {node.kind.value}")
    *iters, body = node.children
    if len(iters) > 1:
        return node.with_children(tuple(reversed(iters)) + (body,))
    inner = statements(body)
    if len(inner) == 1 and inner[0].kind is K.For and len(inner[0].children) == 2:
        nested = inner[0]
        swapped = nested.with_children((iters[0], nested.children[1]))
        kids = tuple(swapped if c is nested else c for c in body.children)
        return node.with_children((nested.children[0], body.with_children(kids)))
    return node


def jp_field(jp: JoinPoint, field: str) -> Node:
    if field == "name":
        if jp.kind is JPKind.JPExecFunc:
            return sym(jp.name)
        return lit(jp.name)
    if field == "file":
        return lit(jp.loc.file)
    if field == "line":
        return lit(jp.loc.line)
    if field == "pointcut":
        return lit(jp.pointcut_description)
    return lit(jp.kind.value)


def instantiate(template: AdviceTemplate, jp: JoinPoint, original: Node | None = None,
                arg_names: list[Node] | None = None) -> Node:
    """Substitute the holes of ``template`` for one join point.

    ``original`` is what ``@original`` splices (defaults to ``jp.original``);
    ``arg_names`` replaces ``@arg_expr(i)`` when arguments were pre-evaluated.
    Returns a fresh Block; inputs are never modified.
    """
    core = jp.original if original is None else original
    args = list(jp.arg_exprs) if arg_names is None else list(arg_names)

    def subst(node: Node) -> Node:
        if is_hole(node):
            name = node.children[0].atom
            if name in HOLE_NAMES:
                return sym(HOLE_NAMES[name], node.loc)
            if name == "@jp":
                return jp_field(jp, node.children[1].atom)
            if name == "@original":
                return core
            if name == "@transform":
                return swap_loop(core)
            index = node.children[1].atom
            if index > len(args):
                raise AdviceError(f"@arg_expr({index}) out of range: join point has "
                                  f"{len(args)} arguments", template.file, node.loc.line)
            return args[index - 1]
        if not node.children:
            return node
        return node.with_children(subst(c) for c in node.children)

    return subst(template.body)


# -- aspect file parsing -------------------------------------------------
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*!?")
_MATCHER = re.compile(r"(KVA|KA|VA|A)([A-Za-z_][A-Za-z0-9_]*)$")

PC_FUNCS = {
    "call": PCKind.CallFunc, "assign": PCKind.Assign, "assign_ary": PCKind.AssignAry,
    "assign_st": PCKind.AssignSt, "ref_ary": PCKind.RefAry, "ref_st": PCKind.RefSt,
    "attr": PCKind.Attr, "module": PCKind.Module, "struct": PCKind.Struct,
}


class _Scanner:
    def __init__(self, text: str, filename: str):
        self.text = text
        self.file = filename
        self.pos = 0
        self.line = 1

    def error(self, message: str) -> AdviceError:
        return AdviceError(message, self.file, self.line)

    def advance(self, n: int) -> str:
        chunk = self.text[self.pos:self.pos + n]
        self.line += chunk.count("\n")
        self.pos += n
        return chunk

    def skip(self) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in " \t\r\n":
                self.advance(1)
            elif ch == "#":
                end = self.text.find("\n", self.pos)
                self.advance((end if end >= 0 else len(self.text)) - self.pos)
            else:
                break

    def at_end(self) -> bool:
        self.skip()
        return self.pos >= len(self.text)

    def peek(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos)

    def expect(self, s: str) -> None:
        if not self.peek(s):
            found = self.text[self.pos:self.pos + 12].split("\n")[0] or "end of file"
            raise self.error(f"expected {s!r}, found {found!r}")
        self.advance(len(s))

    def ident(self) -> str:
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise self.error("expected an identifier")
        return self.advance(m.end() - self.pos)

    def string(self) -> str:
        self.skip()
        if not self.text.startswith('"', self.pos):
            raise self.error("expected a string")
        out = []
        self.advance(1)
        while True:
            if self.pos >= len(self.text):
                raise self.error("unterminated string")
            ch = self.advance(1)
            if ch == '"':
                return "".join(out)
            if ch == "\\":
                out.append(self.advance(1))
            else:
                out.append(ch)

    def body(self) -> tuple[str, int]:
        """Raw text between braces; HL has no braces outside strings and comments."""
        self.expect("{")
        start, line = self.pos, self.line
        i = self.pos
        text = self.text
        while i < len(text):
            ch = text[i]
            if ch == '"':
                i += 1
                while i < len(text) and text[i] != '"':
                    i += 2 if text[i] == "\\" else 1
            elif text.startswith("#=", i):
                end = text.find("=#", i + 2)
                i = len(text) if end < 0 else end + 1
            elif ch == "#":
                end = text.find("\n", i)
                i = len(text) if end < 0 else end - 1
            elif ch == "}":
                raw = text[start:i]
                self.advance(i + 1 - self.pos)
                return raw, line
            i += 1
        raise AdviceError("unterminated advice body", self.file, line)


def _pattern(sc: _Scanner) -> NamePattern:
    if sc.peek(":"):
        sc.advance(1)
        return NamePattern.exact(sc.ident())
    if sc.peek('"'):
        return NamePattern.substring(sc.string())
    raise sc.error("expected :name or \"substring\" pattern")


def _matcher(sc: _Scanner) -> ArgMatcher:
    word = sc.ident()
    m = _MATCHER.match(word)
    if not m:
        raise sc.error(f"bad argument matcher {word!r}")
    role = {"A": ArgRole.Positional, "VA": ArgRole.Variadic, "KA": ArgRole.Keyword,
            "KVA": ArgRole.VariadicKeyword}[m.group(1)]
    symbol = None
    if sc.peek("("):
        sc.advance(1)
        sc.expect(":")
        symbol = sc.ident()
        sc.expect(")")
    try:
        return ArgMatcher(role, m.group(2), symbol)
    except ValueError as exc:
        raise sc.error(str(exc)) from None


def _pointcut(sc: _Scanner) -> Pointcut:
    name = sc.ident()
    sc.expect("(")
    if name == "xpath":
        query = sc.string()
        while sc.peek("*"):
            sc.advance(1)
            query += sc.string()
        sc.expect(")")
        return xpath(query)
    if name == "exec_func":
        pattern = _pattern(sc)
        matchers = None
        if sc.peek(","):
            sc.advance(1)
            sc.expect("[")
            matchers = []
            while not sc.peek("]"):
                matchers.append(_matcher(sc))
                if sc.peek(","):
                    sc.advance(1)
                elif not sc.peek("]"):
                    raise sc.error("expected ',' or ']' in matcher list")
            sc.expect("]")
        sc.expect(")")
        return exec_func(pattern, matchers)
    if name not in PC_FUNCS:
        raise sc.error(f"unknown pointcut {name!r}")
    pattern = _pattern(sc)
    sc.expect(")")
    return make(PC_FUNCS[name], pattern)


def parse_pointcut(text: str, filename: str = "<pointcut>") -> Pointcut:
    sc = _Scanner(text, filename)
    pc = _pointcut(sc)
    if not sc.at_end():
        raise sc.error("trailing text after pointcut")
    return pc


def parse_advice(kind_name: str, source: str, filename: str = "<advice>", line: int = 1) -> AdviceTemplate:
    try:
        kind = AdviceKind(kind_name)
    except ValueError:
        raise AdviceError(f"unknown advice kind {kind_name!r}", filename, line) from None
    body = parse(source, filename, holes=True, first_line=line)
    return AdviceTemplate(kind, body, filename, line)


def parse_aspect_file(text: str, filename: str = "<aspects>") -> list[Aspect]:
    sc = _Scanner(text, filename)
    aspects = []
    while not sc.at_end():
        head_line = sc.line
        if sc.ident() != "aspect":
            raise AdviceError("expected 'aspect'", filename, head_line)
        name = sc.string()
        sc.expect("{")
        sc.expect("pointcut")
        sc.expect(":")
        pc = _pointcut(sc)
        templates = []
        while not sc.peek("}"):
            sc.expect("advice")
            sc.expect(":")
            kind_line = sc.line
            kind_name = sc.ident()
            try:
                AdviceKind(kind_name)
            except ValueError:
                raise AdviceError(f"unknown advice kind {kind_name!r}", filename, kind_line) from None
            source, line = sc.body()
            templates.append(parse_advice(kind_name, source, filename, line))
        sc.expect("}")
        if not templates:
            raise AdviceError(f"aspect {name!r} has no advice", filename, head_line)
        aspects.append(Aspect(name, pc, FusedAdvice(tuple(templates)), filename, head_line))
    return aspects
