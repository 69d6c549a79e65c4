"""The pre-weave, weave and emit stages.

``weave`` only marks matched sites by wrapping them in ``Aj`` nodes; ``emit``
turns every ``Aj`` node back into plain HL. For one join point the emitted
layers are, from the outside in: try/catch/finally for after and
after-throwing advice, a ``let`` that evaluates the arguments once, the
before advice, the (possibly replaced) core, and return-value capture.
"""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from pathlib import Path

from .advice import (
    A, AFTER_KINDS, AFTER_R_KINDS, ARGS_KINDS, BEFORE_KINDS, LAMBDA_PARAMS, THROWING_KINDS,
    AdviceTemplate, Aspect, fusion_conflict, instantiate,
)
from .pointcut import JoinPoint, JPKind, PCKind, match_name, scan
from .syntax import (
    EMPTY, K, LITERAL_KINDS, Node, SourceLoc, line_info, lit, parse, replace_paths, statements,
    sym, symbols_in, walk,
)


class WeaveError(Exception):
    def __init__(self, message: str, loc: SourceLoc | None = None):
        self.message = message
        self.loc = loc
        where = f"{loc.file}:{loc.line}: " if loc and loc.file else ""
        super().__init__(where + message)


class PreWeaveError(WeaveError):
    pass


class EmitError(WeaveError):
    pass


class ShortCircuitWarning(UserWarning):
    """Argument pre-evaluation defeated the short-circuit of ``&&``/``||``."""


# -- loaders -------------------------------------------------------------
class FileLoader:
    """Resolve include paths against the including file's directory."""

    def resolve(self, target: str, including: str) -> str:
        base = os.path.dirname(including)
        return os.path.normpath(os.path.join(base, target))

    def read(self, path: str) -> str:
        try:
            return Path(path).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise PreWeaveError(f"included file not found: {path}") from None


class MemoryLoader(FileLoader):
    """A loader over an in-memory {path: text} mapping, mainly for tests."""

    def __init__(self, files: dict[str, str]):
        self.files = {os.path.normpath(k): v for k, v in files.items()}

    def read(self, path: str) -> str:
        if path not in self.files:
            raise PreWeaveError(f"included file not found: {path}")
        return self.files[path]


# -- pre-weave -----------------------------------------------------------
def pre_weave(program: Node, loader: FileLoader | None = None, filename: str | None = None) -> Node:
    """Inline literal includes and fold ``@attr`` annotations into node attrs."""
    loader = loader or FileLoader()
    start = filename if filename is not None else _first_file(program)
    return _pre(program, loader, [os.path.normpath(start)] if start else [])


def _first_file(node: Node) -> str:
    for _, n in walk(node):
        if n.loc.file:
            return n.loc.file
    return ""


def _pre(node: Node, loader: FileLoader, stack: list[str]) -> Node:
    if node.kind is K.AttrAnnot:
        label, inner = node.children
        inner = _pre(inner, loader, stack)
        return Node(inner.kind, inner.children, inner.atom, inner.loc, inner.attrs + (label.atom,))
    if node.kind is K.Include:
        raise PreWeaveError("include is only supported as a statement", node.loc)
    if node.kind is K.Block:
        items: list[Node] = []
        for c in node.children:
            if c.kind is K.Include:
                items.extend(_include(c, loader, stack))
            else:
                items.append(_pre(c, loader, stack))
        return node.with_children(items)
    if not node.children:
        return node
    kids = tuple(_pre(c, loader, stack) for c in node.children)
    return node if kids == node.children else node.with_children(kids)


def _include(node: Node, loader: FileLoader, stack: list[str]) -> list[Node]:
    arg = node.children[0]
    if arg.kind is not K.StringLit:
        raise PreWeaveError("include needs a string literal argument", node.loc)
    including = stack[-1] if stack else node.loc.file
    path = loader.resolve(arg.atom, including)
    if path in stack:
        chain = " -> ".join(stack + [path])
        raise PreWeaveError(f"include cycle: {chain}", node.loc)
    try:
        text = loader.read(path)
    except PreWeaveError as exc:
        raise PreWeaveError(exc.message, node.loc) from None
    included = parse(text, path)
    return list(_pre(included, loader, stack + [path]).children)


# -- weave ---------------------------------------------------------------
@dataclass(frozen=True)
class AjEntry:
    aspect: Aspect
    jp: JoinPoint


@dataclass(frozen=True)
class AjPayload:
    """What an Aj node carries: the join point seen by each matching aspect."""

    entries: tuple[AjEntry, ...]

    @property
    def jp(self) -> JoinPoint:
        return self.entries[0].jp


def make_aj(original: Node, entries) -> Node:
    return Node(K.Aj, (original,), None, original.loc, (), AjPayload(tuple(entries)))


def weave(program: Node, aspects: list[Aspect]) -> Node:
    """Wrap every matched site in an Aj node, accumulating aspects in order."""
    sites: dict[tuple, list[AjEntry]] = {}
    for aspect in aspects:
        for path, jp in scan(aspect.pointcut, program):
            sites.setdefault(path, []).append(AjEntry(aspect, jp))
    mapping = {path: (lambda n, e=entries: make_aj(n, e)) for path, entries in sites.items()}
    return replace_paths(program, mapping)


def weave_chain(program: Node, passes: list[list[Aspect]]) -> Node:
    for aspects in passes:
        program = emit(weave(program, aspects))
    return program


# -- emit ----------------------------------------------------------------
@dataclass
class Layered:
    """Emitted statements for one join point; the last one yields the value."""

    stmts: list[Node]
    hoistable: bool = False

    def value_stmts(self) -> list[Node]:
        return [s for s in self.stmts if s.kind is not K.LineInfo]


def _block(stmts, loc: SourceLoc) -> Node:
    items: list[Node] = []
    for s in stmts:
        if s.kind is not K.LineInfo and (not items or items[-1].kind is not K.LineInfo):
            items.append(line_info(s.loc if s.loc.file else loc))
        items.append(s)
    return Node(K.Block, tuple(items), None, loc)


def _as_expr(stmts: list[Node], loc: SourceLoc) -> Node:
    real = [s for s in stmts if s.kind is not K.LineInfo]
    if len(real) == 1:
        return real[0]
    return _block(stmts, loc)


def _lambda(params: tuple[str, ...], body: Node, loc: SourceLoc) -> Node:
    plist = Node(K.ParamList, tuple(Node(K.Param, (sym(p, loc), EMPTY, EMPTY), None, loc)
                                    for p in params), None, loc)
    stmts = statements(body)
    inner = stmts[0] if len(stmts) == 1 else Node(K.Block, body.children, None, loc)
    if not stmts:
        inner = sym("nothing", loc)
    return Node(K.Lambda, (plist, inner), None, loc)


def _call(callee: Node, args, loc: SourceLoc) -> Node:
    return Node(K.Call, (callee, *args), None, loc)


def _fresh(base: str, taken: set[str]) -> str:
    if base not in taken:
        taken.add(base)
        return base
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    name = f"{base}_{k}"
    taken.add(name)
    return name


UNCONDITIONAL = {
    K.Call: None, K.ArrayLit: None, K.TupleLit: None, K.MapLit: None, K.Range: None,
    K.StringInterp: None, K.IndexRef: None, K.FieldRef: None, K.IndexAssign: None,
    K.FieldAssign: None, K.Return: None, K.Throw: None, K.Bind: {1}, K.Assign: {1},
    K.OpAssign: {2}, K.AndAnd: {0}, K.OrOr: {0}, K.If: {0},
}


def _pure(node: Node) -> bool:
    return node.kind in LITERAL_KINDS or node.kind in (K.Lambda, K.Empty)


def _arg_slots(node: Node) -> list[tuple[int, str | None]]:
    """Child indices holding the arguments of a JP node (keyword name or None)."""
    k = node.kind
    if k is K.Call:
        return [(i, None) for i in range(1, len(node.children)) if node.children[i].kind is not K.Bind] + [
            (i, node.children[i].children[0].atom) for i in range(1, len(node.children))
            if node.children[i].kind is K.Bind]
    if k in (K.AndAnd, K.OrOr):
        return [(0, None), (1, None)]
    if k in (K.Assign, K.OpAssign, K.IndexAssign, K.FieldAssign):
        return [(len(node.children) - 1, None)]
    if k is K.IndexRef:
        return [(1, None)]
    return []


class Emitter:
    def __init__(self):
        self.warnings: list[str] = []

    # statement-level traversal
    def program(self, node: Node) -> Node:
        if node.kind is K.Block:
            return self.block(node)
        stmts = self.stmt(node)
        real = [s for s in stmts if s.kind is not K.LineInfo]
        return real[0] if len(real) == 1 else _block(stmts, node.loc)

    def block(self, blk: Node) -> Node:
        items: list[Node] = []
        for c in blk.children:
            if c.kind is K.LineInfo:
                items.append(c)
            else:
                items.extend(self.stmt(c))
        return Node(blk.kind, tuple(items), blk.atom, blk.loc, blk.attrs)

    def stmt(self, node: Node) -> list[Node]:
        if node.kind is K.Aj:
            return self.elaborate(node).stmts
        hoisted: list[Node] = []
        new = self.rebuild(node, hoisted, True)
        return hoisted + [new]

    def rebuild(self, node: Node, hoisted: list[Node] | None, ok: bool) -> Node:
        if node.kind is K.Aj:
            lay = self.elaborate(node)
            if ok and hoisted is not None and lay.hoistable:
                hoisted.extend(lay.stmts[:-1])
                return lay.stmts[-1]
            return _as_expr(lay.stmts, node.loc)
        if node.kind is K.Block:
            return self.block(node)
        if not node.children:
            return node
        allowed = UNCONDITIONAL.get(node.kind, set()) if node.kind in UNCONDITIONAL else set()
        kids = []
        prefix_pure = True
        for i, c in enumerate(node.children):
            child_ok = ok and prefix_pure and (allowed is None or i in allowed)
            kids.append(self.rebuild(c, hoisted, child_ok))
            prefix_pure = prefix_pure and _pure(c)
        kids_t = tuple(kids)
        return node if kids_t == node.children else node.with_children(kids_t)

    # join-point elaboration
    def elaborate(self, aj: Node) -> Layered:
        payload: AjPayload = aj.meta
        if payload is None or not payload.entries:
            raise EmitError("join-point node without advice", aj.loc)
        original = aj.children[0]
        entries = list(payload.entries)
        original = self.strip_attrs(original, entries)
        jp = entries[0].jp
        if jp.kind in (JPKind.JPModule, JPKind.JPStruct):
            return self.definition(original, entries)
        if jp.kind is JPKind.JPExecFunc:
            return self.function(original, entries)
        core = self.rebuild(original, None, False)
        return self.expression(core, entries)

    def strip_attrs(self, node: Node, entries: list[AjEntry]) -> Node:
        used = {a for e in entries if e.aspect.pointcut.kind is PCKind.Attr
                for a in node.attrs if match_name(e.aspect.pointcut.pattern, a)}
        if not used:
            return node
        keep = tuple(a for a in node.attrs if a not in used)
        return Node(node.kind, node.children, node.atom, node.loc, keep)

    @staticmethod
    def groups(entries: list[AjEntry]) -> list[list[tuple[AdviceTemplate, AjEntry]]]:
        """Split all templates at a site into fusable groups, in aspect order."""
        out: list[list] = [[]]
        for e in entries:
            for t in e.aspect.advice.templates:
                if t.kind is A.Nothing:
                    continue
                if fusion_conflict([x for x, _ in out[-1]] + [t]):
                    out.append([])
                out[-1].append((t, e))
        return [g for g in out if g] or [[]]

    @staticmethod
    def provenance(entry: AjEntry) -> Node:
        a = entry.aspect
        return line_info(SourceLoc(a.file, a.line, entry.jp.pointcut_description))

    def invoke(self, t: AdviceTemplate, e: AjEntry, call_args, arg_names, loc) -> list[Node]:
        body = instantiate(t, e.jp, None, arg_names)
        fn = _lambda(LAMBDA_PARAMS[t.kind], body, loc)
        return [self.provenance(e), _call(fn, call_args, loc)]

    def splice(self, t: AdviceTemplate, e: AjEntry, core: Node, arg_names) -> list[Node]:
        body = instantiate(t, e.jp, core, arg_names)
        return [self.provenance(e)] + list(body.children)

    def layer(self, group, core: Node, loc: SourceLoc, record, arg_names, taken: set[str],
              core_stmts: list[Node] | None = None) -> tuple[list[Node], bool]:
        """Before/core/after-returning statements for one fused group (no try, no let)."""
        kinds = {t.kind for t, _ in group}
        stmts: list[Node] = []
        for t, e in group:
            if t.kind is A.AppendF:
                stmts += self.splice(t, e, core, arg_names)
        for t, e in group:
            if t.kind in BEFORE_KINDS:
                stmts += self.invoke(t, e, [record] if t.kind in ARGS_KINDS else [], arg_names, loc)
        around = [(t, e) for t, e in group if t.kind is A.Around]
        if around:
            t, e = around[0]
            core = _as_expr(list(instantiate(t, e.jp, core, arg_names).children), loc)
            core_stmts = None
        after_r = [(t, e) for t, e in group if t.kind in AFTER_R_KINDS]
        appended = []
        for t, e in group:
            if t.kind is A.AppendB:
                appended += self.splice(t, e, core, arg_names)
        if after_r:
            t, e = after_r[0]
            tmp = _fresh("resulttmp", taken)
            stmts.append(Node(K.Assign, (sym(tmp, loc), core), None, loc))
            args = [sym(tmp, loc)] + ([record] if t.kind in ARGS_KINDS else [])
            stmts += self.invoke(t, e, args, arg_names, loc)
            stmts += appended
            stmts.append(sym(tmp, loc))
            return stmts, False
        plain = not (kinds & (THROWING_KINDS | AFTER_KINDS)) and not appended
        stmts += core_stmts if core_stmts is not None else [core]
        stmts += appended
        return stmts, plain

    def guard(self, group, body_stmts: list[Node], loc: SourceLoc, record, arg_names,
              taken: set[str]) -> list[Node]:
        throwing = [(t, e) for t, e in group if t.kind in THROWING_KINDS]
        after = [(t, e) for t, e in group if t.kind in AFTER_KINDS]
        if not throwing and not after:
            return body_stmts
        var, handler = EMPTY, EMPTY
        if throwing:
            t, e = throwing[0]
            ev = _fresh("e", taken)
            args = [sym(ev, loc)] + ([record] if t.kind in ARGS_KINDS else [])
            var = sym(ev, loc)
            handler = _block(self.invoke(t, e, args, arg_names, loc)
                             + [Node(K.Throw, (sym(ev, loc),), None, loc)], loc)
        final = EMPTY
        if after:
            t, e = after[0]
            final = _block(self.invoke(t, e, [record] if t.kind in ARGS_KINDS else [],
                                       arg_names, loc), loc)
        return [Node(K.TryCatchFinally, (_block(body_stmts, loc), var, handler, final), None, loc)]

    @staticmethod
    def needs_args(templates) -> bool:
        return any(t.kind in ARGS_KINDS or t.uses("@arg_expr") for t in templates)

    def expression(self, core: Node, entries: list[AjEntry]) -> Layered:
        loc = core.loc
        groups = self.groups(entries)
        templates = [t for g in groups for t, _ in g]
        taken = symbols_in(core) | {n.atom for t in templates for _, n in walk(t.body)
                                    if n.kind is K.Symbol}
        jp = entries[0].jp
        binds: list[Node] = []
        arg_names = None
        record = None
        prelude: list[Node] = []
        if self.needs_args(templates):
            slots = _arg_slots(core)
            kids = list(core.children)
            pos_names, kw_pairs = [], []
            for i, kw in slots:
                name = _fresh(f"arg{len(binds) + 1}", taken)
                binds.append(Node(K.Bind, (sym(name, loc), kids[i] if kw is None else kids[i].children[1]),
                                  None, loc))
                if kw is None:
                    kids[i] = sym(name, loc)
                    pos_names.append(sym(name, loc))
                else:
                    kids[i] = Node(K.Bind, (sym(kw, loc), sym(name, loc)), None, loc)
                    kw_pairs.append((kw, sym(name, loc)))
            if binds:
                core = core.with_children(kids)
            arg_names = pos_names
            record = self.args_record(pos_names, kw_pairs, loc)
            if core.kind in (K.AndAnd, K.OrOr):
                msg = (f"{loc.file}:{loc.line}: arguments of a short-circuit "
                       f"'{'&&' if core.kind is K.AndAnd else '||'}' are pre-evaluated eagerly")
                self.warnings.append(msg)
                warnings.warn(ShortCircuitWarning(msg), stacklevel=2)
            if core.kind is K.Assign and binds:
                target = core.children[0]
                cond = _call(sym("!", loc), [Node(K.MacroCall, (sym("@isdefined", loc), target), None, loc)], loc)
                prelude.append(Node(K.If, (cond, _block([Node(K.Assign, (target, sym("nothing", loc)),
                                                                None, loc)], loc)), None, loc))
        # innermost group first; earlier aspects end up outermost
        stmts: list[Node] = []
        hoistable = True
        current = core
        for depth, group in enumerate(reversed(groups)):
            outermost = depth == len(groups) - 1
            body, plain = self.layer(group, current, loc, record, arg_names, taken)
            hoistable = hoistable and plain and len(groups) == 1
            if outermost and binds:
                inner_needs = any(t.kind in ARGS_KINDS for t, _ in group
                                  if t.kind in THROWING_KINDS | AFTER_KINDS)
                let = Node(K.Let, (*binds, _block(body, loc)), None, loc)
                if inner_needs:
                    # catch/finally advice needs the bindings, so the let goes outside
                    let_body = self.guard(group, body, loc, record, arg_names, taken)
                    stmts = [Node(K.Let, (*binds, _block(let_body, loc)), None, loc)]
                else:
                    stmts = self.guard(group, [let], loc, record, arg_names, taken)
                hoistable = False
            else:
                stmts = self.guard(group, body, loc, record, arg_names, taken)
                if stmts is not body:
                    hoistable = False
            if not outermost:
                current = _as_expr(stmts, loc)
        stmts = prelude + stmts
        return Layered(stmts, hoistable and not prelude)

    @staticmethod
    def args_record(pos: list[Node], kws: list[tuple[str, Node]], loc: SourceLoc) -> Node:
        arr = Node(K.ArrayLit, tuple(pos), None, loc)
        items = []
        for k, v in kws:
            items += [lit(k, loc), v]
        kdict = Node(K.MapLit, tuple(items), None, loc)
        return Node(K.TupleLit, (Node(K.Bind, (sym("args", loc), arr), None, loc),
                                 Node(K.Bind, (sym("kargs", loc), kdict), None, loc)), None, loc)

    def function(self, fdef: Node, entries: list[AjEntry]) -> Layered:
        name, params, body = fdef.children
        body = self.block(body)
        loc = body.loc if body.loc.file else fdef.loc
        groups = self.groups(entries)
        templates = [t for g in groups for t, _ in g]
        taken = symbols_in(fdef) | {n.atom for t in templates for _, n in walk(t.body)
                                    if n.kind is K.Symbol}
        pos = [Node(K.Symbol, (), p.children[0].atom, loc) for p in params.children
               if p.kind in (K.Param, K.VarParam)]
        kws = [(p.children[0].atom, sym(p.children[0].atom, loc)) for p in params.children
               if p.kind in (K.KwParam, K.KwVarParam)]
        record = self.args_record(pos, kws, loc)
        core_stmts = list(body.children)
        for group in reversed(groups):
            core = _as_expr(core_stmts, loc)
            stmts, _ = self.layer(group, core, loc, record, pos, taken, core_stmts)
            core_stmts = self.guard(group, stmts, loc, record, pos, taken)
        new_body = _block(core_stmts, body.loc)
        return Layered([fdef.with_children((name, params, new_body))])

    def definition(self, node: Node, entries: list[AjEntry]) -> Layered:
        is_struct = node.kind is K.StructDef
        body = self.block(node.children[-1])
        front: list[Node] = []
        back: list[Node] = []
        around = None
        for e in entries:
            for t in e.aspect.advice.templates:
                if t.kind is A.Nothing:
                    continue
                if t.kind is A.AppendF:
                    front += self._members(self.splice(t, e, node, []), is_struct)
                elif t.kind is A.AppendB:
                    back += self._members(self.splice(t, e, node, []), is_struct)
                elif t.kind is A.Around and around is None:
                    around = (t, e)
                elif not is_struct and t.kind is A.Before:
                    front += self.invoke(t, e, [], [], node.loc)
                elif not is_struct and t.kind is A.After:
                    back += self.invoke(t, e, [], [], node.loc)
                else:
                    what = "struct" if is_struct else "module"
                    raise EmitError(f"{t.kind.value} advice is not supported on {what} join points",
                                    node.loc)
        new_body = _block(front + list(body.children) + back, body.loc)
        result = node.with_children(node.children[:-1] + (new_body,))
        if around is not None:
            t, e = around
            return Layered(list(instantiate(t, e.jp, result, []).children))
        return Layered([result])

    @staticmethod
    def _members(stmts: list[Node], is_struct: bool) -> list[Node]:
        if not is_struct:
            return stmts
        out = []
        for s in stmts:
            if s.kind is K.Symbol:
                s = Node(K.Param, (s, EMPTY, EMPTY), None, s.loc)
            out.append(s)
        return out


def emit(program: Node) -> Node:
    """Elaborate every Aj node into plain HL."""
    out = Emitter().program(program)
    if any(n.kind is K.Aj for _, n in walk(out)):
        raise EmitError("internal error: join-point node survived emit")
    return out


def emit_with_warnings(program: Node) -> tuple[Node, list[str]]:
    em = Emitter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ShortCircuitWarning)
        out = em.program(program)
    return out, em.warnings
