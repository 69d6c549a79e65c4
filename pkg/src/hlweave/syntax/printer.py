"""Canonical HL source rendering."""
from __future__ import annotations

from .nodes import K, LITERAL_KINDS, Node, SourceLoc

INDENT = "    "

# binding strength, loosest first
P_ASSIGN, P_OR, P_AND, P_CMP, P_RANGE, P_ADD, P_MUL, P_UNARY, P_POSTFIX, P_ATOM = range(1, 11)

BINARY_PREC = {
    "<": P_CMP, ">": P_CMP, "<=": P_CMP, ">=": P_CMP, "==": P_CMP, "!=": P_CMP,
    "+": P_ADD, "-": P_ADD, "*": P_MUL, "/": P_MUL,
}
UNARY_OPS = ("-", "!")

_ESC = {"\\": "\\\\", '"': '\\"', "$": "\\$", "\n": "\\n", "\t": "\\t", "\r": "\\r", "\0": "\\0"}


class PrintError(Exception):
    pass


def escape(text: str) -> str:
    return "".join(_ESC.get(ch, ch) for ch in text)


def line_comment(loc: SourceLoc) -> str:
    if loc.provenance:
        return f"#= AOP: {loc.provenance} ##= {loc.file}:{loc.line} =##:0 =#"
    return f"#= {loc.file}:{loc.line} =#"


def _operator_call(node: Node) -> str | None:
    """The operator name if ``node`` is a Call rendered infix/prefix."""
    if node.kind is not K.Call:
        return None
    callee = node.children[0]
    if callee.kind is not K.Symbol:
        return None
    nargs = len(node.children) - 1
    if any(c.kind is K.Bind for c in node.children[1:]):
        return None
    if nargs == 2 and callee.atom in BINARY_PREC:
        return callee.atom
    if nargs == 1 and callee.atom in UNARY_OPS:
        return callee.atom
    return None


def precedence(node: Node) -> int:
    k = node.kind
    if k in (K.Assign, K.OpAssign, K.IndexAssign, K.FieldAssign, K.Lambda, K.Return):
        return P_ASSIGN
    if k is K.MacroCall and node.children[0].atom == "@time":
        return P_ASSIGN
    if k is K.OrOr:
        return P_OR
    if k is K.AndAnd:
        return P_AND
    if k is K.Range:
        return P_RANGE
    op = _operator_call(node)
    if op is not None:
        if len(node.children) == 2:
            return P_UNARY
        return BINARY_PREC[op]
    if k in (K.Call, K.IndexRef, K.FieldRef):
        return P_POSTFIX
    return P_ATOM


class Printer:
    def __init__(self, line_comments: bool = True):
        self.line_comments = line_comments

    def block_lines(self, blk: Node, level: int) -> list[str]:
        pad = INDENT * level
        lines = []
        for c in blk.children:
            if c.kind is K.LineInfo:
                if self.line_comments:
                    lines.append(pad + line_comment(c.loc))
            else:
                lines.append(pad + self.stmt(c, level))
        return lines

    def body(self, blk: Node, level: int) -> str:
        """Render a block's statements followed by a newline, or nothing when empty."""
        lines = self.block_lines(blk, level)
        return "".join(line + "\n" for line in lines)

    def stmt(self, node: Node, level: int) -> str:
        k = node.kind
        pad = INDENT * level
        if k is K.Module:
            name, blk = node.children
            return f"module {name.atom}\n{self.body(blk, level)}{pad}end"
        if k is K.FunctionDef:
            name, params, blk = node.children
            return f"function {name.atom}({self.params(params, level)})\n{self.body(blk, level + 1)}{pad}end"
        if k is K.ShortFuncDef:
            name, params, value = node.children
            return f"{name.atom}({self.params(params, level)}) = {self.expr(value, level, P_ASSIGN)}"
        if k is K.StructDef:
            name, mutable, blk = node.children
            head = "mutable struct" if mutable.atom else "struct"
            return f"{head} {name.atom}\n{self.body(blk, level + 1)}{pad}end"
        if k is K.AttrAnnot:
            label, inner = node.children
            return f'@attr "{escape(label.atom)}" {self.stmt(inner, level)}'
        if k in (K.Param, K.VarParam, K.KwParam, K.KwVarParam):
            return self.param(node, level)
        if node.attrs:
            # annotations that survived pre-weave render back as @attr prefixes
            text = self.stmt(Node(node.kind, node.children, node.atom, node.loc), level)
            for a in reversed(node.attrs):
                text = f'@attr "{escape(a)}" {text}'
            return text
        return self.expr(node, level, 0)

    def params(self, plist: Node, level: int) -> str:
        pos = [self.param(p, level) for p in plist.children if p.kind in (K.Param, K.VarParam)]
        kw = [self.param(p, level) for p in plist.children if p.kind in (K.KwParam, K.KwVarParam)]
        text = ", ".join(pos)
        if kw:
            text += "; " + ", ".join(kw)
        return text

    def param(self, p: Node, level: int) -> str:
        name, type_, default = p.children
        text = name.atom
        if type_.kind is K.Symbol:
            text += "::" + type_.atom
        if p.kind in (K.VarParam, K.KwVarParam):
            text += "..."
        if default.kind is not K.Empty:
            text += " = " + self.expr(default, level, P_OR)
        return text

    def expr(self, node: Node, level: int, ctx: int) -> str:
        text = self._expr(node, level)
        if precedence(node) < ctx:
            return f"({text})"
        return text

    def _expr(self, node: Node, level: int) -> str:
        k = node.kind
        pad = INDENT * level
        c = node.children
        if k in LITERAL_KINDS:
            return literal(node)
        if k is K.Aj:
            raise PrintError("cannot print an un-emitted join-point (Aj) node")
        if k is K.Block:
            return f"begin\n{self.body(node, level + 1)}{pad}end"
        if k in (K.Module, K.FunctionDef, K.StructDef, K.ShortFuncDef, K.AttrAnnot):
            return self.stmt(node, level)
        if k is K.Assign:
            return f"{c[0].atom} = {self.expr(c[1], level, P_ASSIGN)}"
        if k is K.OpAssign:
            return f"{self.expr(c[0], level, P_POSTFIX)} {c[1].atom}= {self.expr(c[2], level, P_ASSIGN)}"
        if k is K.IndexAssign:
            return (f"{self.expr(c[0], level, P_POSTFIX)}[{self.expr(c[1], level, 0)}] = "
                    f"{self.expr(c[2], level, P_ASSIGN)}")
        if k is K.FieldAssign:
            return f"{self.expr(c[0], level, P_POSTFIX)}.{c[1].atom} = {self.expr(c[2], level, P_ASSIGN)}"
        if k is K.Lambda:
            params, value = c
            return f"({self.params(params, level)}) -> {self.expr(value, level, P_ASSIGN)}"
        if k is K.OrOr:
            return f"{self.expr(c[0], level, P_OR)} || {self.expr(c[1], level, P_OR + 1)}"
        if k is K.AndAnd:
            return f"{self.expr(c[0], level, P_AND)} && {self.expr(c[1], level, P_AND + 1)}"
        if k is K.Range:
            return f"{self.expr(c[0], level, P_RANGE + 1)}:{self.expr(c[1], level, P_RANGE + 1)}"
        if k is K.Call:
            op = _operator_call(node)
            if op is not None and len(c) == 3:
                prec = BINARY_PREC[op]
                return f"{self.expr(c[1], level, prec)} {op} {self.expr(c[2], level, prec + 1)}"
            if op is not None:
                return f"{op}{self.expr(c[1], level, P_UNARY + 1)}"
            return f"{self.expr(c[0], level, P_POSTFIX)}({self.args(c[1:], level)})"
        if k is K.IndexRef:
            return f"{self.expr(c[0], level, P_POSTFIX)}[{self.expr(c[1], level, 0)}]"
        if k is K.FieldRef:
            return f"{self.expr(c[0], level, P_POSTFIX)}.{c[1].atom}"
        if k is K.MacroCall:
            name = c[0].atom
            if name == "@time":
                return f"@time {self.expr(c[1], level, P_ASSIGN)}"
            if len(c) == 1:
                return name
            return f"{name}({', '.join(self.expr(a, level, 0) for a in c[1:])})"
        if k is K.Bind:
            return f"{c[0].atom} = {self.expr(c[1], level, P_ASSIGN + 1)}"
        if k is K.ArrayLit:
            return f"[{self.args(c, level)}]"
        if k is K.TupleLit:
            if len(c) == 1:
                return f"({self.args(c, level)},)"
            return f"({self.args(c, level)})"
        if k is K.MapLit:
            entries = [f"{self.expr(c[i], level, P_ASSIGN + 1)} => {self.expr(c[i + 1], level, P_ASSIGN + 1)}"
                       for i in range(0, len(c), 2)]
            return f"Dict({', '.join(entries)})"
        if k is K.StringInterp:
            out = []
            for part in c:
                if part.kind is K.StringLit:
                    out.append(escape(part.atom))
                else:
                    out.append(f"$({self.expr(part, level, 0)})")
            return '"' + "".join(out) + '"'
        if k is K.Include:
            return f"include({self.expr(c[0], level, P_ASSIGN + 1)})"
        if k is K.Throw:
            return f"throw({self.expr(c[0], level, P_ASSIGN + 1)})"
        if k is K.Return:
            if not c:
                return "return"
            return f"return {self.expr(c[0], level, P_ASSIGN)}"
        if k is K.If:
            return self.if_(node, level, "if")
        if k is K.For:
            iters = ", ".join(f"{it.children[0].atom} in {self.expr(it.children[1], level, P_OR)}"
                              for it in c[:-1])
            return f"for {iters}\n{self.body(c[-1], level + 1)}{pad}end"
        if k is K.Let:
            binds = ", ".join(self.expr(b, level, 0) for b in c[:-1])
            head = f"let {binds}" if binds else "let"
            return f"{head}\n{self.body(c[-1], level + 1)}{pad}end"
        if k is K.TryCatchFinally:
            body, var, handler, final = c
            text = f"try\n{self.body(body, level + 1)}"
            if handler.kind is not K.Empty:
                head = f"catch {var.atom}" if var.kind is K.Symbol else "catch"
                text += f"{pad}{head}\n{self.body(handler, level + 1)}"
            if final.kind is not K.Empty:
                text += f"{pad}finally\n{self.body(final, level + 1)}"
            return text + f"{pad}end"
        if k is K.Empty:
            return "nothing"
        raise PrintError(f"cannot print node kind {k.value}")

    def args(self, items, level: int) -> str:
        return ", ".join(self.expr(a, level, P_ASSIGN + 1) if a.kind is not K.Bind
                         else self._expr(a, level) for a in items)

    def if_(self, node: Node, level: int, head: str) -> str:
        pad = INDENT * level
        cond, then, *rest = node.children
        text = f"{head} {self.expr(cond, level, 0)}\n{self.body(then, level + 1)}"
        if rest:
            other = rest[0]
            if other.kind is K.If:
                return text + pad + self.if_(other, level, "elseif")
            text += f"{pad}else\n{self.body(other, level + 1)}"
        return text + f"{pad}end"


def literal(node: Node) -> str:
    k, v = node.kind, node.atom
    if k is K.Symbol:
        return v
    if k is K.BoolLit:
        return "true" if v else "false"
    if k is K.StringLit:
        return '"' + escape(v) + '"'
    return repr(v)


def print_source(node: Node, *, line_comments: bool = True) -> str:
    """Render ``node`` as canonical HL text.

    A top-level Block prints as a bare statement sequence.
    """
    p = Printer(line_comments)
    if node.kind is K.Block:
        return "\n".join(p.block_lines(node, 0))
    if node.kind is K.LineInfo:
        return line_comment(node.loc)
    return p.stmt(node, 0)
