"""Recursive-descent parser for HL source text."""
from __future__ import annotations

from .lexer import HLSyntaxError, Token, tokenize
from .nodes import EMPTY, K, Node, SourceLoc, line_info, lit, sym

COMPARISONS = ("<", ">", "<=", ">=", "==", "!=")
# macros that stand for splice holes inside advice bodies
HOLE_MACROS = frozenset({
    "@jp", "@args", "@result", "@exception", "@original", "@arg_expr", "@transform",
})
BARE_HOLES = frozenset({"@args", "@result", "@exception", "@original"})


class Parser:
    def __init__(self, tokens: list[Token], filename: str, holes: bool = False):
        self.tokens = tokens
        self.i = 0
        self.file = filename
        self.holes = holes

    # -- token helpers ---------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.type != "EOF":
            self.i += 1
        return t

    def loc(self, t: Token | None = None) -> SourceLoc:
        return SourceLoc(self.file, (t or self.tok).line)

    def error(self, msg: str, t: Token | None = None) -> HLSyntaxError:
        t = t or self.tok
        return HLSyntaxError(msg, self.file, t.line, t.text())

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.error(f"expected '{op}'")
        return self.advance()

    def expect_kw(self, kw: str) -> Token:
        if not self.tok.is_kw(kw):
            raise self.error(f"expected '{kw}'")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.type != "IDENT":
            raise self.error("expected identifier")
        return self.advance()

    def skip_nl(self) -> None:
        while self.tok.type == "NL":
            self.advance()

    def matching_close(self, start: int) -> int:
        """Index of the token closing the bracket at ``start``."""
        depth = 0
        for j in range(start, len(self.tokens)):
            t = self.tokens[j]
            if t.is_op("(", "["):
                depth += 1
            elif t.is_op(")", "]"):
                depth -= 1
                if depth == 0:
                    return j
            elif t.type == "EOF":
                break
        return len(self.tokens) - 2  # EOF follows; the caller reports the error

    # -- blocks and statements -------------------------------------------
    def program(self) -> Node:
        blk = self.block(())
        if self.tok.type != "EOF":
            raise self.error("unexpected token")
        return blk

    def block(self, terminators) -> Node:
        start = self.loc()
        items: list[Node] = []
        while True:
            while self.tok.type == "NL" or self.tok.is_op(";"):
                self.advance()
            t = self.tok
            if t.type == "EOF" or (t.type == "KW" and t.value in terminators):
                break
            stmt_loc = self.loc()
            stmt = self.statement()
            items.append(line_info(stmt_loc))
            items.append(stmt)
            t = self.tok
            if not (t.type in ("NL", "EOF") or t.is_op(";")
                    or (t.type == "KW" and t.value in terminators)):
                raise self.error("expected end of statement")
        return Node(K.Block, tuple(items), None, start)

    def statement(self) -> Node:
        t = self.tok
        if t.is_kw("module"):
            return self.module()
        if t.is_kw("function"):
            return self.funcdef()
        if t.is_kw("struct", "mutable"):
            return self.structdef()
        if t.type == "MACRO" and t.value == "@attr":
            self.advance()
            if self.tok.type != "STR" or len(self.tok.value) != 1 or self.tok.value[0][0] != "s":
                raise self.error("@attr expects a plain string")
            name = lit(self.advance().value[0][1], self.loc(t))
            return Node(K.AttrAnnot, (name, self.statement()), None, self.loc(t))
        if t.type == "IDENT" and self.peek().is_op("("):
            close = self.matching_close(self.i + 1)
            if self.tokens[close + 1].is_op("="):
                return self.short_funcdef()
        return self.expr()

    def module(self) -> Node:
        loc = self.loc()
        self.advance()
        name = self.expect_ident()
        body = self.block(("end",))
        self.expect_kw("end")
        return Node(K.Module, (sym(name.value, self.loc(name)), body), None, loc)

    def funcdef(self) -> Node:
        loc = self.loc()
        self.advance()
        name = self.expect_ident()
        self.expect_op("(")
        params = self.params(")")
        self.expect_op(")")
        body = self.block(("end",))
        self.expect_kw("end")
        return Node(K.FunctionDef, (sym(name.value, self.loc(name)), params, body), None, loc)

    def short_funcdef(self) -> Node:
        loc = self.loc()
        name = self.expect_ident()
        self.expect_op("(")
        params = self.params(")")
        self.expect_op(")")
        self.expect_op("=")
        self.skip_nl()
        body = self.expr()
        return Node(K.ShortFuncDef, (sym(name.value, self.loc(name)), params, body), None, loc)

    def params(self, closer: str) -> Node:
        loc = self.loc()
        out: list[Node] = []
        keyword = False
        self.skip_nl()
        while not self.tok.is_op(closer):
            if self.tok.is_op(";"):
                if keyword:
                    raise self.error("duplicate ';' in parameter list")
                keyword = True
                self.advance()
                self.skip_nl()
                continue
            out.append(self.param(keyword))
            self.skip_nl()
            if self.tok.is_op(","):
                self.advance()
                self.skip_nl()
            elif not self.tok.is_op(closer, ";"):
                raise self.error("expected ',' or ')' in parameter list")
        return Node(K.ParamList, tuple(out), None, loc)

    def param(self, keyword: bool) -> Node:
        loc = self.loc()
        name = self.expect_ident()
        type_ = EMPTY
        default = EMPTY
        variadic = False
        if self.tok.is_op("::"):
            self.advance()
            tt = self.expect_ident()
            type_ = sym(tt.value, self.loc(tt))
        if self.tok.is_op("..."):
            self.advance()
            variadic = True
        if self.tok.is_op("="):
            if variadic:
                raise self.error("variadic parameter cannot have a default")
            self.advance()
            self.skip_nl()
            default = self.or_expr()
        if keyword:
            kind = K.KwVarParam if variadic else K.KwParam
        else:
            kind = K.VarParam if variadic else K.Param
        return Node(kind, (sym(name.value, self.loc(name)), type_, default), None, loc)

    def structdef(self) -> Node:
        loc = self.loc()
        mutable = False
        if self.tok.is_kw("mutable"):
            self.advance()
            mutable = True
        self.expect_kw("struct")
        name = self.expect_ident()
        body_loc = self.loc()
        items: list[Node] = []
        while True:
            while self.tok.type == "NL" or self.tok.is_op(";"):
                self.advance()
            if self.tok.is_kw("end"):
                break
            item_loc = self.loc()
            if self.tok.is_kw("function"):
                member = self.funcdef()
            elif self.tok.type == "IDENT" and self.peek().is_op("("):
                member = self.short_funcdef()
            elif self.tok.type == "IDENT":
                fname = self.advance()
                type_ = EMPTY
                if self.tok.is_op("::"):
                    self.advance()
                    tt = self.expect_ident()
                    type_ = sym(tt.value, self.loc(tt))
                member = Node(K.Param, (sym(fname.value, self.loc(fname)), type_, EMPTY), None, item_loc)
            else:
                raise self.error("expected field or constructor in struct")
            items.append(line_info(item_loc))
            items.append(member)
            if not (self.tok.type == "NL" or self.tok.is_op(";") or self.tok.is_kw("end")):
                raise self.error("expected end of struct member")
        self.expect_kw("end")
        body = Node(K.Block, tuple(items), None, body_loc)
        return Node(K.StructDef, (sym(name.value, self.loc(name)), lit(mutable), body), None, loc)

    # -- expressions -----------------------------------------------------
    def expr(self) -> Node:
        loc = self.loc()
        left = self.lambda_or_or()
        if self.tok.is_op("="):
            self.advance()
            self.skip_nl()
            return make_assign(left, self.expr(), loc, self)
        if self.tok.is_op("+="):
            self.advance()
            self.skip_nl()
            if left.kind not in (K.Symbol, K.IndexRef, K.FieldRef):
                raise self.error("invalid assignment target")
            return Node(K.OpAssign, (left, sym("+", loc), self.expr()), None, loc)
        return left

    def lambda_or_or(self) -> Node:
        t = self.tok
        loc = self.loc()
        if t.type == "IDENT" and self.peek().is_op("->"):
            self.advance()
            self.advance()
            self.skip_nl()
            p = Node(K.Param, (sym(t.value, loc), EMPTY, EMPTY), None, loc)
            params = Node(K.ParamList, (p,), None, loc)
            return Node(K.Lambda, (params, self.expr()), None, loc)
        if t.is_op("("):
            close = self.matching_close(self.i)
            if self.tokens[close + 1].is_op("->"):
                self.advance()
                params = self.params(")")
                self.expect_op(")")
                self.expect_op("->")
                self.skip_nl()
                return Node(K.Lambda, (params, self.expr()), None, loc)
        return self.or_expr()

    def or_expr(self) -> Node:
        left = self.and_expr()
        while self.tok.is_op("||"):
            loc = self.loc()
            self.advance()
            self.skip_nl()
            left = Node(K.OrOr, (left, self.and_expr()), None, loc)
        return left

    def and_expr(self) -> Node:
        left = self.cmp_expr()
        while self.tok.is_op("&&"):
            loc = self.loc()
            self.advance()
            self.skip_nl()
            left = Node(K.AndAnd, (left, self.cmp_expr()), None, loc)
        return left

    def binary(self, ops, operand) -> Node:
        left = operand()
        while self.tok.type == "OP" and self.tok.value in ops:
            t = self.advance()
            self.skip_nl()
            loc = self.loc(t)
            left = Node(K.Call, (sym(t.value, loc), left, operand()), None, loc)
        return left

    def cmp_expr(self) -> Node:
        return self.binary(COMPARISONS, self.range_expr)

    def range_expr(self) -> Node:
        left = self.add_expr()
        if self.tok.is_op(":"):
            loc = self.loc()
            self.advance()
            self.skip_nl()
            return Node(K.Range, (left, self.add_expr()), None, loc)
        return left

    def add_expr(self) -> Node:
        return self.binary(("+", "-"), self.mul_expr)

    def mul_expr(self) -> Node:
        return self.binary(("*", "/"), self.unary)

    def unary(self) -> Node:
        t = self.tok
        if t.is_op("-", "!"):
            self.advance()
            loc = self.loc(t)
            return Node(K.Call, (sym(t.value, loc), self.unary()), None, loc)
        if t.type == "MACRO" and t.value == "@time":
            self.advance()
            loc = self.loc(t)
            return Node(K.MacroCall, (sym("@time", loc), self.expr()), None, loc)
        return self.postfix()

    def postfix(self) -> Node:
        node = self.primary()
        while True:
            t = self.tok
            if t.is_op("("):
                node = self.call(node)
            elif t.is_op("["):
                loc = self.loc()
                self.advance()
                self.skip_nl()
                index = self.expr()
                self.skip_nl()
                self.expect_op("]")
                node = Node(K.IndexRef, (node, index), None, loc)
            elif t.is_op("."):
                loc = self.loc()
                self.advance()
                f = self.expect_ident()
                node = Node(K.FieldRef, (node, sym(f.value, self.loc(f))), None, loc)
            else:
                return node

    def call(self, callee: Node) -> Node:
        loc = callee.loc if callee.loc.line else self.loc()
        self.advance()
        args: list[Node] = []
        pairs: list[tuple[Node, Node]] = []
        keyword = False
        self.skip_nl()
        while not self.tok.is_op(")"):
            if self.tok.is_op(";"):
                keyword = True
                self.advance()
                self.skip_nl()
                continue
            t = self.tok
            if t.type == "IDENT" and self.peek().is_op("="):
                self.advance()
                self.advance()
                self.skip_nl()
                args.append(Node(K.Bind, (sym(t.value, self.loc(t)), self.expr()), None, self.loc(t)))
            else:
                if keyword:
                    raise self.error("expected keyword argument")
                item = self.expr()
                if self.tok.is_op("=>"):
                    self.advance()
                    self.skip_nl()
                    pairs.append((item, self.expr()))
                    item = None
                if item is not None:
                    args.append(item)
            self.skip_nl()
            if self.tok.is_op(","):
                self.advance()
                self.skip_nl()
            elif not self.tok.is_op(")", ";"):
                raise self.error("expected ',' or ')' in call")
        self.advance()
        name = callee.atom if callee.kind is K.Symbol else None
        if name == "Dict":
            if args:
                raise self.error("Dict expects 'key => value' entries")
            flat = [x for pr in pairs for x in pr]
            return Node(K.MapLit, tuple(flat), None, loc)
        if pairs:
            raise self.error("'=>' is only valid inside Dict(...)")
        if name in ("include", "throw"):
            if len(args) != 1 or args[0].kind is K.Bind:
                raise self.error(f"{name} expects exactly one argument")
            kind = K.Include if name == "include" else K.Throw
            return Node(kind, (args[0],), None, loc)
        return Node(K.Call, (callee, *args), None, loc)

    def primary(self) -> Node:
        t = self.tok
        loc = self.loc()
        if t.type == "INT" or t.type == "FLOAT":
            self.advance()
            return lit(t.value, loc)
        if t.type == "STR":
            self.advance()
            return self.string(t, loc)
        if t.is_kw("true", "false"):
            self.advance()
            return lit(t.value == "true", loc)
        if t.type == "IDENT":
            self.advance()
            return sym(t.value, loc)
        if t.is_op("("):
            return self.paren()
        if t.is_op("["):
            self.advance()
            items = self.sequence("]")
            return Node(K.ArrayLit, tuple(items), None, loc)
        if t.is_kw("if"):
            self.advance()
            return self.if_rest(loc)
        if t.is_kw("for"):
            return self.for_loop()
        if t.is_kw("let"):
            return self.let()
        if t.is_kw("try"):
            return self.try_()
        if t.is_kw("begin"):
            self.advance()
            blk = self.block(("end",))
            self.expect_kw("end")
            return blk
        if t.is_kw("return"):
            self.advance()
            nt = self.tok
            if nt.type in ("NL", "EOF") or nt.is_op(";", ")", "]", ",") or nt.is_kw(
                    "end", "else", "elseif", "catch", "finally"):
                return Node(K.Return, (), None, loc)
            return Node(K.Return, (self.expr(),), None, loc)
        if t.type == "MACRO":
            return self.macro()
        raise self.error("unexpected token")

    def macro(self) -> Node:
        t = self.advance()
        loc = self.loc(t)
        name = t.value
        head = sym(name, loc)
        if name == "@isdefined":
            self.expect_op("(")
            v = self.expect_ident()
            self.expect_op(")")
            return Node(K.MacroCall, (head, sym(v.value, self.loc(v))), None, loc)
        if self.holes and name in HOLE_MACROS:
            if name in BARE_HOLES:
                return Node(K.MacroCall, (head,), None, loc)
            self.expect_op("(")
            if name == "@arg_expr":
                if self.tok.type != "INT":
                    raise self.error("@arg_expr expects an integer index")
                arg = lit(self.advance().value, loc)
            else:
                arg = sym(self.expect_ident().value, loc)
            self.expect_op(")")
            return Node(K.MacroCall, (head, arg), None, loc)
        if name == "@time":
            return Node(K.MacroCall, (head, self.expr()), None, loc)
        raise self.error(f"unknown macro {name}", t)

    def sequence(self, closer: str) -> list[Node]:
        items = []
        self.skip_nl()
        while not self.tok.is_op(closer):
            items.append(self.expr())
            self.skip_nl()
            if self.tok.is_op(","):
                self.advance()
                self.skip_nl()
            elif not self.tok.is_op(closer):
                raise self.error(f"expected ',' or '{closer}'")
        self.advance()
        return items

    def paren(self) -> Node:
        loc = self.loc()
        self.advance()
        self.skip_nl()
        if self.tok.is_op(")"):
            self.advance()
            return Node(K.TupleLit, (), None, loc)
        items = []
        saw_comma = False
        while True:
            items.append(self.expr())
            self.skip_nl()
            if self.tok.is_op(","):
                saw_comma = True
                self.advance()
                self.skip_nl()
                if self.tok.is_op(")"):
                    break
            elif self.tok.is_op(")"):
                break
            else:
                raise self.error("expected ',' or ')'")
        self.advance()
        if len(items) == 1 and not saw_comma:
            return items[0]
        named = [it.kind is K.Assign for it in items]
        if all(named):
            binds = [Node(K.Bind, it.children, None, it.loc) for it in items]
            return Node(K.TupleLit, tuple(binds), None, loc)
        if any(named):
            raise self.error("cannot mix named and positional tuple elements")
        return Node(K.TupleLit, tuple(items), None, loc)

    def string(self, t: Token, loc: SourceLoc) -> Node:
        parts = t.value
        if len(parts) == 1 and parts[0][0] == "s":
            return lit(parts[0][1], loc)
        kids = []
        for part in parts:
            if part[0] == "s":
                kids.append(lit(part[1], loc))
            else:
                _, src, line = part
                sub = Parser(tokenize(src, self.file, line), self.file, self.holes)
                sub.skip_nl()
                e = sub.expr()
                sub.skip_nl()
                if sub.tok.type != "EOF":
                    raise sub.error("unexpected token in interpolation")
                kids.append(e)
        return Node(K.StringInterp, tuple(kids), None, loc)

    def if_rest(self, loc: SourceLoc) -> Node:
        cond = self.expr()
        then = self.block(("elseif", "else", "end"))
        if self.tok.is_kw("elseif"):
            eloc = self.loc()
            self.advance()
            return Node(K.If, (cond, then, self.if_rest(eloc)), None, loc)
        if self.tok.is_kw("else"):
            self.advance()
            other = self.block(("end",))
            self.expect_kw("end")
            return Node(K.If, (cond, then, other), None, loc)
        self.expect_kw("end")
        return Node(K.If, (cond, then), None, loc)

    def for_loop(self) -> Node:
        loc = self.loc()
        self.advance()
        iters = []
        while True:
            var = self.expect_ident()
            if not (self.tok.is_kw("in") or self.tok.is_op("=")):
                raise self.error("expected 'in'")
            self.advance()
            iters.append(Node(K.Iter, (sym(var.value, self.loc(var)), self.or_expr()), None, self.loc(var)))
            if not self.tok.is_op(","):
                break
            self.advance()
            self.skip_nl()
        body = self.block(("end",))
        self.expect_kw("end")
        return Node(K.For, (*iters, body), None, loc)

    def let(self) -> Node:
        loc = self.loc()
        self.advance()
        binds = []
        while self.tok.type == "IDENT":
            var = self.advance()
            self.expect_op("=")
            self.skip_nl()
            binds.append(Node(K.Bind, (sym(var.value, self.loc(var)), self.expr()), None, self.loc(var)))
            if not self.tok.is_op(","):
                break
            self.advance()
            self.skip_nl()
        body = self.block(("end",))
        self.expect_kw("end")
        return Node(K.Let, (*binds, body), None, loc)

    def try_(self) -> Node:
        loc = self.loc()
        self.advance()
        body = self.block(("catch", "finally", "end"))
        var, handler, final = EMPTY, EMPTY, EMPTY
        if self.tok.is_kw("catch"):
            ct = self.advance()
            if self.tok.type == "IDENT" and self.tok.line == ct.line:
                v = self.advance()
                var = sym(v.value, self.loc(v))
            handler = self.block(("finally", "end"))
        if self.tok.is_kw("finally"):
            self.advance()
            final = self.block(("end",))
        self.expect_kw("end")
        return Node(K.TryCatchFinally, (body, var, handler, final), None, loc)


def make_assign(target: Node, value: Node, loc: SourceLoc, parser: Parser | None = None) -> Node:
    if target.kind is K.Symbol:
        return Node(K.Assign, (target, value), None, loc)
    if target.kind is K.IndexRef:
        return Node(K.IndexAssign, (*target.children, value), None, loc)
    if target.kind is K.FieldRef:
        return Node(K.FieldAssign, (*target.children, value), None, loc)
    if parser is not None:
        raise parser.error("invalid assignment target")
    raise ValueError("invalid assignment target")


def parse(source_text: str, filename: str = "<input>", *, holes: bool = False,
          first_line: int = 1) -> Node:
    """Parse HL source into a Block node."""
    tokens = tokenize(source_text, filename, first_line)
    return Parser(tokens, filename, holes).program()
