import json
from importlib import resources

import pytest

from hlweave.syntax import (
    HLSyntaxError, K, Node, PrintError, SourceLoc, check_arity, line_info, lit, mk, node_equal,
    parse, print_source, statements, sym,
)

from conftest import CORPUS


def test_parse_function_def():
    blk = parse('function foo()\n  println("foo")\nend', "t.hl")
    (fdef,) = statements(blk)
    assert fdef.kind is K.FunctionDef
    name, params, body = fdef.children
    assert name.atom == "foo" and params.children == ()
    assert [c.kind for c in body.children] == [K.LineInfo, K.Call]
    call = body.children[1]
    assert call.children[0].atom == "println"
    assert call.children[1] == lit("foo", call.children[1].loc)


def test_empty_program():
    blk = parse("", "t.hl")
    assert blk.kind is K.Block and blk.children == ()


def test_syntax_error_reports_line_and_token():
    with pytest.raises(HLSyntaxError) as info:
        parse("x = 1 +", "bad.hl")
    assert info.value.line == 1 and info.value.file == "bad.hl"
    assert "bad.hl:1" in str(info.value)


def test_syntax_error_on_later_line():
    with pytest.raises(HLSyntaxError) as info:
        parse("x = 1\ny = (2\n", "bad.hl")
    assert info.value.line >= 2


def test_every_statement_has_line_info():
    blk = parse("a = 1\nb = 2; c = 3\n", "t.hl")
    kinds = [c.kind for c in blk.children]
    assert kinds == [K.LineInfo, K.Assign] * 3
    assert [c.loc.line for c in blk.children if c.kind is K.LineInfo] == [1, 2, 2]


def test_print_function():
    fdef = mk(K.FunctionDef, sym("foo"), mk(K.ParamList),
              mk(K.Block, mk(K.Call, sym("println"), lit("foo"))))
    assert print_source(fdef) == 'function foo()\n    println("foo")\nend'


def test_print_provenance_line():
    loc = SourceLoc("Sample.hl", 2, "PCCallFunc(:foo)")
    assert print_source(line_info(loc)) == "#= AOP: PCCallFunc(:foo) ##= Sample.hl:2 =##:0 =#"
    assert print_source(line_info(SourceLoc("Test.hl", 10))) == "#= Test.hl:10 =#"


def test_print_rejects_aj():
    with pytest.raises(PrintError):
        print_source(mk(K.Block, mk(K.Aj, sym("x"))))


def test_node_equal_locations():
    a = parse("x = 1", "a.hl")
    b = parse("\nx = 1", "a.hl")
    assert not node_equal(a, b)
    assert node_equal(a, b, ignore_lines=True)
    assert not node_equal(a, parse("x = 2", "a.hl"), ignore_lines=True)


def test_literal_types_are_distinguished():
    assert not node_equal(parse("x = 1"), parse("x = 1.0"), True)
    assert not node_equal(parse("x = true"), parse("x = 1"), True)


@pytest.mark.parametrize("name", sorted(p.name for p in CORPUS.glob("*.hl")))
def test_corpus_roundtrip(name):
    tree = parse((CORPUS / name).read_text(), name)
    again = parse(print_source(tree), name)
    assert node_equal(tree, again, ignore_lines=True)
    assert check_arity(tree) == []


SNIPPETS = [
    "f(a, b; k = 1)",
    "g(x::Int64, ys::Int64...; z::Int64, kw...) = x",
    "h = (a, b = 2) -> a + b",
    "s.x[i] += 1",
    'd = Dict("a" => 1, "b" => [1, 2])',
    "t = (a = 1,)",
    "u = (1,)",
    '"v=$(v + 1) w=$w"',
    "try\n    f()\ncatch err\n    g(err)\nfinally\n    h()\nend",
    "if a\n    1\nelseif b\n    2\nelse\n    3\nend",
    "let a = 1, b = 2\n    a + b\nend",
    "mutable struct P\n    x\n    y::Int\nend",
    "module M\nfoo() = 1\nend",
    "-(a - b) * c / (d + e)",
    "!(a && b) || c",
    "x = y = 3",
    "for i in 1:n, j in 1:i\n    println(i)\nend",
    "return",
    "@time f(x)",
    "!@isdefined(x)",
    '@attr "p" pop!(a) && pop!(a)',
    "include(\"part.hl\")",
    "throw(err)",
    "a.b.c = f(1)[2]",
    "begin\n    1\n    2\nend",
]


@pytest.mark.parametrize("src", SNIPPETS)
def test_snippet_roundtrip(src):
    tree = parse(src, "s.hl")
    printed = print_source(tree, line_comments=False)
    assert node_equal(parse(printed, "s.hl"), tree, ignore_lines=True), printed
    assert check_arity(tree) == []


def test_operators_are_calls():
    (stmt,) = statements(parse("a < b + 1"))
    assert stmt.kind is K.Call and stmt.children[0].atom == "<"
    assert stmt.children[2].children[0].atom == "+"


def test_lambda_binding_stays_assign():
    (stmt,) = statements(parse("f = () -> 1"))
    assert stmt.kind is K.Assign and stmt.children[1].kind is K.Lambda


def test_parse_is_deterministic():
    text = (CORPUS / "myfib.hl").read_text()
    assert node_equal(parse(text, "f.hl"), parse(text, "f.hl"))


def test_arity_table_covers_all_kinds():
    table = json.loads(resources.files("hlweave.syntax").joinpath("arity.json").read_text())
    assert set(table) == {k.value for k in K}


def test_nested_block_comments_and_bang_identifiers():
    tree = parse("#= outer #= inner =# still =#\npush!(a, 1)\nx != y", "c.hl")
    calls = statements(tree)
    assert calls[0].children[0].atom == "push!"
    assert calls[1].children[0].atom == "!="
