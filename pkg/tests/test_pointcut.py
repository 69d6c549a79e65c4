import pytest

from hlweave.pointcut import (
    ArgMatcher, ArgRole, JPKind, NamePattern, PCKind, exec_func, make, match_args, match_name,
    near_misses, scan,
)
from hlweave.syntax import K, parse, statements

from conftest import load

POS, VAR, KW, KWVAR = ArgRole.Positional, ArgRole.Variadic, ArgRole.Keyword, ArgRole.VariadicKeyword


def params_of(src):
    (fdef,) = statements(parse(src, "f.hl"))
    return fdef.children[1]


@pytest.mark.parametrize("pattern,candidate,expected", [
    (NamePattern.exact("foo"), "foo", True),
    (NamePattern.substring("fo"), "foo", True),
    (NamePattern.exact("foo"), "foobar", False),
    (NamePattern.substring("bar"), "foo", False),
    (NamePattern.substring(""), "anything", True),
    (NamePattern.substring(""), "", True),
])
def test_match_name(pattern, candidate, expected):
    assert match_name(pattern, candidate) is expected


FOO = "function foo(a::Int64)\nend"
BAR = "function bar(a, as::Int64...; z::Int64)\nend"


@pytest.mark.parametrize("matchers,expected", [
    ([ArgMatcher(POS)], True),
    ([ArgMatcher(POS, "Int64")], True),
    ([ArgMatcher(POS, "Float64")], False),
    ([ArgMatcher(POS, "Int64", "b")], False),
    ([ArgMatcher(POS, "Int64", "a")], True),
])
def test_foo_matcher_verdicts(matchers, expected):
    assert match_args(matchers, params_of(FOO)) is expected


def test_bar_matcher_verdict():
    matchers = [ArgMatcher(POS), ArgMatcher(VAR, "Int64"), ArgMatcher(KW, "Any", "z")]
    assert match_args(matchers, params_of(BAR))


def test_every_param_must_be_consumed():
    assert not match_args([ArgMatcher(POS)], params_of("function f(a, b)\nend"))
    assert not match_args([ArgMatcher(POS), ArgMatcher(POS)], params_of("function f(a)\nend"))
    assert not match_args([ArgMatcher(POS)], params_of(BAR))
    assert not match_args([ArgMatcher(KW, "Any", "y")], params_of("function f(; z)\nend"))


def test_variadic_keyword_and_defaults():
    params = params_of("function f(a = 1; k = 2, rest...)\nend")
    assert match_args([ArgMatcher(POS), ArgMatcher(KW, "Any", "k"), ArgMatcher(KWVAR)], params)
    assert not match_args([ArgMatcher(POS), ArgMatcher(KW, "Any", "k")], params)


def test_matcher_invariants():
    with pytest.raises(ValueError):
        ArgMatcher(KW, "Any")
    with pytest.raises(ValueError):
        ArgMatcher(KWVAR, "Int64", "ks")
    with pytest.raises(ValueError):
        make(PCKind.CallFunc, "f").__class__(PCKind.CallFunc, NamePattern.exact("f"), (ArgMatcher(POS),))


def test_descriptions():
    assert make(PCKind.CallFunc, "foo").description == "PCCallFunc(:foo)"
    assert make(PCKind.Attr, "loopA").description == "PCAttr(:loopA)"
    assert exec_func("foo", [ArgMatcher(POS, "Int64", "a")]).description == "PCExecFunc(:foo, [AInt64(:a)])"
    assert make(PCKind.CallFunc, NamePattern.substring("fo")).description == 'PCCallFunc("fo")'


def test_scan_call_in_setup():
    hits = scan(make(PCKind.CallFunc, "foo"), load("setup.hl"))
    assert len(hits) == 1
    _, jp = hits[0]
    assert jp.kind is JPKind.JPCallFunc and jp.name == "foo"
    assert jp.original.kind is K.Call and jp.loc.line == 6


def test_scan_attr_in_loop():
    hits = scan(make(PCKind.Attr, "loopA"), load("loop.hl"))
    assert len(hits) == 1
    _, jp = hits[0]
    assert jp.kind is JPKind.JPDefault and jp.original.kind is K.For


def test_scan_empty_program():
    for kind in PCKind:
        if kind is PCKind.XPath:
            continue
        assert scan(make(kind, NamePattern.substring("")), parse("", "e.hl")) == []


def test_exec_func_ignores_short_forms():
    prog = parse("foo() = 1\nfoo = () -> 2\nfunction foo(x)\nend", "f.hl")
    hits = scan(make(PCKind.ExecFunc, "foo"), prog)
    assert len(hits) == 1 and hits[0][1].original.kind is K.FunctionDef


SAMPLE = """
function f(a)
    x = 1
    x += a
    arr[2] = x
    s.fld = arr[1]
    y = s.fld
    g(h(x), k = 1)
end
"""


@pytest.mark.parametrize("kind,name,expected_kinds", [
    (PCKind.Assign, "x", [K.Assign, K.OpAssign]),
    (PCKind.AssignAry, "arr", [K.IndexAssign]),
    (PCKind.AssignSt, "s", [K.FieldAssign]),
    (PCKind.RefAry, "arr", [K.IndexRef]),
    (PCKind.RefSt, "s", [K.FieldRef]),
    (PCKind.CallFunc, "h", [K.Call]),
])
def test_external_pointcut_kinds(kind, name, expected_kinds):
    hits = scan(make(kind, name), parse(SAMPLE, "s.hl"))
    assert [jp.original.kind for _, jp in hits] == expected_kinds


def test_scan_is_in_document_order_without_duplicates():
    prog = parse(SAMPLE, "s.hl")
    hits = scan(make(PCKind.CallFunc, NamePattern.substring("")), prog)
    paths = [p for p, _ in hits]
    assert paths == sorted(paths) and len(set(paths)) == len(paths)


def test_call_jp_arguments():
    (_, jp), = scan(make(PCKind.CallFunc, "g"), parse(SAMPLE, "s.hl"))
    assert len(jp.arg_exprs) == 1 and jp.arg_exprs[0].kind is K.Call
    assert set(jp.kwargs) == {"k"}


def test_near_miss_on_type_only():
    prog = parse(FOO, "foo.hl")
    assert near_misses(exec_func("foo", [ArgMatcher(POS, "Float64")]), prog)
    assert not near_misses(exec_func("foo", [ArgMatcher(POS, "Int64")]), prog)
    assert not near_misses(exec_func("foo", [ArgMatcher(POS), ArgMatcher(POS)]), prog)
