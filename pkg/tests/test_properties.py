"""Property suites over randomly generated HL trees."""
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hlweave import pcxpath
from hlweave.advice import Aspect, FusedAdvice, parse_advice, swap_loop
from hlweave.interp import run
from hlweave.pointcut import NamePattern, PCKind, exec_func, make
from hlweave.syntax import EMPTY, K, block, lit, mk, node_equal, parse, print_source, sym, walk
from hlweave.weaver import emit, emit_with_warnings, weave

MANY = settings(max_examples=1000, deadline=None,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])

NAMES = ["a", "b", "x", "y", "foo", "bar_2", "k!"]
BINOPS = ["+", "-", "*", "/", "<", ">", "<=", ">=", "==", "!="]

names = st.sampled_from(NAMES)
symbols = names.map(sym)
literals = st.one_of(
    st.integers(0, 10**12).map(lit),
    st.floats(0, 1e12, allow_nan=False, allow_infinity=False).map(lit),
    st.booleans().map(lit),
    st.text(st.characters(codec="utf-8", exclude_categories=["Cs"]), max_size=8).map(lit),
)


def _param(name, type_=None, default=None, kind=K.Param):
    return mk(kind, sym(name), sym(type_) if type_ else EMPTY, default or EMPTY)


def _extend(inner):
    seq = st.lists(inner, max_size=3)
    kwargs = st.lists(st.tuples(names, inner).map(lambda p: mk(K.Bind, sym(p[0]), p[1])), max_size=2)
    lambda_params = st.lists(names, max_size=2, unique=True).map(
        lambda ps: mk(K.ParamList, *(_param(p) for p in ps)))
    interp_parts = st.lists(st.one_of(st.text("abc ", min_size=1, max_size=3).map(lit), symbols),
                            min_size=1, max_size=4).filter(
        lambda ps: any(p.kind is K.Symbol for p in ps)
        and all(not (p.kind is q.kind is K.StringLit) for p, q in zip(ps, ps[1:])))
    return st.one_of(
        st.builds(lambda f, a, k: mk(K.Call, f, *a, *k), symbols, seq, kwargs),
        st.builds(lambda op, l, r: mk(K.Call, sym(op), l, r), st.sampled_from(BINOPS), inner, inner),
        st.builds(lambda op, e: mk(K.Call, sym(op), e), st.sampled_from(["!", "-"]), inner),
        st.builds(lambda l, r: mk(K.AndAnd, l, r), inner, inner),
        st.builds(lambda l, r: mk(K.OrOr, l, r), inner, inner),
        seq.map(lambda xs: mk(K.ArrayLit, *xs)),
        seq.map(lambda xs: mk(K.TupleLit, *xs)),
        st.lists(st.tuples(inner, inner), max_size=2).map(
            lambda kv: mk(K.MapLit, *(n for p in kv for n in p))),
        st.builds(lambda o, i: mk(K.IndexRef, o, i), inner, inner),
        st.builds(lambda o, f: mk(K.FieldRef, o, f), inner, symbols),
        st.builds(lambda lo, hi: mk(K.Range, lo, hi), inner, inner),
        st.builds(lambda p, b: mk(K.Lambda, p, b), lambda_params, inner),
        st.builds(lambda e: mk(K.MacroCall, sym("@time"), e), inner),
        interp_parts.map(lambda ps: mk(K.StringInterp, *ps)),
    )


exprs = st.recursive(st.one_of(literals, symbols), _extend, max_leaves=12)


def _statements(inner_block):
    return st.one_of(
        exprs,
        st.builds(lambda n, e: mk(K.Assign, sym(n), e), names, exprs),
        st.builds(lambda n, e: mk(K.OpAssign, sym(n), sym("+"), e), names, exprs),
        st.builds(lambda n, i, e: mk(K.IndexAssign, sym(n), i, e), names, exprs, exprs),
        st.builds(lambda n, f, e: mk(K.FieldAssign, sym(n), sym(f), e), names, names, exprs),
        st.builds(lambda e: mk(K.Return, e), exprs),
        st.just(mk(K.Return)),
        st.builds(lambda e: mk(K.Throw, e), exprs),
        st.builds(lambda c, t, e: mk(K.If, c, t, *([e] if e is not None else [])),
                  exprs, inner_block, st.none() | inner_block),
        st.builds(lambda its, b: mk(K.For, *(mk(K.Iter, sym(n), e) for n, e in its), b),
                  st.lists(st.tuples(names, exprs), min_size=1, max_size=2), inner_block),
        st.builds(lambda bs, b: mk(K.Let, *(mk(K.Bind, sym(n), e) for n, e in bs), b),
                  st.lists(st.tuples(names, exprs), max_size=2), inner_block),
        st.builds(lambda t, v, c, f: mk(K.TryCatchFinally, t, v, c, f),
                  inner_block, st.just(EMPTY) | symbols, inner_block, st.just(EMPTY) | inner_block)
        .filter(lambda n: n.children[2] is not EMPTY or n.children[3] is not EMPTY),
    )


blocks = st.recursive(
    st.lists(exprs, max_size=2).map(block),
    lambda inner: st.lists(_statements(inner), max_size=3).map(block),
    max_leaves=6,
)
stmts = _statements(blocks)

params = st.lists(
    st.tuples(names, st.none() | st.sampled_from(["Int64", "Any"]),
              st.sampled_from([K.Param, K.VarParam, K.KwParam])),
    max_size=3, unique_by=lambda p: p[0],
).map(lambda ps: mk(K.ParamList, *(
    _param(n, t, lit(1) if k is K.KwParam else None, k)
    for n, t, k in sorted(ps, key=lambda p: p[2] is K.KwParam))))

definitions = st.one_of(
    st.builds(lambda n, p, b: mk(K.FunctionDef, sym(n), p, b), names, params, blocks),
    st.builds(lambda n, p, e: mk(K.ShortFuncDef, sym(n), p, e), names, params, exprs),
    st.builds(lambda n, m, fs: mk(K.StructDef, sym(n), lit(m), block(_param(f) for f in fs)),
              st.sampled_from(["S", "Point"]), st.booleans(), st.lists(names, max_size=3, unique=True)),
)
programs = st.recursive(
    st.lists(st.one_of(stmts, definitions), max_size=4).map(block),
    lambda inner: st.lists(
        st.one_of(stmts, definitions, st.builds(
            lambda n, b: mk(K.Module, sym(n), b), st.sampled_from(["M", "Inner"]), inner)),
        max_size=4).map(block),
    max_leaves=3,
)


@MANY
@given(programs)
def test_parse_print_roundtrip(tree):
    text = print_source(tree)
    assert node_equal(parse(text), tree, ignore_lines=True), text


@MANY
@given(programs)
def test_parse_is_deterministic(tree):
    text = print_source(tree)
    assert node_equal(parse(text, "p.hl"), parse(text, "p.hl"))


def _aspect(kind, body, pc):
    return Aspect("p", pc, FusedAdvice((parse_advice(kind, body, "p.asp", 1),)), "p.asp", 1)


pointcuts = st.one_of(
    st.builds(lambda k, n: make(k, NamePattern.exact(n)),
              st.sampled_from([PCKind.CallFunc, PCKind.Assign, PCKind.AssignAry, PCKind.AssignSt,
                               PCKind.RefAry, PCKind.RefSt]), names),
    names.map(lambda n: exec_func(NamePattern.exact(n))),
    st.text("abxyfo", min_size=1, max_size=2).map(
        lambda s: make(PCKind.CallFunc, NamePattern.substring(s))),
)


@MANY
@given(programs, pointcuts)
def test_noop_weave_identity(tree, pc):
    assert node_equal(weave(tree, []), tree)
    assert node_equal(emit(weave(tree, [_aspect("nothing", "", pc)])), tree, ignore_lines=True)


@MANY
@given(programs, st.lists(st.tuples(pointcuts, st.sampled_from([
    ("before", 'println("b")'), ("before_args", "println(@args)"),
    ("after_returning", "println(@result)"), ("after_returning_args", "println(@result, @args)"),
    ("after_throwing", "println(@exception)"), ("after_args", "println(@args)"),
    ("around", "g(@original)"), ("append_front", 'println("f")'),
])), min_size=1, max_size=3))
def test_emit_totality(tree, chosen):
    aspects = [_aspect(kind, body, pc) for pc, (kind, body) in chosen]
    out, _ = emit_with_warnings(weave(tree, aspects))
    assert not any(n.kind is K.Aj for _, n in walk(out))
    assert isinstance(print_source(out), str)


# -- runtime properties ----------------------------------------------------
args_advice = st.lists(st.sampled_from([
    ("before_args", "println(@args.args)"),
    ("after_returning_args", "println(@result)"),
    ("after_throwing_args", "println(@args.args)"),
    ("after_args", "println(@args.args)"),
    ("around", "@original"),
]), min_size=1, max_size=4, unique_by=lambda a: a[0])

call_args = st.lists(st.one_of(
    st.integers(0, 99).map(str),
    st.integers(0, 99).map(lambda i: f"counter!({i})"),
    st.integers(0, 99).map(lambda i: f"counter!({i}) + counter!({i + 1})"),
), min_size=2, max_size=2)


def _call_program(args, fails):
    body = 'error("f failed")' if fails else "a + b"
    return (f"function f(a, b)\n    {body}\nend\n"
            f"function main()\n    v = f({args[0]}, f({args[1]}, 1) - 1)\n    v * 2\nend\n")


def _woven(source, advice, pc):
    aspects = [_aspect(kind, body, pc) for kind, body in advice]
    out, _ = emit_with_warnings(weave(parse(source, "p.hl"), aspects))
    return out


@MANY
@given(call_args, args_advice, st.booleans())
def test_join_point_arguments_evaluated_once(args, advice, fails):
    source = _call_program(args, fails)
    plain = run(parse(source, "p.hl"), "main")
    for pc in (make(PCKind.CallFunc, NamePattern.exact("f")), exec_func(NamePattern.exact("f"))):
        woven = run(_woven(source, advice, pc), "main")
        assert woven.trace == plain.trace
        assert woven.value == plain.value


@MANY
@given(st.text("abc xyz", min_size=1, max_size=10), st.lists(st.sampled_from([
    ("after_throwing", "println(@exception)"), ("after", 'println("after")'),
    ("after_returning", "println(@result)"), ("before", 'println("before")'),
    ("after_throwing_args", "println(@args)"),
]), min_size=1, max_size=4, unique_by=lambda a: tuple(a[0].split("_")[:2])),
    st.sampled_from(["call", "exec"]), st.booleans())
def test_exception_rethrow_transparency(message, advice, where, nested):
    call = f'f("{message}")'
    if nested:
        call = f"try\n        {call}\n    catch e\n        throw(e)\n    end"
    source = (f"function f(m)\n    error(m)\nend\n"
              f"function main()\n    {call}\nend\n")
    pc = make(PCKind.CallFunc, NamePattern.exact("f")) if where == "call" \
        else exec_func(NamePattern.exact("f"))
    plain = run(parse(source, "p.hl"), "main")
    woven = run(_woven(source, advice, pc), "main")
    assert woven.error is not None and woven.error.message == plain.error.message == message
    assert woven.value is None


# -- structural properties -------------------------------------------------
iters = st.lists(st.tuples(names, exprs), min_size=1, max_size=3).map(
    lambda its: [mk(K.Iter, sym(n), e) for n, e in its])


@MANY
@given(iters, st.one_of(blocks, st.builds(
    lambda inner, body: block([mk(K.For, *inner, body)]), iters.map(lambda i: i[:1]), blocks)))
def test_swap_loop_involution(heads, body):
    loop = mk(K.For, *heads, body)
    assert node_equal(swap_loop(swap_loop(loop)), loop)


tags = st.sampled_from(["func", "call", "assign", "block"])
attr_values = st.sampled_from(["fib", "main", "x", "a%b", ""])
docs = st.recursive(
    st.builds(pcxpath.XmlNode, tags, st.dictionaries(st.sampled_from(["name", "args"]), attr_values)),
    lambda inner: st.builds(pcxpath.XmlNode, tags,
                            st.dictionaries(st.sampled_from(["name", "args"]), attr_values),
                            st.lists(inner, max_size=3)),
    max_leaves=12,
)
preds = st.recursive(
    st.builds(pcxpath.Eq, st.sampled_from(["name", "args"]), attr_values)
    | st.builds(pcxpath.Contains, st.sampled_from(["name", "args"]), attr_values),
    lambda inner: st.builds(pcxpath.Not, inner) | st.builds(pcxpath.And, inner, inner)
    | st.builds(pcxpath.Or, inner, inner),
    max_leaves=5,
)


def _select(pred, doc):
    query = pcxpath.Query((pcxpath.Step("descendant", "*", (pred,)),))
    return [id(n) for n in pcxpath.select(query, doc)]


@MANY
@given(docs, preds, preds)
def test_predicate_algebra(doc, p, q):
    assert _select(pcxpath.Not(pcxpath.Not(p)), doc) == _select(p, doc)
    assert sorted(_select(pcxpath.And(p, q), doc)) == sorted(_select(pcxpath.And(q, p), doc))
    assert sorted(_select(pcxpath.Or(p, q), doc)) == sorted(_select(pcxpath.Or(q, p), doc))
