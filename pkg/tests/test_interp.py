import math

import pytest

from hlweave.interp import EntryError, Interpreter, display, eval_expr, run
from hlweave.syntax import parse, statements


def run_src(src, entry="main", **kw):
    return run(parse(src, "p.hl"), entry, **kw)


def expr_value(src, setup=""):
    interp = Interpreter()
    if setup:
        interp.load(parse(setup, "setup.hl"))
    (node,) = statements(parse(src, "e.hl"))
    return interp, eval_expr(node, interp.main, interp)


def test_pop_mutates_array():
    interp, value = expr_value("pop!(ary)", "ary = [1, 2, 3]")
    assert value == 3
    assert interp.main.lookup("ary") == [1, 2]


def test_short_circuit_skips_rhs():
    interp, value = expr_value("false && pop!(ary)", "ary = [1, 2, 3]")
    assert value is False
    assert interp.main.lookup("ary") == [1, 2, 3]


def test_assignment_returns_value():
    interp, value = expr_value("x = 5")
    assert value == 5 and interp.main.lookup("x") == 5


def test_empty_program_has_no_entry():
    with pytest.raises(EntryError):
        run(parse("", "e.hl"), "main")


def test_entry_with_required_args_is_rejected():
    with pytest.raises(EntryError):
        run_src("function main(x)\nend")


def test_module_entry_and_output():
    r = run_src('module T\nfunction main()\n    print("a")\n    println(1, " ", 2.5)\nend\nend', "T.main")
    assert r.stdout == "a1 2.5\n" and r.error is None
    assert run_src("function main()\n 7\nend", "Main.main").value == 7


def test_uncaught_error_becomes_run_error():
    r = run_src('function main()\n    println("x")\n    error("boom")\nend')
    assert r.stdout == "x\n"
    assert r.error.message == "boom" and r.value is None
    assert any(loc.line == 3 for loc in r.error.stack)


def test_runtime_type_errors_are_reported():
    r = run_src("function main()\n    x = 1\n    x[1]\nend")
    assert r.error is not None and "index" in r.error.message


def test_try_catch_finally_and_rethrow():
    src = """
function main()
    try
        try
            error("inner")
        catch e
            println("caught ", e)
            throw(e)
        finally
            println("finally")
        end
    catch outer
        println("outer ", outer)
    end
end
"""
    r = run_src(src)
    assert r.stdout == ('caught ErrorException("inner")\nfinally\n'
                        'outer ErrorException("inner")\n')


def test_closures_capture_lexically():
    src = """
function make(n)
    (x) -> x + n
end
function main()
    add2 = make(2)
    add2(40)
end
"""
    assert run_src(src).value == 42


def test_let_scope_does_not_leak():
    src = """
function main()
    let y = 1
        z = 2
    end
    @isdefined(y) || @isdefined(z)
end
"""
    assert run_src(src).value is False


def test_isdefined_sees_enclosing_scopes():
    src = """
x = 1
function main()
    let a = 2
        @isdefined(x) && @isdefined(a) && !@isdefined(b)
    end
end
"""
    assert run_src(src).value is True


def test_function_assignment_does_not_clobber_globals():
    src = """
n = 1
function main()
    n = 5
    n
end
"""
    r = run(parse(src + "\nmain()\nn", "g.hl"), None)
    assert r.value == 1


def test_structs():
    src = """
struct P
    x
    y
end
mutable struct Q
    v
end
function main()
    q = Q(1)
    q.v = 2
    p = P(1, 2)
    p.x = 5
end
"""
    r = run_src(src)
    assert r.error is not None and "immutable" in r.error.message


def test_struct_constructor_with_new():
    src = """
struct MYST
    x
    y
    init_time
    function MYST(x, y)
        new(x, y, mynow())
    end
end
function main()
    a = MYST(1, 2)
    b = MYST(3, 4)
    [a.init_time, b.init_time]
end
"""
    assert run_src(src).value == [1, 2]


def test_keyword_and_variadic_arguments():
    src = """
function f(a, rest...; k = 10, kw...)
    [a, length(rest), k, length(kw)]
end
function main()
    f(1, 2, 3; k = 4, extra = 5)
end
"""
    assert run_src(src).value == [1, 2, 4, 1]


def test_division_and_ranges():
    src = "function main()\n    s = 0\n    for i in 1:4\n        s += i\n    end\n    [s / 4, 3:2]\nend"
    value = run_src(src).value
    assert value[0] == 2.5 and list(value[1]) == []
    assert math.isinf(run_src("function main()\n 1 / 0\nend").value)


def test_time_prints_a_duration_line():
    r = run_src("function main()\n    @time sleep(1)\nend")
    assert r.stdout.startswith("time: ") and r.stdout.endswith(" ns\n")
    assert r.trace == [("sleep", 1)]


def test_builtin_stand_ins():
    src = 'function main()\n    [myfetch("u"), mynow(), mynow(), counter!(7), counter!(), mkmap("a", 1)]\nend'
    r = run_src(src)
    assert r.value == ["fetched:u", 1, 2, 7, 2, {"a": 1}]
    assert r.trace == [("counter", 7), ("counter", 2)]


def test_named_tuple_display():
    r = run_src('function main()\n    println((args = [1, "a"], kargs = Dict()))\nend')
    assert r.stdout == '(args = [1, "a"], kargs = Dict())\n'


def test_call_with_arguments():
    src = "function mycalc(x, y, z = 100)\n    (x + y) / z\nend"
    assert run_src(src, "mycalc", args=(1, 2)).value == pytest.approx(0.03, abs=1e-12)


def test_non_boolean_condition_is_an_error():
    assert run_src("function main()\n    if 1\n        2\n    end\nend").error is not None


def test_display_of_functions_uses_name():
    assert display(run_src("function f()\nend\nfunction main()\n    f\nend").value) == "f"


def test_determinism():
    src = "function main()\n    @time println(mynow())\nend"
    a, b = run_src(src), run_src(src)
    assert a.stdout == b.stdout and a.value == b.value


def test_deep_recursion_is_reported_not_crashing():
    r = run_src("f(n) = f(n + 1)\nfunction main()\n    f(1)\nend")
    assert r.error is not None
