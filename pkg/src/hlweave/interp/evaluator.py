"""Tree-walking evaluator for HL programs."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Any

from ..syntax import K, NOWHERE, Node, SourceLoc, statements
from .values import (
    Builtin, Closure, Env, ExceptionVal, HLThrow, ModuleVal, NamedTupleVal, RangeVal,
    ReturnSignal, StructType, StructVal, display, type_name,
)


class EntryError(Exception):
    """The requested entry function cannot be found or called without arguments."""


@dataclass
class RunError:
    message: str
    stack: list[SourceLoc]


@dataclass
class RunResult:
    value: Any
    stdout: str
    error: RunError | None = None
    trace: list = field(default_factory=list)


class Interpreter:
    def __init__(self):
        self.out = io.StringIO()
        self.trace: list = []
        self.frames: list[SourceLoc] = [NOWHERE]
        self.steps = 0
        self.clock = 0
        self.counter = 0
        self.builtins = Env(None, "builtin")
        self.main = Env(self.builtins, "module")
        self.main_module = ModuleVal("Main", self.main)
        for name, fn in BUILTINS.items():
            self.builtins.define(name, Builtin(name, fn))
        self.builtins.define("nothing", None)

    # -- public API ------------------------------------------------------
    def load(self, program: Node) -> Any:
        return self.eval(program, self.main)

    def resolve(self, dotted: str):
        parts = dotted.split(".")
        if parts[0] == "Main" and "Main" not in self.main.vars:
            parts = parts[1:]
        if not parts or not all(parts):
            raise EntryError(f"unknown entry {dotted!r}")
        env = self.main
        value = None
        for i, part in enumerate(parts):
            if env is None or part not in env.vars:
                raise EntryError(f"unknown entry {dotted!r}")
            value = env.vars[part]
            env = value.env if isinstance(value, ModuleVal) and i < len(parts) - 1 else None
        if not callable_value(value):
            raise EntryError(f"entry {dotted!r} is not a function")
        return value

    def call(self, f, args=(), kwargs=None) -> Any:
        return self.call_value(f, list(args), dict(kwargs or {}))

    # -- errors ----------------------------------------------------------
    def throw(self, type_name_: str, message: str):
        raise HLThrow(ExceptionVal(type_name_, message), list(self.frames))

    # -- evaluation ------------------------------------------------------
    def eval(self, node: Node, env: Env) -> Any:
        self.steps += 1
        method = DISPATCH.get(node.kind)
        if method is None:
            self.throw("ErrorException", f"cannot evaluate {node.kind.value} node")
        return method(self, node, env)

    def e_block(self, node, env):
        value = None
        for c in node.children:
            if c.kind is K.LineInfo:
                self.frames[-1] = c.loc
            else:
                value = self.eval(c, env)
        return value

    def e_symbol(self, node, env):
        try:
            return env.lookup(node.atom)
        except KeyError:
            self.throw("UndefVarError", f"{node.atom} not defined")

    def e_literal(self, node, env):
        return node.atom

    def e_interp(self, node, env):
        return "".join(display(self.eval(c, env)) for c in node.children)

    def e_array(self, node, env):
        return [self.eval(c, env) for c in node.children]

    def e_tuple(self, node, env):
        if node.children and node.children[0].kind is K.Bind:
            return NamedTupleVal({b.children[0].atom: self.eval(b.children[1], env)
                                  for b in node.children})
        return tuple(self.eval(c, env) for c in node.children)

    def e_map(self, node, env):
        c = node.children
        return {self.eval(c[i], env): self.eval(c[i + 1], env) for i in range(0, len(c), 2)}

    def e_range(self, node, env):
        lo, hi = (self.eval(c, env) for c in node.children)
        if not (is_int(lo) and is_int(hi)):
            self.throw("TypeError", "range bounds must be integers")
        return RangeVal(lo, hi)

    def e_call(self, node, env):
        callee = self.eval(node.children[0], env)
        args, kwargs = [], {}
        for c in node.children[1:]:
            if c.kind is K.Bind:
                kwargs[c.children[0].atom] = self.eval(c.children[1], env)
            else:
                args.append(self.eval(c, env))
        return self.call_value(callee, args, kwargs)

    def e_macro(self, node, env):
        name = node.children[0].atom
        if name == "@time":
            start = self.steps
            value = self.eval(node.children[1], env)
            self.out.write(f"time: {self.steps - start} ns\n")
            return value
        if name == "@isdefined":
            return env.defined(node.children[1].atom)
        self.throw("ErrorException", f"unexpanded macro {name}")

    def e_assign(self, node, env):
        value = self.eval(node.children[1], env)
        env.assign(node.children[0].atom, value)
        return value

    def e_opassign(self, node, env):
        target, op, rhs = node.children
        if target.kind is K.Symbol:
            current = self.e_symbol(target, env)
            value = self.binop(op.atom, current, self.eval(rhs, env))
            env.assign(target.atom, value)
            return value
        base = self.eval(target.children[0], env)
        if target.kind is K.IndexRef:
            idx = self.eval(target.children[1], env)
            value = self.binop(op.atom, self.getindex(base, idx), self.eval(rhs, env))
            self.setindex(base, idx, value)
        else:
            fname = target.children[1].atom
            value = self.binop(op.atom, self.getfield(base, fname), self.eval(rhs, env))
            self.setfield(base, fname, value)
        return value

    def e_index_assign(self, node, env):
        base = self.eval(node.children[0], env)
        idx = self.eval(node.children[1], env)
        value = self.eval(node.children[2], env)
        self.setindex(base, idx, value)
        return value

    def e_field_assign(self, node, env):
        base = self.eval(node.children[0], env)
        value = self.eval(node.children[2], env)
        self.setfield(base, node.children[1].atom, value)
        return value

    def e_index(self, node, env):
        base = self.eval(node.children[0], env)
        return self.getindex(base, self.eval(node.children[1], env))

    def e_field(self, node, env):
        return self.getfield(self.eval(node.children[0], env), node.children[1].atom)

    def e_for(self, node, env):
        *iters, body = node.children
        self.loop(iters, body, env)
        return None

    def loop(self, iters, body, env):
        head, rest = iters[0], iters[1:]
        var, src = head.children
        seq = self.eval(src, env)
        if not isinstance(seq, (list, tuple, RangeVal, str)):
            self.throw("MethodError", f"cannot iterate over {type_name(seq)}")
        for item in list(seq):
            scope = Env(env, "local")
            scope.define(var.atom, item)
            if rest:
                self.loop(rest, body, scope)
            else:
                self.eval(body, scope)

    def e_if(self, node, env):
        cond = self.truth(self.eval(node.children[0], env), "if")
        if cond:
            return self.eval(node.children[1], env)
        if len(node.children) > 2:
            return self.eval(node.children[2], env)
        return None

    def e_let(self, node, env):
        scope = Env(env, "local")
        for b in node.children[:-1]:
            scope.define(b.children[0].atom, self.eval(b.children[1], scope))
        return self.eval(node.children[-1], scope)

    def e_try(self, node, env):
        body, var, handler, final = node.children
        try:
            try:
                return self.eval(body, env)
            except HLThrow as exc:
                if handler.kind is K.Empty:
                    raise
                scope = Env(env, "local")
                if var.kind is K.Symbol:
                    scope.define(var.atom, exc.value)
                return self.eval(handler, scope)
        finally:
            if final.kind is not K.Empty:
                self.eval(final, env)

    def e_throw(self, node, env):
        raise HLThrow(self.eval(node.children[0], env), list(self.frames))

    def e_and(self, node, env):
        if not self.truth(self.eval(node.children[0], env), "&&"):
            return False
        return self.eval(node.children[1], env)

    def e_or(self, node, env):
        if self.truth(self.eval(node.children[0], env), "||"):
            return True
        return self.eval(node.children[1], env)

    def e_return(self, node, env):
        value = self.eval(node.children[0], env) if node.children else None
        raise ReturnSignal(value)

    def e_funcdef(self, node, env):
        name, params, body = node.children
        f = Closure(name.atom, params, body, env)
        env.define(name.atom, f)
        return f

    def e_lambda(self, node, env):
        params, body = node.children
        return Closure("#anonymous", params, body, env)

    def e_struct(self, node, env):
        name, mutable, body = node.children
        members = statements(body)
        st = StructType(name.atom, [m.children[0].atom for m in members if m.kind is K.Param],
                        bool(mutable.atom))
        cenv = Env(env, "local")
        cenv.define("new", Builtin("new", lambda interp, a, kw: interp.instantiate(st, a)))
        for m in members:
            if m.kind is K.FunctionDef:
                fname, params, fbody = m.children
                if fname.atom != st.name:
                    self.throw("ErrorException", f"struct {st.name} may only define constructors")
                st.constructors.append(Closure(fname.atom, params, fbody, cenv))
        env.define(st.name, st)
        return st

    def e_module(self, node, env):
        name, body = node.children
        menv = Env(self.builtins, "module")
        mod = ModuleVal(name.atom, menv)
        env.define(name.atom, mod)
        self.eval(body, menv)
        return mod

    def e_include(self, node, env):
        self.throw("ErrorException", "include must be resolved before execution")

    def e_attr(self, node, env):
        return self.eval(node.children[1], env)

    def e_nothing(self, node, env):
        return None

    # -- calling ---------------------------------------------------------
    def call_value(self, f, args: list, kwargs: dict):
        if isinstance(f, Builtin):
            return f.fn(self, args, kwargs)
        if isinstance(f, Closure):
            return self.invoke(f, args, kwargs)
        if isinstance(f, StructType):
            if f.constructors:
                for ctor in f.constructors:
                    if accepts(ctor, len(args)):
                        return self.invoke(ctor, args, kwargs)
                self.throw("MethodError", f"no constructor {f.name} for {len(args)} arguments")
            return self.instantiate(f, args)
        self.throw("MethodError", f"objects of type {type_name(f)} are not callable")

    def invoke(self, f: Closure, args: list, kwargs: dict):
        fenv = Env(f.env, "function")
        params = f.params.children
        pos = [p for p in params if p.kind is K.Param]
        var = [p for p in params if p.kind is K.VarParam]
        kws = [p for p in params if p.kind is K.KwParam]
        kwvar = [p for p in params if p.kind is K.KwVarParam]
        required = sum(1 for p in pos if p.children[2].kind is K.Empty)
        if len(args) < required or (not var and len(args) > len(pos)):
            self.throw("MethodError", f"{f.name} called with {len(args)} arguments")
        for i, p in enumerate(pos):
            pname = p.children[0].atom
            if i < len(args):
                fenv.define(pname, args[i])
            else:
                fenv.define(pname, self.eval(p.children[2], fenv))
        if var:
            fenv.define(var[0].children[0].atom, tuple(args[len(pos):]))
        rest = dict(kwargs)
        for p in kws:
            pname = p.children[0].atom
            if pname in rest:
                fenv.define(pname, rest.pop(pname))
            elif p.children[2].kind is not K.Empty:
                fenv.define(pname, self.eval(p.children[2], fenv))
            else:
                self.throw("UndefKeywordError", f"keyword argument {pname} not assigned")
        if kwvar:
            fenv.define(kwvar[0].children[0].atom, rest)
        elif rest:
            self.throw("MethodError", f"{f.name} got unsupported keyword arguments {sorted(rest)}")
        self.frames.append(f.body.loc)
        try:
            return self.eval(f.body, fenv)
        except ReturnSignal as r:
            return r.value
        finally:
            self.frames.pop()

    def instantiate(self, st: StructType, args: list) -> StructVal:
        if len(args) != len(st.fields):
            self.throw("MethodError", f"{st.name} expects {len(st.fields)} fields, got {len(args)}")
        return StructVal(st, dict(zip(st.fields, args)))

    # -- primitive helpers -----------------------------------------------
    def truth(self, v, where: str) -> bool:
        if not isinstance(v, bool):
            self.throw("TypeError", f"non-boolean ({type_name(v)}) used in {where}")
        return v

    def binop(self, op: str, a, b):
        return OPERATORS[op](self, [a, b], {})

    def getindex(self, base, idx):
        if isinstance(base, dict):
            if idx not in base:
                self.throw("KeyError", f"key {display(idx)} not found")
            return base[idx]
        if isinstance(base, NamedTupleVal):
            if not is_int(idx) or not 1 <= idx <= len(base.values):
                self.throw("BoundsError", f"index {display(idx)} out of range")
            return list(base.values.values())[idx - 1]
        if isinstance(base, (list, tuple, str, RangeVal)):
            seq = list(base) if isinstance(base, RangeVal) else base
            if not is_int(idx) or not 1 <= idx <= len(seq):
                self.throw("BoundsError", f"index {display(idx)} out of range")
            return seq[idx - 1]
        self.throw("MethodError", f"cannot index {type_name(base)}")

    def setindex(self, base, idx, value):
        if isinstance(base, dict):
            base[idx] = value
        elif isinstance(base, list):
            if not is_int(idx) or not 1 <= idx <= len(base):
                self.throw("BoundsError", f"index {display(idx)} out of range")
            base[idx - 1] = value
        else:
            self.throw("MethodError", f"cannot assign into {type_name(base)}")

    def getfield(self, base, name: str):
        if isinstance(base, StructVal):
            if name not in base.values:
                self.throw("FieldError", f"{base.type.name} has no field {name}")
            return base.values[name]
        if isinstance(base, NamedTupleVal):
            if name not in base.values:
                self.throw("FieldError", f"named tuple has no field {name}")
            return base.values[name]
        if isinstance(base, ModuleVal):
            if name not in base.env.vars:
                self.throw("UndefVarError", f"{base.name}.{name} not defined")
            return base.env.vars[name]
        self.throw("FieldError", f"type {type_name(base)} has no field {name}")

    def setfield(self, base, name: str, value):
        if not isinstance(base, StructVal):
            self.throw("FieldError", f"cannot set field of {type_name(base)}")
        if not base.type.mutable:
            self.throw("ErrorException", f"setfield!: immutable struct of type {base.type.name} cannot be changed")
        if name not in base.values:
            self.throw("FieldError", f"{base.type.name} has no field {name}")
        base.values[name] = value


def is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def callable_value(v) -> bool:
    return isinstance(v, (Closure, Builtin, StructType))


def accepts(f: Closure, nargs: int) -> bool:
    params = f.params.children
    pos = [p for p in params if p.kind is K.Param]
    required = sum(1 for p in pos if p.children[2].kind is K.Empty)
    variadic = any(p.kind is K.VarParam for p in params)
    return nargs >= required and (variadic or nargs <= len(pos))


DISPATCH = {
    K.Block: Interpreter.e_block,
    K.Symbol: Interpreter.e_symbol,
    K.IntLit: Interpreter.e_literal,
    K.FloatLit: Interpreter.e_literal,
    K.BoolLit: Interpreter.e_literal,
    K.StringLit: Interpreter.e_literal,
    K.StringInterp: Interpreter.e_interp,
    K.ArrayLit: Interpreter.e_array,
    K.TupleLit: Interpreter.e_tuple,
    K.MapLit: Interpreter.e_map,
    K.Range: Interpreter.e_range,
    K.Call: Interpreter.e_call,
    K.MacroCall: Interpreter.e_macro,
    K.Assign: Interpreter.e_assign,
    K.OpAssign: Interpreter.e_opassign,
    K.IndexAssign: Interpreter.e_index_assign,
    K.FieldAssign: Interpreter.e_field_assign,
    K.IndexRef: Interpreter.e_index,
    K.FieldRef: Interpreter.e_field,
    K.For: Interpreter.e_for,
    K.If: Interpreter.e_if,
    K.Let: Interpreter.e_let,
    K.TryCatchFinally: Interpreter.e_try,
    K.Throw: Interpreter.e_throw,
    K.AndAnd: Interpreter.e_and,
    K.OrOr: Interpreter.e_or,
    K.Return: Interpreter.e_return,
    K.FunctionDef: Interpreter.e_funcdef,
    K.ShortFuncDef: Interpreter.e_funcdef,
    K.Lambda: Interpreter.e_lambda,
    K.StructDef: Interpreter.e_struct,
    K.Module: Interpreter.e_module,
    K.Include: Interpreter.e_include,
    K.AttrAnnot: Interpreter.e_attr,
    K.LineInfo: Interpreter.e_nothing,
    K.Empty: Interpreter.e_nothing,
}


# -- builtins ------------------------------------------------------------
def _arity(interp, name, args, lo, hi=None):
    hi = lo if hi is None else hi
    if not lo <= len(args) <= hi:
        interp.throw("MethodError", f"{name} called with {len(args)} arguments")


def _numeric(interp, name, args):
    for a in args:
        if not is_num(a):
            interp.throw("MethodError", f"no method {name} for {type_name(a)}")


def b_add(interp, args, kw):
    _arity(interp, "+", args, 2)
    _numeric(interp, "+", args)
    return args[0] + args[1]


def b_sub(interp, args, kw):
    _arity(interp, "-", args, 1, 2)
    _numeric(interp, "-", args)
    return -args[0] if len(args) == 1 else args[0] - args[1]


def b_mul(interp, args, kw):
    _arity(interp, "*", args, 2)
    a, b = args
    if isinstance(a, str) and isinstance(b, str):
        return a + b
    _numeric(interp, "*", args)
    return a * b


def b_div(interp, args, kw):
    _arity(interp, "/", args, 2)
    _numeric(interp, "/", args)
    a, b = float(args[0]), float(args[1])
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _compare(op):
    def fn(interp, args, kw):
        _arity(interp, op, args, 2)
        a, b = args
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if not ((is_num(a) and is_num(b)) or (isinstance(a, str) and isinstance(b, str))):
            interp.throw("MethodError", f"cannot compare {type_name(a)} and {type_name(b)}")
        return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op]
    return fn


def b_not(interp, args, kw):
    _arity(interp, "!", args, 1)
    return not interp.truth(args[0], "!")


def b_print(interp, args, kw):
    interp.out.write("".join(display(a) for a in args))
    return None


def b_println(interp, args, kw):
    interp.out.write("".join(display(a) for a in args) + "\n")
    return None


def b_push(interp, args, kw):
    if not args or not isinstance(args[0], list):
        interp.throw("MethodError", "push! expects an array")
    args[0].extend(args[1:])
    return args[0]


def b_pop(interp, args, kw):
    _arity(interp, "pop!", args, 1)
    if not isinstance(args[0], list):
        interp.throw("MethodError", "pop! expects an array")
    if not args[0]:
        interp.throw("ArgumentError", "array must be non-empty")
    return args[0].pop()


def b_length(interp, args, kw):
    _arity(interp, "length", args, 1)
    v = args[0]
    if isinstance(v, NamedTupleVal):
        return len(v.values)
    if isinstance(v, (list, tuple, str, dict, RangeVal)):
        return len(v)
    interp.throw("MethodError", f"no method length for {type_name(v)}")


def b_error(interp, args, kw):
    interp.throw("ErrorException", "".join(display(a) for a in args))


def b_throw(interp, args, kw):
    _arity(interp, "throw", args, 1)
    raise HLThrow(args[0], list(interp.frames))


def b_sleep(interp, args, kw):
    _arity(interp, "sleep", args, 1)
    interp.trace.append(("sleep", args[0]))
    return None


def b_mynow(interp, args, kw):
    interp.clock += 1
    return interp.clock


def b_myfetch(interp, args, kw):
    _arity(interp, "myfetch", args, 1)
    return "fetched:" + display(args[0])


def b_counter(interp, args, kw):
    _arity(interp, "counter!", args, 0, 1)
    interp.counter += 1
    value = args[0] if args else interp.counter
    interp.trace.append(("counter", value))
    return value


def b_mkmap(interp, args, kw):
    if len(args) % 2:
        interp.throw("ArgumentError", "mkmap expects key/value pairs")
    return {display(args[i]): args[i + 1] for i in range(0, len(args), 2)}


def b_string(interp, args, kw):
    return "".join(display(a) for a in args)


OPERATORS = {
    "+": b_add, "-": b_sub, "*": b_mul, "/": b_div, "!": b_not,
    **{op: _compare(op) for op in ("==", "!=", "<", ">", "<=", ">=")},
}

BUILTINS = {
    **OPERATORS,
    "print": b_print,
    "println": b_println,
    "push!": b_push,
    "pop!": b_pop,
    "length": b_length,
    "error": b_error,
    "throw": b_throw,
    "sleep": b_sleep,
    "mynow": b_mynow,
    "myfetch": b_myfetch,
    "counter!": b_counter,
    "mkmap": b_mkmap,
    "string": b_string,
}


def run(program: Node, entry: str | None = "main", args=()) -> RunResult:
    """Evaluate top-level statements of ``program``, then call ``entry`` with ``args``.

    With ``entry=None`` only the top-level statements run and the value of the
    last one is returned.
    """
    interp = Interpreter()
    try:
        value = interp.load(program)
        if entry is not None:
            f = interp.resolve(entry)
            if isinstance(f, Closure) and not accepts(f, len(args)):
                raise EntryError(f"entry {entry!r} cannot be called with {len(args)} arguments")
            value = interp.call(f, args)
    except HLThrow as exc:
        v = exc.value
        message = v.message if isinstance(v, ExceptionVal) else display(v)
        return RunResult(None, interp.out.getvalue(), RunError(message, exc.stack), interp.trace)
    except ReturnSignal as r:
        value = r.value
    except RecursionError:
        return RunResult(None, interp.out.getvalue(),
                         RunError("stack overflow", list(interp.frames)), interp.trace)
    return RunResult(value, interp.out.getvalue(), None, interp.trace)


def eval_expr(node: Node, env: Env | None = None, interp: Interpreter | None = None):
    """Evaluate a single expression; a fresh interpreter is used when none is given."""
    interp = interp or Interpreter()
    return interp.eval(node, env or interp.main)
