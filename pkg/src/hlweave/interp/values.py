"""Runtime values for the HL interpreter.

Scalars map onto Python: Integer -> int, Float -> float, Boolean -> bool,
Text -> str, Nil -> None, ArrayVal -> list, TupleVal -> tuple, MapVal -> dict.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from ..syntax import Node, SourceLoc


@dataclass(frozen=True)
class RangeVal:
    lo: int
    hi: int

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)


@dataclass
class StructType:
    name: str
    fields: list[str]
    mutable: bool
    constructors: list["Closure"] = field(default_factory=list)


@dataclass
class StructVal:
    type: StructType
    values: dict[str, Any]

    def __eq__(self, other):
        return isinstance(other, StructVal) and self.type is other.type and self.values == other.values


@dataclass
class NamedTupleVal:
    values: dict[str, Any]


@dataclass
class Closure:
    name: str
    params: Node
    body: Node
    env: "Env"


@dataclass
class Builtin:
    name: str
    fn: Callable


@dataclass
class ModuleVal:
    name: str
    env: "Env"


@dataclass
class ExceptionVal:
    type_name: str
    message: str


class Env:
    """A lexical scope. ``kind`` is one of builtin, module, function, local."""

    __slots__ = ("vars", "parent", "kind")

    def __init__(self, parent: "Env | None" = None, kind: str = "local"):
        self.vars: dict[str, Any] = {}
        self.parent = parent
        self.kind = kind

    def lookup(self, name: str):
        env = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            env = env.parent
        raise KeyError(name)

    def defined(self, name: str) -> bool:
        env = self
        while env is not None:
            if name in env.vars:
                return True
            env = env.parent
        return False

    def define(self, name: str, value) -> None:
        self.vars[name] = value

    def assign(self, name: str, value) -> None:
        # Existing locals are updated; module globals only from top-level
        # scopes (no function boundary crossed); otherwise a new local.
        env = self
        crossed = False
        while env is not None and env.kind != "builtin":
            if env.kind == "module":
                if not crossed and name in env.vars:
                    env.vars[name] = value
                    return
                break
            if name in env.vars:
                env.vars[name] = value
                return
            if env.kind == "function":
                crossed = True
            env = env.parent
        self.vars[name] = value


class HLThrow(Exception):
    """An HL-level exception propagating through the interpreter."""

    def __init__(self, value, stack: list[SourceLoc]):
        super().__init__(display(value))
        self.value = value
        self.stack = stack


class ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


def type_name(v) -> str:
    if v is None:
        return "Nothing"
    if isinstance(v, bool):
        return "Bool"
    if isinstance(v, int):
        return "Int64"
    if isinstance(v, float):
        return "Float64"
    if isinstance(v, str):
        return "String"
    if isinstance(v, list):
        return "Array"
    if isinstance(v, tuple):
        return "Tuple"
    if isinstance(v, dict):
        return "Dict"
    if isinstance(v, RangeVal):
        return "UnitRange"
    if isinstance(v, StructVal):
        return v.type.name
    if isinstance(v, NamedTupleVal):
        return "NamedTuple"
    if isinstance(v, (Closure, Builtin)):
        return "Function"
    if isinstance(v, ModuleVal):
        return "Module"
    if isinstance(v, StructType):
        return "DataType"
    if isinstance(v, ExceptionVal):
        return v.type_name
    return type(v).__name__


def display(v) -> str:
    """Text produced by print/println and string interpolation."""
    if isinstance(v, str):
        return v
    return show(v)


def show(v) -> str:
    """Representation used inside containers (strings are quoted)."""
    if v is None:
        return "nothing"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(show(x) for x in v) + "]"
    if isinstance(v, tuple):
        if len(v) == 1:
            return f"({show(v[0])},)"
        return "(" + ", ".join(show(x) for x in v) + ")"
    if isinstance(v, dict):
        return "Dict(" + ", ".join(f"{show(k)} => {show(x)}" for k, x in v.items()) + ")"
    if isinstance(v, RangeVal):
        return f"{v.lo}:{v.hi}"
    if isinstance(v, StructVal):
        return f"{v.type.name}(" + ", ".join(show(x) for x in v.values.values()) + ")"
    if isinstance(v, NamedTupleVal):
        inner = ", ".join(f"{k} = {show(x)}" for k, x in v.values.items())
        return f"({inner},)" if len(v.values) == 1 else f"({inner})"
    if isinstance(v, Closure):
        return v.name
    if isinstance(v, Builtin):
        return v.name
    if isinstance(v, ModuleVal):
        return v.name
    if isinstance(v, StructType):
        return v.name
    if isinstance(v, ExceptionVal):
        return f'{v.type_name}("{v.message}")'
    return repr(v)
