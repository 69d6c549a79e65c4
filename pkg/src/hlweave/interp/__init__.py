"""Reference interpreter for HL."""
from .evaluator import EntryError, Interpreter, RunError, RunResult, eval_expr, run
from .values import (
    Builtin, Closure, Env, ExceptionVal, HLThrow, ModuleVal, NamedTupleVal, RangeVal,
    StructType, StructVal, display, show, type_name,
)

__all__ = [
    "EntryError", "Interpreter", "RunError", "RunResult", "eval_expr", "run",
    "Builtin", "Closure", "Env", "ExceptionVal", "HLThrow", "ModuleVal", "NamedTupleVal",
    "RangeVal", "StructType", "StructVal", "display", "show", "type_name",
]
