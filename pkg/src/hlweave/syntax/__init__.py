from .lexer import HLSyntaxError, tokenize
from .nodes import (
    EMPTY, K, LITERAL_KINDS, NOWHERE, Node, NodeKind, SourceLoc, block, check_arity,
    contains_kind, get_path, line_info, lit, mk, node_equal, pairs, replace_paths, statements, sym,
    symbols_in, walk,
)
from .parser import parse
from .printer import PrintError, print_source

__all__ = [
    "EMPTY", "HLSyntaxError", "K", "LITERAL_KINDS", "NOWHERE", "Node", "NodeKind",
    "PrintError", "SourceLoc", "block", "check_arity", "get_path", "line_info", "lit",
    "mk", "node_equal", "pairs", "parse", "print_source", "replace_paths", "statements",
    "sym", "symbols_in", "contains_kind", "tokenize", "walk",
]
