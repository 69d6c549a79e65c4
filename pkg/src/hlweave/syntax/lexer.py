from __future__ import annotations

from dataclasses import dataclass
from typing import Any


class HLSyntaxError(Exception):
    def __init__(self, message: str, file: str, line: int, token: str = ""):
        self.message = message
        self.file = file
        self.line = line
        self.token = token
        where = f" near {token!r}" if token else ""
        super().__init__(f"{file}:{line}: syntax error: {message}{where}")


KEYWORDS = frozenset({
    "function", "end", "module", "struct", "mutable", "if", "elseif", "else",
    "for", "in", "let", "try", "catch", "finally", "return", "begin",
    "true", "false",
})

# longest first
OPERATORS = [
    "...", "::", "->", "=>", "==", "!=", "<=", ">=", "&&", "||", "+=",
    "(", ")", "[", "]", ",", ";", ".", "=", "<", ">", "+", "-", "*", "/",
    "!", ":",
]

ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", '"': '"', "$": "$", "0": "\0"}


@dataclass
class Token:
    type: str  # NL IDENT KW INT FLOAT STR MACRO OP EOF
    value: Any
    line: int
    col: int

    def is_op(self, *ops: str) -> bool:
        return self.type == "OP" and self.value in ops

    def is_kw(self, *kws: str) -> bool:
        return self.type == "KW" and self.value in kws

    def text(self) -> str:
        if self.type == "STR":
            return '"..."'
        if self.type == "NL":
            return "newline"
        if self.type == "EOF":
            return "end of input"
        return str(self.value)


def _ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


class Lexer:
    def __init__(self, text: str, filename: str = "<input>", first_line: int = 1):
        self.text = text
        self.file = filename
        self.pos = 0
        self.line = first_line
        self.line_start = 0
        self.tokens: list[Token] = []

    def error(self, msg: str, token: str = "") -> HLSyntaxError:
        return HLSyntaxError(msg, self.file, self.line, token)

    def peek(self, k: int = 0) -> str:
        i = self.pos + k
        return self.text[i] if i < len(self.text) else ""

    def add(self, type_: str, value: Any, col: int) -> None:
        self.tokens.append(Token(type_, value, self.line, col))

    def tokenize(self) -> list[Token]:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            col = self.pos - self.line_start + 1
            if ch == "\n":
                self.add("NL", "\n", col)
                self.pos += 1
                self.line += 1
                self.line_start = self.pos
            elif ch in " \t\r":
                self.pos += 1
            elif ch == "#":
                if self.peek(1) == "=":
                    self.block_comment()
                else:
                    while self.pos < len(text) and text[self.pos] != "\n":
                        self.pos += 1
            elif ch == '"':
                self.add("STR", self.string(), col)
            elif ch.isdigit():
                self.number(col)
            elif _ident_start(ch):
                start = self.pos
                while self.pos < len(text) and _ident_char(text[self.pos]):
                    self.pos += 1
                # trailing '!' belongs to the name unless it starts '!='
                if self.peek() == "!" and self.peek(1) != "=":
                    self.pos += 1
                word = text[start:self.pos]
                self.add("KW" if word in KEYWORDS else "IDENT", word, col)
            elif ch == "@":
                start = self.pos
                self.pos += 1
                if not _ident_start(self.peek()):
                    raise self.error("bad macro name", "@")
                while self.pos < len(text) and _ident_char(text[self.pos]):
                    self.pos += 1
                self.add("MACRO", text[start:self.pos], col)
            else:
                for op in OPERATORS:
                    if text.startswith(op, self.pos):
                        self.add("OP", op, col)
                        self.pos += len(op)
                        break
                else:
                    raise self.error("unexpected character", ch)
        self.add("EOF", None, self.pos - self.line_start + 1)
        return self.tokens

    def block_comment(self) -> None:
        start_line = self.line
        depth = 0
        text = self.text
        while self.pos < len(text):
            if text.startswith("#=", self.pos):
                depth += 1
                self.pos += 2
            elif text.startswith("=#", self.pos):
                depth -= 1
                self.pos += 2
                if depth == 0:
                    return
            else:
                if text[self.pos] == "\n":
                    self.line += 1
                    self.line_start = self.pos + 1
                self.pos += 1
        raise HLSyntaxError("unterminated block comment", self.file, start_line, "#=")

    def number(self, col: int) -> None:
        text = self.text
        start = self.pos
        is_float = False
        while self.peek().isdigit():
            self.pos += 1
        if self.peek() == "." and self.peek(1).isdigit():
            is_float = True
            self.pos += 1
            while self.peek().isdigit():
                self.pos += 1
        if self.peek() in ("e", "E") and (self.peek(1).isdigit() or (
                self.peek(1) in "+-" and self.peek(2).isdigit())):
            is_float = True
            self.pos += 2
            while self.peek().isdigit():
                self.pos += 1
        if _ident_start(self.peek()):
            raise self.error("malformed number", text[start:self.pos + 1])
        raw = text[start:self.pos]
        if is_float:
            self.add("FLOAT", float(raw), col)
        else:
            self.add("INT", int(raw), col)

    def string(self) -> list:
        """Scan a string literal into parts: ('s', text) | ('e', source, line)."""
        text = self.text
        start_line = self.line
        self.pos += 1
        parts: list = []
        buf: list[str] = []
        while True:
            if self.pos >= len(text):
                raise HLSyntaxError("unterminated string", self.file, start_line, '"')
            ch = text[self.pos]
            if ch == '"':
                self.pos += 1
                break
            if ch == "\\":
                esc = self.peek(1)
                if esc not in ESCAPES:
                    raise self.error("bad escape", "\\" + esc)
                buf.append(ESCAPES[esc])
                self.pos += 2
            elif ch == "$":
                if buf:
                    parts.append(("s", "".join(buf)))
                    buf = []
                self.pos += 1
                if self.peek() == "(":
                    parts.append(("e", self.interp_source(), self.line))
                elif _ident_start(self.peek()):
                    begin = self.pos
                    while self.pos < len(text) and _ident_char(text[self.pos]):
                        self.pos += 1
                    if self.peek() == "!" and self.peek(1) != "=":
                        self.pos += 1
                    parts.append(("e", text[begin:self.pos], self.line))
                else:
                    raise self.error("bad interpolation", "$")
            else:
                if ch == "\n":
                    self.line += 1
                    self.line_start = self.pos + 1
                buf.append(ch)
                self.pos += 1
        if buf or not parts:
            parts.append(("s", "".join(buf)))
        return parts

    def interp_source(self) -> str:
        """Return the text inside a balanced ``$( ... )``."""
        text = self.text
        depth = 0
        begin = self.pos + 1
        in_str = False
        while self.pos < len(text):
            ch = text[self.pos]
            if in_str:
                if ch == "\\":
                    self.pos += 1
                elif ch == '"':
                    in_str = False
            elif ch == '"':
                in_str = True
            elif ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    self.pos += 1
                    return text[begin:self.pos - 1]
            elif ch == "\n":
                self.line += 1
                self.line_start = self.pos + 1
            self.pos += 1
        raise self.error("unterminated interpolation", "$(")


def tokenize(text: str, filename: str = "<input>", first_line: int = 1) -> list[Token]:
    return Lexer(text, filename, first_line).tokenize()
