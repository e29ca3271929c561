"""Shared tokenizer and term-level parsing helpers for the text formats."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .terms import FALSE, TRUE, ObjectTerm


class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # VAR IDENT STRING INT OP EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<VAR>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<STRING>"(?:[^"\\\n]|\\.)*")
  | (?P<OP><=|>=|!=|->|=|<|>|\(|\)|\[|\]|\{|\}|,|\.|\||:|!|;)
  | (?P<INT>-?[0-9]+)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z][A-Za-z0-9_]*)*)
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, m.start() - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = m.start() + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, offset=0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind, text=None, offset=0) -> bool:
        tok = self.peek(offset)
        return tok.kind == kind and (text is None or tok.text == text)

    def at_op(self, text, offset=0) -> bool:
        return self.at("OP", text, offset)

    def at_word(self, text, offset=0) -> bool:
        return self.at("IDENT", text, offset)

    def accept(self, kind, text=None):
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind, text=None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = repr(text) if text is not None else kind
            got = repr(tok.text) if tok.kind != "EOF" else "end of input"
            raise self.error(f"expected {want}, got {got}", tok)
        return self.next()

    def expect_op(self, text) -> Token:
        return self.expect("OP", text)

    def expect_word(self, text) -> Token:
        return self.expect("IDENT", text)

    def error(self, message, tok=None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.column)

    def at_end(self) -> bool:
        return self.peek().kind == "EOF"

    def expect_end(self):
        if not self.at_end():
            raise self.error(f"unexpected {self.peek().text!r}")


def parse_literal(ts: TokenStream):
    """Parse a string, integer, boolean or ground object term literal."""
    tok = ts.peek()
    if tok.kind == "STRING":
        ts.next()
        return json.loads(tok.text)
    if tok.kind == "INT":
        ts.next()
        return int(tok.text)
    if tok.kind == "IDENT" and tok.text in ("true", "false"):
        ts.next()
        return TRUE if tok.text == "true" else FALSE
    if tok.kind == "IDENT" and ts.at_op("(", 1):
        ts.next()
        ts.expect_op("(")
        args = []
        if not ts.at_op(")"):
            args.append(_plain_literal(ts))
            while ts.accept("OP", ","):
                args.append(_plain_literal(ts))
        ts.expect_op(")")
        return ObjectTerm(tok.text, tuple(args))
    raise ts.error(f"expected a literal, got {tok.text!r}", tok)


def _plain_literal(ts):
    lit = parse_literal(ts)
    if isinstance(lit, ObjectTerm):
        raise ts.error("object terms cannot be nested")
    return lit


def at_literal(ts: TokenStream) -> bool:
    tok = ts.peek()
    return tok.kind in ("STRING", "INT") or (tok.kind == "IDENT" and tok.text in ("true", "false"))
