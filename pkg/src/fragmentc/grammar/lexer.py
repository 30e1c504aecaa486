"""Tokenizer for the grammar-definition language and tool configs.

Comment rules (``//`` to end of line, ``/* */`` nested nowhere) are the same
ones instance documents use, but this lexer is meta-level only: it throws on
lexical errors instead of producing error tokens.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import MetaParseError
from ..reports import error

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

# longest first so "<<" wins over "<"
SYMBOLS = ("<<", ">>", "{", "}", "(", ")", "[", "]", ";", ":", ",", "=", "|", "?", "*", "+", ".", "<", ">")


@dataclass(frozen=True)
class MToken:
    kind: str  # ident | string | regex | sym | eof
    text: str  # for string/regex: the decoded value
    line: int
    col: int


def _fail(message: str, origin: str, line: int, col: int) -> MetaParseError:
    return MetaParseError([error(message, origin, line, col, source="meta-parser")])


def meta_lex(text: str, origin: str) -> list[MToken]:
    tokens: list[MToken] = []
    pos = 0
    line = 1
    col = 1
    n = len(text)

    def advance(count: int) -> None:
        nonlocal pos, line, col
        for _ in range(count):
            if text[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", pos):
            end = text.find("\n", pos)
            advance((end if end != -1 else n) - pos)
            continue
        if text.startswith("/*", pos):
            end = text.find("*/", pos + 2)
            if end == -1:
                raise _fail("unterminated block comment", origin, line, col)
            advance(end + 2 - pos)
            continue
        if ch == '"':
            start_line, start_col = line, col
            advance(1)
            value = []
            while pos < n and text[pos] != '"':
                if text[pos] == "\n":
                    raise _fail("unterminated string", origin, start_line, start_col)
                if text[pos] == "\\":
                    if pos + 1 >= n or text[pos + 1] not in ('"', "\\"):
                        raise _fail("bad escape in string", origin, line, col)
                    value.append(text[pos + 1])
                    advance(2)
                    continue
                value.append(text[pos])
                advance(1)
            if pos >= n:
                raise _fail("unterminated string", origin, start_line, start_col)
            advance(1)
            tokens.append(MToken("string", "".join(value), start_line, start_col))
            continue
        if ch == "/":
            # not a comment (handled above): a /regex/ literal
            start_line, start_col = line, col
            advance(1)
            value = []
            while pos < n and text[pos] != "/":
                if text[pos] == "\n":
                    raise _fail("unterminated regex", origin, start_line, start_col)
                if text[pos] == "\\" and pos + 1 < n and text[pos + 1] == "/":
                    value.append("/")
                    advance(2)
                    continue
                value.append(text[pos])
                advance(1)
            if pos >= n:
                raise _fail("unterminated regex", origin, start_line, start_col)
            advance(1)
            tokens.append(MToken("regex", "".join(value), start_line, start_col))
            continue
        m = IDENT_RE.match(text, pos)
        if m:
            tokens.append(MToken("ident", m.group(), line, col))
            advance(len(m.group()))
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, pos):
                tokens.append(MToken("sym", sym, line, col))
                advance(len(sym))
                break
        else:
            raise _fail(f"unexpected character {ch!r}", origin, line, col)
    # report end-of-file at the end of the last content line, not past it
    if col == 1 and line > 1:
        stripped = text.rstrip("\n")
        line = stripped.count("\n") + 1
        col = len(stripped.rsplit("\n", 1)[-1]) + 1
    tokens.append(MToken("eof", "", line, col))
    return tokens
