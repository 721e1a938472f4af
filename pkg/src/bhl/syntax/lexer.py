from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from .ast import Span
from .errors import ParseError

OPERATORS = [
    "<->", "---", ":=", "||", "->", "<=", ">=", "!=",
    ";", "{", "}", "(", ")", "[", "]", ",", ".", "~", "$",
    "<", ">", "=", "+", "-", "*", "/", ":", "^",
]

_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_STRING = re.compile(r'"([^"\\\n]|\\.)*"')


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | str | op | eof
    value: str
    span: Span

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.value in ops

    def is_word(self, *words: str) -> bool:
        return self.kind == "ident" and self.value in words


def tokenize(text: str, source: Optional[str] = None) -> List[Token]:
    tokens: List[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        span = Span(line, col)
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(Token("num", m.group(0), span))
        else:
            m = _IDENT.match(text, i)
            if m:
                tokens.append(Token("ident", m.group(0), span))
            else:
                m = _STRING.match(text, i)
                if m:
                    raw = m.group(0)[1:-1]
                    tokens.append(Token("str", bytes(raw, "utf-8").decode("unicode_escape"), span))
                else:
                    for op in OPERATORS:
                        if text.startswith(op, i):
                            tokens.append(Token("op", op, span))
                            break
                    else:
                        raise ParseError(f"unexpected character {c!r}", span, source)
                    i += len(op)
                    col += len(op)
                    continue
        length = m.end() - m.start()
        i += length
        col += length
    tokens.append(Token("eof", "", Span(line, col)))
    return tokens
