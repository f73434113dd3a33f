"""Tokenizer for the TFIT mini tensor language."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..errors import TfitError


@dataclass(frozen=True, order=True)
class SourceLoc:
    file: str
    line: int
    column: int

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid source location {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class TokenKind(enum.Enum):
    INT = "INT"
    IDENT = "IDENT"
    HOLE = "HOLE"
    # keywords
    FUNC = "func"
    LET = "let"
    VAR = "var"
    IF = "if"
    ELSE = "else"
    FOR = "for"
    IN = "in"
    RETURN = "return"
    ASSERT = "assert"
    TRUE = "true"
    FALSE = "false"
    SHAPE = "shape"
    # punctuation
    LPAREN = "("
    RPAREN = ")"
    LBRACK = "["
    RBRACK = "]"
    LBRACE = "{"
    RBRACE = "}"
    COMMA = ","
    SEMI = ";"
    COLON = ":"
    DOT = "."
    ARROW = "->"
    SHAPEASSERT = "|->"
    RANGE = "..<"
    EQ = "="
    EQEQ = "=="
    NEQ = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    AND = "&&"
    OR = "||"
    NOT = "!"
    UNDERSCORE = "_"
    EOF = "EOF"


KEYWORDS = {
    k.value: k
    for k in (
        TokenKind.FUNC, TokenKind.LET, TokenKind.VAR, TokenKind.IF, TokenKind.ELSE,
        TokenKind.FOR, TokenKind.IN, TokenKind.RETURN, TokenKind.ASSERT,
        TokenKind.TRUE, TokenKind.FALSE, TokenKind.SHAPE,
    )
}

# Longest match first.
PUNCTUATION = sorted(
    (
        k for k in TokenKind
        if k not in KEYWORDS.values()
        and k not in (TokenKind.INT, TokenKind.IDENT, TokenKind.HOLE,
                      TokenKind.EOF, TokenKind.UNDERSCORE)
    ),
    key=lambda k: -len(k.value),
)

HOLE_SPELLING = "____"
DIGITS = "0123456789"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    loc: SourceLoc

    def __repr__(self) -> str:
        if self.kind in (TokenKind.INT, TokenKind.IDENT):
            return f"{self.kind.value}({self.text})"
        return self.kind.name


class LexError(TfitError):
    pass


def tokenize(source: str, file: str = "<input>") -> list[Token]:
    """Split ``source`` into tokens, each tagged with its 1-based location.

    The identifier ``____`` becomes a HOLE token and a lone ``_`` an
    UNDERSCORE token; any other identifier made only of underscores is
    an ordinary identifier.
    """
    tokens: list[Token] = []
    i = 0
    line, col = 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        loc = SourceLoc(file, line, col)
        if ch in DIGITS:
            j = i
            while j < n and source[j] in DIGITS:
                j += 1
            if j < n and (source[j].isalpha() or source[j] == "_"):
                raise LexError(f"malformed number {source[i:j + 1]!r}", loc)
            tokens.append(Token(TokenKind.INT, source[i:j], loc))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            if word == HOLE_SPELLING:
                kind = TokenKind.HOLE
            elif word == "_":
                kind = TokenKind.UNDERSCORE
            else:
                kind = KEYWORDS.get(word, TokenKind.IDENT)
            tokens.append(Token(kind, word, loc))
            col += j - i
            i = j
            continue
        for kind in PUNCTUATION:
            if source.startswith(kind.value, i):
                tokens.append(Token(kind, kind.value, loc))
                i += len(kind.value)
                col += len(kind.value)
                break
        else:
            raise LexError(f"unrecognized character {ch!r}", loc)
    tokens.append(Token(TokenKind.EOF, "", SourceLoc(file, line, col)))
    return tokens
