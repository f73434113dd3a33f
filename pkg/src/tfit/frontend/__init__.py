"""Lexing, parsing and type checking of ``.tfit`` sources."""

from .lexer import LexError, SourceLoc, Token, TokenKind, tokenize
from .parser import MAIN, ParseError, parse, parse_source
from .printer import program_to_source
from .typecheck import TypeCheckError, TypedProgram, resolve_and_typecheck


def load_program(sources: list[tuple[str, str]]) -> TypedProgram:
    """Parse and type check ``(file, text)`` pairs as one program namespace."""
    functions = []
    for file, text in sources:
        functions.extend(parse(tokenize(text, file)))
    mains = [f for f in functions if f.name == MAIN]
    if len(mains) > 1:
        # Implicit mains from several files merge in input order.
        merged = mains[0]
        if not all(m.implicit for m in mains):
            raise TypeCheckError("duplicate function 'main'", mains[1].loc)
        for extra in mains[1:]:
            merged.body.extend(extra.body)
        functions = [f for f in functions if f.name != MAIN or f is merged]
    return resolve_and_typecheck(functions)


__all__ = [
    "LexError", "MAIN", "ParseError", "SourceLoc", "Token", "TokenKind",
    "TypeCheckError", "TypedProgram", "load_program", "parse", "parse_source",
    "program_to_source", "resolve_and_typecheck", "tokenize",
]
