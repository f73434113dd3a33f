"""Recursive-descent parser.

Top-level statements may be interleaved with function definitions; they
are gathered, in order, into an implicit ``main`` function.
"""

from __future__ import annotations

from typing import Optional

from ..errors import TfitError
from . import ast as A
from .lexer import SourceLoc, Token, TokenKind as T, tokenize
from .types import NAMED_TYPES, UNIT, TfitType, TupleType

MAIN = "main"

COMPARISONS = {T.EQEQ: "==", T.NEQ: "!=", T.LT: "<", T.LE: "<=", T.GT: ">", T.GE: ">="}
TYPE_ALIASES = {"TensorShape": "Shape"}


class ParseError(TfitError):
    def __init__(self, message: str, loc: SourceLoc, expected: frozenset[str] = frozenset()):
        if expected:
            message += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(message, loc)
        self.expected = expected


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers ---------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, *kinds: T) -> bool:
        return self.tok.kind in kinds

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind is not T.EOF:
            self.pos += 1
        return tok

    def accept(self, kind: T) -> Optional[Token]:
        if self.tok.kind is kind:
            return self.advance()
        return None

    def expect(self, *kinds: T) -> Token:
        if self.tok.kind in kinds:
            return self.advance()
        raise self.error(f"unexpected {self.describe(self.tok)}", kinds)

    def error(self, message: str, kinds=()) -> ParseError:
        return ParseError(message, self.tok.loc, frozenset(k.value for k in kinds))

    @staticmethod
    def describe(tok: Token) -> str:
        if tok.kind is T.EOF:
            return "end of input"
        return f"{tok.text!r}"

    def same_line(self) -> bool:
        prev = self.tokens[self.pos - 1]
        return self.tok.loc.line == prev.loc.line

    # -- program structure -----------------------------------------------------

    def program(self) -> list[A.AstFunction]:
        functions: list[A.AstFunction] = []
        main_body: list[A.Stmt] = []
        start = self.tok.loc
        while not self.at(T.EOF):
            if self.accept(T.SEMI):
                continue
            if self.at(T.FUNC):
                functions.append(self.funcdef())
            else:
                main_body.append(self.statement())
        names = {f.name for f in functions}
        if MAIN in names:
            if main_body:
                raise ParseError("top-level statements conflict with an explicit main()",
                                 main_body[0].loc)
        else:
            loc = main_body[0].loc if main_body else start
            functions.append(A.AstFunction(MAIN, [], UNIT, main_body, loc=loc, implicit=True))
        return functions

    def funcdef(self) -> A.AstFunction:
        loc = self.expect(T.FUNC).loc
        name = self.expect(T.IDENT).text
        self.expect(T.LPAREN)
        params: list[A.Param] = []
        while not self.at(T.RPAREN):
            self.accept(T.UNDERSCORE)
            ptok = self.expect(T.IDENT)
            self.expect(T.COLON)
            params.append(A.Param(ptok.text, self.type_(), loc=ptok.loc))
            if not self.accept(T.COMMA):
                break
        self.expect(T.RPAREN)
        ret: TfitType = UNIT
        if self.accept(T.ARROW):
            ret = self.type_()
        body = self.block()
        return A.AstFunction(name, params, ret, body, loc=loc)

    def type_(self) -> TfitType:
        if self.accept(T.LPAREN):
            items: list[TfitType] = []
            while not self.at(T.RPAREN):
                items.append(self.type_())
                if not self.accept(T.COMMA):
                    break
            close = self.expect(T.RPAREN)
            if not items:
                return UNIT
            if len(items) == 1:
                return items[0]
            try:
                return TupleType(tuple(items))
            except ValueError as exc:  # pragma: no cover - guarded above
                raise ParseError(str(exc), close.loc) from exc
        tok = self.expect(T.IDENT)
        name = TYPE_ALIASES.get(tok.text, tok.text)
        if name not in NAMED_TYPES:
            raise ParseError(f"unknown type {tok.text!r}", tok.loc,
                             frozenset(NAMED_TYPES) | {"("})
        if name == "Tensor" and self.accept(T.LT):
            # Element type annotation, e.g. Tensor<Float>; dtypes are not tracked.
            self.expect(T.IDENT)
            self.expect(T.GT)
        return NAMED_TYPES[name]

    def block(self) -> list[A.Stmt]:
        self.expect(T.LBRACE)
        body: list[A.Stmt] = []
        while not self.at(T.RBRACE):
            if self.at(T.EOF):
                raise self.error("unterminated block", (T.RBRACE,))
            if self.accept(T.SEMI):
                continue
            body.append(self.statement())
        self.expect(T.RBRACE)
        return body

    # -- statements ------------------------------------------------------------

    def statement(self) -> A.Stmt:
        tok = self.tok
        loc = tok.loc
        if tok.kind in (T.LET, T.VAR):
            self.advance()
            name = self.expect(T.IDENT).text
            annot = self.type_() if self.accept(T.COLON) else None
            self.expect(T.EQ)
            return A.Let(name, annot, self.expr(), tok.kind is T.VAR, loc=loc)
        if tok.kind is T.ASSERT:
            self.advance()
            self.expect(T.LPAREN)
            cond = self.expr()
            self.expect(T.RPAREN)
            return A.Assert(cond, loc=loc)
        if tok.kind is T.IF:
            self.advance()
            cond = self.expr()
            then = self.block()
            orelse: list[A.Stmt] = []
            if self.accept(T.ELSE):
                if self.at(T.IF):
                    orelse = [self.statement()]
                else:
                    orelse = self.block()
            return A.If(cond, then, orelse, loc=loc)
        if tok.kind is T.FOR:
            self.advance()
            var = self.expect(T.IDENT, T.UNDERSCORE).text
            self.expect(T.IN)
            lo = self.additive()
            self.expect(T.RANGE)
            hi = self.additive()
            return A.For(var, lo, hi, self.block(), loc=loc)
        if tok.kind is T.RETURN:
            self.advance()
            value = None
            if not self.at(T.RBRACE, T.SEMI, T.EOF) and self.same_line():
                value = self.expr()
            return A.Return(value, loc=loc)
        if tok.kind is T.IDENT and self.peek().kind is T.EQ:
            self.advance()
            self.advance()
            return A.Assign(tok.text, self.expr(), loc=loc)
        return A.ExprStmt(self.expr(), loc=loc)

    # -- expressions -----------------------------------------------------------

    def expr(self) -> A.Expr:
        lhs = self.logical_or()
        while self.at(T.SHAPEASSERT):
            loc = self.advance().loc
            rhs = self.logical_or()
            lhs = A.ShapeAssert(lhs, rhs, loc=loc)
        return lhs

    def logical_or(self) -> A.Expr:
        lhs = self.logical_and()
        while self.at(T.OR):
            loc = self.advance().loc
            lhs = A.Logical("||", lhs, self.logical_and(), loc=loc)
        return lhs

    def logical_and(self) -> A.Expr:
        lhs = self.comparison()
        while self.at(T.AND):
            loc = self.advance().loc
            lhs = A.Logical("&&", lhs, self.comparison(), loc=loc)
        return lhs

    def comparison(self) -> A.Expr:
        lhs = self.additive()
        if self.tok.kind in COMPARISONS:
            tok = self.advance()
            lhs = A.Compare(COMPARISONS[tok.kind], lhs, self.additive(), loc=tok.loc)
            if self.tok.kind in COMPARISONS:
                raise self.error("comparison operators do not chain")
        return lhs

    def additive(self) -> A.Expr:
        lhs = self.multiplicative()
        while self.at(T.PLUS, T.MINUS):
            tok = self.advance()
            lhs = A.Arith(tok.text, lhs, self.multiplicative(), loc=tok.loc)
        return lhs

    def multiplicative(self) -> A.Expr:
        lhs = self.unary()
        while self.at(T.STAR, T.SLASH):
            tok = self.advance()
            lhs = A.Arith(tok.text, lhs, self.unary(), loc=tok.loc)
        return lhs

    def unary(self) -> A.Expr:
        if self.at(T.MINUS):
            loc = self.advance().loc
            return A.Neg(self.unary(), loc=loc)
        if self.at(T.NOT):
            loc = self.advance().loc
            return A.Not(self.unary(), loc=loc)
        return self.postfix()

    def postfix(self) -> A.Expr:
        expr = self.primary()
        while True:
            if self.at(T.LPAREN) and self.same_line() and isinstance(expr, A.Name):
                self.advance()
                args = self.expr_list(T.RPAREN)
                expr = A.Call(expr.name, args, loc=expr.loc)
            elif self.at(T.LBRACK) and self.same_line():
                loc = self.advance().loc
                index = self.expr()
                self.expect(T.RBRACK)
                expr = A.ShapeIndex(expr, index, loc=loc)
            elif self.at(T.DOT):
                self.advance()
                tok = self.expect(T.INT, T.SHAPE, T.IDENT)
                if tok.kind is T.INT:
                    expr = A.Proj(expr, int(tok.text), loc=tok.loc)
                elif tok.kind is T.SHAPE:
                    expr = A.ShapeOf(expr, loc=tok.loc)
                elif tok.text == "rank":
                    expr = A.RankOf(expr, loc=tok.loc)
                elif isinstance(expr, A.Name):
                    # Qualified function name such as TensorFlow.matmul.
                    expr = A.Name(f"{expr.name}.{tok.text}", loc=expr.loc)
                else:
                    raise ParseError(f"unknown member {tok.text!r}", tok.loc,
                                     frozenset({"shape", "rank", "INT"}))
            else:
                return expr

    def expr_list(self, close: T) -> list[A.Expr]:
        items: list[A.Expr] = []
        while not self.at(close):
            items.append(self.expr())
            if not self.accept(T.COMMA):
                break
        self.expect(close)
        return items

    def primary(self) -> A.Expr:
        tok = self.tok
        if tok.kind is T.INT:
            self.advance()
            return A.IntLit(int(tok.text), loc=tok.loc)
        if tok.kind in (T.TRUE, T.FALSE):
            self.advance()
            return A.BoolLit(tok.kind is T.TRUE, loc=tok.loc)
        if tok.kind is T.HOLE:
            self.advance()
            return A.Hole(loc=tok.loc)
        if tok.kind is T.IDENT:
            self.advance()
            if tok.text == "broadcast" and self.at(T.LPAREN):
                self.advance()
                args = self.expr_list(T.RPAREN)
                if len(args) != 2:
                    raise ParseError("broadcast takes exactly two shapes", tok.loc)
                return A.Broadcast(args[0], args[1], loc=tok.loc)
            return A.Name(tok.text, loc=tok.loc)
        if tok.kind is T.LBRACK:
            self.advance()
            return A.ShapeLit(self.expr_list(T.RBRACK), loc=tok.loc)
        if tok.kind is T.LPAREN:
            self.advance()
            items = self.expr_list(T.RPAREN)
            if len(items) == 1:
                return items[0]
            if not items:
                raise ParseError("empty tuple expression", tok.loc)
            return A.TupleExpr(items, loc=tok.loc)
        raise self.error(
            f"unexpected {self.describe(tok)}",
            (T.INT, T.IDENT, T.HOLE, T.TRUE, T.FALSE, T.LPAREN, T.LBRACK, T.MINUS, T.NOT),
        )


def parse(tokens: list[Token]) -> list[A.AstFunction]:
    return Parser(tokens).program()


def parse_source(source: str, file: str = "<input>") -> list[A.AstFunction]:
    return parse(tokenize(source, file))
