"""AST node classes.

Locations and inferred types are excluded from equality so that two
parses of equivalent source compare equal structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .lexer import SourceLoc
from .types import TfitType


@dataclass(eq=True)
class Node:
    loc: SourceLoc = field(compare=False, repr=False, kw_only=True)


@dataclass(eq=True)
class Expr(Node):
    ty: Optional[TfitType] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(eq=True)
class IntLit(Expr):
    value: int


@dataclass(eq=True)
class BoolLit(Expr):
    value: bool


@dataclass(eq=True)
class Name(Expr):
    name: str


@dataclass(eq=True)
class Hole(Expr):
    pass


@dataclass(eq=True)
class Neg(Expr):
    operand: Expr


@dataclass(eq=True)
class Not(Expr):
    operand: Expr


@dataclass(eq=True)
class Arith(Expr):
    op: str  # + - * /
    lhs: Expr
    rhs: Expr


@dataclass(eq=True)
class Compare(Expr):
    op: str  # == != < <= > >=
    lhs: Expr
    rhs: Expr


@dataclass(eq=True)
class Logical(Expr):
    op: str  # && ||
    lhs: Expr
    rhs: Expr


@dataclass(eq=True)
class Call(Expr):
    callee: str
    args: list[Expr]


@dataclass(eq=True)
class TupleExpr(Expr):
    items: list[Expr]


@dataclass(eq=True)
class Proj(Expr):
    base: Expr
    index: int


@dataclass(eq=True)
class ShapeLit(Expr):
    dims: list[Expr]


@dataclass(eq=True)
class ShapeOf(Expr):
    """``e.shape`` on a tensor."""

    base: Expr


@dataclass(eq=True)
class ShapeIndex(Expr):
    base: Expr
    index: Expr


@dataclass(eq=True)
class RankOf(Expr):
    base: Expr


@dataclass(eq=True)
class Broadcast(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(eq=True)
class ShapeAssert(Expr):
    """``value |-> shape``: assert the tensor's shape, evaluate to the tensor."""

    value: Expr
    shape: Expr

    def desugar(self, tmp: str) -> tuple["Let", "Assert", Name]:
        """The equivalent let-temporary, shape assertion, and result reference."""
        loc = self.loc
        let = Let(tmp, None, self.value, loc=loc)
        check = Assert(
            Compare("==", ShapeOf(Name(tmp, loc=loc), loc=loc), self.shape, loc=loc),
            loc=loc,
        )
        return let, check, Name(tmp, loc=loc)


# -- statements ---------------------------------------------------------------


@dataclass(eq=True)
class Stmt(Node):
    pass


@dataclass(eq=True)
class Let(Stmt):
    name: str
    annot: Optional[TfitType]
    value: Expr
    mutable: bool = False


@dataclass(eq=True)
class Assign(Stmt):
    name: str
    value: Expr


@dataclass(eq=True)
class Assert(Stmt):
    cond: Expr


@dataclass(eq=True)
class If(Stmt):
    cond: Expr
    then: list[Stmt]
    orelse: list[Stmt]


@dataclass(eq=True)
class For(Stmt):
    var: str
    lo: Expr
    hi: Expr
    body: list[Stmt]


@dataclass(eq=True)
class Return(Stmt):
    value: Optional[Expr]


@dataclass(eq=True)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(eq=True)
class Param(Node):
    name: str
    ty: TfitType


@dataclass(eq=True)
class AstFunction(Node):
    name: str
    params: list[Param]
    ret: TfitType
    body: list[Stmt]
    implicit: bool = field(default=False, compare=False)


AnyNode = Union[Expr, Stmt, AstFunction]


def walk(node):
    """Yield ``node`` and every AST node below it, pre-order."""
    yield node
    if isinstance(node, AstFunction):
        for p in node.params:
            yield p
        for s in node.body:
            yield from walk(s)
        return
    for name in node.__dataclass_fields__:
        if name in ("loc", "ty"):
            continue
        value = getattr(node, name)
        if isinstance(value, Node):
            yield from walk(value)
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, Node):
                    yield from walk(item)
