"""Name resolution and type checking.

Annotates every expression's ``ty`` in place and canonicalizes callee
names of intrinsics (``TensorFlow.matmul`` becomes ``tf_matmul``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NoReturn, Optional

from ..errors import TfitError
from . import ast as A
from .types import BOOL, INT, SHAPE, TENSOR, UNIT, TfitType, TupleType

# Opaque tensor operators: any argument list, Tensor result, no shape knowledge.
OPAQUE_PREFIX = "tf_"
QUALIFIED_PREFIX = "TensorFlow."

INTRINSICS = ("shapeof", "rank", "broadcast", "assert", "randn")


class TypeCheckError(TfitError):
    pass


@dataclass(frozen=True)
class Signature:
    params: tuple[TfitType, ...]
    ret: TfitType


@dataclass
class TypedProgram:
    functions: dict[str, A.AstFunction]
    signatures: dict[str, Signature] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.functions.values())


def canonical_callee(name: str) -> str:
    if name.startswith(QUALIFIED_PREFIX):
        return OPAQUE_PREFIX + name[len(QUALIFIED_PREFIX):]
    return name


def is_opaque_op(name: str) -> bool:
    return name.startswith(OPAQUE_PREFIX)


@dataclass
class _Binding:
    ty: TfitType
    mutable: bool
    readonly_reason: Optional[str] = None


class _Scope:
    def __init__(self, parent: Optional["_Scope"] = None):
        self.parent = parent
        self.names: dict[str, _Binding] = {}

    def lookup(self, name: str) -> Optional[_Binding]:
        scope: Optional[_Scope] = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None


class _Checker:
    def __init__(self, signatures: dict[str, Signature]):
        self.signatures = signatures
        self.function: Optional[A.AstFunction] = None
        self.loop_depth = 0

    def fail(self, message: str, node: A.Node) -> NoReturn:
        raise TypeCheckError(message, node.loc)

    def expect(self, node: A.Expr, ty: TfitType, what: str) -> None:
        if node.ty != ty:
            self.fail(f"{what}: expected {ty}, found {node.ty}", node)

    # -- functions and statements ----------------------------------------------

    def check_function(self, fn: A.AstFunction) -> None:
        self.function = fn
        scope = _Scope()
        for p in fn.params:
            if p.name in scope.names:
                self.fail(f"duplicate parameter {p.name!r}", p)
            if p.ty == UNIT:
                self.fail("parameters cannot have unit type", p)
            scope.names[p.name] = _Binding(p.ty, False)
        returns = self.block(fn.body, scope)
        if not returns and fn.ret != UNIT:
            self.fail(f"missing return in function {fn.name!r} returning {fn.ret}", fn)

    def block(self, body: list[A.Stmt], scope: _Scope) -> bool:
        """Check statements; report whether every path through them returns."""
        for i, stmt in enumerate(body):
            if self.stmt(stmt, scope):
                if i != len(body) - 1:
                    self.fail("unreachable code after return", body[i + 1])
                return True
        return False

    def stmt(self, s: A.Stmt, scope: _Scope) -> bool:
        if isinstance(s, A.Let):
            self.expr(s.value, scope)
            if s.annot is not None:
                self.expect(s.value, s.annot, f"initializer of {s.name!r}")
            if s.value.ty == UNIT:
                self.fail("cannot bind a unit value", s)
            if s.name in scope.names:
                self.fail(f"redeclaration of {s.name!r}", s)
            scope.names[s.name] = _Binding(s.value.ty, s.mutable)
            return False
        if isinstance(s, A.Assign):
            binding = scope.lookup(s.name)
            if binding is None:
                self.fail(f"unknown identifier {s.name!r}", s)
            if binding.readonly_reason:
                self.fail(binding.readonly_reason, s)
            if not binding.mutable:
                self.fail(f"cannot assign to immutable {s.name!r}", s)
            self.expr(s.value, scope)
            self.expect(s.value, binding.ty, f"assignment to {s.name!r}")
            return False
        if isinstance(s, A.Assert):
            self.expr(s.cond, scope)
            self.expect(s.cond, BOOL, "assert condition")
            return False
        if isinstance(s, A.If):
            self.expr(s.cond, scope)
            self.expect(s.cond, BOOL, "if condition")
            then_returns = self.block(s.then, _Scope(scope))
            else_returns = self.block(s.orelse, _Scope(scope))
            return then_returns and else_returns
        if isinstance(s, A.For):
            self.expr(s.lo, scope)
            self.expect(s.lo, INT, "range start")
            self.expr(s.hi, scope)
            self.expect(s.hi, INT, "range end")
            inner = _Scope(scope)
            if s.var != "_":
                inner.names[s.var] = _Binding(INT, False, f"loop variable {s.var!r} is read-only")
            self.loop_depth += 1
            self.block(s.body, inner)
            self.loop_depth -= 1
            return False
        if isinstance(s, A.Return):
            if self.loop_depth:
                self.fail("return inside a loop body is not supported", s)
            assert self.function is not None
            if s.value is None:
                if self.function.ret != UNIT:
                    self.fail(f"missing return value of type {self.function.ret}", s)
            else:
                self.expr(s.value, scope)
                self.expect(s.value, self.function.ret, "return value")
            return True
        if isinstance(s, A.ExprStmt):
            self.expr(s.expr, scope)
            return False
        raise AssertionError(f"unknown statement {s!r}")

    # -- expressions -------------------------------------------------------------

    def expr(self, e: A.Expr, scope: _Scope) -> TfitType:
        e.ty = self._expr(e, scope)
        return e.ty

    def _expr(self, e: A.Expr, scope: _Scope) -> TfitType:
        if isinstance(e, A.IntLit):
            return INT
        if isinstance(e, A.BoolLit):
            return BOOL
        if isinstance(e, A.Hole):
            return INT
        if isinstance(e, A.Name):
            binding = scope.lookup(e.name)
            if binding is None:
                self.fail(f"unknown identifier {e.name!r}", e)
            return binding.ty
        if isinstance(e, A.Neg):
            self.expr(e.operand, scope)
            self.expect(e.operand, INT, "operand of unary minus")
            return INT
        if isinstance(e, A.Not):
            self.expr(e.operand, scope)
            self.expect(e.operand, BOOL, "operand of '!'")
            return BOOL
        if isinstance(e, A.Arith):
            self.expr(e.lhs, scope)
            self.expr(e.rhs, scope)
            self.expect(e.lhs, INT, f"left operand of {e.op!r}")
            self.expect(e.rhs, INT, f"right operand of {e.op!r}")
            return INT
        if isinstance(e, A.Compare):
            lt = self.expr(e.lhs, scope)
            self.expr(e.rhs, scope)
            if e.op in ("==", "!="):
                if lt not in (INT, BOOL, SHAPE):
                    self.fail(f"cannot compare values of type {lt} for equality", e)
                self.expect(e.rhs, lt, f"right operand of {e.op!r}")
            else:
                self.expect(e.lhs, INT, f"left operand of {e.op!r}")
                self.expect(e.rhs, INT, f"right operand of {e.op!r}")
            return BOOL
        if isinstance(e, A.Logical):
            self.expr(e.lhs, scope)
            self.expr(e.rhs, scope)
            self.expect(e.lhs, BOOL, f"left operand of {e.op!r}")
            self.expect(e.rhs, BOOL, f"right operand of {e.op!r}")
            return BOOL
        if isinstance(e, A.TupleExpr):
            items = tuple(self.expr(item, scope) for item in e.items)
            for item in e.items:
                if item.ty == UNIT:
                    self.fail("tuple components cannot have unit type", item)
            return TupleType(items)
        if isinstance(e, A.Proj):
            base = self.expr(e.base, scope)
            if not isinstance(base, TupleType):
                self.fail(f"projection .{e.index} on non-tuple type {base}", e)
            if not 0 <= e.index < len(base.items):
                self.fail(f"tuple index {e.index} out of range for {base}", e)
            return base.items[e.index]
        if isinstance(e, A.ShapeLit):
            for d in e.dims:
                self.expr(d, scope)
                self.expect(d, INT, "shape literal dimension")
            return SHAPE
        if isinstance(e, A.ShapeOf):
            self.expr(e.base, scope)
            self.expect(e.base, TENSOR, "'.shape' operand")
            return SHAPE
        if isinstance(e, A.ShapeIndex):
            self.expr(e.base, scope)
            self.expect(e.base, SHAPE, "indexed value")
            self.expr(e.index, scope)
            self.expect(e.index, INT, "shape index")
            return INT
        if isinstance(e, A.RankOf):
            base = self.expr(e.base, scope)
            if base not in (TENSOR, SHAPE):
                self.fail(f"'.rank' needs a Tensor or Shape, found {base}", e)
            return INT
        if isinstance(e, A.Broadcast):
            self.expr(e.lhs, scope)
            self.expr(e.rhs, scope)
            self.expect(e.lhs, SHAPE, "broadcast operand")
            self.expect(e.rhs, SHAPE, "broadcast operand")
            return SHAPE
        if isinstance(e, A.ShapeAssert):
            self.expr(e.value, scope)
            self.expect(e.value, TENSOR, "left operand of '|->'")
            self.expr(e.shape, scope)
            self.expect(e.shape, SHAPE, "right operand of '|->'")
            return TENSOR
        if isinstance(e, A.Call):
            return self.call(e, scope)
        raise AssertionError(f"unknown expression {e!r}")

    def call(self, e: A.Call, scope: _Scope) -> TfitType:
        e.callee = canonical_callee(e.callee)
        for arg in e.args:
            self.expr(arg, scope)
        if e.callee in self.signatures:
            sig = self.signatures[e.callee]
            if len(sig.params) != len(e.args):
                self.fail(f"{e.callee}() takes {len(sig.params)} arguments, "
                          f"{len(e.args)} given", e)
            for i, (arg, pty) in enumerate(zip(e.args, sig.params)):
                self.expect(arg, pty, f"argument {i + 1} of {e.callee}()")
            return sig.ret
        if e.callee == "shapeof":
            self._arity(e, 1)
            self.expect(e.args[0], TENSOR, "argument of shapeof()")
            return SHAPE
        if e.callee == "rank":
            self._arity(e, 1)
            if e.args[0].ty not in (TENSOR, SHAPE):
                self.fail(f"rank() needs a Tensor or Shape, found {e.args[0].ty}", e)
            return INT
        if e.callee == "randn":
            self._arity(e, 1)
            self.expect(e.args[0], SHAPE, "argument of randn()")
            return TENSOR
        if e.callee == "assert":
            self.fail("assert is a statement, not an expression", e)
        if is_opaque_op(e.callee):
            for arg in e.args:
                if arg.ty == UNIT:
                    self.fail("unit value passed to an operator", arg)
            return TENSOR
        self.fail(f"unknown function {e.callee!r}", e)

    def _arity(self, e: A.Call, n: int) -> None:
        if len(e.args) != n:
            self.fail(f"{e.callee}() takes {n} argument(s), {len(e.args)} given", e)


def resolve_and_typecheck(functions: list[A.AstFunction]) -> TypedProgram:
    signatures: dict[str, Signature] = {}
    by_name: dict[str, A.AstFunction] = {}
    for fn in functions:
        if fn.name in by_name:
            raise TypeCheckError(f"duplicate function {fn.name!r}", fn.loc)
        if fn.name in INTRINSICS or is_opaque_op(fn.name):
            raise TypeCheckError(f"{fn.name!r} is reserved for an intrinsic", fn.loc)
        by_name[fn.name] = fn
        signatures[fn.name] = Signature(tuple(p.ty for p in fn.params), fn.ret)
    checker = _Checker(signatures)
    for fn in functions:
        checker.check_function(fn)
    return TypedProgram(by_name, signatures)
