"""Reference interpreter used as a test oracle.

Tensors carry only their shape.  A small table of tensor operators gives
each ``TensorFlow.*`` call a concrete shape rule; the static checker
never sees this table, it only knows what the asserts say.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from typing import Callable, Optional

from .constraints import Undefined, broadcast_shapes
from .frontend import TypedProgram
from .frontend import ast as A
from .frontend.lexer import SourceLoc

DEFAULT_STEP_BUDGET = 10_000


@dataclass(frozen=True)
class Shape:
    dims: tuple[int, ...]

    def __repr__(self) -> str:
        return f"Shape({list(self.dims)})"


@dataclass(frozen=True)
class Tensor:
    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(d < 0 for d in self.shape):
            raise ValueError(f"negative tensor dimension in {list(self.shape)}")


# Run outcomes.  FAILURES are the ones a correct shape checker may predict.
OK = "ok"
ASSERT_FAILED = "assert-failed"
INDEX_ERROR = "index-error"
BROADCAST_ERROR = "broadcast-error"
DIVISION_BY_ZERO = "division-by-zero"
OP_FAILED = "op-failed"
HOLE_REACHED = "hole"
NEGATIVE_DIVISION = "negative-division"
MISSING_OP = "missing-op"
BUDGET_EXCEEDED = "budget-exceeded"

FAILURES = (ASSERT_FAILED, INDEX_ERROR, BROADCAST_ERROR, DIVISION_BY_ZERO, OP_FAILED)


@dataclass
class RunResult:
    status: str
    loc: Optional[SourceLoc] = None
    message: str = ""
    value: object = None

    @property
    def failed(self) -> bool:
        return self.status in FAILURES


class _Stop(Exception):
    def __init__(self, status: str, loc: Optional[SourceLoc], message: str):
        super().__init__(message)
        self.status = status
        self.loc = loc
        self.message = message


class _Return(Exception):
    def __init__(self, value):
        super().__init__()
        self.value = value


# ---------------------------------------------------------------------------
# Operator shape rules
# ---------------------------------------------------------------------------


class OpError(Exception):
    pass


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise OpError(message)


def _tensor(x, what: str) -> tuple[int, ...]:
    _need(isinstance(x, Tensor), f"{what} must be a tensor")
    return x.shape


def _int(x, what: str) -> int:
    _need(isinstance(x, int) and not isinstance(x, bool), f"{what} must be an integer")
    return x


def _matmul(a, b):
    x, y = _tensor(a, "lhs"), _tensor(b, "rhs")
    _need(len(x) == 2 and len(y) == 2, "matmul needs rank-2 operands")
    _need(x[1] == y[0], f"matmul contraction mismatch {x[1]} vs {y[0]}")
    return Tensor((x[0], y[1]))


def _elementwise(a, b):
    try:
        return Tensor(broadcast_shapes(_tensor(a, "lhs"), _tensor(b, "rhs")))
    except Undefined as exc:
        raise OpError(str(exc)) from exc


def _identity(a):
    return Tensor(_tensor(a, "input"))


def _window(h: int, w: int, kh: int, kw: int, sh: int, sw: int) -> tuple[int, int]:
    _need(sh > 0 and sw > 0, "strides must be positive")
    _need(kh > 0 and kw > 0, "window must be positive")
    _need(h >= kh and w >= kw, "window larger than input")
    return (h - kh) // sh + 1, (w - kw) // sw + 1


def _conv2d(x, f, sh=1, sw=1):
    s, k = _tensor(x, "input"), _tensor(f, "filter")
    _need(len(s) == 4 and len(k) == 4, "conv2d needs rank-4 input and filter")
    _need(s[3] == k[2], f"conv2d channel mismatch {s[3]} vs {k[2]}")
    oh, ow = _window(s[1], s[2], k[0], k[1], _int(sh, "stride"), _int(sw, "stride"))
    return Tensor((s[0], oh, ow, k[3]))


def _maxpool2d(x, kh, kw, sh, sw):
    s = _tensor(x, "input")
    _need(len(s) == 4, "maxpool2d needs a rank-4 input")
    oh, ow = _window(s[1], s[2], _int(kh, "kernel"), _int(kw, "kernel"), _int(sh, "stride"),
                     _int(sw, "stride"))
    return Tensor((s[0], oh, ow, s[3]))


def _flatten(x):
    s = _tensor(x, "input")
    _need(len(s) >= 1, "flatten needs rank >= 1")
    return Tensor((s[0], math.prod(s[1:])))


def _reshape(x, shape):
    s = _tensor(x, "input")
    _need(isinstance(shape, Shape), "reshape target must be a shape")
    _need(math.prod(s) == math.prod(shape.dims), "reshape changes the element count")
    return Tensor(shape.dims)


def _transpose(x):
    s = _tensor(x, "input")
    _need(len(s) == 2, "transpose needs rank 2")
    return Tensor((s[1], s[0]))


OPS: dict[str, Callable] = {
    "tf_matmul": _matmul,
    "tf_dense": _matmul,
    "tf_add": _elementwise,
    "tf_mul": _elementwise,
    "tf_relu": _identity,
    "tf_softmax": _identity,
    "tf_conv2d": _conv2d,
    "tf_maxpool2d": _maxpool2d,
    "tf_flatten": _flatten,
    "tf_reshape": _reshape,
    "tf_transpose": _transpose,
}


# ---------------------------------------------------------------------------
# Interpreter
# ---------------------------------------------------------------------------


_COMPARE = {"==": operator.eq, "!=": operator.ne, "<": operator.lt,
            "<=": operator.le, ">": operator.gt, ">=": operator.ge}


class _Interp:
    def __init__(self, program: TypedProgram, budget: int):
        self.program = program
        self.steps = 0
        self.budget = budget

    def tick(self, loc: SourceLoc) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise _Stop(BUDGET_EXCEEDED, loc, "step budget exceeded")

    def call(self, fn: A.AstFunction, args: list) -> object:
        env = [{p.name: a for p, a in zip(fn.params, args)}]
        try:
            self.block(fn.body, env)
        except _Return as r:
            return r.value
        return None

    def block(self, body: list[A.Stmt], env: list[dict]) -> None:
        env.append({})
        try:
            for s in body:
                self.stmt(s, env)
        finally:
            env.pop()

    def lookup(self, env: list[dict], name: str):
        for scope in reversed(env):
            if name in scope:
                return scope[name]
        raise KeyError(name)

    def assign(self, env: list[dict], name: str, value) -> None:
        for scope in reversed(env):
            if name in scope:
                scope[name] = value
                return
        raise KeyError(name)

    def stmt(self, s: A.Stmt, env: list[dict]) -> None:
        self.tick(s.loc)
        if isinstance(s, A.Let):
            env[-1][s.name] = self.expr(s.value, env)
        elif isinstance(s, A.Assign):
            self.assign(env, s.name, self.expr(s.value, env))
        elif isinstance(s, A.Assert):
            if not self.expr(s.cond, env):
                raise _Stop(ASSERT_FAILED, s.loc, "assertion failed")
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr, env)
        elif isinstance(s, A.Return):
            raise _Return(None if s.value is None else self.expr(s.value, env))
        elif isinstance(s, A.If):
            self.block(s.then if self.expr(s.cond, env) else s.orelse, env)
        elif isinstance(s, A.For):
            lo, hi = self.expr(s.lo, env), self.expr(s.hi, env)
            for i in range(lo, hi):
                self.tick(s.loc)
                env.append({s.var: i} if s.var != "_" else {})
                try:
                    self.block(s.body, env)
                finally:
                    env.pop()
        else:
            raise AssertionError(f"unknown statement {s!r}")

    def expr(self, e: A.Expr, env: list[dict]):
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.Hole):
            raise _Stop(HOLE_REACHED, e.loc, "reached a shape hole")
        if isinstance(e, A.Name):
            return self.lookup(env, e.name)
        if isinstance(e, A.Neg):
            return -self.expr(e.operand, env)
        if isinstance(e, A.Not):
            return not self.expr(e.operand, env)
        if isinstance(e, A.Arith):
            a, b = self.expr(e.lhs, env), self.expr(e.rhs, env)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if b == 0:
                raise _Stop(DIVISION_BY_ZERO, e.loc, "division by zero")
            if a < 0 or b < 0:
                raise _Stop(NEGATIVE_DIVISION, e.loc, "division with a negative operand")
            return a // b
        if isinstance(e, A.Compare):
            a, b = self.expr(e.lhs, env), self.expr(e.rhs, env)
            return _COMPARE[e.op](a, b)
        if isinstance(e, A.Logical):
            a, b = self.expr(e.lhs, env), self.expr(e.rhs, env)
            return (a and b) if e.op == "&&" else (a or b)
        if isinstance(e, A.TupleExpr):
            return tuple(self.expr(i, env) for i in e.items)
        if isinstance(e, A.Proj):
            return self.expr(e.base, env)[e.index]
        if isinstance(e, A.ShapeLit):
            return Shape(tuple(self.expr(d, env) for d in e.dims))
        if isinstance(e, A.ShapeOf):
            return Shape(self.expr(e.base, env).shape)
        if isinstance(e, A.ShapeIndex):
            s = self.expr(e.base, env)
            i = self.expr(e.index, env)
            if not -len(s.dims) <= i < len(s.dims):
                raise _Stop(INDEX_ERROR, e.loc, f"index {i} out of range for rank {len(s.dims)}")
            return s.dims[i]
        if isinstance(e, A.RankOf):
            v = self.expr(e.base, env)
            return len(v.shape) if isinstance(v, Tensor) else len(v.dims)
        if isinstance(e, A.Broadcast):
            a, b = self.expr(e.lhs, env), self.expr(e.rhs, env)
            try:
                return Shape(broadcast_shapes(a.dims, b.dims))
            except Undefined as exc:
                raise _Stop(BROADCAST_ERROR, e.loc, str(exc)) from exc
        if isinstance(e, A.ShapeAssert):
            v = self.expr(e.value, env)
            s = self.expr(e.shape, env)
            if v.shape != s.dims:
                raise _Stop(ASSERT_FAILED, e.loc, "shape assertion failed")
            return v
        if isinstance(e, A.Call):
            return self.invoke(e, [self.expr(a, env) for a in e.args])
        raise AssertionError(f"unknown expression {e!r}")

    def invoke(self, e: A.Call, args: list):
        name = e.callee
        if name in self.program.functions:
            return self.call(self.program.functions[name], args)
        if name == "shapeof":
            return Shape(args[0].shape)
        if name == "rank":
            v = args[0]
            return len(v.shape) if isinstance(v, Tensor) else len(v.dims)
        if name == "randn":
            if any(d < 0 for d in args[0].dims):
                raise _Stop(OP_FAILED, e.loc, "randn with a negative dimension")
            return Tensor(args[0].dims)
        op = OPS.get(name)
        if op is None:
            raise _Stop(MISSING_OP, e.loc, f"no reference semantics for {name}")
        try:
            return op(*args)
        except (OpError, TypeError, ValueError) as exc:
            raise _Stop(OP_FAILED, e.loc, f"{name}: {exc}") from exc


def value_from_json(value):
    """Decode an argument: ints and bools as-is, ``{"shape": [...]}``, ``{"tensor": [...]}``, lists as tuples."""
    if isinstance(value, dict) and "shape" in value:
        return Shape(tuple(value["shape"]))
    if isinstance(value, dict) and "tensor" in value:
        return Tensor(tuple(value["tensor"]))
    if isinstance(value, list):
        return tuple(value_from_json(v) for v in value)
    return value


def interpret(program: TypedProgram, entry: str = "main", args: Optional[list] = None,
              budget: int = DEFAULT_STEP_BUDGET) -> RunResult:
    """Run ``entry`` with concrete ``args``; report the first failure, if any."""
    fn = program.functions.get(entry)
    if fn is None:
        raise KeyError(f"no function named {entry!r}")
    args = list(args or [])
    if len(args) != len(fn.params):
        raise ValueError(f"{entry}() takes {len(fn.params)} arguments, {len(args)} given")
    interp = _Interp(program, budget)
    try:
        value = interp.call(fn, args)
    except _Stop as stop:
        return RunResult(stop.status, stop.loc, stop.message)
    except RecursionError:
        return RunResult(BUDGET_EXCEEDED, fn.loc, "recursion too deep")
    return RunResult(OK, value=value)
