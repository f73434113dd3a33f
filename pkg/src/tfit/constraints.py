"""Shape constraint language: integer, boolean, shape and compound terms.

Terms are immutable, hashable dataclasses.  Besides the data types this
module provides substitution, constant folding, a concrete evaluator
used by tests, human-readable rendering and the equality-elimination
pass that shrinks systems before they are handed to the solver.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

from .frontend.lexer import SourceLoc


# ---------------------------------------------------------------------------
# Term classes
# ---------------------------------------------------------------------------


class Term:
    __slots__ = ()


class IntExpr(Term):
    __slots__ = ()


class BoolExpr(Term):
    __slots__ = ()


class ShapeExpr(Term):
    __slots__ = ()


@dataclass(frozen=True)
class IntLit(IntExpr):
    value: int


@dataclass(frozen=True)
class IntVar(IntExpr):
    name: str


@dataclass(frozen=True)
class HoleRef(IntExpr):
    loc: SourceLoc


@dataclass(frozen=True)
class Rank(IntExpr):
    shape: ShapeExpr


@dataclass(frozen=True)
class Dim(IntExpr):
    shape: ShapeExpr
    index: int


@dataclass(frozen=True)
class Arith(IntExpr):
    op: str  # + - * /
    lhs: IntExpr
    rhs: IntExpr


@dataclass(frozen=True)
class BoolLit(BoolExpr):
    value: bool


@dataclass(frozen=True)
class BoolVar(BoolExpr):
    name: str


@dataclass(frozen=True)
class Not(BoolExpr):
    arg: BoolExpr


@dataclass(frozen=True)
class And(BoolExpr):
    args: tuple[BoolExpr, ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError("And needs at least one operand")


@dataclass(frozen=True)
class Or(BoolExpr):
    args: tuple[BoolExpr, ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError("Or needs at least one operand")


@dataclass(frozen=True)
class IntEq(BoolExpr):
    lhs: IntExpr
    rhs: IntExpr


@dataclass(frozen=True)
class ShapeEq(BoolExpr):
    lhs: ShapeExpr
    rhs: ShapeExpr


@dataclass(frozen=True)
class BoolEq(BoolExpr):
    lhs: BoolExpr
    rhs: BoolExpr


@dataclass(frozen=True)
class IntRel(BoolExpr):
    op: str  # > >= < <=
    lhs: IntExpr
    rhs: IntExpr


@dataclass(frozen=True)
class ShapeVar(ShapeExpr):
    name: str


@dataclass(frozen=True)
class ShapeLit(ShapeExpr):
    dims: tuple[IntExpr, ...]


@dataclass(frozen=True)
class Broadcast(ShapeExpr):
    lhs: ShapeExpr
    rhs: ShapeExpr


@dataclass(frozen=True)
class Tuple(Term):
    items: tuple["AnyExpr", ...]


AnyExpr = Union[IntExpr, BoolExpr, ShapeExpr, Tuple]
Var = Union[IntVar, BoolVar, ShapeVar]

TRUE = BoolLit(True)
FALSE = BoolLit(False)

REL_OPS = (">", ">=", "<", "<=")
ARITH_OPS = ("+", "-", "*", "/")


class OriginKind(enum.Enum):
    USER_ASSERT = "user-assert"
    BLOCK_ARG = "block-argument-equation"
    INTRINSIC = "intrinsic"
    CALL_GLUE = "call-glue"
    PATH_CONDITION = "path-condition"


@dataclass(frozen=True)
class Origin:
    loc: SourceLoc
    kind: OriginKind = OriginKind.USER_ASSERT


@dataclass(frozen=True)
class GuardedConstraint:
    guard: BoolExpr
    body: BoolExpr
    origin: Origin

    def with_(self, guard: Optional[BoolExpr] = None, body: Optional[BoolExpr] = None):
        return GuardedConstraint(
            self.guard if guard is None else guard,
            self.body if body is None else body,
            self.origin,
        )


def kind_of(e: Term) -> str:
    if isinstance(e, IntExpr):
        return "int"
    if isinstance(e, BoolExpr):
        return "bool"
    if isinstance(e, ShapeExpr):
        return "shape"
    if isinstance(e, Tuple):
        return "compound"
    raise TypeError(f"not a constraint term: {e!r}")


# ---------------------------------------------------------------------------
# Generic traversal
# ---------------------------------------------------------------------------


def _child_fields(e: Term):
    for f in fields(e):
        yield f.name, getattr(e, f.name)


def children(e: Term) -> Iterator[Term]:
    for _, value in _child_fields(e):
        if isinstance(value, Term):
            yield value
        elif isinstance(value, tuple):
            for item in value:
                if isinstance(item, Term):
                    yield item


def map_children(e: Term, fn: Callable[[Term], Term]) -> Term:
    changes = {}
    for name, value in _child_fields(e):
        if isinstance(value, Term):
            new = fn(value)
            if new is not value:
                changes[name] = new
        elif isinstance(value, tuple) and value and isinstance(value[0], Term):
            new_items = tuple(fn(item) for item in value)
            if any(a is not b for a, b in zip(new_items, value)):
                changes[name] = new_items
    return replace(e, **changes) if changes else e


def subterms(e: Term) -> Iterator[Term]:
    stack = [e]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(children(t))


def free_vars(e: Term) -> set[Var]:
    return {t for t in subterms(e) if isinstance(t, (IntVar, BoolVar, ShapeVar))}


def holes(e: Term) -> set[HoleRef]:
    return {t for t in subterms(e) if isinstance(t, HoleRef)}


def is_closed(e: Term) -> bool:
    return not any(isinstance(t, (IntVar, BoolVar, ShapeVar, HoleRef)) for t in subterms(e))


def size(e: Term) -> int:
    return sum(1 for _ in subterms(e))


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------


class SubstitutionError(TypeError):
    pass


_VAR_KIND = {IntVar: "int", BoolVar: "bool", ShapeVar: "shape"}


def substitute(e: Term, bindings: Mapping[str, Term]) -> Term:
    """Simultaneously replace variables named in ``bindings``.

    A binding's replacement must have the same kind (int, bool, shape) as
    the variable it replaces.
    """
    if not bindings:
        return e

    def go(t: Term) -> Term:
        if isinstance(t, (IntVar, BoolVar, ShapeVar)):
            new = bindings.get(t.name)
            if new is None:
                return t
            if kind_of(new) != _VAR_KIND[type(t)]:
                raise SubstitutionError(
                    f"cannot replace {_VAR_KIND[type(t)]} variable {t.name!r} "
                    f"with {kind_of(new)} term {render(new)}"
                )
            return new
        return map_children(t, go)

    return go(e)


def rename(e: Term, mapping: Mapping[str, str]) -> Term:
    """Rename variables, keeping their kinds."""

    def go(t: Term) -> Term:
        if isinstance(t, (IntVar, BoolVar, ShapeVar)):
            new = mapping.get(t.name)
            return t if new is None else type(t)(new)
        return map_children(t, go)

    return go(e)


# ---------------------------------------------------------------------------
# Smart constructors and constant folding
# ---------------------------------------------------------------------------


def _conjuncts(b: BoolExpr) -> tuple[BoolExpr, ...]:
    return b.args if isinstance(b, And) else (b,)


def _dedupe(items: Iterable[BoolExpr]) -> list[BoolExpr]:
    seen: set[BoolExpr] = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def conj(*args: BoolExpr) -> BoolExpr:
    flat: list[BoolExpr] = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        elif a == TRUE:
            continue
        elif a == FALSE:
            return FALSE
        else:
            flat.append(a)
    flat = _dedupe(flat)
    members = set(flat)
    if any(isinstance(a, Not) and a.arg in members for a in flat):
        return FALSE
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*args: BoolExpr) -> BoolExpr:
    flat: list[BoolExpr] = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        elif a == FALSE:
            continue
        elif a == TRUE:
            return TRUE
        else:
            flat.append(a)
    flat = _dedupe(flat)
    members = set(flat)
    if any(isinstance(a, Not) and a.arg in members for a in flat):
        return TRUE
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    # Factor conjuncts shared by every disjunct: (c & d) | (c & !d) -> c.
    conj_sets = [_conjuncts(a) for a in flat]
    common = [c for c in conj_sets[0] if all(c in cs for cs in conj_sets[1:])]
    if common:
        rests = [conj(*(c for c in cs if c not in common)) for cs in conj_sets]
        return conj(*common, disj(*rests))
    return Or(tuple(flat))


def negate(b: BoolExpr) -> BoolExpr:
    if isinstance(b, BoolLit):
        return BoolLit(not b.value)
    if isinstance(b, Not):
        return b.arg
    return Not(b)


def int_div(a: int, b: int) -> int:
    """Euclidean quotient (remainder always nonnegative), matching SMT-LIB ``div``."""
    return a // b if b > 0 else -(a // -b)


def _fold_arith(op: str, lhs: IntExpr, rhs: IntExpr) -> IntExpr:
    if isinstance(lhs, IntLit) and isinstance(rhs, IntLit):
        a, b = lhs.value, rhs.value
        if op == "+":
            return IntLit(a + b)
        if op == "-":
            return IntLit(a - b)
        if op == "*":
            return IntLit(a * b)
        if op == "/" and b != 0:
            return IntLit(int_div(a, b))
    if op == "+":
        if lhs == IntLit(0):
            return rhs
        if rhs == IntLit(0):
            return lhs
    elif op == "-":
        if rhs == IntLit(0):
            return lhs
    elif op == "*":
        if lhs == IntLit(1):
            return rhs
        if rhs == IntLit(1):
            return lhs
    elif op == "/":
        if rhs == IntLit(1):
            return lhs
    return Arith(op, lhs, rhs)


def _fold_broadcast(lhs: ShapeExpr, rhs: ShapeExpr) -> ShapeExpr:
    if not (isinstance(lhs, ShapeLit) and isinstance(rhs, ShapeLit)):
        return Broadcast(lhs, rhs)
    a, b = lhs.dims, rhs.dims
    n = max(len(a), len(b))
    out: list[IntExpr] = []
    for j in range(1, n + 1):
        da = a[-j] if j <= len(a) else IntLit(1)
        db = b[-j] if j <= len(b) else IntLit(1)
        if da == db or db == IntLit(1):
            out.append(da)
        elif da == IntLit(1):
            out.append(db)
        else:
            return Broadcast(lhs, rhs)
    return ShapeLit(tuple(reversed(out)))


def _simplify_once(e: Term) -> Term:
    e = map_children(e, _simplify_once)
    if isinstance(e, Arith):
        return _fold_arith(e.op, e.lhs, e.rhs)
    if isinstance(e, Rank):
        if isinstance(e.shape, ShapeLit):
            return IntLit(len(e.shape.dims))
        return e
    if isinstance(e, Dim):
        if isinstance(e.shape, ShapeLit):
            dims = e.shape.dims
            if -len(dims) <= e.index < len(dims):
                return dims[e.index]
        return e
    if isinstance(e, Broadcast):
        return _fold_broadcast(e.lhs, e.rhs)
    if isinstance(e, Not):
        return negate(e.arg)
    if isinstance(e, And):
        return conj(*e.args)
    if isinstance(e, Or):
        return disj(*e.args)
    if isinstance(e, ShapeEq):
        if (isinstance(e.lhs, ShapeLit) and isinstance(e.rhs, ShapeLit)
                and len(e.lhs.dims) == len(e.rhs.dims)):
            return conj(*(IntEq(x, y) for x, y in zip(e.lhs.dims, e.rhs.dims)))
        return e
    if isinstance(e, BoolEq):
        if isinstance(e.rhs, BoolLit):
            return e.lhs if e.rhs.value else negate(e.lhs)
        if isinstance(e.lhs, BoolLit):
            return e.rhs if e.lhs.value else negate(e.rhs)
        return e
    return e


def simplify_constant_fold(e: Term) -> Term:
    """Fold literal arithmetic, rank/dim of literal shapes and boolean structure.

    Comparisons between integer literals are deliberately left in place
    (``10 = 30`` stays readable); everything else reaches a fixpoint, so the
    function is idempotent.
    """
    while True:
        new = _simplify_once(e)
        if new == e:
            return new
        e = new


simplify = simplify_constant_fold


# ---------------------------------------------------------------------------
# Concrete evaluation
# ---------------------------------------------------------------------------


class Undefined(Exception):
    """Raised when a term has no value (out-of-range dim, zero divisor, bad broadcast)."""


def broadcast_shapes(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    n = max(len(a), len(b))
    out = []
    for j in range(1, n + 1):
        da = a[-j] if j <= len(a) else 1
        db = b[-j] if j <= len(b) else 1
        if da != db and da != 1 and db != 1:
            raise Undefined(f"cannot broadcast {list(a)} with {list(b)}")
        # Equal to max() for positive dims; a 0 against a 1 stays 0.
        out.append(db if da == 1 else da)
    return tuple(reversed(out))


def evaluate(e: Term, env: Mapping[str, object] = {}, hole_values: Mapping[SourceLoc, int] = {}):
    """Value of ``e``: int, bool, tuple of ints (shapes) or tuple (compound)."""
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, (IntVar, BoolVar, ShapeVar)):
        if e.name not in env:
            raise Undefined(f"unbound variable {e.name}")
        return env[e.name]
    if isinstance(e, HoleRef):
        if e.loc not in hole_values:
            raise Undefined(f"unfilled hole at {e.loc}")
        return hole_values[e.loc]
    if isinstance(e, Rank):
        return len(evaluate(e.shape, env, hole_values))
    if isinstance(e, Dim):
        dims = evaluate(e.shape, env, hole_values)
        if not -len(dims) <= e.index < len(dims):
            raise Undefined(f"dimension {e.index} out of range for rank {len(dims)}")
        return dims[e.index]
    if isinstance(e, Arith):
        a = evaluate(e.lhs, env, hole_values)
        b = evaluate(e.rhs, env, hole_values)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            raise Undefined("division by zero")
        return int_div(a, b)
    if isinstance(e, Not):
        return not evaluate(e.arg, env, hole_values)
    if isinstance(e, And):
        # Every operand is evaluated: an undefined operand makes the whole term undefined.
        values = [evaluate(a, env, hole_values) for a in e.args]
        return all(values)
    if isinstance(e, Or):
        values = [evaluate(a, env, hole_values) for a in e.args]
        return any(values)
    if isinstance(e, (IntEq, ShapeEq, BoolEq)):
        return evaluate(e.lhs, env, hole_values) == evaluate(e.rhs, env, hole_values)
    if isinstance(e, IntRel):
        a = evaluate(e.lhs, env, hole_values)
        b = evaluate(e.rhs, env, hole_values)
        return {">": a > b, ">=": a >= b, "<": a < b, "<=": a <= b}[e.op]
    if isinstance(e, ShapeLit):
        return tuple(evaluate(d, env, hole_values) for d in e.dims)
    if isinstance(e, Broadcast):
        return broadcast_shapes(evaluate(e.lhs, env, hole_values),
                                evaluate(e.rhs, env, hole_values))
    if isinstance(e, Tuple):
        return tuple(evaluate(i, env, hole_values) for i in e.items)
    raise TypeError(f"cannot evaluate {e!r}")


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def render(e: Term) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, (IntVar, BoolVar, ShapeVar)):
        return e.name
    if isinstance(e, HoleRef):
        return f"____@{e.loc.line}:{e.loc.column}"
    if isinstance(e, Rank):
        return f"rank({render(e.shape)})"
    if isinstance(e, Dim):
        return f"{render(e.shape)}[{e.index}]"
    if isinstance(e, Arith):
        def side(t: IntExpr, right: bool) -> str:
            text = render(t)
            if isinstance(t, Arith) and (
                _PREC[t.op] < _PREC[e.op] or (right and _PREC[t.op] == _PREC[e.op])
            ):
                return f"({text})"
            return text

        return f"{side(e.lhs, False)} {e.op} {side(e.rhs, True)}"
    if isinstance(e, Not):
        inner = render(e.arg)
        if isinstance(e.arg, (And, Or, IntEq, ShapeEq, BoolEq, IntRel)):
            inner = f"({inner})"
        return f"¬{inner}"
    if isinstance(e, (And, Or)):
        sep = " ∧ " if isinstance(e, And) else " ∨ "
        parts = []
        for a in e.args:
            text = render(a)
            if isinstance(a, (And, Or)):
                text = f"({text})"
            parts.append(text)
        return sep.join(parts)
    if isinstance(e, (IntEq, ShapeEq, BoolEq)):
        return f"{render(e.lhs)} = {render(e.rhs)}"
    if isinstance(e, IntRel):
        symbol = {">": ">", ">=": "≥", "<": "<", "<=": "≤"}[e.op]
        return f"{render(e.lhs)} {symbol} {render(e.rhs)}"
    if isinstance(e, ShapeLit):
        return "[" + ", ".join(render(d) for d in e.dims) + "]"
    if isinstance(e, Broadcast):
        return f"broadcast({render(e.lhs)}, {render(e.rhs)})"
    if isinstance(e, Tuple):
        return "(" + ", ".join(render(i) for i in e.items) + ")"
    raise TypeError(f"cannot render {e!r}")


def render_constraint(c: GuardedConstraint) -> str:
    if c.guard == TRUE:
        return render(c.body)
    return f"[{render(c.guard)}] ⇒ {render(c.body)}"


# ---------------------------------------------------------------------------
# Equality elimination
# ---------------------------------------------------------------------------


def definedness(e: Term) -> list[BoolExpr]:
    """Side conditions under which ``e`` denotes a value.

    Eliminating ``v = e`` would otherwise silently discard the in-bounds and
    non-zero-divisor obligations that the solver encoding attaches to ``e``.
    """
    out: list[BoolExpr] = []
    for t in subterms(e):
        if isinstance(t, Dim) and not isinstance(t.shape, ShapeLit):
            if t.index >= 0:
                out.append(IntRel(">", Rank(t.shape), IntLit(t.index)))
            else:
                out.append(IntRel(">=", Rank(t.shape), IntLit(-t.index)))
        elif isinstance(t, Dim):
            if not -len(t.shape.dims) <= t.index < len(t.shape.dims):
                out.append(IntEq(t, t))
        elif isinstance(t, Arith) and t.op == "/":
            if not (isinstance(t.rhs, IntLit) and t.rhs.value != 0):
                out.append(Not(IntEq(t.rhs, IntLit(0))))
        elif isinstance(t, Broadcast):
            out.append(IntRel(">=", Rank(t), IntLit(0)))
    return _dedupe(out)


def _split(c: GuardedConstraint) -> list[GuardedConstraint]:
    if isinstance(c.body, And):
        return [c.with_(body=b) for b in c.body.args]
    return [c]


def _closed_truth(b: BoolExpr) -> Optional[bool]:
    if not is_closed(b):
        return None
    try:
        return bool(evaluate(b))
    except Undefined:
        return None


def _normalize(c: GuardedConstraint) -> list[GuardedConstraint]:
    guard = simplify(c.guard)
    if _closed_truth(guard) is True:
        guard = TRUE
    elif guard == FALSE or _closed_truth(guard) is False:
        return []
    body = simplify(c.body)
    if _closed_truth(body) is True:
        return []
    return _split(GuardedConstraint(guard, body, c.origin))


def _candidates(body: BoolExpr, shapes_only: bool) -> list[tuple[Var, Term]]:
    """(variable, replacement) pairs under which ``body`` is an eliminable equation, best first."""
    if isinstance(body, BoolVar) and not shapes_only:
        return [(body, TRUE)]
    if isinstance(body, Not) and isinstance(body.arg, BoolVar) and not shapes_only:
        return [(body.arg, FALSE)]
    if isinstance(body, ShapeEq):
        var_type = ShapeVar
    elif shapes_only:
        return []
    elif isinstance(body, IntEq):
        var_type = IntVar
    elif isinstance(body, BoolEq):
        var_type = BoolVar
    else:
        return []
    options = []
    for v, e in ((body.lhs, body.rhs), (body.rhs, body.lhs)):
        if isinstance(v, var_type) and v not in free_vars(e):
            options.append((v, e))
    # v = w: prefer eliminating the lexicographically later name.
    options.sort(key=lambda o: o[0].name, reverse=True)
    return options


def eliminate_equalities(
    constraints: Iterable[GuardedConstraint],
) -> tuple[list[GuardedConstraint], dict[str, Term]]:
    """Remove unguarded ``v = e`` equations by substituting ``e`` for ``v``.

    Only constraints whose guard is literally true are used; shape variables
    are eliminated before integer and boolean ones.  Returns the reduced
    system and the fully resolved bindings of the eliminated variables.
    """
    work: list[GuardedConstraint] = []
    for c in constraints:
        work.extend(_normalize(c))
    bindings: dict[str, Term] = {}
    for shapes_only in (True, False):
        while True:
            progress = False
            i = 0
            while i < len(work):
                c = work[i]
                found = _candidates(c.body, shapes_only) if c.guard == TRUE else []
                if not found:
                    i += 1
                    continue
                var, value = found[0]
                step = {var.name: value}
                rest = work[:i] + work[i + 1:]
                residuals = [
                    r for d in definedness(value)
                    for r in _normalize(GuardedConstraint(TRUE, d, c.origin))
                ]
                work = []
                for other in rest + residuals:
                    if var in free_vars(other.guard) or var in free_vars(other.body):
                        other = GuardedConstraint(
                            substitute(other.guard, step), substitute(other.body, step), other.origin
                        )
                        work.extend(_normalize(other))
                    else:
                        work.append(other)
                for name, bound in list(bindings.items()):
                    bindings[name] = simplify(substitute(bound, step))
                bindings[var.name] = simplify(value)
                progress = True
            if not progress:
                break
    return work, bindings
