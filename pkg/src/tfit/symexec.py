"""Symbolic execution of loop-free CFGs into function summaries.

Each SSA value is mapped to a constraint term: tensors to the shape
variable or expression describing their shape, integers and booleans to
integer and boolean terms, tuples to compound terms.  Values the analysis
cannot describe become ``OPAQUE``; asserts over them are dropped with a
warning instead of being misread.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

from . import cfg as C
from . import constraints as K
from .frontend.lexer import SourceLoc
from .frontend.types import BOOL, INT, SHAPE, TENSOR, TfitType, TupleType
from .frontend.typecheck import is_opaque_op

log = logging.getLogger(__name__)


class _Opaque:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OPAQUE"


OPAQUE = _Opaque()
Value = Union[K.Term, _Opaque]


@dataclass(frozen=True)
class CallSite:
    callee: str
    args: tuple[K.Term, ...]
    result: Optional[K.Term]
    guard: K.BoolExpr
    loc: SourceLoc


Item = Union[K.GuardedConstraint, CallSite]


@dataclass
class FunctionSummary:
    name: str
    args: list[K.Term]
    result: Optional[K.Term]
    items: list[Item] = field(default_factory=list)
    warnings: list[tuple[SourceLoc, str]] = field(default_factory=list)

    @property
    def constraints(self) -> list[K.GuardedConstraint]:
        return [i for i in self.items if isinstance(i, K.GuardedConstraint)]

    @property
    def calls(self) -> list[CallSite]:
        return [i for i in self.items if isinstance(i, CallSite)]


_PREFIX = {"int": "n_", "bool": "b_", "shape": "s_"}


def _kind(ty: TfitType) -> Optional[str]:
    if ty == INT:
        return "int"
    if ty == BOOL:
        return "bool"
    if ty in (SHAPE, TENSOR):
        return "shape"
    return None


def variable_for(name: str, ty: TfitType) -> Value:
    """Fresh variable (or compound shell of variables) for an SSA name of type ``ty``."""
    base = name.lstrip("%")
    if isinstance(ty, TupleType):
        items = []
        for i, item_ty in enumerate(ty.items):
            v = variable_for(f"{base}.{i}", item_ty)
            if v is OPAQUE:
                return OPAQUE
            items.append(v)
        return K.Tuple(tuple(items))
    kind = _kind(ty)
    if kind == "int":
        return K.IntVar(_PREFIX[kind] + base)
    if kind == "bool":
        return K.BoolVar(_PREFIX[kind] + base)
    if kind == "shape":
        return K.ShapeVar(_PREFIX[kind] + base)
    return OPAQUE


def equate(lhs: K.Term, rhs: K.Term) -> K.BoolExpr:
    """Equality between two terms of the same kind; tuples compare componentwise."""
    if isinstance(lhs, K.Tuple) and isinstance(rhs, K.Tuple):
        return K.conj(*(equate(a, b) for a, b in zip(lhs.items, rhs.items)))
    kind = K.kind_of(lhs)
    if kind == "int":
        return K.IntEq(lhs, rhs)
    if kind == "bool":
        return K.BoolEq(lhs, rhs)
    if kind == "shape":
        return K.ShapeEq(lhs, rhs)
    raise TypeError(f"cannot equate {lhs!r} and {rhs!r}")


class _Executor:
    def __init__(self, cfg: C.FunctionCfg):
        self.cfg = cfg
        self.env: dict[str, Value] = {}
        self.types: dict[str, TfitType] = {}
        self.pc: dict[str, K.BoolExpr] = {}
        self.items: list[Item] = []
        self.warnings: list[tuple[SourceLoc, str]] = []
        self.opaque_count = 0

    def warn(self, loc: SourceLoc, message: str) -> None:
        self.warnings.append((loc, message))
        log.warning("%s: %s", loc, message)

    def materialize(self, value: Value, ty: TfitType) -> Value:
        """Replace an opaque value by an unconstrained fresh variable of type ``ty``."""
        if value is not OPAQUE:
            return value
        self.opaque_count += 1
        return variable_for(f"opaque{self.opaque_count}", ty)

    def bind(self, name: str, ty: TfitType) -> None:
        self.env[name] = variable_for(name, ty)
        self.types[name] = ty

    # -- driver --------------------------------------------------------------

    def run(self) -> FunctionSummary:
        cfg = self.cfg
        order = C.topological_order(cfg)
        for b in cfg.blocks.values():
            for name, ty in b.params + b.fresh:
                self.bind(name, ty)
        self.pc = {bid: K.FALSE for bid in cfg.blocks}
        self.pc[cfg.entry] = K.TRUE
        result = variable_for("result", cfg.result_type)
        result = None if result is OPAQUE else result
        for bid in order:
            block = cfg.blocks[bid]
            guard = self.pc[bid]
            if guard == K.FALSE:
                continue
            for ins in block.instrs:
                self.execute(ins, guard)
            self.terminate(block, guard, result)
        self.mark_paths(order)
        args = [self.env[n] for n, _ in cfg.params]
        return FunctionSummary(cfg.name, args, result, self.items, self.warnings)

    def mark_paths(self, order: list[str]) -> None:
        # A block with no constraints of its own still contributes its path condition.
        guards = {i.guard for i in self.items}
        for bid in order:
            g = self.pc[bid]
            if g in guards or g in (K.FALSE, K.TRUE):
                continue
            guards.add(g)
            loc = self.cfg.blocks[bid].loc or self.cfg.loc
            self.items.append(K.GuardedConstraint(g, K.TRUE, K.Origin(loc, K.OriginKind.PATH_CONDITION)))

    # -- instructions --------------------------------------------------------

    def execute(self, ins: C.Instr, guard: K.BoolExpr) -> None:
        ops = [self.env[o] for o in ins.operands]
        if ins.op == "assert":
            cond = ops[0]
            if cond is OPAQUE:
                self.warn(ins.loc, "assertion uses a value the analysis cannot track; ignored")
                return
            body = K.simplify(cond)
            self.items.append(K.GuardedConstraint(guard, body, K.Origin(ins.loc, K.OriginKind.USER_ASSERT)))
            return
        if ins.op == "call":
            value = self.call(ins, ops, guard)
        else:
            value = self.pure(ins, ops)
        if ins.dest is not None:
            self.env[ins.dest] = value
            self.types[ins.dest] = ins.ty

    def pure(self, ins: C.Instr, ops: list[Value]) -> Value:
        op = ins.op
        if op == "const":
            return K.BoolLit(ins.attr) if isinstance(ins.attr, bool) else K.IntLit(ins.attr)
        if op == "hole":
            return K.HoleRef(ins.attr)
        if op == "tuple":
            assert isinstance(ins.ty, TupleType)
            return K.Tuple(tuple(self.materialize(v, t) for v, t in zip(ops, ins.ty.items)))
        if op == "get":
            base = ops[0]
            if isinstance(base, K.Tuple):
                return base.items[ins.attr]
            return OPAQUE
        if any(v is OPAQUE for v in ops):
            return OPAQUE
        if op == "arith":
            return K.Arith(ins.attr, ops[0], ops[1])
        if op == "neg":
            return K.Arith("-", K.IntLit(0), ops[0])
        if op == "cmp":
            lhs, rhs = ops
            if ins.attr in ("==", "!="):
                eq = equate(lhs, rhs)
                return eq if ins.attr == "==" else K.Not(eq)
            return K.IntRel(ins.attr, lhs, rhs)
        if op == "not":
            return K.Not(ops[0])
        if op == "and":
            return K.And((ops[0], ops[1]))
        if op == "or":
            return K.Or((ops[0], ops[1]))
        if op == "shapelit":
            return K.ShapeLit(tuple(ops))
        if op == "shapeof":
            return ops[0]
        if op == "rank":
            return K.Rank(ops[0])
        if op == "dim":
            index = K.simplify(ops[1])
            if not isinstance(index, K.IntLit):
                self.warn(ins.loc, "shape index is not a constant; its value is not tracked")
                return OPAQUE
            return K.Dim(ops[0], index.value)
        if op == "broadcast":
            return K.Broadcast(ops[0], ops[1])
        raise AssertionError(f"unhandled op {op}")

    def call(self, ins: C.Instr, ops: list[Value], guard: K.BoolExpr) -> Value:
        callee = ins.attr
        result = variable_for(ins.dest, ins.ty) if ins.dest is not None else None
        if callee == "randn":
            if ops[0] is not OPAQUE:
                body = K.ShapeEq(result, ops[0])
                self.items.append(K.GuardedConstraint(guard, body, K.Origin(ins.loc, K.OriginKind.INTRINSIC)))
            return result
        if is_opaque_op(callee):
            return result if result is not None else OPAQUE
        arg_types = [self.types_of(o) for o in ins.operands]
        args = tuple(self.materialize(v, t) for v, t in zip(ops, arg_types))
        self.items.append(CallSite(callee, args, None if result is OPAQUE else result, guard, ins.loc))
        return result if result is not None else OPAQUE

    def types_of(self, name: str) -> TfitType:
        return self.types[name]

    # -- terminators ---------------------------------------------------------

    def terminate(self, block: C.Block, guard: K.BoolExpr, result: Optional[K.Term]) -> None:
        term = block.term
        if isinstance(term, C.Return):
            if result is not None and term.value is not None:
                value = self.env[term.value]
                if value is not OPAQUE:
                    loc = block.loc or self.cfg.loc
                    self.items.append(K.GuardedConstraint(
                        guard, K.simplify(equate(result, value)),
                        K.Origin(loc, K.OriginKind.BLOCK_ARG)))
            return
        if isinstance(term, C.Jump):
            self.edge(block, guard, term.target, term.args)
            return
        assert isinstance(term, C.CondJump)
        cond = self.env[term.cond]
        if cond is OPAQUE:
            then_c, else_c = K.TRUE, K.TRUE
        else:
            then_c, else_c = cond, K.negate(cond)
        self.edge(block, K.simplify(K.conj(guard, then_c)), term.then_target, term.then_args)
        self.edge(block, K.simplify(K.conj(guard, else_c)), term.else_target, term.else_args)

    def edge(self, block: C.Block, cond: K.BoolExpr, target: str, args) -> None:
        if cond == K.FALSE:
            return
        succ = self.cfg.blocks[target]
        self.pc[target] = K.simplify(K.disj(self.pc[target], cond))
        loc = succ.loc or block.loc or self.cfg.loc
        for (param, ty), arg in zip(succ.params, args):
            value = self.env[arg]
            if value is OPAQUE or self.env[param] is OPAQUE:
                continue
            body = K.simplify(equate(self.env[param], value))
            self.items.append(K.GuardedConstraint(cond, body, K.Origin(loc, K.OriginKind.BLOCK_ARG)))


def summarize(cfg: C.FunctionCfg) -> FunctionSummary:
    """Summary of a loop-free CFG: argument/result terms, guarded constraints, call sites."""
    return _Executor(cfg).run()


def free_variables(summary: FunctionSummary) -> set[str]:
    names: set[str] = set()
    for item in summary.items:
        if isinstance(item, K.GuardedConstraint):
            terms = [item.guard, item.body]
        else:
            terms = [item.guard, *item.args] + ([item.result] if item.result is not None else [])
        for t in terms:
            names.update(v.name for v in K.free_vars(t))
    return names


def render_summary(summary: FunctionSummary) -> str:
    def show(t: Optional[K.Term]) -> str:
        return "()" if t is None else K.render(t)

    head = ", ".join(show(a) for a in summary.args)
    lines = [f"{summary.name}({head}) -> {show(summary.result)}:"]
    for item in summary.items:
        prefix = "" if item.guard == K.TRUE else f"[{K.render(item.guard)}] "
        if isinstance(item, CallSite):
            args = ", ".join(show(a) for a in item.args)
            lines.append(f"  {prefix}{item.callee}({args}) -> {show(item.result)}")
        elif item.origin.kind is K.OriginKind.PATH_CONDITION:
            lines.append(f"  {prefix}reachable")
        else:
            lines.append(f"  {prefix}{K.render(item.body)}")
    return "\n".join(lines) + "\n"
