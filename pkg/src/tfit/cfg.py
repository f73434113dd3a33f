"""SSA control-flow graphs with block arguments, and loop elimination.

Lowering turns structured statements into blocks that receive values as
parameters instead of phi nodes.  ``eliminate_loops`` then replaces each
natural loop by a branch between skipping the loop and running two copies
of its body, the second of which starts from fresh, unconstrained inputs.
"""

from __future__ import annotations

import copy
import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import TfitError
from .frontend import ast as A
from .frontend.lexer import SourceLoc
from .frontend.types import BOOL, INT, SHAPE, TENSOR, UNIT, TfitType, TupleType

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# IR
# ---------------------------------------------------------------------------

OPS = (
    "const", "hole", "arith", "neg", "cmp", "not", "and", "or", "tuple", "get",
    "shapelit", "shapeof", "dim", "rank", "broadcast", "call", "assert",
)


@dataclass
class Instr:
    dest: Optional[str]
    op: str
    operands: tuple[str, ...]
    ty: Optional[TfitType]
    loc: SourceLoc
    attr: object = None

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise ValueError(f"unknown op {self.op!r}")


@dataclass
class Jump:
    target: str
    args: tuple[str, ...] = ()


@dataclass
class CondJump:
    cond: str
    then_target: str
    then_args: tuple[str, ...]
    else_target: str
    else_args: tuple[str, ...]


@dataclass
class Return:
    value: Optional[str]


Terminator = Union[Jump, CondJump, Return]


@dataclass
class Block:
    id: str
    params: list[tuple[str, TfitType]]
    instrs: list[Instr] = field(default_factory=list)
    term: Optional[Terminator] = None
    # Values that appear out of thin air on entry: no defining instruction, no incoming argument.
    fresh: list[tuple[str, TfitType]] = field(default_factory=list)
    loc: Optional[SourceLoc] = None


@dataclass
class FunctionCfg:
    name: str
    entry: str
    blocks: dict[str, Block]
    result_type: TfitType
    loc: SourceLoc

    @property
    def params(self) -> list[tuple[str, TfitType]]:
        return self.blocks[self.entry].params


def successors(term: Optional[Terminator]) -> list[tuple[str, tuple[str, ...]]]:
    if isinstance(term, Jump):
        return [(term.target, term.args)]
    if isinstance(term, CondJump):
        return [(term.then_target, term.then_args), (term.else_target, term.else_args)]
    return []


def successor_ids(block: Block) -> list[str]:
    return [t for t, _ in successors(block.term)]


def predecessors(cfg: FunctionCfg) -> dict[str, list[str]]:
    preds: dict[str, list[str]] = {b: [] for b in cfg.blocks}
    for b in cfg.blocks.values():
        for s in successor_ids(b):
            preds[s].append(b.id)
    return preds


class CfgError(TfitError):
    pass


class IrreducibleLoop(CfgError):
    """The function's CFG has a cycle that is not a natural loop we can rewrite."""


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------


class _Lowerer:
    def __init__(self, fn: A.AstFunction):
        self.fn = fn
        self.blocks: dict[str, Block] = {}
        self.block_counter = itertools.count()
        self.temp_counter = itertools.count()
        self.name_versions: dict[str, int] = {}
        self.scopes: list[dict[str, str]] = []
        self.mutable: list[set[str]] = []
        self.types: dict[str, TfitType] = {}
        self.current: Optional[Block] = None

    # -- helpers ---------------------------------------------------------------

    def new_block(self, params=(), loc=None) -> Block:
        bid = f"bb{next(self.block_counter)}"
        block = Block(bid, list(params), loc=loc)
        self.blocks[bid] = block
        return block

    def ssa(self, hint: Optional[str], ty: TfitType) -> str:
        if hint is None:
            name = f"%{next(self.temp_counter)}"
        else:
            version = self.name_versions.get(hint, 0)
            self.name_versions[hint] = version + 1
            name = f"%{hint}" if version == 0 else f"%{hint}.{version}"
        self.types[name] = ty
        return name

    def emit(self, op: str, operands, ty, loc, attr=None, hint=None) -> str:
        assert self.current is not None
        dest = None if ty is None else self.ssa(hint, ty)
        self.current.instrs.append(Instr(dest, op, tuple(operands), ty, loc, attr))
        return dest  # type: ignore[return-value]

    def lookup(self, name: str) -> str:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise CfgError(f"unbound name {name!r} during lowering")

    def assign(self, name: str, value: str) -> None:
        for scope in reversed(self.scopes):
            if name in scope:
                scope[name] = value
                return
        raise CfgError(f"unbound name {name!r} during lowering")

    def visible_mutables(self) -> list[str]:
        seen: list[str] = []
        for scope, muts in zip(self.scopes, self.mutable):
            for name in scope:
                if name in muts and name not in seen:
                    seen.append(name)
        # Shadowing makes the innermost binding the live one; dedupe keeps order.
        return seen

    def snapshot(self, names: list[str]) -> list[str]:
        return [self.lookup(n) for n in names]

    def restore(self, names: list[str], values: list[str]) -> None:
        for n, v in zip(names, values):
            self.assign(n, v)

    # -- functions ---------------------------------------------------------------

    def lower(self) -> FunctionCfg:
        params = []
        scope: dict[str, str] = {}
        for p in self.fn.params:
            name = self.ssa(p.name, p.ty)
            params.append((name, p.ty))
            scope[p.name] = name
        self.scopes.append(scope)
        self.mutable.append(set())
        entry = self.new_block(params, loc=self.fn.loc)
        self.current = entry
        self.stmts(self.fn.body)
        if self.current is not None and self.current.term is None:
            self.current.term = Return(None)
        return FunctionCfg(self.fn.name, entry.id, self.blocks, self.fn.ret, self.fn.loc)

    def stmts(self, body: list[A.Stmt]) -> None:
        for s in body:
            if self.current is None:
                return
            self.stmt(s)

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Let):
            value = self.expr(s.value, hint=s.name)
            self.scopes[-1][s.name] = value
            if s.mutable:
                self.mutable[-1].add(s.name)
        elif isinstance(s, A.Assign):
            self.assign(s.name, self.expr(s.value, hint=s.name))
        elif isinstance(s, A.Assert):
            cond = self.expr(s.cond)
            self.emit("assert", [cond], None, s.loc)
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, A.Return):
            value = self.expr(s.value) if s.value is not None else None
            assert self.current is not None
            self.current.term = Return(value)
            self.current = None
        elif isinstance(s, A.If):
            self.lower_if(s)
        elif isinstance(s, A.For):
            self.lower_for(s)
        else:
            raise AssertionError(f"unknown statement {s!r}")

    def branch(self, body: list[A.Stmt], block: Block) -> Optional[tuple[Block, dict[str, str]]]:
        self.current = block
        self.scopes.append({})
        self.mutable.append(set())
        self.stmts(body)
        self.scopes.pop()
        self.mutable.pop()
        end = self.current
        if end is None:
            return None
        return end, {n: self.lookup(n) for n in self.visible_mutables()}

    def lower_if(self, s: A.If) -> None:
        cond = self.expr(s.cond)
        start = self.current
        assert start is not None
        names = self.visible_mutables()
        before = self.snapshot(names)
        then_block = self.new_block(loc=s.loc)
        else_block = self.new_block(loc=s.loc)
        start.term = CondJump(cond, then_block.id, (), else_block.id, ())
        then_end = self.branch(s.then, then_block)
        self.restore(names, before)
        else_end = self.branch(s.orelse, else_block)
        self.restore(names, before)
        ends = [e for e in (then_end, else_end) if e is not None]
        if not ends:
            self.current = None
            return
        # One join parameter per mutable whose value differs between incoming paths.
        changed = [n for n in names if len({values[n] for _, values in ends}) > 1]
        params = [(self.ssa(n.split(".")[0], self.types[ends[0][1][n]]), n) for n in changed]
        join = self.new_block([(p, self.types[p]) for p, _ in params], loc=s.loc)
        for end_block, values in ends:
            end_block.term = Jump(join.id, tuple(values[n] for n in changed))
        if len(ends) == 1:
            for n in names:
                if n not in changed:
                    self.assign(n, ends[0][1][n])
        for p, n in params:
            self.assign(n, p)
        self.current = join

    def lower_for(self, s: A.For) -> None:
        lo = self.expr(s.lo)
        hi = self.expr(s.hi)
        pre = self.current
        assert pre is not None
        assigned = _assigned_names(s.body)
        carried = [n for n in self.visible_mutables() if n in assigned]
        counter = self.ssa(s.var if s.var != "_" else "i", INT)
        header_params = [(counter, INT)] + [
            (self.ssa(n, self.types[self.lookup(n)]), self.types[self.lookup(n)]) for n in carried
        ]
        header = self.new_block(header_params, loc=s.loc)
        pre.term = Jump(header.id, (lo,) + tuple(self.snapshot(carried)))
        self.current = header
        for n, (p, _) in zip(carried, header_params[1:]):
            self.assign(n, p)
        cond = self.emit("cmp", [counter, hi], BOOL, s.loc, attr="<")
        body = self.new_block(loc=s.loc)
        exit_params = [(self.ssa(n, ty), ty) for n, (_, ty) in zip(carried, header_params[1:])]
        exit_block = self.new_block(exit_params, loc=s.loc)
        header.term = CondJump(cond, body.id, (), exit_block.id, tuple(p for p, _ in header_params[1:]))
        self.current = body
        self.scopes.append({s.var: counter} if s.var != "_" else {})
        self.mutable.append(set())
        self.stmts(s.body)
        self.scopes.pop()
        self.mutable.pop()
        end = self.current
        assert end is not None, "return inside loops is rejected by the type checker"
        one = self.emit("const", [], INT, s.loc, attr=1)
        nxt = self.emit("arith", [counter, one], INT, s.loc, attr="+")
        end.term = Jump(header.id, (nxt,) + tuple(self.snapshot(carried)))
        for n, (p, _) in zip(carried, exit_params):
            self.assign(n, p)
        self.current = exit_block

    # -- expressions -------------------------------------------------------------

    def expr(self, e: A.Expr, hint: Optional[str] = None) -> str:
        ty = e.ty
        loc = e.loc
        if isinstance(e, A.IntLit):
            return self.emit("const", [], INT, loc, attr=e.value, hint=hint)
        if isinstance(e, A.BoolLit):
            return self.emit("const", [], BOOL, loc, attr=e.value, hint=hint)
        if isinstance(e, A.Hole):
            return self.emit("hole", [], INT, loc, attr=loc, hint=hint)
        if isinstance(e, A.Name):
            return self.lookup(e.name)
        if isinstance(e, A.Neg):
            return self.emit("neg", [self.expr(e.operand)], INT, loc, hint=hint)
        if isinstance(e, A.Not):
            return self.emit("not", [self.expr(e.operand)], BOOL, loc, hint=hint)
        if isinstance(e, A.Arith):
            ops = [self.expr(e.lhs), self.expr(e.rhs)]
            return self.emit("arith", ops, INT, loc, attr=e.op, hint=hint)
        if isinstance(e, A.Compare):
            ops = [self.expr(e.lhs), self.expr(e.rhs)]
            return self.emit("cmp", ops, BOOL, loc, attr=e.op, hint=hint)
        if isinstance(e, A.Logical):
            # Both operands are evaluated; expressions have no side effects besides asserts in calls.
            ops = [self.expr(e.lhs), self.expr(e.rhs)]
            return self.emit("and" if e.op == "&&" else "or", ops, BOOL, loc, hint=hint)
        if isinstance(e, A.Call):
            args = [self.expr(a) for a in e.args]
            if e.callee == "shapeof":
                return self.emit("shapeof", args, SHAPE, loc, hint=hint)
            if e.callee == "rank":
                return self.emit("rank", args, INT, loc, hint=hint)
            return self.emit("call", args, ty if ty != UNIT else None, loc, attr=e.callee, hint=hint)
        if isinstance(e, A.TupleExpr):
            items = [self.expr(i) for i in e.items]
            return self.emit("tuple", items, ty, loc, hint=hint)
        if isinstance(e, A.Proj):
            return self.emit("get", [self.expr(e.base)], ty, loc, attr=e.index, hint=hint)
        if isinstance(e, A.ShapeLit):
            dims = [self.expr(d) for d in e.dims]
            return self.emit("shapelit", dims, SHAPE, loc, hint=hint)
        if isinstance(e, A.ShapeOf):
            return self.emit("shapeof", [self.expr(e.base)], SHAPE, loc, hint=hint)
        if isinstance(e, A.ShapeIndex):
            ops = [self.expr(e.base), self.expr(e.index)]
            return self.emit("dim", ops, INT, loc, hint=hint)
        if isinstance(e, A.RankOf):
            return self.emit("rank", [self.expr(e.base)], INT, loc, hint=hint)
        if isinstance(e, A.Broadcast):
            ops = [self.expr(e.lhs), self.expr(e.rhs)]
            return self.emit("broadcast", ops, SHAPE, loc, hint=hint)
        if isinstance(e, A.ShapeAssert):
            value = self.expr(e.value, hint=hint)
            shape = self.expr(e.shape)
            actual = self.emit("shapeof", [value], SHAPE, loc)
            ok = self.emit("cmp", [actual, shape], BOOL, loc, attr="==")
            self.emit("assert", [ok], None, loc)
            return value
        raise AssertionError(f"unknown expression {e!r}")


def _assigned_names(body: list[A.Stmt]) -> set[str]:
    names: set[str] = set()
    for s in body:
        for node in A.walk(s):
            if isinstance(node, A.Assign):
                names.add(node.name)
    return names


def lower(function: A.AstFunction) -> FunctionCfg:
    """Lower a type-checked function to an SSA CFG with block arguments."""
    return _Lowerer(function).lower()


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def verify(cfg: FunctionCfg) -> None:
    """Check SSA and block-argument invariants; raise CfgError on violation."""
    defined: dict[str, TfitType] = {}

    def define(name: str, ty: TfitType) -> None:
        if name in defined:
            raise CfgError(f"{cfg.name}: {name} defined twice")
        defined[name] = ty

    for b in cfg.blocks.values():
        for name, ty in b.params + b.fresh:
            define(name, ty)
        for ins in b.instrs:
            if ins.dest is not None:
                define(ins.dest, ins.ty)
    for b in cfg.blocks.values():
        for ins in b.instrs:
            for o in ins.operands:
                if o not in defined:
                    raise CfgError(f"{cfg.name}/{b.id}: use of undefined {o}")
        if b.term is None:
            raise CfgError(f"{cfg.name}/{b.id}: missing terminator")
        if isinstance(b.term, CondJump):
            if defined.get(b.term.cond) != BOOL:
                raise CfgError(f"{cfg.name}/{b.id}: branch condition is not Bool")
        if isinstance(b.term, Return) and b.term.value is not None:
            if b.term.value not in defined:
                raise CfgError(f"{cfg.name}/{b.id}: return of undefined value")
        for target, args in successors(b.term):
            if target not in cfg.blocks:
                raise CfgError(f"{cfg.name}/{b.id}: jump to missing block {target}")
            params = cfg.blocks[target].params
            if len(params) != len(args):
                raise CfgError(f"{cfg.name}/{b.id}: {target} expects {len(params)} arguments")
            for a, (_, ty) in zip(args, params):
                if defined.get(a) != ty:
                    raise CfgError(f"{cfg.name}/{b.id}: argument {a} does not match {target}")


# ---------------------------------------------------------------------------
# Graph utilities
# ---------------------------------------------------------------------------


def reachable(cfg: FunctionCfg) -> list[str]:
    seen: list[str] = []
    stack = [cfg.entry]
    visited = set()
    while stack:
        b = stack.pop()
        if b in visited:
            continue
        visited.add(b)
        seen.append(b)
        stack.extend(reversed(successor_ids(cfg.blocks[b])))
    return seen


def dominators(cfg: FunctionCfg) -> dict[str, set[str]]:
    nodes = reachable(cfg)
    preds = predecessors(cfg)
    dom = {n: set(nodes) for n in nodes}
    dom[cfg.entry] = {cfg.entry}
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n == cfg.entry:
                continue
            ps = [p for p in preds[n] if p in dom]
            new = set.intersection(*(dom[p] for p in ps)) if ps else set()
            new = new | {n}
            if new != dom[n]:
                dom[n] = new
                changed = True
    return dom


def topological_order(cfg: FunctionCfg) -> list[str]:
    """Reachable blocks in topological order; raises CfgError on a cycle."""
    nodes = reachable(cfg)
    indeg = {n: 0 for n in nodes}
    for n in nodes:
        for s in successor_ids(cfg.blocks[n]):
            indeg[s] += 1
    ready = [n for n in nodes if indeg[n] == 0]
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for s in successor_ids(cfg.blocks[n]):
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
    if len(order) != len(nodes):
        raise CfgError(f"{cfg.name}: control-flow graph has a cycle")
    return order


def is_acyclic(cfg: FunctionCfg) -> bool:
    try:
        topological_order(cfg)
    except CfgError:
        return False
    return True


@dataclass
class NaturalLoop:
    header: str
    latches: list[str]
    body: set[str]


def natural_loops(cfg: FunctionCfg) -> list[NaturalLoop]:
    dom = dominators(cfg)
    preds = predecessors(cfg)
    loops: dict[str, NaturalLoop] = {}
    for n in dom:
        for s in successor_ids(cfg.blocks[n]):
            if s in dom[n]:
                loop = loops.setdefault(s, NaturalLoop(s, [], {s}))
                loop.latches.append(n)
                stack = [n]
                while stack:
                    m = stack.pop()
                    if m in loop.body:
                        continue
                    loop.body.add(m)
                    stack.extend(p for p in preds[m] if p in dom)
    # Any cycle not broken by removing back edges is irreducible.
    back = {(latch, h) for h, lp in loops.items() for latch in lp.latches}
    indeg = {n: 0 for n in dom}
    for n in dom:
        for s in successor_ids(cfg.blocks[n]):
            if (n, s) not in back:
                indeg[s] += 1
    ready = [n for n in dom if indeg[n] == 0]
    count = 0
    while ready:
        n = ready.pop()
        count += 1
        for s in successor_ids(cfg.blocks[n]):
            if (n, s) not in back:
                indeg[s] -= 1
                if indeg[s] == 0:
                    ready.append(s)
    if count != len(dom):
        raise IrreducibleLoop(f"function {cfg.name!r} has an irreducible loop", cfg.loc)
    return list(loops.values())


# ---------------------------------------------------------------------------
# Loop elimination
# ---------------------------------------------------------------------------


def _copy_blocks(cfg: FunctionCfg, ids: set[str], tag: str) -> tuple[dict[str, Block], dict[str, str]]:
    """Clone ``ids`` with every block id and locally defined SSA name suffixed."""
    names: dict[str, str] = {}
    for bid in ids:
        b = cfg.blocks[bid]
        for n, _ in b.params + b.fresh:
            names[n] = f"{n}'{tag}"
        for ins in b.instrs:
            if ins.dest is not None:
                names[ins.dest] = f"{ins.dest}'{tag}"
    bmap = {bid: f"{bid}'{tag}" for bid in ids}

    def r(n: str) -> str:
        return names.get(n, n)

    def rargs(args) -> tuple[str, ...]:
        return tuple(r(a) for a in args)

    out: dict[str, Block] = {}
    for bid in ids:
        b = cfg.blocks[bid]
        nb = Block(
            bmap[bid],
            [(r(n), t) for n, t in b.params],
            [Instr(r(i.dest) if i.dest else None, i.op, rargs(i.operands), i.ty, i.loc, i.attr)
             for i in b.instrs],
            None,
            [(r(n), t) for n, t in b.fresh],
            b.loc,
        )
        term = b.term
        if isinstance(term, Jump):
            nb.term = Jump(bmap.get(term.target, term.target), rargs(term.args))
        elif isinstance(term, CondJump):
            nb.term = CondJump(
                r(term.cond),
                bmap.get(term.then_target, term.then_target), rargs(term.then_args),
                bmap.get(term.else_target, term.else_target), rargs(term.else_args),
            )
        elif isinstance(term, Return):
            nb.term = Return(r(term.value) if term.value else None)
        out[bmap[bid]] = nb
    return out, names


def _rewrite_loop(cfg: FunctionCfg, loop: NaturalLoop) -> FunctionCfg:
    h = loop.header
    if len(loop.latches) != 1:
        raise IrreducibleLoop(f"loop at {h} in {cfg.name!r} has several back edges", cfg.loc)
    latch = loop.latches[0]
    header = cfg.blocks[h]
    if not isinstance(header.term, CondJump):
        raise IrreducibleLoop(f"loop header {h} in {cfg.name!r} does not branch", cfg.loc)
    for bid in loop.body:
        if bid == h:
            continue
        if any(s not in loop.body for s in successor_ids(cfg.blocks[bid])):
            raise IrreducibleLoop(f"loop at {h} in {cfg.name!r} exits from its body", cfg.loc)
    t = header.term
    if t.then_target in loop.body and t.else_target not in loop.body:
        body_target, body_args, exit_target, exit_args = (
            t.then_target, t.then_args, t.else_target, t.else_args)
    elif t.else_target in loop.body and t.then_target not in loop.body:
        body_target, body_args, exit_target, exit_args = (
            t.else_target, t.else_args, t.then_target, t.then_args)
    else:
        raise IrreducibleLoop(f"loop header {h} in {cfg.name!r} has no single exit", cfg.loc)

    defined_inside = set()
    for bid in loop.body:
        b = cfg.blocks[bid]
        defined_inside.update(n for n, _ in b.params + b.fresh)
        defined_inside.update(i.dest for i in b.instrs if i.dest)
    for bid, b in cfg.blocks.items():
        if bid in loop.body:
            continue
        uses = [o for i in b.instrs for o in i.operands]
        uses += [a for _, args in successors(b.term) for a in args]
        if isinstance(b.term, CondJump):
            uses.append(b.term.cond)
        if isinstance(b.term, Return) and b.term.value:
            uses.append(b.term.value)
        leaked = [u for u in uses if u in defined_inside]
        if leaked:
            raise CfgError(f"{cfg.name}: {leaked[0]} defined inside a loop is used outside it")

    first, names_a = _copy_blocks(cfg, loop.body, "a")
    second, names_b = _copy_blocks(cfg, loop.body, "b")
    tail, names_c = _copy_blocks(cfg, {h}, "c")

    def ra(n):
        return names_a.get(n, n)

    def rb(n):
        return names_b.get(n, n)

    def rc(n):
        return names_c.get(n, n)

    ha, hb, hc = f"{h}'a", f"{h}'b", f"{h}'c"
    enter = f"%enter.{h}"
    # Copy a: real loop inputs; an opaque condition chooses between skipping and entering.
    first[ha].fresh.append((enter, BOOL))
    first[ha].term = CondJump(
        enter,
        f"{body_target}'a", tuple(ra(x) for x in body_args),
        exit_target, tuple(ra(x) for x in exit_args),
    )
    first[f"{latch}'a"].term = Jump(hb, ())
    # Copy b: the last iteration, fed by fresh loop-carried values.
    second[hb].fresh = second[hb].params + second[hb].fresh
    second[hb].params = []
    second[hb].term = Jump(f"{body_target}'b", tuple(rb(x) for x in body_args))
    latch_b = second[f"{latch}'b"]
    assert isinstance(latch_b.term, Jump)
    latch_b.term = Jump(hc, latch_b.term.args)
    # Copy c of the header only routes the final loop-carried values to the exit.
    tail[hc].instrs = [i for i in tail[hc].instrs if i.op != "assert"]
    tail[hc].term = Jump(exit_target, tuple(rc(x) for x in exit_args))

    blocks: dict[str, Block] = {}
    for bid, b in cfg.blocks.items():
        if bid in loop.body:
            if bid == h:
                blocks.update(first)
                blocks.update(second)
                blocks.update(tail)
            continue
        nb = copy.copy(b)
        term = b.term
        if isinstance(term, Jump) and term.target == h:
            nb.term = Jump(ha, term.args)
        elif isinstance(term, CondJump) and h in (term.then_target, term.else_target):
            nb.term = CondJump(
                term.cond,
                ha if term.then_target == h else term.then_target, term.then_args,
                ha if term.else_target == h else term.else_target, term.else_args,
            )
        blocks[bid] = nb
    entry = ha if cfg.entry == h else cfg.entry
    return FunctionCfg(cfg.name, entry, blocks, cfg.result_type, cfg.loc)


def eliminate_loops(cfg: FunctionCfg) -> FunctionCfg:
    """Rewrite every natural loop, innermost first, until the CFG is acyclic."""
    while True:
        loops = natural_loops(cfg)
        if not loops:
            return cfg
        # Innermost: a loop whose body holds no other loop's header.
        headers = {lp.header for lp in loops}
        innermost = [lp for lp in loops if not (lp.body - {lp.header}) & headers]
        innermost.sort(key=lambda lp: (len(lp.body), lp.header))
        cfg = _rewrite_loop(cfg, innermost[0])


# ---------------------------------------------------------------------------
# Dump
# ---------------------------------------------------------------------------


def _format_instr(i: Instr) -> str:
    ops = ", ".join(i.operands)
    if i.op == "const":
        rhs = f"const {str(i.attr).lower() if isinstance(i.attr, bool) else i.attr}"
    elif i.op == "hole":
        rhs = f"hole @{i.attr.line}:{i.attr.column}"
    elif i.op in ("arith", "cmp"):
        rhs = f"{i.op} {i.attr} {ops}"
    elif i.op == "get":
        rhs = f"get {ops}.{i.attr}"
    elif i.op == "call":
        rhs = f"call {i.attr}({ops})"
    else:
        rhs = f"{i.op} {ops}".rstrip()
    if i.dest is None:
        return f"  {rhs}"
    return f"  {i.dest} = {rhs} : {i.ty}"


def _format_target(target: str, args) -> str:
    return f"{target}({', '.join(args)})" if args else target


def dump_cfg(cfg: FunctionCfg) -> str:
    lines = [f"func {cfg.name} {{"]
    order = reachable(cfg)
    order += [b for b in cfg.blocks if b not in order]
    for bid in order:
        b = cfg.blocks[bid]
        params = ", ".join(f"{n} : {t}" for n, t in b.params)
        head = f"{bid}({params}):" if b.params else f"{bid}:"
        if b.fresh:
            head += "  // fresh: " + ", ".join(f"{n} : {t}" for n, t in b.fresh)
        lines.append(head)
        lines.extend(_format_instr(i) for i in b.instrs)
        term = b.term
        if isinstance(term, Jump):
            lines.append(f"  br {_format_target(term.target, term.args)}")
        elif isinstance(term, CondJump):
            lines.append(
                f"  cond_br {term.cond}, {_format_target(term.then_target, term.then_args)}, "
                f"{_format_target(term.else_target, term.else_args)}"
            )
        elif isinstance(term, Return):
            lines.append(f"  return {term.value}" if term.value else "  return")
    lines.append("}")
    return "\n".join(lines) + "\n"
