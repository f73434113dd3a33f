"""Measurement routines shared by the test suite and the scripts in ``scripts/``."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import constraints as K
from .checker import (
    CheckConfig, InstantiatedSystem, analyze, check_program, enumerate_path_conditions, instantiate,
    phase_constraints,
)
from .corpus import CorpusProgram, compare, load_corpus
from .diagnostics import diagnostics_for
from .frontend import SourceLoc, load_program
from .oracle import ASSERT_FAILED, FAILURES, interpret
from .randprog import random_program
from .smt import SmtError, SolverSession, build_script, quote, run_solver, sexpr_int

# ---------------------------------------------------------------------------
# Broadcast sweep
# ---------------------------------------------------------------------------


def all_shapes(max_rank: int = 3, max_dim: int = 4) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    for rank in range(max_rank + 1):
        out.extend(itertools.product(range(1, max_dim + 1), repeat=rank))
    return out


def _lit(dims) -> K.ShapeLit:
    return K.ShapeLit(tuple(K.IntLit(d) for d in dims))


def _gc(body: K.BoolExpr) -> K.GuardedConstraint:
    return K.GuardedConstraint(K.TRUE, body, K.Origin(SourceLoc("<sweep>", 1, 1)))


@dataclass
class SweepResult:
    pairs: int = 0
    queries: int = 0
    mismatches: list[str] = field(default_factory=list)
    seconds: float = 0.0


def _scoped_check(session: SolverSession, items: list[K.GuardedConstraint]) -> str:
    script = build_script([(None, c, True) for c in items])
    session.push()
    session.send("\n".join(script.declarations + [f"(assert {b})" for b in script.background]
                           + [f"(assert {phi})" for _, phi in script.assertions]))
    verdict = session.check_sat()
    session.pop()
    return verdict


def broadcast_sweep(max_rank: int = 3, max_dim: int = 4, solver_cmd: Optional[str] = None,
                    symbolic: bool = True) -> SweepResult:
    """Compare the solver encoding of broadcasting with the reference rule on every shape pair.

    For each pair the encoding must be satisfiable exactly when the pair is
    broadcast-compatible, and then must force the reference result.  With
    ``symbolic`` the operands are shape variables pinned by equations, which
    exercises the macro encoding; otherwise literal operands are used.
    """
    result = SweepResult()
    start = time.monotonic()
    shapes = all_shapes(max_rank, max_dim)
    sa, sb = K.ShapeVar("s_a"), K.ShapeVar("s_b")
    with SolverSession(solver_cmd, timeout=10) as session:
        session.send("(set-logic UFNIA)")
        for a, b in itertools.product(shapes, shapes):
            result.pairs += 1
            try:
                expected: Optional[tuple[int, ...]] = K.broadcast_shapes(a, b)
            except K.Undefined:
                expected = None
            if symbolic:
                pins = [_gc(K.ShapeEq(sa, _lit(a))), _gc(K.ShapeEq(sb, _lit(b)))]
                bc: K.ShapeExpr = K.Broadcast(sa, sb)
            else:
                pins, bc = [], K.Broadcast(_lit(a), _lit(b))
            defined = _scoped_check(session, pins + [_gc(K.IntRel(">=", K.Rank(bc), K.IntLit(0)))])
            result.queries += 1
            if defined != ("sat" if expected is not None else "unsat"):
                result.mismatches.append(f"{a} with {b}: legality query {defined}")
                continue
            if expected is None:
                continue
            other = _scoped_check(session, pins + [_gc(K.Not(K.ShapeEq(bc, _lit(expected))))])
            result.queries += 1
            if other != "unsat":
                result.mismatches.append(f"{a} with {b}: result not forced to {expected} ({other})")
    result.seconds = time.monotonic() - start
    return result


# ---------------------------------------------------------------------------
# Differential testing against the interpreter
# ---------------------------------------------------------------------------


@dataclass
class DifferentialCase:
    seed: int
    static_error: bool
    oracle_status: str
    undecided: bool

    @property
    def false_positive(self) -> bool:
        return self.static_error and self.oracle_status not in FAILURES

    @property
    def missed_assert(self) -> bool:
        return self.oracle_status == ASSERT_FAILED and not self.static_error and not self.undecided


def differential_case(seed: int, config: Optional[CheckConfig] = None) -> DifferentialCase:
    text = random_program(seed)
    program = load_program([(f"random{seed}.tfit", text)])
    reports = check_program(analyze(program, ["main"]), config or CheckConfig())
    static = any(r.contradictions for r in reports)
    undecided = any(p.verdict == "unknown" for r in reports for p in r.paths)
    return DifferentialCase(seed, static, interpret(program, "main").status, undecided)


def differential(seeds, config: Optional[CheckConfig] = None) -> Iterator[DifferentialCase]:
    for seed in seeds:
        yield differential_case(seed, config)


# ---------------------------------------------------------------------------
# Elimination
# ---------------------------------------------------------------------------


class ModelError(Exception):
    pass


def _read_model(session: SolverSession, script, reduced: list[K.GuardedConstraint]
                ) -> tuple[dict[str, object], dict[SourceLoc, int]]:
    env: dict[str, object] = {}
    variables: dict[str, K.Term] = {}
    for c in reduced:
        for v in K.free_vars(c.guard) | K.free_vars(c.body):
            variables[v.name] = v
    for name, v in sorted(variables.items()):
        if isinstance(v, K.IntVar):
            env[name] = session.values([name])[name]
        elif isinstance(v, K.BoolVar):
            resp = session.command(f"(get-value ({quote(name)}))")
            env[name] = resp[0][1] == "true"
        else:
            rank = session.values([f"{name}.rank"])[f"{name}.rank"]
            dims = []
            for i in range(rank):
                resp = session.command(f"(get-value (({quote(name + '.dims')} {i})))")
                dims.append(sexpr_int(resp[0][1]))
            env[name] = tuple(dims)
    holes = {loc: session.values([sym])[sym] for loc, sym in script.holes.items()}
    return env, holes


def _holds(c: K.GuardedConstraint, env, holes) -> bool:
    try:
        if not K.evaluate(c.guard, env, holes):
            return True
        return K.evaluate(c.body, env, holes) is True
    except K.Undefined:
        return False


@dataclass
class EquisatCase:
    label: str
    original: str
    reduced: str
    witness: Optional[bool] = None  # reduced model extends to a model of the original

    @property
    def consistent(self) -> bool:
        if self.reduced == "sat" and self.witness is not True:
            return False
        decided = {"sat", "unsat"}
        if self.original in decided and self.reduced in decided:
            return self.original == self.reduced
        # The original alone may be out of the solver's reach; a witness settles sat.
        return self.reduced == "sat" and self.witness is True


def equisat_case(label: str, constraints: list[K.GuardedConstraint], timeout: float = 10.0,
                 solver_cmd: Optional[str] = None) -> EquisatCase:
    reduced, bindings = K.eliminate_equalities(constraints)
    original = build_script([(c, c, True) for c in constraints])
    v_orig = run_solver(original, command=solver_cmd, timeout=timeout).status
    script = build_script([(c, c, True) for c in reduced])
    case = EquisatCase(label, v_orig, "unknown")
    with SolverSession(solver_cmd, timeout) as session:
        try:
            session.send(script.prelude())
            case.reduced = session.check_sat()
            if case.reduced == "sat":
                env, holes = _read_model(session, script, reduced)
                _extend(env, holes, bindings, constraints)
                case.witness = all(_holds(c, env, holes) for c in constraints)
        except (SmtError, ModelError, K.Undefined):
            case.witness = False
    return case


def _extend(env: dict, holes: dict, bindings: dict[str, K.Term],
            constraints: list[K.GuardedConstraint]) -> None:
    """Complete a model of the reduced system to one over the original variables.

    Eliminated variables take the value of their binding.  Anything else the
    reduced system no longer mentions is unconstrained there and gets a
    default value.
    """
    pending = dict(bindings)
    defaults = {K.IntVar: 1, K.BoolVar: False, K.ShapeVar: ()}
    terms = list(bindings.values()) + [t for c in constraints for t in (c.guard, c.body)]
    for term in terms:
        for v in K.free_vars(term):
            if v.name not in env and v.name not in pending:
                env[v.name] = defaults[type(v)]
        for h in K.holes(term):
            holes.setdefault(h.loc, 1)
    while pending:
        progress = False
        for name, term in list(pending.items()):
            if all(v.name in env for v in K.free_vars(term)):
                env[name] = K.evaluate(term, env, holes)
                del pending[name]
                progress = True
        if not progress:
            raise ModelError(f"bindings do not resolve: {sorted(pending)}")


def corpus_systems(programs: Optional[list[CorpusProgram]] = None
                   ) -> Iterator[tuple[str, InstantiatedSystem]]:
    for prog in programs or load_corpus():
        analysis = analyze(prog.load())
        for entry in analysis.entries:
            if entry in analysis.summaries:
                yield f"{prog.name}:{entry}", instantiate(analysis.summaries[entry], analysis.summaries)


def equisatisfiability(programs: Optional[list[CorpusProgram]] = None, timeout: float = 10.0
                       ) -> list[EquisatCase]:
    """Elimination check on the contradiction query of every path of every corpus system."""
    out = []
    for label, system in corpus_systems(programs):
        for cond in enumerate_path_conditions(system):
            cs = phase_constraints(system, cond, 2)
            out.append(equisat_case(f"{label} [{K.render(cond)}]", cs, timeout))
    return out


# ---------------------------------------------------------------------------
# Corpus runs
# ---------------------------------------------------------------------------


@dataclass
class CorpusRun:
    name: str
    seconds: float
    problems: list[str]
    contradictions: int
    undecided: int


def run_corpus(config: Optional[CheckConfig] = None,
               programs: Optional[list[CorpusProgram]] = None) -> list[CorpusRun]:
    out = []
    for prog in programs or load_corpus():
        start = time.monotonic()
        reports = check_program(analyze(prog.load()), config or CheckConfig())
        elapsed = time.monotonic() - start
        diags = [d for r in reports for d in diagnostics_for(r)]
        out.append(CorpusRun(
            prog.name, elapsed, compare(prog, reports, diags),
            sum(len(r.contradictions) for r in reports),
            sum(p.verdict == "unknown" for r in reports for p in r.paths),
        ))
    return out
