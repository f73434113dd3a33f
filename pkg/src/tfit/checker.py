"""Whole-program checking: summary instantiation, path conditions, holes.

For every entry function the summaries of its callees are inlined into
one constraint system.  Each distinct guard (path condition) is then
checked twice: first whether the path is feasible given every constraint
*not* guarded by it, then whether the constraints it guards also hold.
A failure of the second query is a provable shape error, reported with
the solver's unsat core.
"""

from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import cfg as C
from . import constraints as K
from .frontend import MAIN, TypedProgram
from .frontend import ast as A
from .frontend.lexer import SourceLoc
from .smt import SmtVerdict, build_script, run_solver
from .symexec import CallSite, FunctionSummary, equate, summarize

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 50_000


@dataclass
class CheckConfig:
    solver_cmd: Optional[str] = None
    timeout: float = 10.0
    max_examples: int = 3
    eliminate: bool = True
    minimize_core: bool = True
    quantified: bool = False
    budget: int = DEFAULT_BUDGET
    dump_smt: Optional[str] = None
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_examples < 0:
            raise ValueError("max_examples must be nonnegative")


# ---------------------------------------------------------------------------
# Instantiation
# ---------------------------------------------------------------------------


@dataclass
class InstantiatedSystem:
    entry: str
    constraints: list[K.GuardedConstraint]
    # Call-site locations from the entry down to the function that owns each constraint.
    provenance: list[tuple[SourceLoc, ...]]
    warnings: list[tuple[SourceLoc, str]] = field(default_factory=list)

    @property
    def holes(self) -> list[SourceLoc]:
        locs = set()
        for c in self.constraints:
            locs.update(h.loc for h in K.holes(c.guard) | K.holes(c.body))
        return sorted(locs)


def _summary_vars(s: FunctionSummary) -> set[str]:
    names: set[str] = set()
    terms: list[K.Term] = list(s.args)
    if s.result is not None:
        terms.append(s.result)
    for item in s.items:
        if isinstance(item, CallSite):
            terms += [item.guard, *item.args]
            if item.result is not None:
                terms.append(item.result)
        else:
            terms += [item.guard, item.body]
    for t in terms:
        names.update(v.name for v in K.free_vars(t))
    return names


def instantiate(entry: FunctionSummary, summaries: dict[str, FunctionSummary],
                budget: int = DEFAULT_BUDGET) -> InstantiatedSystem:
    """Inline callee summaries recursively into a single call-free system."""
    system = InstantiatedSystem(entry.name, [], [])
    counter = itertools.count(1)
    var_cache: dict[str, set[str]] = {}
    warned_budget = False

    def emit(c: K.GuardedConstraint, chain: tuple[SourceLoc, ...]) -> None:
        c = c.with_(guard=K.simplify(c.guard))
        if c.guard == K.FALSE:
            return
        system.constraints.append(c)
        system.provenance.append(chain)

    def expand(summary: FunctionSummary, mapping: dict[str, str], guard: K.BoolExpr,
               chain: tuple[SourceLoc, ...], stack: tuple[str, ...]) -> None:
        nonlocal warned_budget

        def ren(t):
            return K.rename(t, mapping) if mapping else t

        for item in summary.items:
            g = K.conj(guard, ren(item.guard))
            if isinstance(item, K.GuardedConstraint):
                emit(K.GuardedConstraint(g, ren(item.body), item.origin), chain)
                continue
            callee = summaries.get(item.callee)
            if callee is None:
                system.warnings.append((item.loc, f"no summary for {item.callee}(); call ignored"))
                continue
            if item.callee in stack:
                system.warnings.append((item.loc, f"recursive call to {item.callee}() ignored"))
                continue
            if len(system.constraints) >= budget:
                if not warned_budget:
                    system.warnings.append((item.loc, "inlining budget exhausted; remaining calls ignored"))
                    warned_budget = True
                continue
            k = next(counter)
            if callee.name not in var_cache:
                var_cache[callee.name] = _summary_vars(callee)
            inner = {v: f"{v}@{k}" for v in var_cache[callee.name]}
            origin = K.Origin(item.loc, K.OriginKind.CALL_GLUE)
            for param, arg in zip(callee.args, item.args):
                emit(K.GuardedConstraint(g, equate(K.rename(param, inner), ren(arg)), origin), chain)
            if callee.result is not None and item.result is not None:
                emit(K.GuardedConstraint(
                    g, equate(ren(item.result), K.rename(callee.result, inner)), origin), chain)
            expand(callee, inner, g, chain + (item.loc,), stack + (callee.name,))

    expand(entry, {}, K.TRUE, (), (entry.name,))
    return system


# ---------------------------------------------------------------------------
# Path conditions
# ---------------------------------------------------------------------------


def _conjunct_set(b: K.BoolExpr) -> frozenset:
    if b == K.TRUE:
        return frozenset()
    return frozenset(b.args) if isinstance(b, K.And) else frozenset([b])


def enumerate_path_conditions(system: InstantiatedSystem) -> list[K.BoolExpr]:
    """Distinct guards, weakest first; ``True`` always leads."""
    guards = list(dict.fromkeys([K.TRUE] + [K.simplify(c.guard) for c in system.constraints]))
    sets = {g: _conjunct_set(g) for g in guards}

    def implied(g: K.BoolExpr) -> int:
        return sum(1 for h in guards if h != g and sets[h] <= sets[g])

    return sorted(guards, key=lambda g: (implied(g), K.size(g), K.render(g)))


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


@dataclass
class QueryRecord:
    purpose: str
    status: str
    script: Optional[str] = None


class _Solver:
    """Runs queries for one entry, numbering scripts for ``--dump-smt``."""

    def __init__(self, config: CheckConfig, entry: str):
        self.config = config
        self.entry = entry
        self.count = 0
        self.records: list[QueryRecord] = []

    def run(self, constraints: list[K.GuardedConstraint], purpose: str, *,
            want_core: bool = False, holes: Optional[list[SourceLoc]] = None
            ) -> tuple[SmtVerdict, dict[str, K.GuardedConstraint], dict[SourceLoc, str]]:
        script = build_script([(c, c, True) for c in constraints], quantified=self.config.quantified)
        symbols = [script.holes[h] for h in holes or [] if h in script.holes]
        dump = None
        if self.config.dump_smt:
            self.count += 1
            os.makedirs(self.config.dump_smt, exist_ok=True)
            safe = purpose.split()[0]
            dump = os.path.join(self.config.dump_smt, f"{self.entry}-{self.count:03d}-{safe}.smt2")
        verdict = run_solver(
            script, command=self.config.solver_cmd, timeout=self.config.timeout,
            want_core=want_core, model_symbols=symbols, dump_path=dump,
        )
        self.records.append(QueryRecord(purpose, verdict.status, dump))
        if verdict.status == "solver-error":
            log.warning("solver error during %s: %s", purpose, verdict.error)
        return verdict, script.origins, script.holes  # type: ignore[return-value]


def _prepare(constraints: list[K.GuardedConstraint], eliminate: bool) -> list[K.GuardedConstraint]:
    if not eliminate:
        return list(constraints)
    reduced, _ = K.eliminate_equalities(constraints)
    return reduced


def phase_constraints(system: InstantiatedSystem, condition: K.BoolExpr, phase: int
                      ) -> list[K.GuardedConstraint]:
    """Constraint list for the feasibility (1) or contradiction (2) query of ``condition``."""
    loc = system.constraints[0].origin.loc if system.constraints else SourceLoc("<none>", 1, 1)
    for c in system.constraints:
        if c.guard == condition:
            loc = c.origin.loc
            break
    out = [K.GuardedConstraint(K.TRUE, condition, K.Origin(loc, K.OriginKind.PATH_CONDITION))]
    for c in system.constraints:
        if c.guard != condition:
            out.append(c)
        elif phase == 2:
            out.append(c.with_(guard=K.TRUE))
    return out


@dataclass
class PathResult:
    condition: K.BoolExpr
    feasibility: str  # feasible | infeasible | unknown
    verdict: str  # ok | contradiction | unknown | skipped
    core: list[K.GuardedConstraint] = field(default_factory=list)
    system: list[K.GuardedConstraint] = field(default_factory=list)
    phase: int = 2  # the phase whose query settled the verdict


def check_path(system: InstantiatedSystem, condition: K.BoolExpr, config: CheckConfig,
               solver: Optional[_Solver] = None) -> PathResult:
    solver = solver or _Solver(config, system.entry)
    phase1 = _prepare(phase_constraints(system, condition, 1), config.eliminate)
    v1, _, _ = solver.run(phase1, f"feasibility {K.render(condition)}")
    if v1.status == "unsat":
        return PathResult(condition, "infeasible", "skipped", phase=1)
    if v1.status != "sat":
        return PathResult(condition, "unknown", "unknown", phase=1)
    phase2 = _prepare(phase_constraints(system, condition, 2), config.eliminate)
    v2, origins, _ = solver.run(phase2, f"check {K.render(condition)}", want_core=True)
    if v2.status == "sat":
        return PathResult(condition, "feasible", "ok", system=phase2)
    if v2.status != "unsat":
        return PathResult(condition, "feasible", "unknown", system=phase2)
    core = [origins[n] for n in v2.core if n in origins]
    if config.minimize_core and len(core) <= 20:
        core = _minimize(core, solver)
    return PathResult(condition, "feasible", "contradiction", core=core, system=phase2)


def _minimize(core: list[K.GuardedConstraint], solver: _Solver) -> list[K.GuardedConstraint]:
    """Deletion-based shrinking: drop members whose removal keeps the set unsat."""
    current = list(core)
    i = 0
    while i < len(current) and len(current) > 1:
        trial = current[:i] + current[i + 1:]
        verdict, _, _ = solver.run(trial, "minimize core")
        if verdict.status == "unsat":
            current = trial
        else:
            i += 1
    return current


# ---------------------------------------------------------------------------
# Holes
# ---------------------------------------------------------------------------


@dataclass
class HoleSolution:
    loc: SourceLoc
    kind: str  # unique | examples | unconstrained-sample
    values: list[int]
    # Status of the blocking-clause query that established (or refuted) uniqueness.
    uniqueness_query: str = ""


def _hole_bound(h: SourceLoc, op: str, value: int) -> K.GuardedConstraint:
    return K.GuardedConstraint(K.TRUE, K.IntRel(op, K.HoleRef(h), K.IntLit(value)),
                               K.Origin(h, K.OriginKind.PATH_CONDITION))


def _sat_in(base, h, lo, hi, solver, purpose) -> Optional[bool]:
    extra = []
    if lo is not None:
        extra.append(_hole_bound(h, ">=", lo))
    if hi is not None:
        extra.append(_hole_bound(h, "<=", hi))
    verdict, _, _ = solver.run(base + extra, purpose)
    if verdict.status == "sat":
        return True
    if verdict.status == "unsat":
        return False
    return None


def _least_at_least(base, h, lo, solver) -> Optional[int]:
    """Smallest feasible value >= lo via exponential then binary bounding; None if none/unknown."""
    if _sat_in(base, h, lo, None, solver, "hole bound") is not True:
        return None
    width = 1
    while True:
        r = _sat_in(base, h, lo, lo + width - 1, solver, "hole bound")
        if r is None:
            return None
        if r:
            break
        width *= 2
    a, b = lo, lo + width - 1
    while a < b:
        mid = (a + b) // 2
        r = _sat_in(base, h, a, mid, solver, "hole bound")
        if r is None:
            return None
        if r:
            b = mid
        else:
            a = mid + 1
    return a


def _greatest_at_most(base, h, hi, solver) -> Optional[int]:
    if _sat_in(base, h, None, hi, solver, "hole bound") is not True:
        return None
    width = 1
    while True:
        r = _sat_in(base, h, hi - width + 1, hi, solver, "hole bound")
        if r is None:
            return None
        if r:
            break
        width *= 2
    a, b = hi - width + 1, hi
    while a < b:
        mid = (a + b + 1) // 2
        r = _sat_in(base, h, mid, b, solver, "hole bound")
        if r is None:
            return None
        if r:
            a = mid
        else:
            b = mid - 1
    return a


def solve_holes(base: list[K.GuardedConstraint], holes: list[SourceLoc], config: CheckConfig,
                solver: _Solver) -> list[HoleSolution]:
    """Values for each hole given a satisfiable constraint list ``base``."""
    if not holes:
        return []
    verdict, _, _ = solver.run(base, "hole model", holes=holes)
    if verdict.status != "sat":
        return []
    names = build_script([(c, c, True) for c in base]).holes
    out = []
    for h in holes:
        if h not in names or names[h] not in verdict.model:
            # The hole vanished during simplification: nothing constrains it.
            out.append(HoleSolution(h, "unconstrained-sample",
                                    list(range(1, config.max_examples + 1))))
            continue
        m = verdict.model[names[h]]
        blocking = K.GuardedConstraint(
            K.TRUE, K.Not(K.IntEq(K.HoleRef(h), K.IntLit(m))), K.Origin(h, K.OriginKind.PATH_CONDITION))
        v, _, _ = solver.run(base + [blocking], "hole uniqueness")
        if v.status == "unsat":
            out.append(HoleSolution(h, "unique", [m], "unsat"))
            continue
        values = _examples(base, h, config, solver, m)
        out.append(HoleSolution(h, "examples", values, v.status))
    return out


def _examples(base, h, config: CheckConfig, solver: _Solver, seed: int) -> list[int]:
    want = max(config.max_examples, 1)
    values: list[int] = []
    lo = 1
    while len(values) < want:
        v = _least_at_least(base, h, lo, solver)
        if v is None:
            break
        values.append(v)
        lo = v + 1
    hi = 0
    while len(values) < want:
        v = _greatest_at_most(base, h, hi, solver)
        if v is None:
            break
        values.append(v)
        hi = v - 1
    if not values:
        # Bounding gave up; fall back to plain blocking-clause enumeration.
        values = [seed]
        while len(values) < want:
            blocks = [K.GuardedConstraint(K.TRUE, K.Not(K.IntEq(K.HoleRef(h), K.IntLit(x))),
                                          K.Origin(h, K.OriginKind.PATH_CONDITION)) for x in values]
            verdict, _, names = solver.run(base + blocks, "hole enumerate", holes=[h])
            if verdict.status != "sat" or names.get(h) not in verdict.model:
                break
            values.append(verdict.model[names[h]])
    return values


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class Contradiction:
    condition: K.BoolExpr
    core: list[K.GuardedConstraint]


@dataclass
class CheckReport:
    entry: str
    paths: list[PathResult] = field(default_factory=list)
    contradictions: list[Contradiction] = field(default_factory=list)
    holes: list[HoleSolution] = field(default_factory=list)
    warnings: list[tuple[SourceLoc, str]] = field(default_factory=list)
    queries: list[QueryRecord] = field(default_factory=list)
    system: Optional[InstantiatedSystem] = None


def _core_key(core: list[K.GuardedConstraint]) -> frozenset:
    return frozenset((c.origin.loc, c.origin.kind) for c in core
                     if c.origin.kind is not K.OriginKind.PATH_CONDITION)


def check_system(system: InstantiatedSystem, config: CheckConfig) -> CheckReport:
    report = CheckReport(system.entry, system=system, warnings=list(system.warnings))
    solver = _Solver(config, system.entry)
    seen: set[frozenset] = set()
    hole_base: Optional[list[K.GuardedConstraint]] = None
    for cond in enumerate_path_conditions(system):
        result = check_path(system, cond, config, solver)
        report.paths.append(result)
        if result.verdict == "unknown":
            where = "" if cond == K.TRUE else f" where {K.render(cond)}"
            report.warnings.append((_cond_loc(system, cond),
                                    f"solver could not decide the path{where}"))
        elif result.verdict == "contradiction":
            key = _core_key(result.core)
            if key not in seen:
                seen.add(key)
                report.contradictions.append(Contradiction(cond, result.core))
        elif result.verdict == "ok" and hole_base is None:
            hole_base = result.system
    if system.holes and hole_base is not None:
        report.holes = solve_holes(hole_base, system.holes, config, solver)
    report.queries = solver.records
    return report


def _cond_loc(system: InstantiatedSystem, cond: K.BoolExpr) -> SourceLoc:
    for c in system.constraints:
        if c.guard == cond:
            return c.origin.loc
    return system.constraints[0].origin.loc if system.constraints else SourceLoc("<none>", 1, 1)


# ---------------------------------------------------------------------------
# Whole programs
# ---------------------------------------------------------------------------


@dataclass
class Analysis:
    program: TypedProgram
    cfgs: dict[str, C.FunctionCfg]
    loop_free: dict[str, C.FunctionCfg]
    summaries: dict[str, FunctionSummary]
    entries: list[str]
    warnings: list[tuple[Optional[SourceLoc], str]] = field(default_factory=list)


def default_entries(program: TypedProgram) -> list[str]:
    called: set[str] = set()
    for fn in program:
        for stmt in fn.body:
            for node in A.walk(stmt):
                if isinstance(node, A.Call) and node.callee != fn.name:
                    called.add(node.callee)
    names = [f.name for f in program if f.name not in called]
    if MAIN in program.functions and MAIN not in names:
        names.append(MAIN)
    # A trivially empty implicit main adds nothing when other entries exist.
    main = program.functions.get(MAIN)
    if main is not None and main.implicit and not main.body and len(names) > 1:
        names.remove(MAIN)
    return names


def analyze(program: TypedProgram, entries: Optional[list[str]] = None) -> Analysis:
    """Lower, de-loop and summarize every function."""
    cfgs, loop_free, summaries = {}, {}, {}
    warnings: list[tuple[Optional[SourceLoc], str]] = []
    for fn in program:
        cfg = C.lower(fn)
        C.verify(cfg)
        cfgs[fn.name] = cfg
        try:
            flat = C.eliminate_loops(cfg)
        except C.IrreducibleLoop as exc:
            warnings.append((exc.loc, f"{exc.message}; function not analyzed"))
            continue
        C.verify(flat)
        loop_free[fn.name] = flat
        summary = summarize(flat)
        summaries[fn.name] = summary
        warnings.extend(summary.warnings)
    if entries is None:
        entries = default_entries(program)
    return Analysis(program, cfgs, loop_free, summaries, entries, warnings)


def check_entry(analysis: Analysis, entry: str, config: CheckConfig) -> CheckReport:
    if entry not in analysis.summaries:
        report = CheckReport(entry)
        report.warnings.append((None, f"entry {entry}() could not be analyzed"))  # type: ignore[arg-type]
        return report
    system = instantiate(analysis.summaries[entry], analysis.summaries, config.budget)
    return check_system(system, config)


def check_program(analysis: Analysis, config: CheckConfig) -> list[CheckReport]:
    """Reports for every entry, in entry order (checked concurrently up to ``jobs``)."""
    if config.jobs <= 1 or len(analysis.entries) <= 1:
        return [check_entry(analysis, e, config) for e in analysis.entries]
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        return list(pool.map(lambda e: check_entry(analysis, e, config), analysis.entries))
