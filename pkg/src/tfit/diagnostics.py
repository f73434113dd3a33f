"""Human-readable and JSON reports built from checker results."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import constraints as K
from .checker import CheckReport, HoleSolution
from .frontend import TypedProgram
from .frontend.lexer import SourceLoc
from .frontend.types import UNIT

CONTRADICTION = "contradiction"
HOLE = "hole"
INFEASIBLE = "infeasible-warning"
WARNING = "warning"


@dataclass
class Fact:
    expr: str
    loc: SourceLoc
    term: Optional[K.BoolExpr] = field(default=None, compare=False)


@dataclass
class Diagnostic:
    severity: str  # error | warning | info
    kind: str
    entry: str
    facts: list[Fact] = field(default_factory=list)
    hole: Optional[HoleSolution] = None
    condition: Optional[str] = None
    message: str = ""
    loc: Optional[SourceLoc] = None


def _loc_key(loc: SourceLoc):
    return (loc.file, loc.line, loc.column)


def simplify_core(core: list[K.GuardedConstraint]) -> list[tuple[K.BoolExpr, SourceLoc]]:
    """Inline equalities within the core and fold constants; ordered by origin."""
    reduced, _ = K.eliminate_equalities(core)
    facts = []
    for c in reduced:
        body = c.body if c.guard == K.TRUE else K.Or((K.negate(c.guard), c.body))
        if body == K.TRUE:
            continue
        facts.append((c, body))
    if not facts:
        facts = [(c, c.body) for c in core]
    user = [f for f in facts if f[0].origin.kind is not K.OriginKind.PATH_CONDITION]
    chosen = user or facts
    chosen.sort(key=lambda f: _loc_key(f[0].origin.loc))
    return [(body, c.origin.loc) for c, body in chosen]


def _illegal_broadcast(body: K.BoolExpr) -> Optional[K.BoolExpr]:
    """For a literal broadcast that cannot succeed, the failing compatibility test."""
    for t in K.subterms(body):
        if not (isinstance(t, K.Broadcast) and isinstance(t.lhs, K.ShapeLit)
                and isinstance(t.rhs, K.ShapeLit)):
            continue
        for x, y in zip(reversed(t.lhs.dims), reversed(t.rhs.dims)):
            if isinstance(x, K.IntLit) and isinstance(y, K.IntLit) and 1 not in (x.value, y.value) \
                    and x.value != y.value:
                one = K.IntLit(1)
                return K.Or((K.IntEq(x, y), K.IntEq(x, one), K.IntEq(y, one)))
    return None


def _fact_text(body: K.BoolExpr) -> str:
    bad = _illegal_broadcast(body)
    if bad is not None:
        return K.render(bad)
    if isinstance(body, K.Or) and len(body.args) == 2 and isinstance(body.args[0], K.Not):
        return f"{K.render(body.args[0].arg)} ⇒ {K.render(body.args[1])}"
    return K.render(body)


def signature(program: Optional[TypedProgram], entry: str) -> str:
    fn = program.functions.get(entry) if program else None
    if fn is None:
        return f"{entry}() -> ()"
    params = ", ".join(str(p.ty) for p in fn.params)
    ret = "()" if fn.ret == UNIT else str(fn.ret)
    return f"{entry}({params}) -> {ret}"


def diagnostics_for(report: CheckReport) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for c in report.contradictions:
        facts = [Fact(_fact_text(b), loc, b) for b, loc in simplify_core(c.core)]
        cond = None if c.condition == K.TRUE else K.render(c.condition)
        out.append(Diagnostic("error", CONTRADICTION, report.entry, facts, condition=cond))
    for h in report.holes:
        out.append(Diagnostic("info", HOLE, report.entry, hole=h, loc=h.loc))
    for p in report.paths:
        if p.feasibility == "infeasible":
            loc = _guard_loc(report, p.condition)
            text = K.render(p.condition)
            out.append(Diagnostic(
                "warning", INFEASIBLE, report.entry, [Fact(text, loc, p.condition)],
                condition=text, message=f"the path where {text} can never be taken", loc=loc))
    for loc, message in report.warnings:
        out.append(Diagnostic("warning", WARNING, report.entry, message=message, loc=loc))
    return out


def _guard_loc(report: CheckReport, cond: K.BoolExpr) -> SourceLoc:
    system = report.system
    if system is not None:
        for c in system.constraints:
            if c.guard == cond:
                return c.origin.loc
    return SourceLoc("<unknown>", 1, 1)


# ---------------------------------------------------------------------------
# Text
# ---------------------------------------------------------------------------


def snippet(source_lines: list[str], line: int, width: int) -> list[str]:
    """Three lines around ``line``; only the middle one is numbered."""
    out = []
    for n in (line - 1, line, line + 1):
        if not 1 <= n <= len(source_lines):
            continue
        label = str(n) if n == line else ""
        out.append(f"{label:>{width}}  | {source_lines[n - 1]}".rstrip())
    return out


def _lines(sources: dict[str, str], file: str) -> list[str]:
    return sources.get(file, "").splitlines()


def hole_sentence(h: HoleSolution) -> str:
    where = f"{h.loc.file}:{h.loc.line}:{h.loc.column}"
    if h.kind == "unique":
        return f"The hole at {where} has to be exactly {h.values[0]}"
    if not h.values:
        return f"No value for the hole at {where} could be found"
    values = ", ".join(str(v) for v in h.values)
    return f"Some example values that the hole at {where} might take are: {values}"


def render_text(diags: list[Diagnostic], sources: dict[str, str],
                program: Optional[TypedProgram] = None) -> str:
    """Standard-output part: contradictions and hole solutions, grouped by entry."""
    out: list[str] = []
    entries = list(dict.fromkeys(d.entry for d in diags))
    for entry in entries:
        mine = [d for d in diags if d.entry == entry]
        errors = [d for d in mine if d.kind == CONTRADICTION]
        holes = [d for d in mine if d.kind == HOLE]
        if errors:
            out.append(f"In {entry}():")
            for d in errors:
                out.append("Something doesn't fit!")
                if d.condition:
                    out.append(f"  (when {d.condition})")
                for f in d.facts:
                    out.append(f"  - {f.expr}")
                    out.append(f"      Asserted at {f.loc.file}:{f.loc.line}")
                    out.extend(snippet(_lines(sources, f.loc.file), f.loc.line, 10))
        if holes:
            out.append(f"In {signature(program, entry)}:")
            for d in holes:
                assert d.hole is not None
                out.append(f"  - {hole_sentence(d.hole)}")
                out.extend(snippet(_lines(sources, d.hole.loc.file), d.hole.loc.line, 6))
    return "".join(line + "\n" for line in out)


def render_warnings(diags: list[Diagnostic]) -> str:
    """Standard-error part: infeasible paths and analysis warnings."""
    out = []
    for d in diags:
        if d.kind in (INFEASIBLE, WARNING):
            where = f"{d.loc}: " if d.loc is not None else ""
            out.append(f"warning: {where}{d.message} (in {d.entry}())")
    return "".join(line + "\n" for line in out)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _fact_json(f: Fact) -> dict:
    return {"expr": f.expr, "file": f.loc.file, "line": f.loc.line, "column": f.loc.column}


def finding_json(d: Diagnostic) -> Optional[dict]:
    if d.kind == WARNING:
        return None
    item: dict = {"kind": d.kind, "facts": [_fact_json(f) for f in d.facts]}
    if d.hole is not None:
        h = d.hole
        item["hole"] = {
            "file": h.loc.file, "line": h.loc.line, "column": h.loc.column,
            "unique": h.kind == "unique", "values": list(h.values),
        }
    if d.condition is not None:
        item["condition"] = d.condition
    return item


def report_json(report: CheckReport, diags: list[Diagnostic]) -> dict:
    findings = [f for f in (finding_json(d) for d in diags if d.entry == report.entry) if f]
    return {
        "entry": report.entry,
        "findings": findings,
        "paths": [
            {"condition": K.render(p.condition), "feasibility": p.feasibility, "verdict": p.verdict,
             "phase": p.phase}
            for p in report.paths
        ],
        "warnings": [
            {"message": m, **({"file": loc.file, "line": loc.line, "column": loc.column} if loc else {})}
            for loc, m in report.warnings
        ],
    }


def render_json(reports: list[CheckReport], diags: list[Diagnostic]) -> str:
    return json.dumps([report_json(r, diags) for r in reports], indent=2, ensure_ascii=False) + "\n"


def render(diags: list[Diagnostic], fmt: str, *, sources: dict[str, str],
           reports: Optional[list[CheckReport]] = None, program: Optional[TypedProgram] = None) -> str:
    if fmt == "json":
        return render_json(reports or [], diags)
    if fmt == "text":
        return render_text(diags, sources, program)
    raise ValueError(f"unknown format {fmt!r}")
