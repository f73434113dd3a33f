"""Access to the bundled example programs and their recorded outcomes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .constraints import render
from .diagnostics import CONTRADICTION
from .frontend import TypedProgram, load_program

CORPUS_DIR = Path(__file__).resolve().parents[2] / "corpus"
EXPECTED_FILE = "expected.json"


@dataclass
class Expectation:
    contradictions: list[dict] = field(default_factory=list)
    holes: dict[str, dict] = field(default_factory=dict)
    infeasible: int = 0
    infeasible_conditions: list[str] = field(default_factory=list)
    warnings: int = 0
    runs: list[dict] = field(default_factory=list)
    needs_elimination: bool = False


@dataclass
class CorpusProgram:
    name: str
    path: Path
    expect: Expectation

    @property
    def source(self) -> str:
        return self.path.read_text(encoding="utf-8")

    def load(self) -> TypedProgram:
        return load_program([(str(self.path), self.source)])


def load_corpus(directory: Optional[Path] = None) -> list[CorpusProgram]:
    directory = Path(directory or CORPUS_DIR)
    table = json.loads((directory / EXPECTED_FILE).read_text(encoding="utf-8"))
    programs = []
    for path in sorted(directory.glob("*.tfit")):
        if path.name not in table:
            raise KeyError(f"{path.name} has no entry in {EXPECTED_FILE}")
        programs.append(CorpusProgram(path.stem, path, Expectation(**table[path.name])))
    return programs


def _hole_key(loc) -> str:
    return f"{loc.line}:{loc.column}"


def compare(program: CorpusProgram, reports, diagnostics) -> list[str]:
    """Differences between a checker run and the recorded expectation; empty means match."""
    expect = program.expect
    problems: list[str] = []
    found = [d for d in diagnostics if d.kind == CONTRADICTION]
    if len(found) != len(expect.contradictions):
        problems.append(f"{len(found)} contradictions, expected {len(expect.contradictions)}")
    for got, want in zip(found, expect.contradictions):
        lines = sorted({f.loc.line for f in got.facts})
        if lines != sorted(want["lines"]):
            problems.append(f"contradiction lines {lines}, expected {want['lines']}")
        facts = [f.expr for f in got.facts]
        if "facts" in want and facts != want["facts"]:
            problems.append(f"facts {facts}, expected {want['facts']}")
        if "condition" in want and got.condition != want["condition"]:
            problems.append(f"condition {got.condition!r}, expected {want['condition']!r}")
    holes = {_hole_key(h.loc): h for r in reports for h in r.holes}
    if sorted(holes) != sorted(expect.holes):
        problems.append(f"holes at {sorted(holes)}, expected {sorted(expect.holes)}")
    for key, want in expect.holes.items():
        h = holes.get(key)
        if h is None:
            continue
        if "unique" in want and (h.kind != "unique" or h.values != [want["unique"]]):
            problems.append(f"hole {key}: {h.kind} {h.values}, expected unique {want['unique']}")
        if "values" in want and (h.kind == "unique" or h.values != want["values"]):
            problems.append(f"hole {key}: {h.kind} {h.values}, expected examples {want['values']}")
    infeasible = [p for r in reports for p in r.paths if p.feasibility == "infeasible"]
    if len(infeasible) != expect.infeasible:
        problems.append(f"{len(infeasible)} infeasible paths, expected {expect.infeasible}")
    if expect.infeasible_conditions:
        conds = [render(p.condition) for p in infeasible]
        if conds != expect.infeasible_conditions:
            problems.append(f"infeasible conditions {conds}, expected {expect.infeasible_conditions}")
    warnings = sum(len(r.warnings) for r in reports)
    if warnings != expect.warnings:
        problems.append(f"{warnings} warnings, expected {expect.warnings}")
    return problems
