import pytest

from tfit.checker import CheckConfig, analyze, check_program
from tfit.corpus import compare, load_corpus
from tfit.diagnostics import diagnostics_for
from tfit.oracle import interpret, value_from_json

from helpers import needs_solver

PROGRAMS = load_corpus()


def test_corpus_size():
    assert len(PROGRAMS) >= 25
    assert any(p.expect.contradictions for p in PROGRAMS)
    assert any(p.expect.holes for p in PROGRAMS)
    assert any(p.expect.needs_elimination for p in PROGRAMS)


def _runs(prog):
    program = prog.load()
    for run in prog.expect.runs:
        args = [value_from_json(a) for a in run.get("args", [])]
        yield run, interpret(program, run.get("entry", "main"), args)


@pytest.mark.parametrize("prog", PROGRAMS, ids=lambda p: p.name)
def test_recorded_runs(prog):
    for run, result in _runs(prog):
        assert result.status == run["status"], (run, result.message)


@needs_solver
@pytest.mark.parametrize("prog", PROGRAMS, ids=lambda p: p.name)
def test_recorded_verdicts(prog):
    reports = check_program(analyze(prog.load()), CheckConfig())
    diags = [d for r in reports for d in diagnostics_for(r)]
    assert compare(prog, reports, diags) == []


@needs_solver
@pytest.mark.parametrize("prog", PROGRAMS, ids=lambda p: p.name)
def test_static_and_dynamic_agree(prog):
    """No reported contradiction on a program whose recorded runs all succeed, and vice versa."""
    if not prog.expect.runs:
        pytest.skip("no recorded runs")
    failed = any(result.failed for _, result in _runs(prog))
    reports = check_program(analyze(prog.load()), CheckConfig())
    flagged = any(r.contradictions for r in reports)
    if not failed:
        assert not flagged
    else:
        assert flagged
