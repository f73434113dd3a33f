import os

import pytest
from hypothesis import HealthCheck, given, settings

from tfit import constraints as K
from tfit.checker import CheckConfig, analyze, check_path, instantiate, phase_constraints
from tfit.corpus import load_corpus
from tfit.frontend import SourceLoc
from tfit.smt import (
    SExprError, SolverNotFound, SolverSession, build_script, lint_bounds, parse_sexprs, quote,
    run_solver, sexpr_complete, sexpr_int, solver_command, unquote,
)

from helpers import needs_solver, report
from strategies import bool_terms, closing, envs, value

LOC = SourceLoc("t.tfit", 1, 1)


def gc(body, guard=K.TRUE):
    return K.GuardedConstraint(guard, body, K.Origin(LOC))


class TestSymbols:
    @pytest.mark.parametrize("name", ["n_x", "s_x.1'a@3", "b_enter.bb1", "hole_2_18"])
    def test_plain_or_quoted_round_trip(self, name):
        assert unquote(quote(name)) == name

    def test_reserved_words_are_quoted(self):
        assert quote("and") == "|and|"
        assert quote("div") == "|div|"

    def test_prime_needs_quotes(self):
        assert quote("s_x'a") == "|s_x'a|"

    def test_bar_cannot_be_quoted(self):
        with pytest.raises(ValueError):
            quote("a|b")


class TestSExpr:
    def test_nested(self):
        assert parse_sexprs("(a (b c) |d e|) sat") == [["a", ["b", "c"], "|d e|"], "sat"]

    def test_comments_and_strings(self):
        assert parse_sexprs('; note\n(error "x ( y")') == [["error", '"x ( y"']]

    def test_unbalanced(self):
        with pytest.raises(SExprError):
            parse_sexprs("(a (b)")
        with pytest.raises(SExprError):
            parse_sexprs("a)")

    def test_completeness(self):
        assert sexpr_complete("sat")
        assert not sexpr_complete("((a")
        assert sexpr_complete("((|a)| 1))")
        assert not sexpr_complete("   ")

    def test_ints(self):
        assert sexpr_int("42") == 42
        assert sexpr_int(["-", "7"]) == -7
        with pytest.raises(SExprError):
            sexpr_int(["+", "1", "2"])


def _corpus_scripts(quantified):
    for prog in load_corpus():
        analysis = analyze(prog.load())
        for entry in analysis.entries:
            system = instantiate(analysis.summaries[entry], analysis.summaries)
            cs = phase_constraints(system, K.TRUE, 2)
            reduced, _ = K.eliminate_equalities(cs)
            for items in (cs, reduced):
                yield prog.name, build_script([(c, c, True) for c in items], quantified).text()


@pytest.mark.parametrize("quantified", [False, True])
def test_every_dims_read_is_bounds_guarded(quantified):
    for name, text in _corpus_scripts(quantified):
        assert lint_bounds(text) == [], name


def test_lint_flags_unguarded_read():
    text = "(declare-fun s.dims (Int) Int)\n(declare-fun s.rank () Int)\n(assert (= (s.dims 3) 1))\n"
    assert lint_bounds(text) == ["(s.dims 3)"]


def test_script_names_every_assertion():
    script = build_script([("o1", gc(K.IntEq(K.IntLit(1), K.IntLit(2))), True),
                           ("o2", gc(K.TRUE), True)])
    assert [n for n, _ in script.assertions] == ["a0", "a1"]
    assert script.origins == {"a0": "o1", "a1": "o2"}
    assert "(set-logic UFNIA)" in script.text()
    assert script.text().index("produce-unsat-cores") < script.text().index("set-logic")


# -- solver-backed ------------------------------------------------------------------


@pytest.fixture(scope="module")
def session():
    with SolverSession(timeout=10) as sess:
        sess.send("(set-option :produce-models true)\n(set-logic UFNIA)")
        yield sess


def _closed_verdict(sess, body, quantified):
    script = build_script([(None, gc(body), True)], quantified)
    sess.push()
    sess.send("\n".join(script.declarations + [f"(assert {x})" for x in script.background]
                        + [f"(assert {phi})" for _, phi in script.assertions]))
    verdict = sess.check_sat()
    sess.pop()
    return verdict


@needs_solver
@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(bool_terms(), envs)
def test_closed_systems_agree_with_evaluation(session, e, env):
    """On variable-free terms the encoding is sat exactly when evaluation yields true."""
    closed = K.substitute(e, closing(env))
    expected = value(closed, {})
    verdict = _closed_verdict(session, closed, quantified=False)
    assert verdict == ("sat" if expected is True else "unsat"), K.render(closed)


@needs_solver
@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(bool_terms(2), envs)
def test_quantified_encoding_agrees_on_closed_terms(session, e, env):
    closed = K.substitute(e, closing(env))
    plain = _closed_verdict(session, closed, quantified=False)
    quant = _closed_verdict(session, closed, quantified=True)
    assert quant in (plain, "unknown")


SMALL = ["matmul_mismatch", "broadcast_ok", "rank_mismatch", "tuples_ok", "consistent", "branch_shapes_ok"]


@needs_solver
@pytest.mark.parametrize("name", SMALL)
def test_quantified_and_unrolled_verdicts_match(name):
    prog = {p.name: p for p in load_corpus()}[name]
    analysis = analyze(prog.load())
    for entry in analysis.entries:
        system = instantiate(analysis.summaries[entry], analysis.summaries)
        plain = check_path(system, K.TRUE, CheckConfig(minimize_core=False))
        quant = check_path(system, K.TRUE, CheckConfig(minimize_core=False, quantified=True))
        assert plain.verdict in ("ok", "contradiction")
        assert quant.verdict in (plain.verdict, "unknown")


@needs_solver
def test_core_and_model():
    x = K.IntVar("n_x")
    script = build_script([("eq", gc(K.IntEq(x, K.IntLit(3))), True),
                           ("gt", gc(K.IntRel(">", x, K.IntLit(5))), True),
                           ("free", gc(K.IntRel(">", K.IntVar("n_y"), K.IntLit(0))), True)])
    v = run_solver(script, want_core=True)
    assert v.status == "unsat" and sorted(v.core) == ["a0", "a1"]
    sat = build_script([("eq", gc(K.IntEq(x, K.IntLit(-3))), True)])
    v = run_solver(sat, model_symbols=["n_x"])
    assert v.status == "sat" and v.model == {"n_x": -3}


@needs_solver
def test_dump_transcript(tmp_path):
    script = build_script([(None, gc(K.TRUE), True)])
    path = tmp_path / "q.smt2"
    run_solver(script, dump_path=str(path))
    text = path.read_text()
    assert "(check-sat)" in text and text.rstrip().endswith("; result: sat")


class TestSolverFailures:
    def test_missing_executable(self):
        with pytest.raises(SolverNotFound):
            solver_command("definitely-not-a-solver-xyz")

    def test_environment_variable(self, monkeypatch):
        monkeypatch.setenv("TFIT_SOLVER", "sh -c true")
        assert solver_command() == ["sh", "-c", "true"]
        assert solver_command("cat") == ["cat"]

    def test_process_that_exits(self):
        v = run_solver(build_script([]), command="sh -c 'exit 3'", timeout=5)
        assert v.status == "solver-error"

    def test_garbage_output(self):
        v = run_solver(build_script([]), command="sh -c 'cat >/dev/null & echo \")\"; wait'",
                       timeout=5)
        assert v.status == "solver-error"

    def test_error_response(self):
        v = run_solver(build_script([]), command="sh -c 'echo \"(error \\\"boom\\\")\"; cat >/dev/null'",
                       timeout=5)
        assert v.status == "solver-error" and "boom" in str(v.error)

    def test_silent_process_times_out(self):
        v = run_solver(build_script([]), command="sh -c 'cat >/dev/null'", timeout=0.5)
        assert v.status == "timeout"
        assert v.elapsed < 5

    @needs_solver
    def test_dump_directory_is_created(self, tmp_path):
        out = tmp_path / "nested" / "smt"
        report("assert(1 == 1)\n", dump_smt=str(out))
        assert os.listdir(out)

