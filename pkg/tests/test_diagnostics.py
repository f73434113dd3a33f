import json

import pytest

from tfit import constraints as K
from tfit.checker import CheckConfig, HoleSolution, analyze, check_program
from tfit.corpus import load_corpus
from tfit.diagnostics import (
    CONTRADICTION, HOLE, diagnostics_for, hole_sentence, render, render_warnings, simplify_core,
    snippet,
)
from tfit.frontend import SourceLoc, load_program

from helpers import needs_solver

CORPUS = {p.name: p for p in load_corpus()}


def run(name, fmt="text"):
    prog = CORPUS[name]
    file = prog.path.name
    program = load_program([(file, prog.source)])
    reports = check_program(analyze(program), CheckConfig())
    diags = [d for r in reports for d in diagnostics_for(r)]
    return render(diags, fmt, sources={file: prog.source}, reports=reports, program=program), diags


class TestSnippet:
    LINES = ["one", "two", "three"]

    def test_middle(self):
        assert snippet(self.LINES, 2, 4) == ["      | one", "   2  | two", "      | three"]

    def test_first_and_last_lines(self):
        assert snippet(self.LINES, 1, 2) == [" 1  | one", "    | two"]
        assert snippet(self.LINES, 3, 2) == ["    | two", " 3  | three"]

    def test_out_of_file(self):
        assert snippet([], 4, 2) == []


def test_hole_sentences():
    loc = SourceLoc("tmp.tfit", 2, 18)
    assert hole_sentence(HoleSolution(loc, "unique", [10])) == \
        "The hole at tmp.tfit:2:18 has to be exactly 10"
    assert hole_sentence(HoleSolution(loc, "examples", [1, 2, 3])) == \
        "Some example values that the hole at tmp.tfit:2:18 might take are: 1, 2, 3"
    assert hole_sentence(HoleSolution(loc, "examples", [])).startswith("No value")


def _assert_at(line, body):
    return K.GuardedConstraint(K.TRUE, body, K.Origin(SourceLoc("c.tfit", line, 1)))


def test_core_equalities_are_inlined():
    a, b = K.IntVar("a"), K.IntVar("b")
    core = [_assert_at(1, K.IntEq(a, b)), _assert_at(2, K.IntEq(b, K.IntLit(3))),
            _assert_at(3, K.IntEq(a, K.IntLit(4)))]
    facts = simplify_core(core)
    assert [K.render(f) for f, _ in facts] == ["3 = 4"]


def test_guarded_core_member_renders_as_implication():
    n = K.IntVar("n_n")
    core = [K.GuardedConstraint(K.IntRel(">", n, K.IntLit(3)), K.IntEq(n, K.IntLit(2)),
                                K.Origin(SourceLoc("c.tfit", 2, 1)))]
    (fact, loc) = simplify_core(core)[0]
    assert loc.line == 2 and isinstance(fact, K.Or)


@needs_solver
class TestLayouts:
    def test_contradiction_block(self):
        text, _ = run("matmul_mismatch")
        assert text == (
            "In main():\n"
            "Something doesn't fit!\n"
            "  - 10 = 30\n"
            "      Asserted at matmul_mismatch.tfit:2\n"
            "            | func matmul(_ x: Tensor<Float>, _ y: Tensor<Float>) -> Tensor<Float> {\n"
            "         2  |   assert(x.shape[1] == y.shape[0])\n"
            "            |   let r = TensorFlow.matmul(x, y)\n"
        )

    def test_hole_block(self):
        text, _ = run("holes_matmul")
        assert text == (
            "In main() -> ():\n"
            "  - The hole at holes_matmul.tfit:2:18 has to be exactly 10\n"
            "        |   let x = randn([20, 10])\n"
            "     2  |   let y = randn([____, ____])\n"
            "        |   let z = matmul(x, y)\n"
            "  - Some example values that the hole at holes_matmul.tfit:2:24 might take are: 1, 2, 3\n"
            "        |   let x = randn([20, 10])\n"
            "     2  |   let y = randn([____, ____])\n"
            "        |   let z = matmul(x, y)\n"
        )

    def test_condition_line(self):
        text, _ = run("branch_shape_error")
        assert "  (when n_n > 3)\n" in text

    def test_broadcast_fact(self):
        text, _ = run("broadcast_mismatch")
        assert "  - 3 = 4 ∨ 3 = 1 ∨ 4 = 1\n" in text

    def test_infeasible_warning_goes_to_stderr_part(self):
        text, diags = run("feasibility_fg")
        assert text == ""
        assert "n_x = 1 ∧ n_y@1 = 2 can never be taken" in render_warnings(diags)

    def test_json_paths_record_phase(self):
        text, _ = run("feasibility_fg", "json")
        (entry,) = json.loads(text)
        infeasible = [p for p in entry["paths"] if p["feasibility"] == "infeasible"]
        assert infeasible == [{"condition": "n_x = 1 ∧ n_y@1 = 2", "feasibility": "infeasible",
                               "verdict": "skipped", "phase": 1}]
        kinds = [f["kind"] for f in entry["findings"]]
        assert kinds == ["infeasible-warning"]

    @pytest.mark.parametrize("name", sorted(CORPUS))
    def test_json_and_text_agree(self, name):
        if CORPUS[name].expect.needs_elimination:
            pytest.skip("timing program")
        text, diags = run(name)
        data = json.loads(run(name, "json")[0])
        findings = [f for e in data for f in e["findings"]]
        assert text.count("Something doesn't fit!") == sum(f["kind"] == CONTRADICTION for f in findings)
        assert text.count("  - The hole at") + text.count("  - Some example") \
            + text.count("  - No value") == sum(f["kind"] == HOLE for f in findings)


def test_unknown_format():
    with pytest.raises(ValueError):
        render([], "xml", sources={})
