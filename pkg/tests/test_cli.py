import json
import subprocess
import sys

import pytest

from tfit.cli import EXIT_ERRORS, EXIT_OK, EXIT_USAGE, RunConfig, main
from tfit.corpus import CORPUS_DIR

from helpers import needs_solver


@pytest.fixture(autouse=True)
def in_corpus(monkeypatch):
    monkeypatch.chdir(CORPUS_DIR)


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@needs_solver
class TestCheck:
    def test_error_exit(self, capsys):
        code, out, _ = cli(capsys, "check", "matmul_mismatch.tfit")
        assert code == EXIT_ERRORS and "10 = 30" in out

    def test_clean_exit(self, capsys):
        code, out, _ = cli(capsys, "check", "mlp_ok.tfit")
        assert code == EXIT_OK and out == ""

    def test_hole_exit_is_zero(self, capsys):
        code, out, _ = cli(capsys, "check", "holes_matmul.tfit")
        assert code == EXIT_OK and "has to be exactly 10" in out

    def test_json(self, capsys):
        code, out, _ = cli(capsys, "check", "--format", "json", "feasibility_fg.tfit")
        data = json.loads(out)
        assert code == EXIT_OK and [e["entry"] for e in data] == ["f"]

    def test_entry_selection(self, capsys):
        code, out, _ = cli(capsys, "check", "--entry", "g", "--format", "json", "feasibility_fg.tfit")
        assert [e["entry"] for e in json.loads(out)] == ["g"]

    def test_max_examples(self, capsys):
        _, out, _ = cli(capsys, "check", "--max-examples", "5", "holes_matmul.tfit")
        assert "are: 1, 2, 3, 4, 5" in out

    def test_dump_summaries_go_to_stderr(self, capsys):
        code, out, err = cli(capsys, "check", "--dump-summaries", "looping_fn.tfit")
        assert code == EXIT_OK and out == ""
        block = err.split("loopingFn(n_k, s_input) -> s_result:")[1].split("\n\n")[0]
        assert block.count("loopOp(") == 2
        assert "loopOp(s_x.1'b)" in block

    def test_dump_smt(self, capsys, tmp_path):
        cli(capsys, "check", "--dump-smt", str(tmp_path), "consistent.tfit")
        files = sorted(p.name for p in tmp_path.iterdir())
        assert files and all(f.endswith(".smt2") for f in files)

    def test_warnings_on_stderr(self, capsys):
        code, out, err = cli(capsys, "check", "recursion.tfit")
        assert code == EXIT_OK and "recursive call" in err and "recursive" not in out

    def test_deterministic(self, capsys):
        first = cli(capsys, "check", "listing1_model.tfit")
        second = cli(capsys, "check", "listing1_model.tfit")
        assert first == second

    def test_several_files(self, capsys, tmp_path):
        lib = tmp_path / "lib.tfit"
        lib.write_text("func id(_ x: Int) -> Int { return x }\n")
        use = tmp_path / "use.tfit"
        use.write_text("let a = id(3)\nassert(a == 4)\n")
        code, out, _ = cli(capsys, "check", str(lib), str(use))
        assert code == EXIT_ERRORS and "3 = 4" in out


class TestUsage:
    def test_missing_file(self, capsys):
        code, _, err = cli(capsys, "check", "no_such_file.tfit")
        assert code == EXIT_USAGE and "error" in err

    def test_missing_solver(self, capsys):
        code, _, err = cli(capsys, "check", "--solver-cmd", "no-such-solver-binary", "consistent.tfit")
        assert code == EXIT_USAGE and "not found" in err

    def test_missing_solver_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("TFIT_SOLVER", "no-such-solver-binary -in")
        code, _, _ = cli(capsys, "check", "consistent.tfit")
        assert code == EXIT_USAGE

    def test_solver_error_exit(self, capsys):
        code, _, _ = cli(capsys, "check", "--solver-cmd", "sh -c 'exit 4'", "consistent.tfit")
        assert code == EXIT_USAGE

    def test_bad_flag_values(self, capsys):
        for argv in (["--timeout", "0"], ["--max-examples", "-1"], ["--format", "xml"]):
            with pytest.raises(SystemExit) as info:
                main(["check", *argv, "consistent.tfit"])
            assert info.value.code == EXIT_USAGE
        capsys.readouterr()

    def test_syntax_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.tfit"
        bad.write_text("let = 3\n")
        code, _, err = cli(capsys, "check", str(bad))
        assert code == EXIT_USAGE and "bad.tfit:1" in err

    def test_unknown_entry(self, capsys):
        code, _, err = cli(capsys, "check", "--entry", "nope", "consistent.tfit")
        assert code == EXIT_USAGE and "nope" in err

    def test_run_config_validation(self):
        with pytest.raises(ValueError):
            RunConfig(inputs=[])
        with pytest.raises(ValueError):
            RunConfig(inputs=["a"], timeout=-1)


class TestRunAndDump:
    def test_run_failure(self, capsys):
        code, out, _ = cli(capsys, "run", "branch_shape_error.tfit", "--entry", "choose", "--arg", "5")
        assert code == EXIT_ERRORS and out.startswith("assert-failed at branch_shape_error.tfit:3")

    def test_run_ok(self, capsys):
        code, out, _ = cli(capsys, "run", "branch_shape_error.tfit", "--entry", "choose", "--arg", "1")
        assert code == EXIT_OK and out.startswith("ok")

    def test_run_tensor_argument(self, capsys, tmp_path):
        f = tmp_path / "r.tfit"
        f.write_text("func f(_ x: Tensor) -> Int { return x.shape[1] }\n")
        code, out, _ = cli(capsys, "run", str(f), "--entry", "f", "--arg", '{"tensor": [2, 9]}')
        assert code == EXIT_OK and out.strip() == "ok: 9"

    def test_run_bad_argument_count(self, capsys):
        code, _, _ = cli(capsys, "run", "branch_shape_error.tfit", "--entry", "choose")
        assert code == EXIT_USAGE

    def test_dump_without_solver(self, capsys):
        code, out, _ = cli(capsys, "dump", "feasibility_fg.tfit", "--what", "constraints")
        assert code == EXIT_OK
        assert "[n_x = 1] ⇒ n_y@1 = n_x" in out

    def test_dump_loopfree(self, capsys):
        code, out, _ = cli(capsys, "dump", "looping_fn.tfit", "--what", "loopfree")
        assert "%enter.bb1" in out and "bb1'b" in out


@needs_solver
def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "tfit", "check", "matmul_mismatch.tfit"],
                          cwd=CORPUS_DIR, capture_output=True, text=True, timeout=60)
    assert proc.returncode == EXIT_ERRORS
    assert "Asserted at matmul_mismatch.tfit:2" in proc.stdout
