"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import json
import re
import subprocess
import sys
import time
from pathlib import Path

import pytest

from tfit.checker import CheckConfig, analyze, check_program
from tfit.corpus import CORPUS_DIR, load_corpus
from tfit.experiments import broadcast_sweep, differential, equisatisfiability, run_corpus
from tfit.smt import build_script, run_solver

from helpers import needs_solver

pytestmark = needs_solver

CORPUS = {p.name: p for p in load_corpus()}


def tfit(*argv, timeout=120):
    start = time.monotonic()
    proc = subprocess.run([sys.executable, "-m", "tfit", *argv], cwd=CORPUS_DIR,
                          capture_output=True, text=True, timeout=timeout)
    return proc, time.monotonic() - start


def verdict(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def line_of(name, needle):
    for n, text in enumerate(CORPUS[name].source.splitlines(), 1):
        if needle in text:
            return n
    raise LookupError(needle)


def test_criterion_1_matmul_contradiction(capsys):
    proc, secs = tfit("check", "matmul_mismatch.tfit")
    out = proc.stdout
    line = line_of("matmul_mismatch", "assert(x.shape[1] == y.shape[0])")
    checks = {
        "exit 1": proc.returncode == 1,
        "one contradiction": out.count("Something doesn't fit!") == 1,
        "fact 10 = 30": re.findall(r"^  - (.*)$", out, re.M) == ["10 = 30"],
        "assert line": f"Asserted at matmul_mismatch.tfit:{line}\n" in out,
        "under 5 s": secs < 5,
    }
    failed = [k for k, v in checks.items() if not v]
    verdict(capsys, 1, not failed, f"{secs:.2f}s" + (f"; failed: {failed}" if failed else ""))


def test_criterion_2_holes(capsys, tmp_path):
    proc, _ = tfit("check", "--dump-smt", str(tmp_path), "holes_matmul.tfit")
    out = proc.stdout
    unique = "The hole at holes_matmul.tfit:2:18 has to be exactly 10" in out
    m = re.search(r"hole at holes_matmul.tfit:2:24 might take are: (.*)$", out, re.M)
    examples = [int(x) for x in m.group(1).split(", ")] if m else []
    blocking = [p for p in tmp_path.iterdir() if "(not (= hole_2_18 10))" in p.read_text()]
    backed = bool(blocking) and all(p.read_text().rstrip().endswith("; result: unsat") for p in blocking)
    ok = proc.returncode == 0 and unique and len(examples) >= 3 and backed
    verdict(capsys, 2, ok, f"exit {proc.returncode}; unique={unique}; examples={examples}; "
                           f"blocking query unsat={backed}")


def test_criterion_3_loop_summary(capsys):
    proc, _ = tfit("check", "--dump-summaries", "looping_fn.tfit")
    block = proc.stderr.split("loopingFn(n_k, s_input) -> s_result:\n")[1].split("\n\n")[0]
    lines = block.splitlines()
    calls = [re.search(r"loopOp\((\S+)\) -> (\S+)", ln) for ln in lines if "loopOp(" in ln]
    twice = len(calls) == 2
    fresh = False
    if twice:
        first_in, second_in = calls[0].group(1), calls[1].group(1)
        defined = {re.sub(r"^\[.*?\] ", "", ln.strip()).split(" = ")[0] for ln in lines if " = " in ln}
        produced = {c.group(2) for c in calls}
        fresh = second_in != first_in and second_in not in defined | produced
    verdict(capsys, 3, twice and fresh,
            f"loopOp instances={len(calls)}; second input fresh={fresh}")


def test_criterion_4_feasibility(capsys):
    proc, _ = tfit("check", "--format", "json", "feasibility_fg.tfit")
    data = json.loads(proc.stdout)
    errors = sum(f["kind"] == "contradiction" for e in data for f in e["findings"])
    paths = [p for e in data for p in e["paths"]]
    infeasible = [p for p in paths if p["condition"] == "n_x = 1 ∧ n_y@1 = 2"
                  and p["feasibility"] == "infeasible" and p["phase"] == 1]
    ok = proc.returncode == 0 and errors == 0 and len(infeasible) == 1
    verdict(capsys, 4, ok, f"errors={errors}; infeasible in phase 1={bool(infeasible)}")


def test_criterion_5_conv_model(capsys):
    wrong, _ = tfit("check", "listing1_model.tfit")
    line = line_of("listing1_model", "|-> [batchSize, 16, 16, 5]")
    a = wrong.returncode == 1 and f"Asserted at listing1_model.tfit:{line}\n" in wrong.stdout
    filled, _ = tfit("check", "listing1_model_filled.tfit")
    b = filled.returncode == 0 and filled.stdout == ""
    fixed, _ = tfit("check", "listing1_model_fixed.tfit")
    c = fixed.returncode == 0 and "has to be exactly 320" in fixed.stdout
    verdict(capsys, 5, a and b and c, f"(a) contradiction at line {line}: {a}; "
                                      f"(b) corrected passes: {b}; (c) hole is 320: {c}")


def _core_validity():
    checked = bad = 0
    for prog in CORPUS.values():
        if not prog.expect.contradictions:
            continue
        for rep in check_program(analyze(prog.load()), CheckConfig()):
            for c in rep.contradictions:
                checked += 1
                items = [(m, m, True) for m in c.core]
                if run_solver(build_script(items)).status != "unsat":
                    bad += 1
                    continue
                for i in range(len(items)):
                    if run_solver(build_script(items[:i] + items[i + 1:])).status != "sat":
                        bad += 1
                        break
    return checked, bad


def test_criterion_6_properties(capsys):
    sweep = broadcast_sweep()
    sweep_ok = not sweep.mismatches and sweep.seconds < 60
    cases = list(differential(range(500)))
    fps = [c.seed for c in cases if c.false_positive]
    missed = [c.seed for c in cases if c.missed_assert]
    clean = sum(c.oracle_status == "ok" for c in cases)
    equi = equisatisfiability()
    inconsistent = [c.label for c in equi if not c.consistent]
    cores, bad_cores = _core_validity()
    ok = sweep_ok and not fps and not inconsistent and cores > 0 and not bad_cores
    verdict(capsys, 6,
            ok,
            f"sweep {sweep.pairs} pairs in {sweep.seconds:.1f}s, {len(sweep.mismatches)} mismatches; "
            f"{len(cases)} random programs ({clean} clean), {len(fps)} false positives, "
            f"{len(missed)} missed assertion failures; "
            f"{len(equi)} elimination queries, {len(inconsistent)} inconsistent; "
            f"{cores} cores, {bad_cores} invalid")


def test_criterion_7_corpus_and_elimination(capsys):
    start = time.monotonic()
    runs = run_corpus()
    total = time.monotonic() - start
    wrong = [(r.name, r.problems) for r in runs if r.problems]
    stress = [p for p in CORPUS.values() if p.expect.needs_elimination]
    timed_out = False
    for prog in stress:
        reports = check_program(analyze(prog.load()), CheckConfig(eliminate=False, timeout=10))
        statuses = {q.status for r in reports for q in r.queries}
        timed_out |= "timeout" in statuses
    with_elim = {r.name: r for r in runs}
    solved = bool(stress) and all(not with_elim[p.name].problems and with_elim[p.name].undecided == 0
                                  for p in stress)
    ok = len(runs) >= 25 and total < 60 and not wrong and timed_out and solved
    verdict(capsys, 7, ok, f"{len(runs)} programs in {total:.1f}s; mismatches={wrong}; "
                           f"stress times out without elimination={timed_out}, "
                           f"solves with it={solved}")


if __name__ == "__main__":
    sys.exit(pytest.main([str(Path(__file__)), "-q"]))
