"""Shared helpers for the test modules."""

import shutil
import textwrap

import pytest

from tfit.checker import CheckConfig, analyze, check_program, instantiate
from tfit.frontend import load_program
from tfit.smt import SolverNotFound, solver_command


def _solver_available() -> bool:
    try:
        cmd = solver_command()
    except SolverNotFound:
        return False
    return shutil.which(cmd[0]) is not None


HAVE_SOLVER = _solver_available()
needs_solver = pytest.mark.skipif(not HAVE_SOLVER, reason="no SMT solver on PATH")


def src(text: str) -> str:
    return textwrap.dedent(text).lstrip("\n")


def load(text: str, file: str = "t.tfit"):
    return load_program([(file, src(text))])


def reports(text: str, entries=None, **config):
    analysis = analyze(load(text), entries)
    return check_program(analysis, CheckConfig(**config))


def report(text: str, entry: str = "main", **config):
    (rep,) = reports(text, [entry], **config)
    return rep


def system(text: str, entry: str = "main"):
    analysis = analyze(load(text))
    return instantiate(analysis.summaries[entry], analysis.summaries, 50_000)


MATMUL = src("""
    func matmul(_ x: Tensor<Float>, _ y: Tensor<Float>) -> Tensor<Float> {
      assert(x.shape[1] == y.shape[0])
      let r = TensorFlow.matmul(x, y)
      assert(r.shape == [x.shape[0], y.shape[1]])
      return r
    }
""")
