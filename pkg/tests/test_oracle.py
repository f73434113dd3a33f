import pytest

from tfit import oracle as O

from helpers import load


def run(text, entry="main", args=None, **kw):
    return O.interpret(load(text), entry, args, **kw)


def test_ok_with_return_value():
    r = run("func f(_ x: Tensor) -> Shape { return x.shape }", "f", [O.Tensor((2, 3))])
    assert r.status == O.OK and r.value == O.Shape((2, 3))


def test_assert_failure_location():
    r = run("let a = 1\nassert(a == 2)\n")
    assert r.status == O.ASSERT_FAILED and r.loc.line == 2 and r.failed


@pytest.mark.parametrize("text, status", [
    ("let t = randn([2])\nlet n = t.shape[2]\n", O.INDEX_ERROR),
    ("let t = randn([2, 3])\nlet n = t.shape[-3]\n", O.INDEX_ERROR),
    ("let s = broadcast([2, 3], [4, 3])\n", O.BROADCAST_ERROR),
    ("let z = 0\nlet n = 4 / z\n", O.DIVISION_BY_ZERO),
    ("let n = 0 - 4\nlet m = n / 2\n", O.NEGATIVE_DIVISION),
    ("let x = TensorFlow.matmul(randn([2, 3]), randn([4, 5]))\n", O.OP_FAILED),
    ("let n = ____\n", O.HOLE_REACHED),
    ("let x = TensorFlow.frobnicate(randn([2]))\n", O.MISSING_OP),
])
def test_failure_statuses(text, status):
    assert run(text).status == status


def test_only_shape_failures_count():
    assert O.HOLE_REACHED not in O.FAILURES
    assert O.NEGATIVE_DIVISION not in O.FAILURES
    assert O.BUDGET_EXCEEDED not in O.FAILURES


def test_negative_index_counts_from_the_end():
    r = run("let t = randn([2, 3, 4])\nassert(t.shape[-1] == 4 && t.shape[-3] == 2)\n")
    assert r.status == O.OK


@pytest.mark.parametrize("op, args, shape", [
    ("matmul", "randn([2, 3]), randn([3, 5])", (2, 5)),
    ("add", "randn([4, 1]), randn([3])", (4, 3)),
    ("relu", "randn([7, 2])", (7, 2)),
    ("conv2d", "randn([1, 8, 8, 3]), randn([3, 3, 3, 6])", (1, 6, 6, 6)),
    ("conv2d", "randn([1, 8, 8, 3]), randn([2, 2, 3, 4]), 2, 2", (1, 4, 4, 4)),
    ("maxpool2d", "randn([1, 8, 8, 3]), 2, 2, 2, 2", (1, 4, 4, 3)),
    ("flatten", "randn([2, 3, 4])", (2, 12)),
    ("reshape", "randn([2, 6]), [3, 4]", (3, 4)),
    ("transpose", "randn([2, 6])", (6, 2)),
])
def test_operator_shapes(op, args, shape):
    r = run(f"func f() -> Tensor {{ return TensorFlow.{op}({args}) }}", "f")
    assert r.status == O.OK, r.message
    assert r.value == O.Tensor(shape)


def test_reshape_checks_element_count():
    assert run("let x = TensorFlow.reshape(randn([2, 6]), [5, 2])\n").status == O.OP_FAILED


def test_loops_run_their_trip_count():
    r = run("var t = randn([1])\nfor i in 0..<3 {\n  t = TensorFlow.add(t, randn([2]))\n}\n"
            "var n = 0\nfor i in 0..<4 { n = n + i }\nassert(n == 6)\n")
    assert r.status == O.OK


def test_empty_range():
    assert run("var n = 0\nfor i in 5..<2 { n = n + 1 }\nassert(n == 0)\n").status == O.OK


def test_step_budget():
    text = "func f(_ n: Int) -> Int {\n  if n > 0 { return f(n - 1) }\n  return 0\n}\n"
    assert run(text, "f", [10]).status == O.OK
    assert run(text, "f", [500], budget=100).status == O.BUDGET_EXCEEDED


def test_tuples():
    r = run("func f() -> Int {\n  let p = (1, randn([3]))\n  return p.1.shape[0] + p.0\n}\n", "f")
    assert r.value == 4


def test_argument_checks():
    with pytest.raises(ValueError):
        run("func f(_ n: Int) { }", "f", [])
    with pytest.raises(KeyError):
        run("let a = 1\n", "nope")


def test_value_from_json():
    assert O.value_from_json({"shape": [1, 2]}) == O.Shape((1, 2))
    assert O.value_from_json({"tensor": [3]}) == O.Tensor((3,))
    assert O.value_from_json([1, {"tensor": []}]) == (1, O.Tensor(()))
    assert O.value_from_json(True) is True


def test_negative_tensor_dims_rejected():
    with pytest.raises(ValueError):
        O.Tensor((2, -1))
