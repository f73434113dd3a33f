"""Random loop-free programs over concrete shapes, for differential testing.

Every tensor starts from ``randn`` with literal dimensions, so the static
checker sees a closed system and the interpreter a fully determined run.
The prelude contracts pin each result shape completely, so an assertion
that fails at run time is also refuted by the asserted facts.  Most
generated assertions are true by construction; the rest are perturbed so
that some programs fail.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

PRELUDE = """\
func matmul(_ x: Tensor, _ y: Tensor) -> Tensor {
  assert(x.rank == 2 && y.rank == 2)
  assert(x.shape[1] == y.shape[0])
  let r = TensorFlow.matmul(x, y)
  assert(r.shape == [x.shape[0], y.shape[1]])
  return r
}

func add(_ x: Tensor, _ y: Tensor) -> Tensor {
  let s = broadcast(x.shape, y.shape)
  let r = TensorFlow.add(x, y)
  assert(r.shape == s)
  return r
}

func flatten(_ x: Tensor) -> Tensor {
  assert(x.rank == 3)
  let r = TensorFlow.flatten(x)
  assert(r.shape == [x.shape[0], x.shape[1] * x.shape[2]])
  return r
}
"""


@dataclass
class _Env:
    rng: random.Random
    tensors: dict[str, tuple[int, ...]] = field(default_factory=dict)
    ints: dict[str, int] = field(default_factory=dict)
    counter: int = 0

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"


def _dims(rng: random.Random, rank: int) -> tuple[int, ...]:
    return tuple(rng.randint(1, 4) for _ in range(rank))


def _shape_text(dims) -> str:
    return "[" + ", ".join(str(d) for d in dims) + "]"


def _pick(env: _Env) -> tuple[str, tuple[int, ...]]:
    name = env.rng.choice(sorted(env.tensors))
    return name, env.tensors[name]


def _partner(env: _Env, fits, make=None) -> tuple[list[str], str, tuple[int, ...]]:
    """Usually a tensor satisfying ``fits``; sometimes any tensor at all.

    When nothing in scope fits, ``make`` (if given) supplies the dimensions
    of a fresh tensor that does, declared by the returned lines.
    """
    if env.rng.random() < 0.92:
        good = [n for n in sorted(env.tensors) if fits(env.tensors[n])]
        if good:
            name = env.rng.choice(good)
            return [], name, env.tensors[name]
        if make is not None:
            name = env.fresh("t")
            dims = make()
            env.tensors[name] = dims
            return [f"let {name} = randn({_shape_text(dims)})"], name, dims
    name, dims = _pick(env)
    return [], name, dims


def _int_expr(env: _Env) -> tuple[str, int | None]:
    """An integer expression and its value (None when it would fail to evaluate)."""
    rng = env.rng
    choice = rng.random()
    if choice < 0.4 or not env.ints:
        name, shape = _pick(env)
        i = rng.randrange(-len(shape), len(shape) + (1 if rng.random() < 0.05 else 0))
        value = shape[i] if -len(shape) <= i < len(shape) else None
        return f"{name}.shape[{i}]", value
    if choice < 0.55:
        name, shape = _pick(env)
        return f"{name}.rank", len(shape)
    name = rng.choice(sorted(env.ints))
    value = env.ints[name]
    op = rng.choice("+*/-")
    k = rng.randint(1, 3)
    if op == "/":
        return f"{name} / {k}", value // k if value >= 0 else None
    if op == "-":
        return f"{name} - {k}", value - k
    return f"{name} {op} {k}", value + k if op == "+" else value * k


def _assertion(env: _Env, truthful: bool) -> str:
    rng = env.rng
    if rng.random() < 0.4:
        name, shape = _pick(env)
        dims = list(shape)
        if not truthful and dims:
            j = rng.randrange(len(dims))
            dims[j] += rng.choice((1, 2))
        return f"assert({name}.shape == {_shape_text(dims)})"
    expr, value = _int_expr(env)
    if value is None:
        return f"assert({expr} == 0)"
    target = value if truthful else value + rng.choice((-1, 1, 2))
    rel = rng.choice(("==", ">=", "<=")) if truthful else "=="
    return f"assert({expr} {rel} {target})"


def _statement(env: _Env, depth: int) -> list[str]:
    rng = env.rng
    roll = rng.random()
    if roll < 0.22 or len(env.tensors) < 2:
        name = env.fresh("t")
        dims = _dims(rng, rng.choice((1, 2, 2, 2, 3)))
        env.tensors[name] = dims
        return [f"let {name} = randn({_shape_text(dims)})"]
    if roll < 0.4:
        pre, a, sa = _partner(env, lambda s: len(s) == 2, lambda: _dims(rng, 2))
        more, b, sb = _partner(env, lambda s: len(sa) == 2 and len(s) == 2 and s[0] == sa[1],
                               lambda: (sa[1], rng.randint(1, 4)) if len(sa) == 2 else (1, 1))
        name = env.fresh("t")
        # Shapes may not fit; such programs fail both statically and at run time.
        fits = len(sa) == 2 and len(sb) == 2 and sa[1] == sb[0]
        env.tensors[name] = (sa[0], sb[1]) if fits else (1, 1)
        return pre + more + [f"let {name} = matmul({a}, {b})"]
    if roll < 0.55:
        a, sa = _pick(env)
        pre, b, sb = _partner(env, lambda s: _broadcast_or_placeholder(sa, s) != (1,) or s == (1,),
                              lambda: sa)
        name = env.fresh("t")
        env.tensors[name] = _broadcast_or_placeholder(sa, sb)
        return pre + [f"let {name} = add({a}, {b})"]
    if roll < 0.6:
        pre, a, sa = _partner(env, lambda s: len(s) == 3, lambda: _dims(rng, 3))
        name = env.fresh("t")
        env.tensors[name] = (sa[0], sa[1] * sa[2]) if len(sa) == 3 else (1, 1)
        return pre + [f"let {name} = flatten({a})"]
    if roll < 0.72:
        expr, value = _int_expr(env)
        name = env.fresh("n")
        env.ints[name] = value if value is not None else 0
        return [f"let {name} = {expr}"]
    if roll < 0.82 and depth < 2:
        expr, value = _int_expr(env)
        k = rng.randint(0, 4)
        then = _block(env, depth + 1, rng.randint(1, 2))
        orelse = _block(env, depth + 1, rng.randint(0, 2))
        lines = [f"if {expr} > {k} {{"] + ["  " + s for s in then]
        if orelse:
            lines += ["} else {"] + ["  " + s for s in orelse]
        return lines + ["}"]
    return [_assertion(env, truthful=rng.random() < 0.93)]


def _broadcast_or_placeholder(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    n = max(len(a), len(b))
    pa = (1,) * (n - len(a)) + a
    pb = (1,) * (n - len(b)) + b
    out = []
    for x, y in zip(pa, pb):
        if x != y and 1 not in (x, y):
            return (1,)
        out.append(y if x == 1 else x)
    return tuple(out)


def _block(env: _Env, depth: int, count: int) -> list[str]:
    # Names bound inside a branch must not leak to the enclosing scope.
    saved_t, saved_i = dict(env.tensors), dict(env.ints)
    out: list[str] = []
    for _ in range(count):
        out += _statement(env, depth)
    env.tensors, env.ints = saved_t, saved_i
    return out


def random_program(seed: int, statements: int = 8) -> str:
    """Source text of a random closed program; deterministic in ``seed``."""
    env = _Env(random.Random(seed))
    body: list[str] = []
    for _ in range(statements):
        body += _statement(env, 0)
    return PRELUDE + "\n" + "\n".join(body) + "\n"
