"""Hypothesis strategies for constraint terms over a small fixed vocabulary."""

from hypothesis import strategies as st

from tfit import constraints as K

a, b = K.IntVar("a"), K.IntVar("b")
s, t = K.ShapeVar("s"), K.ShapeVar("t")
p = K.BoolVar("p")


int_leaves = st.one_of(
    st.integers(-3, 6).map(K.IntLit),
    st.sampled_from([a, b]),
)
shape_leaves = st.one_of(
    st.sampled_from([s, t]),
    st.lists(st.integers(0, 4).map(K.IntLit), max_size=3).map(lambda xs: K.ShapeLit(tuple(xs))),
)


@st.composite
def int_terms(draw, depth=3):
    if depth == 0:
        return draw(int_leaves)
    choice = draw(st.integers(0, 4))
    if choice == 0:
        return draw(int_leaves)
    if choice == 1:
        return K.Arith(draw(st.sampled_from(K.ARITH_OPS)), draw(int_terms(depth - 1)),
                       draw(int_terms(depth - 1)))
    if choice == 2:
        return K.Rank(draw(shape_terms(depth - 1)))
    if choice == 3:
        return K.Dim(draw(shape_terms(depth - 1)), draw(st.integers(-3, 3)))
    return draw(int_leaves)


@st.composite
def shape_terms(draw, depth=2):
    if depth == 0:
        return draw(shape_leaves)
    choice = draw(st.integers(0, 2))
    if choice == 0:
        return draw(shape_leaves)
    if choice == 1:
        return K.ShapeLit(tuple(draw(st.lists(int_terms(depth - 1), max_size=3))))
    return K.Broadcast(draw(shape_terms(depth - 1)), draw(shape_terms(depth - 1)))


@st.composite
def bool_terms(draw, depth=3):
    choice = draw(st.integers(0, 7 if depth else 2))
    if choice == 0:
        return draw(st.sampled_from([K.TRUE, K.FALSE, p]))
    if choice == 1:
        return K.IntEq(draw(int_terms(2)), draw(int_terms(2)))
    if choice == 2:
        return K.IntRel(draw(st.sampled_from(K.REL_OPS)), draw(int_terms(2)), draw(int_terms(2)))
    if choice == 3:
        return K.ShapeEq(draw(shape_terms(2)), draw(shape_terms(2)))
    if choice == 4:
        return K.Not(draw(bool_terms(depth - 1)))
    if choice == 5:
        return K.And(tuple(draw(st.lists(bool_terms(depth - 1), min_size=1, max_size=3))))
    if choice == 6:
        return K.Or(tuple(draw(st.lists(bool_terms(depth - 1), min_size=1, max_size=3))))
    return K.BoolEq(draw(bool_terms(depth - 1)), draw(bool_terms(depth - 1)))


envs = st.fixed_dictionaries({
    "a": st.integers(-4, 6),
    "b": st.integers(-4, 6),
    "p": st.booleans(),
    "s": st.lists(st.integers(0, 4), max_size=3).map(tuple),
    "t": st.lists(st.integers(0, 4), max_size=3).map(tuple),
})


def value(e, env):
    try:
        return K.evaluate(e, env)
    except K.Undefined:
        return None


def closing(env):
    """Substitution replacing every vocabulary variable by its value in ``env``."""
    def shape(dims):
        return K.ShapeLit(tuple(K.IntLit(d) for d in dims))
    return {"a": K.IntLit(env["a"]), "b": K.IntLit(env["b"]), "p": K.BoolLit(env["p"]),
            "s": shape(env["s"]), "t": shape(env["t"])}
