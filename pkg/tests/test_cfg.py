import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfit import cfg as C
from tfit.corpus import load_corpus
from tfit.frontend import SourceLoc
from tfit.frontend.types import BOOL, INT

from helpers import load, src

LOC = SourceLoc("t.tfit", 1, 1)


def lowered(text, fn="main"):
    return C.lower(load(text).functions[fn])


def asserts(cfg, line=None):
    return [i for b in cfg.blocks.values() for i in b.instrs
            if i.op == "assert" and (line is None or i.loc.line == line)]


LOOPING = src("""
    func step(_ x: Tensor) -> Tensor { return x }
    func loopingFn(k: Int, input: Tensor) -> Tensor {
      var x = input
      for i in 0..<k {
        x = step(x)
      }
      return x
    }
""")


class TestLowering:
    def test_straight_line_is_one_block(self):
        cfg = lowered("let a = 1\nlet b = a + 2\nassert(b == 3)\n")
        assert list(cfg.blocks) == [cfg.entry]
        assert isinstance(cfg.blocks[cfg.entry].term, C.Return)

    def test_loop_function_has_four_blocks(self):
        cfg = lowered(LOOPING, "loopingFn")
        assert len(cfg.blocks) == 4
        assert not C.is_acyclic(cfg)
        (loop,) = C.natural_loops(cfg)
        assert len(loop.body) == 2 and len(loop.latches) == 1

    def test_if_else_join_takes_reassigned_variables(self):
        cfg = lowered("""
            func f(_ c: Bool) -> Int {
              var x = 1
              var y = 5
              if c { x = 2 } else { x = 3 }
              return x + y
            }
        """, "f")
        joins = [b for b in cfg.blocks.values() if b.params and b.id != cfg.entry]
        assert len(joins) == 1
        (name, ty), = joins[0].params
        assert ty == INT and name.startswith("%x")

    def test_if_without_reassignment_has_no_join_params(self):
        cfg = lowered("func f(_ c: Bool) -> Int {\n  if c { assert(c) }\n  return 1\n}", "f")
        assert all(not b.params for b in cfg.blocks.values() if b.id != cfg.entry)

    def test_verify_accepts_lowered_corpus(self):
        for prog in load_corpus():
            for fn in prog.load().functions.values():
                cfg = C.lower(fn)
                C.verify(cfg)
                C.verify(C.eliminate_loops(cfg))

    def test_ssa_names_unique(self):
        cfg = lowered(LOOPING, "loopingFn")
        defs = [n for b in cfg.blocks.values() for n, _ in b.params + b.fresh]
        defs += [i.dest for b in cfg.blocks.values() for i in b.instrs if i.dest]
        assert len(defs) == len(set(defs))


class TestLoopElimination:
    def test_result_is_acyclic_with_fresh_enter_flag(self):
        cfg = C.eliminate_loops(lowered(LOOPING, "loopingFn"))
        assert C.is_acyclic(cfg)
        fresh = [n for b in cfg.blocks.values() for n, _ in b.fresh]
        assert any(n.startswith("%enter.") for n in fresh)
        enter = [(n, t) for b in cfg.blocks.values() for n, t in b.fresh if n.startswith("%enter.")]
        assert all(t == BOOL for _, t in enter)

    def test_second_copy_inputs_are_fresh(self):
        cfg = C.eliminate_loops(lowered(LOOPING, "loopingFn"))
        second = [b for b in cfg.blocks.values() if b.id.endswith("'b") and b.fresh]
        assert len(second) == 1
        names = [n for n, _ in second[0].fresh]
        assert any(n.startswith("%x") for n in names)
        assert any(n.startswith("%i") for n in names)

    def test_body_call_appears_twice(self):
        cfg = C.eliminate_loops(lowered(LOOPING, "loopingFn"))
        calls = [i for b in cfg.blocks.values() for i in b.instrs if i.op == "call" and i.attr == "step"]
        assert len(calls) == 2

    @pytest.mark.parametrize("depth", [1, 2, 3])
    def test_nested_asserts_double_per_level(self, depth):
        lines, indent = [], ""
        for d in range(depth):
            lines.append(f"{indent}for i{d} in 0..<3 {{")
            indent += "  "
        lines.append(f"{indent}assert(i0 >= 0)")
        for d in reversed(range(depth)):
            indent = indent[:-2]
            lines.append(f"{indent}}}")
        cfg = C.eliminate_loops(lowered("\n".join(lines) + "\n"))
        assert C.is_acyclic(cfg)
        assert len(asserts(cfg)) == 2 ** depth

    def test_nested_census(self):
        cfg = C.eliminate_loops(lowered("""
            for a in 0..<2 {
              for b in 0..<2 {
                assert(b >= 0)
              }
              assert(a >= 0)
            }
        """))
        assert len(asserts(cfg, line=3)) == 4
        assert len(asserts(cfg, line=5)) == 2

    def test_every_corpus_function_becomes_acyclic(self):
        for prog in load_corpus():
            for fn in prog.load().functions.values():
                assert C.is_acyclic(C.eliminate_loops(C.lower(fn)))

    def test_loop_free_input_is_unchanged(self):
        cfg = lowered("let a = 1\nif a > 0 { assert(a == 1) }\n")
        assert C.eliminate_loops(cfg) is cfg

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.sampled_from(["loop", "if", "assert"]), min_size=1, max_size=6))
    def test_random_nesting_stays_verifiable(self, shape):
        lines, indent, opened = ["var v = 0"], "", 0
        for n, kind in enumerate(shape):
            if kind == "assert":
                lines.append(f"{indent}assert(v >= 0)")
                continue
            head = f"for k{n} in 0..<2 {{" if kind == "loop" else "if v > 1 {"
            lines.append(indent + head)
            lines.append(f"{indent}  v = v + 1")
            indent += "  "
            opened += 1
        for _ in range(opened):
            indent = indent[:-2]
            lines.append(indent + "}")
        cfg = C.eliminate_loops(lowered("\n".join(lines) + "\n"))
        C.verify(cfg)
        assert C.is_acyclic(cfg)


def _block(bid, term, fresh=()):
    return C.Block(bid, [], [], term, list(fresh))


def test_irreducible_cycle_is_rejected():
    # Two entries into the cycle {a, b}: no block dominates the other.
    blocks = {
        "e": _block("e", C.CondJump("%c", "a", (), "b", ()), [("%c", BOOL)]),
        "a": _block("a", C.Jump("b")),
        "b": _block("b", C.Jump("a")),
    }
    cfg = C.FunctionCfg("weird", "e", blocks, INT, LOC)
    with pytest.raises(C.IrreducibleLoop):
        C.eliminate_loops(cfg)


def test_dominators_of_diamond():
    cfg = lowered("func f(_ c: Bool) -> Int {\n  var x = 0\n  if c { x = 1 }\n  return x\n}", "f")
    dom = C.dominators(cfg)
    assert all(cfg.entry in d for d in dom.values())
    assert C.topological_order(cfg)[0] == cfg.entry


def test_dump_mentions_every_block():
    cfg = C.eliminate_loops(lowered(LOOPING, "loopingFn"))
    text = C.dump_cfg(cfg)
    for bid in cfg.blocks:
        assert f"\n{bid}" in text
