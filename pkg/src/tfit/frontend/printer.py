"""Source printer; output reparses to a structurally equal AST."""

from __future__ import annotations

from . import ast as A
from .types import UNIT


def expr_to_source(e: A.Expr) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Name):
        return e.name
    if isinstance(e, A.Hole):
        return "____"
    if isinstance(e, A.Neg):
        return f"-{_atom(e.operand)}"
    if isinstance(e, A.Not):
        return f"!{_atom(e.operand)}"
    if isinstance(e, (A.Arith, A.Compare, A.Logical)):
        return f"({expr_to_source(e.lhs)} {e.op} {expr_to_source(e.rhs)})"
    if isinstance(e, A.Call):
        return f"{e.callee}({', '.join(expr_to_source(a) for a in e.args)})"
    if isinstance(e, A.TupleExpr):
        return f"({', '.join(expr_to_source(a) for a in e.items)})"
    if isinstance(e, A.Proj):
        return f"{_atom(e.base)}.{e.index}"
    if isinstance(e, A.ShapeLit):
        return f"[{', '.join(expr_to_source(d) for d in e.dims)}]"
    if isinstance(e, A.ShapeOf):
        return f"{_atom(e.base)}.shape"
    if isinstance(e, A.ShapeIndex):
        return f"{_atom(e.base)}[{expr_to_source(e.index)}]"
    if isinstance(e, A.RankOf):
        return f"{_atom(e.base)}.rank"
    if isinstance(e, A.Broadcast):
        return f"broadcast({expr_to_source(e.lhs)}, {expr_to_source(e.rhs)})"
    if isinstance(e, A.ShapeAssert):
        return f"({expr_to_source(e.value)} |-> {expr_to_source(e.shape)})"
    raise AssertionError(f"unknown expression {e!r}")


def _atom(e: A.Expr) -> str:
    text = expr_to_source(e)
    if isinstance(e, (A.Neg, A.Not)):
        return f"({text})"
    return text


def _stmts(body: list[A.Stmt], indent: int, out: list[str]) -> None:
    pad = "  " * indent
    for s in body:
        if isinstance(s, A.Let):
            kw = "var" if s.mutable else "let"
            annot = f": {s.annot}" if s.annot is not None else ""
            out.append(f"{pad}{kw} {s.name}{annot} = {expr_to_source(s.value)}")
        elif isinstance(s, A.Assign):
            out.append(f"{pad}{s.name} = {expr_to_source(s.value)}")
        elif isinstance(s, A.Assert):
            out.append(f"{pad}assert({expr_to_source(s.cond)})")
        elif isinstance(s, A.If):
            out.append(f"{pad}if {expr_to_source(s.cond)} {{")
            _stmts(s.then, indent + 1, out)
            if s.orelse:
                out.append(f"{pad}}} else {{")
                _stmts(s.orelse, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(s, A.For):
            out.append(f"{pad}for {s.var} in {expr_to_source(s.lo)}..<{expr_to_source(s.hi)} {{")
            _stmts(s.body, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(s, A.Return):
            out.append(f"{pad}return" + (f" {expr_to_source(s.value)}" if s.value else ""))
        elif isinstance(s, A.ExprStmt):
            out.append(f"{pad}{expr_to_source(s.expr)}")
        else:
            raise AssertionError(f"unknown statement {s!r}")


def program_to_source(functions: list[A.AstFunction]) -> str:
    out: list[str] = []
    main_body: list[A.Stmt] = []
    for fn in functions:
        if fn.implicit:
            main_body = fn.body
            continue
        params = ", ".join(f"{p.name}: {p.ty}" for p in fn.params)
        ret = f" -> {fn.ret}" if fn.ret != UNIT else ""
        out.append(f"func {fn.name}({params}){ret} {{")
        _stmts(fn.body, 1, out)
        out.append("}")
    _stmts(main_body, 0, out)
    return "\n".join(out) + "\n"
