"""UFNIA encoding of constraint systems and an SMT-LIB 2 solver client.

A shape is an uninterpreted function ``dims: Int -> Int`` paired with an
integer ``rank``.  Shapes whose rank is known syntactically (literals and
broadcasts of literals) are kept as plain lists of dimension terms, which
lets shape equalities unroll instead of needing a quantifier.

Every application ``(dims T)`` is paired with the bound
``(and (<= 0 T) (< T rank))``, either as a definedness assumption of the
enclosing constraint (indexing a shape) or inline next to the application
(shape equality and broadcasting, which are total).
"""

from __future__ import annotations

import os
import queue
import re
import shlex
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Union

from . import constraints as K
from .errors import TfitError
from .frontend.lexer import SourceLoc

DEFAULT_SOLVER = "z3 -in -smt2"
SOLVER_ENV = "TFIT_SOLVER"

# ---------------------------------------------------------------------------
# Symbols
# ---------------------------------------------------------------------------

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_\-+=<>.?/][A-Za-z0-9~!@$%^&*_\-+=<>.?/]*$")
_RESERVED = {"true", "false", "and", "or", "not", "=>", "ite", "forall", "exists", "let",
             "div", "mod", "abs", "distinct", "par", "as", "_", "!"}


def quote(symbol: str) -> str:
    if _SIMPLE.match(symbol) and symbol not in _RESERVED:
        return symbol
    if "|" in symbol or "\\" in symbol:
        raise ValueError(f"symbol cannot be quoted: {symbol!r}")
    return f"|{symbol}|"


def unquote(symbol: str) -> str:
    if len(symbol) >= 2 and symbol[0] == "|" and symbol[-1] == "|":
        return symbol[1:-1]
    return symbol


def int_literal(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _and(parts: list[str]) -> str:
    parts = [p for p in parts if p != "true"]
    if not parts:
        return "true"
    if "false" in parts:
        return "false"
    return parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"


def bound(index: str, rank: str) -> str:
    """The canonical in-bounds fact for ``(dims index)``."""
    return f"(and (<= 0 {index}) (< {index} {rank}))"


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Known:
    """Shape of statically known rank: one SMT term per dimension."""
    dims: tuple[str, ...]


@dataclass(frozen=True)
class Symbolic:
    """Shape given by an uninterpreted dims function and a rank term."""
    fn: str
    rank: str

    def at(self, index: str) -> str:
        return f"({self.fn} {index})"


UShape = Union[Known, Symbolic]


class Translator:
    """Stateful builder of declarations; one instance per script."""

    def __init__(self, quantified: bool = False):
        self.quantified = quantified
        self.declarations: dict[str, str] = {}
        self.background: list[str] = []
        self.holes: dict[SourceLoc, str] = {}
        self.shapes: dict[str, Symbolic] = {}
        self.fresh_count = 0
        self.bound_var_count = 0

    # -- symbols -------------------------------------------------------------

    def declare(self, symbol: str, sort: str, args: str = "") -> str:
        q = quote(symbol)
        self.declarations.setdefault(q, f"(declare-fun {q} ({args}) {sort})")
        return q

    def hole(self, loc: SourceLoc) -> str:
        if loc not in self.holes:
            name = f"hole_{loc.line}_{loc.column}"
            taken = set(self.holes.values())
            k = 1
            base = name
            while name in taken:
                k += 1
                name = f"{base}_{k}"
            self.holes[loc] = name
        return self.declare(self.holes[loc], "Int")

    def shape_var(self, name: str) -> Symbolic:
        if name not in self.shapes:
            fn = self.declare(f"{name}.dims", "Int", "Int")
            rank = self.declare(f"{name}.rank", "Int")
            self.background.append(f"(>= {rank} 0)")
            self.shapes[name] = Symbolic(fn, rank)
        return self.shapes[name]

    def fresh_shape(self, tag: str) -> Symbolic:
        self.fresh_count += 1
        return self.shape_var(f"{tag}!{self.fresh_count}")

    def bound_var(self) -> str:
        self.bound_var_count += 1
        return f"i!{self.bound_var_count}"

    def symbolic(self, s: UShape) -> Symbolic:
        """View any shape as a dims/rank pair, defining a fresh pair for literals."""
        if isinstance(s, Symbolic):
            return s
        f = self.fresh_shape("lit")
        defs = [f"(= {f.rank} {len(s.dims)})"]
        for i, d in enumerate(s.dims):
            defs.append(f"(=> {bound(str(i), f.rank)} (= {f.at(str(i))} {d}))")
        # Definitional: constrains only the fresh symbols.
        self.background.append(_and(defs))
        return f

    # -- terms -----------------------------------------------------------------

    def int_(self, e: K.IntExpr, acc: list[str]) -> str:
        if isinstance(e, K.IntLit):
            return int_literal(e.value)
        if isinstance(e, K.IntVar):
            return self.declare(e.name, "Int")
        if isinstance(e, K.HoleRef):
            return self.hole(e.loc)
        if isinstance(e, K.Rank):
            s = self.shape(e.shape, acc)
            return str(len(s.dims)) if isinstance(s, Known) else s.rank
        if isinstance(e, K.Dim):
            s = self.shape(e.shape, acc)
            c = e.index
            if isinstance(s, Known):
                if -len(s.dims) <= c < len(s.dims):
                    return s.dims[c]
                acc.append("false")
                return "0"
            index = str(c) if c >= 0 else f"(- {s.rank} {-c})"
            acc.append(bound(index, s.rank))
            return s.at(index)
        if isinstance(e, K.Arith):
            a = self.int_(e.lhs, acc)
            b = self.int_(e.rhs, acc)
            if e.op == "/":
                acc.append(f"(not (= {b} 0))")
                return f"(div {a} {b})"
            return f"({e.op} {a} {b})"
        raise TypeError(f"not an integer term: {e!r}")

    def bool_(self, e: K.BoolExpr, acc: list[str]) -> str:
        if isinstance(e, K.BoolLit):
            return "true" if e.value else "false"
        if isinstance(e, K.BoolVar):
            return self.declare(e.name, "Bool")
        if isinstance(e, K.Not):
            return f"(not {self.bool_(e.arg, acc)})"
        if isinstance(e, K.And):
            return f"(and {' '.join(self.bool_(a, acc) for a in e.args)})"
        if isinstance(e, K.Or):
            return f"(or {' '.join(self.bool_(a, acc) for a in e.args)})"
        if isinstance(e, K.IntEq):
            return f"(= {self.int_(e.lhs, acc)} {self.int_(e.rhs, acc)})"
        if isinstance(e, K.BoolEq):
            return f"(= {self.bool_(e.lhs, acc)} {self.bool_(e.rhs, acc)})"
        if isinstance(e, K.IntRel):
            return f"({e.op} {self.int_(e.lhs, acc)} {self.int_(e.rhs, acc)})"
        if isinstance(e, K.ShapeEq):
            return self.shape_eq(self.shape(e.lhs, acc), self.shape(e.rhs, acc))
        raise TypeError(f"not a boolean term: {e!r}")

    def shape_eq(self, a: UShape, b: UShape) -> str:
        if not self.quantified:
            if isinstance(a, Known) and isinstance(b, Known):
                if len(a.dims) != len(b.dims):
                    return "false"
                return _and([f"(= {x} {y})" for x, y in zip(a.dims, b.dims)])
            if isinstance(a, Known) or isinstance(b, Known):
                known, sym = (a, b) if isinstance(a, Known) else (b, a)
                assert isinstance(sym, Symbolic) and isinstance(known, Known)
                parts = [f"(= {sym.rank} {len(known.dims)})"]
                for i, d in enumerate(known.dims):
                    parts.append(bound(str(i), sym.rank))
                    parts.append(f"(= {sym.at(str(i))} {d})")
                return _and(parts)
        sa, sb = self.symbolic(a), self.symbolic(b)
        i = self.bound_var()
        return (f"(and (= {sa.rank} {sb.rank}) (forall (({i} Int)) "
                f"(=> (and {bound(i, sa.rank)} {bound(i, sb.rank)}) "
                f"(= {sa.at(i)} {sb.at(i)}))))")

    def shape(self, e: K.ShapeExpr, acc: list[str]) -> UShape:
        if isinstance(e, K.ShapeVar):
            return self.shape_var(e.name)
        if isinstance(e, K.ShapeLit):
            return Known(tuple(self.int_(d, acc) for d in e.dims))
        if isinstance(e, K.Broadcast):
            return self.broadcast(self.shape(e.lhs, acc), self.shape(e.rhs, acc), acc)
        raise TypeError(f"not a shape term: {e!r}")

    def broadcast(self, a: UShape, b: UShape, acc: list[str]) -> UShape:
        if isinstance(a, Known) and isinstance(b, Known) and not self.quantified:
            n = max(len(a.dims), len(b.dims))
            out = []
            for j in range(1, n + 1):
                x = a.dims[-j] if j <= len(a.dims) else None
                y = b.dims[-j] if j <= len(b.dims) else None
                if x is None:
                    out.append(y)
                elif y is None:
                    out.append(x)
                else:
                    acc.append(f"(or (= {x} {y}) (= {x} 1) (= {y} 1))")
                    out.append(f"(ite (= {x} 1) {y} {x})")
            return Known(tuple(reversed(out)))
        sa, sb = self.symbolic(a), self.symbolic(b)
        # The result is a function of its operands, so it is a macro rather
        # than an uninterpreted symbol pinned down by a quantified axiom.
        self.fresh_count += 1
        name = f"bc!{self.fresh_count}"
        rank, fn = quote(f"{name}.rank"), quote(f"{name}.dims")
        self.declarations[rank] = (f"(define-fun {rank} () Int "
                                   f"(ite (>= {sa.rank} {sb.rank}) {sa.rank} {sb.rank}))")
        r = Symbolic(fn, rank)
        i = self.bound_var()
        ja = f"(- {i} (- {r.rank} {sa.rank}))"
        jb = f"(- {i} (- {r.rank} {sb.rank}))"
        da = f"(ite {bound(ja, sa.rank)} {sa.at(ja)} 1)"
        db = f"(ite {bound(jb, sb.rank)} {sb.at(jb)} 1)"
        self.declarations[fn] = f"(define-fun {fn} (({i} Int)) Int (ite (= {da} 1) {db} {da}))"
        k = self.bound_var()
        ka = f"(- {k} (- {r.rank} {sa.rank}))"
        kb = f"(- {k} (- {r.rank} {sb.rank}))"
        ea = f"(ite {bound(ka, sa.rank)} {sa.at(ka)} 1)"
        eb = f"(ite {bound(kb, sb.rank)} {sb.at(kb)} 1)"
        acc.append(f"(forall (({k} Int)) (=> {bound(k, r.rank)} (or (= {ea} {eb}) (= {ea} 1) (= {eb} 1))))")
        return r

    # -- constraints -------------------------------------------------------------

    def formula(self, e: K.BoolExpr) -> str:
        """A boolean term conjoined with its definedness assumptions."""
        acc: list[str] = []
        body = self.bool_(e, acc)
        return _and(_dedupe(acc) + [body])

    def constraint(self, c: K.GuardedConstraint, guarded: bool = True) -> str:
        acc: list[str] = []
        guard = self.bool_(c.guard, acc) if guarded else "true"
        body = self.bool_(c.body, acc)
        consequent = _and(_dedupe(acc) + [body])
        if guard == "true":
            return consequent
        return f"(=> {guard} {consequent})"


def _dedupe(items: list[str]) -> list[str]:
    return list(dict.fromkeys(items))


# ---------------------------------------------------------------------------
# Scripts
# ---------------------------------------------------------------------------


ASSUMPTION = "assumption"


@dataclass
class SmtScript:
    declarations: list[str]
    background: list[str]
    assertions: list[tuple[str, str]]
    origins: dict[str, object]
    holes: dict[SourceLoc, str]
    logic: str = "UFNIA"

    def prelude(self) -> str:
        lines = [
            "(set-option :produce-unsat-cores true)",
            "(set-option :produce-models true)",
            f"(set-logic {self.logic})",
        ]
        lines += self.declarations
        lines += [f"(assert {b})" for b in self.background]
        lines += [f"(assert (! {phi} :named {name}))" for name, phi in self.assertions]
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        return self.prelude() + "(check-sat)\n"


def build_script(items: list[tuple[object, K.GuardedConstraint, bool]], quantified: bool = False) -> SmtScript:
    """Script asserting each constraint under a unique name.

    ``items`` holds ``(origin, constraint, guarded)``; the origin is
    whatever the caller wants back when the name shows up in a core.
    """
    tr = Translator(quantified=quantified)
    assertions = []
    origins: dict[str, object] = {}
    for k, (origin, c, guarded) in enumerate(items):
        name = f"a{k}"
        assertions.append((name, tr.constraint(c, guarded)))
        origins[name] = origin
    return SmtScript(
        list(tr.declarations.values()), _dedupe(tr.background), assertions, origins, dict(tr.holes)
    )


# ---------------------------------------------------------------------------
# S-expressions
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r'\s*(?:(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()|";]+)|(;[^\n]*))')


class SExprError(ValueError):
    pass


def parse_sexprs(text: str) -> list:
    out: list = []
    stack: list[list] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise SExprError(f"cannot parse solver output near {text[pos:pos + 20]!r}")
        pos = m.end()
        lp, rp, string, quoted, atom, comment = m.groups()
        if comment:
            continue
        if lp:
            stack.append([])
            continue
        if rp:
            if not stack:
                raise SExprError("unbalanced ')' in solver output")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
            continue
        token = string or quoted or atom
        if token is None:
            continue
        (stack[-1] if stack else out).append(token)
    if stack:
        raise SExprError("unbalanced '(' in solver output")
    return out


def sexpr_complete(text: str) -> bool:
    depth = 0
    seen = False
    in_quote = in_string = False
    for ch in text:
        if in_quote:
            in_quote = ch != "|"
        elif in_string:
            in_string = ch != '"'
        elif ch == "|":
            in_quote = True
        elif ch == '"':
            in_string = True
        elif ch == "(":
            depth += 1
            seen = True
        elif ch == ")":
            depth -= 1
        elif not ch.isspace() and depth == 0:
            seen = True
    return seen and depth == 0 and not in_quote and not in_string


def sexpr_int(x) -> int:
    if isinstance(x, str):
        return int(x)
    if isinstance(x, list) and len(x) == 2 and x[0] == "-":
        return -sexpr_int(x[1])
    raise SExprError(f"not an integer value: {x!r}")


# ---------------------------------------------------------------------------
# Solver process
# ---------------------------------------------------------------------------


class SmtError(TfitError):
    pass


class SolverNotFound(SmtError):
    pass


class SolverProtocolError(SmtError):
    pass


class SolverCrashed(SmtError):
    pass


STATUSES = ("sat", "unsat", "unknown", "timeout", "solver-error")


@dataclass
class SmtVerdict:
    status: str
    core: list[str] = field(default_factory=list)
    model: dict[str, int] = field(default_factory=dict)
    error: Optional[SmtError] = None
    elapsed: float = 0.0

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")


def solver_command(explicit: Optional[str] = None) -> list[str]:
    cmd = explicit or os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER
    argv = shlex.split(cmd)
    if not argv:
        raise SolverNotFound("empty solver command")
    if shutil.which(argv[0]) is None:
        raise SolverNotFound(f"solver executable {argv[0]!r} not found")
    return argv


class _Timeout(Exception):
    pass


class SolverSession:
    """An interactive solver process speaking SMT-LIB 2 over pipes."""

    def __init__(self, command: Optional[str] = None, timeout: float = 10.0):
        self.argv = solver_command(command)
        self.timeout = timeout
        self.transcript: list[str] = []
        try:
            self.proc = subprocess.Popen(
                self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True, bufsize=1,
            )
        except OSError as exc:
            raise SolverNotFound(f"cannot start solver {self.argv[0]!r}: {exc}") from exc
        self.lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self.reader = threading.Thread(target=self._pump, daemon=True)
        self.reader.start()

    def _pump(self) -> None:
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)

    def send(self, text: str) -> None:
        self.transcript.append(text)
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(text if text.endswith("\n") else text + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverCrashed(f"solver closed its input: {self._stderr()}") from exc

    def _stderr(self) -> str:
        if self.proc.poll() is None or self.proc.stderr is None:
            return ""
        try:
            return self.proc.stderr.read().strip()
        except (OSError, ValueError):
            return ""

    def read_response(self, deadline: float) -> str:
        text = ""
        while not sexpr_complete(text):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise _Timeout()
            try:
                line = self.lines.get(timeout=remaining)
            except queue.Empty:
                raise _Timeout() from None
            if line is None:
                code = self.proc.wait()
                raise SolverCrashed(
                    f"solver exited with status {code} mid-response: {self._stderr() or text.strip()}")
            text += line
        return text.strip()

    def command(self, text: str, deadline: Optional[float] = None) -> list:
        self.send(text)
        if deadline is None:
            deadline = time.monotonic() + self.timeout
        raw = self.read_response(deadline)
        try:
            parsed = parse_sexprs(raw)
        except SExprError as exc:
            raise SolverProtocolError(str(exc)) from exc
        if len(parsed) != 1:
            raise SolverProtocolError(f"expected one response, got {raw!r}")
        resp = parsed[0]
        if isinstance(resp, list) and resp and resp[0] == "error":
            raise SolverProtocolError(f"solver reported an error: {' '.join(map(str, resp[1:]))}")
        return resp

    def check_sat(self) -> str:
        resp = self.command("(check-sat)")
        if resp not in ("sat", "unsat", "unknown"):
            raise SolverProtocolError(f"unexpected check-sat response {resp!r}")
        return resp

    def unsat_core(self) -> list[str]:
        resp = self.command("(get-unsat-core)")
        if not isinstance(resp, list):
            raise SolverProtocolError(f"unexpected unsat core {resp!r}")
        return [unquote(x) for x in resp]

    def values(self, symbols: list[str]) -> dict[str, int]:
        if not symbols:
            return {}
        resp = self.command(f"(get-value ({' '.join(quote(s) for s in symbols)}))")
        model = {}
        try:
            for pair in resp:
                model[unquote(pair[0])] = sexpr_int(pair[1])
        except (TypeError, IndexError, SExprError) as exc:
            raise SolverProtocolError(f"cannot read model values from {resp!r}") from exc
        return model

    def push(self) -> None:
        self.send("(push 1)")

    def pop(self) -> None:
        self.send("(pop 1)")

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self.send("(exit)")
                self.proc.stdin.close()  # type: ignore[union-attr]
                self.proc.wait(timeout=1)
            except (SmtError, OSError, subprocess.TimeoutExpired):
                self.proc.kill()
                self.proc.wait()

    def kill(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
        self.proc.wait()

    def __enter__(self) -> "SolverSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def run_solver(
    script: SmtScript,
    *,
    command: Optional[str] = None,
    timeout: float = 10.0,
    want_core: bool = False,
    model_symbols: Optional[list[str]] = None,
    dump_path: Optional[str] = None,
) -> SmtVerdict:
    """Run one query in a fresh solver process.

    Raises SolverNotFound when no solver can be started; every other
    failure is reported as a ``solver-error`` verdict carrying the error.
    """
    start = time.monotonic()
    session = SolverSession(command, timeout)
    try:
        deadline = start + timeout
        session.send(script.prelude())
        status = session.command("(check-sat)", deadline)
        if status not in ("sat", "unsat", "unknown"):
            raise SolverProtocolError(f"unexpected check-sat response {status!r}")
        verdict = SmtVerdict(status)
        if status == "unsat" and want_core:
            verdict.core = session.unsat_core()
            if not verdict.core and script.assertions:
                raise SolverProtocolError("solver returned an empty unsat core")
        if status == "sat" and model_symbols:
            verdict.model = session.values(model_symbols)
        session.close()
    except _Timeout:
        session.kill()
        verdict = SmtVerdict("timeout")
    except SmtError as exc:
        session.kill()
        verdict = SmtVerdict("solver-error", error=exc)
    verdict.elapsed = time.monotonic() - start
    if dump_path is not None:
        with open(dump_path, "w", encoding="utf-8") as fh:
            fh.write("".join(t if t.endswith("\n") else t + "\n" for t in session.transcript))
            fh.write(f"; result: {verdict.status}\n")
    return verdict


# ---------------------------------------------------------------------------
# Lint
# ---------------------------------------------------------------------------


def dims_applications(text: str) -> list[tuple[str, str]]:
    """All ``(f T)`` applications of declared dims functions in ``text``."""
    functions = set(re.findall(r"\(declare-fun (\S+) \(Int\) Int\)", text))
    found = []
    for expr in parse_sexprs(text):
        stack = [expr]
        while stack:
            e = stack.pop()
            if isinstance(e, list):
                if len(e) == 2 and isinstance(e[0], str) and e[0] in functions:
                    found.append((e[0], _unparse(e[1])))
                stack.extend(e)
    return found


def _unparse(e) -> str:
    if isinstance(e, list):
        return "(" + " ".join(_unparse(x) for x in e) + ")"
    return e


def lint_bounds(text: str) -> list[str]:
    """Dims applications lacking their canonical in-bounds fact; empty means clean."""
    problems = []
    normalized = _unparse(parse_sexprs(text))
    for fn, index in dims_applications(text):
        rank = fn[:-len(".dims|")] + ".rank|" if fn.endswith(".dims|") else fn[:-len(".dims")] + ".rank"
        if bound(index, rank) not in normalized:
            problems.append(f"({fn} {index})")
    return problems
