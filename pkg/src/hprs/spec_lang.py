"""Requirements language: lexing, parsing, normalization and signal bounds.

A requirements file is line oriented. Each non-blank line holds exactly one
declaration; ``#`` starts a comment::

    var d_walls in [-1.0, 5.0]
    const v_max = 3.5
    ensure "no_collision": d_walls > 0
    achieve "lap": L == 1.0 tol 0.01
    encourage "speed_max": v <= v_max bounds [-6.5, 3.5]

EBNF (terminals quoted)::

    file        = { line } ;
    line        = [ decl | const | requirement ] [ "#" comment ] NEWLINE ;
    decl        = "var" IDENT "in" "[" signed "," signed "]" ;
    const       = "const" IDENT "=" expr ;
    requirement = keyword STRING ":" expr cmp expr [ "tol" unary ]
                  [ "bounds" "[" signed "," signed "]" ] ;
    keyword     = "ensure" | "achieve" | "conquer" | "encourage" ;
    cmp         = ">=" | ">" | "<=" | "<" | "==" | "≥" | "≤" ;
    expr        = term { ( "+" | "-" ) term } ;
    term        = unary { ( "*" | "/" ) unary } ;
    unary       = "-" unary | atom ;
    atom        = NUMBER | IDENT | func "(" expr { "," expr } ")"
                | "(" expr ")" | "|" expr "|" ;
    func        = "abs" | "min" | "max" ;

Every requirement is normalized to a single signal ``f`` whose satisfaction
means ``f(s) >= 0``; ``==`` requires a ``tol`` band. Signal bounds ``[l, u]``
come from interval arithmetic over the declared variable box unless an
explicit ``bounds`` annotation is given.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Union

import numpy as np

from .errors import (
    Diagnostic,
    NonNormalizablePredicate,
    SpecError,
    TriviallySatisfied,
    TriviallyViolated,
    UnboundedSignal,
    UnknownVariable,
)

__all__ = [
    "ReqClass",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Comparison",
    "VarDecl",
    "ConstDecl",
    "RequirementSpec",
    "TaskSpecDraft",
    "parse_spec",
    "normalize_comparison",
    "simplify",
    "infer_bounds",
    "interval_eval",
    "evaluate",
    "compile_expr",
    "free_names",
    "format_expr",
    "format_spec",
]

RESERVED = frozenset(
    {"var", "const", "in", "tol", "bounds", "ensure", "achieve", "conquer",
     "encourage", "abs", "min", "max", "pi", "and", "or", "not"}
)
FUNCTIONS = {"abs": 1, "min": None, "max": None}
BUILTIN_CONSTS = {"pi": math.pi}


class ReqClass(enum.Enum):
    SAFETY = "ensure"
    TARGET_ACHIEVE = "achieve"
    TARGET_CONQUER = "conquer"
    COMFORT = "encourage"

    @property
    def keyword(self) -> str:
        return self.value

    @property
    def is_safety(self) -> bool:
        return self is ReqClass.SAFETY

    @property
    def is_target(self) -> bool:
        return self in (ReqClass.TARGET_ACHIEVE, ReqClass.TARGET_CONQUER)

    @property
    def is_comfort(self) -> bool:
        return self is ReqClass.COMFORT

    @property
    def group(self) -> str:
        if self.is_safety:
            return "safety"
        return "target" if self.is_target else "comfort"


_KEYWORD_CLASS = {c.value: c for c in ReqClass}


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple
    col: int = field(default=0, compare=False, repr=False)


Expr = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class Comparison:
    lhs: Expr
    op: str
    rhs: Expr
    tol: Expr | None = None

    @property
    def strict(self) -> bool:
        return self.op in (">", "<")


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: float
    hi: float
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ConstDecl:
    name: str
    expr: Expr
    value: float = field(default=math.nan, compare=False)
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RequirementSpec:
    """One parsed requirement; ``f`` and ``bounds`` are derived from the source."""

    cls: ReqClass
    name: str
    comparison: Comparison
    bounds_annotation: tuple[float, float] | None = None
    f: Expr | None = field(default=None, compare=False)
    bounds: tuple[float, float] | None = field(default=None, compare=False)
    line: int = field(default=0, compare=False)

    @property
    def l(self) -> float:  # noqa: E743
        return self.bounds[0]

    @property
    def u(self) -> float:
        return self.bounds[1]

    @property
    def strict(self) -> bool:
        return self.comparison.strict

    def signal(self, env):
        """Evaluate the normalized signal on a state (or columns of states)."""
        return _compiled(self.f)(env)


Item = Union[VarDecl, ConstDecl, RequirementSpec]


@dataclass(frozen=True)
class TaskSpecDraft:
    items: tuple = ()
    warnings: tuple = field(default=(), compare=False)

    @property
    def decls(self) -> list[VarDecl]:
        return [i for i in self.items if isinstance(i, VarDecl)]

    @property
    def consts(self) -> list[ConstDecl]:
        return [i for i in self.items if isinstance(i, ConstDecl)]

    @property
    def requirements(self) -> list[RequirementSpec]:
        return [i for i in self.items if isinstance(i, RequirementSpec)]

    def const_values(self) -> dict[str, float]:
        return {c.name: c.value for c in self.consts}


# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class _Tok:
    kind: str  # NUM, IDENT, STRING, OP, BAD, EOL
    text: str
    col: int
    value: float = 0.0


class _LineError(Exception):
    def __init__(self, col, code, message):
        super().__init__(message)
        self.col = col
        self.code = code
        self.message = message


_NUM_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TWO_CHAR = {">=", "<=", "==", "!=", "&&"}
_ONE_CHAR = set("+-*/()[],:|=<>")
_UNICODE = {"≥": ">=", "≤": "<=", "−": "-", "×": "*"}
_LOGIC = {"!", "&", "∨", "∧", "¬", "!=", "&&"}


def _tokenize(line: str) -> list[_Tok]:
    toks = []
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        col = i + 1
        if ch == "#":
            break
        if ch in " \t\r\f\v":
            i += 1
            continue
        if ch == '"':
            j = line.find('"', i + 1)
            if j < 0:
                raise _LineError(col, "SyntaxError", "unterminated string")
            toks.append(_Tok("STRING", line[i + 1:j], col))
            i = j + 1
            continue
        m = _NUM_RE.match(line, i)
        if m:
            text = m.group(0)
            value = float(text)
            if not math.isfinite(value):
                raise _LineError(col, "SyntaxError", f"number out of range: {text}")
            toks.append(_Tok("NUM", text, col, value))
            i = m.end()
            continue
        m = _IDENT_RE.match(line, i)
        if m:
            toks.append(_Tok("IDENT", m.group(0), col))
            i = m.end()
            continue
        if ch in _UNICODE:
            toks.append(_Tok("OP", _UNICODE[ch], col))
            i += 1
            continue
        two = line[i:i + 2]
        if two in _TWO_CHAR:
            toks.append(_Tok("BAD" if two in _LOGIC else "OP", two, col))
            i += 2
            continue
        if ch in _LOGIC:
            toks.append(_Tok("BAD", ch, col))
            i += 1
            continue
        if ch in _ONE_CHAR:
            toks.append(_Tok("OP", ch, col))
            i += 1
            continue
        raise _LineError(col, "SyntaxError", f"unexpected character {ch!r}")
    toks.append(_Tok("EOL", "", len(line) + 1))
    return toks


# ---------------------------------------------------------------------------
# parser


_CMP_OPS = (">=", ">", "<=", "<", "==")
_MAX_DEPTH = 200


class _LineParser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0
        self.depth = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def peek(self, k=1) -> _Tok:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "EOL":
            self.pos += 1
        return t

    def fail(self, message, tok=None, code="SyntaxError"):
        tok = tok or self.tok
        raise _LineError(tok.col, code, message)

    def expect_op(self, text):
        if self.tok.kind == "OP" and self.tok.text == text:
            return self.advance()
        found = self.tok.text or "end of line"
        self.fail(f"expected {text!r}, found {found!r}")

    def expect_keyword(self, word):
        if self.tok.kind == "IDENT" and self.tok.text == word:
            return self.advance()
        found = self.tok.text or "end of line"
        self.fail(f"expected {word!r}, found {found!r}")

    def expect_ident(self, what="identifier"):
        t = self.tok
        if t.kind != "IDENT":
            self.fail(f"expected {what}, found {t.text or 'end of line'!r}")
        if t.text in RESERVED:
            self.fail(f"{t.text!r} is reserved and cannot be used as {what}")
        return self.advance()

    def expect_eol(self):
        t = self.tok
        if t.kind == "EOL":
            return
        if t.kind == "BAD" or (t.kind == "IDENT" and t.text in ("and", "or", "not")):
            self.fail("boolean connectives are not supported; write one requirement per line",
                      code="NonNormalizablePredicate")
        if t.kind == "OP" and t.text == "|" and self.peek().kind == "OP" and self.peek().text == "|":
            self.fail("disjunction is not supported; write one requirement per line",
                      code="NonNormalizablePredicate")
        if t.kind == "OP" and t.text in _CMP_OPS:
            self.fail("chained comparisons are not supported; split into two requirements",
                      code="NonNormalizablePredicate")
        self.fail(f"unexpected {t.text!r}")

    def signed_number(self) -> float:
        sign = 1.0
        while self.tok.kind == "OP" and self.tok.text in "+-":
            if self.advance().text == "-":
                sign = -sign
        t = self.tok
        if t.kind != "NUM":
            self.fail(f"expected a number, found {t.text or 'end of line'!r}")
        self.advance()
        return sign * t.value

    def interval(self) -> tuple[float, float]:
        self.expect_op("[")
        lo = self.signed_number()
        self.expect_op(",")
        hi = self.signed_number()
        self.expect_op("]")
        return lo, hi

    # expressions

    def expr(self) -> Expr:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            self.fail("expression nested too deeply")
        node = self.term()
        while self.tok.kind == "OP" and self.tok.text in ("+", "-"):
            op = self.advance()
            node = BinOp(op.text, node, self.term(), op.col)
        self.depth -= 1
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "OP" and self.tok.text in ("*", "/"):
            op = self.advance()
            node = BinOp(op.text, node, self.unary(), op.col)
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "OP" and self.tok.text == "-":
            op = self.advance()
            self.depth += 1
            if self.depth > _MAX_DEPTH:
                self.fail("expression nested too deeply")
            inner = self.unary()
            self.depth -= 1
            if isinstance(inner, Num):
                return Num(-inner.value, op.col)
            return Neg(inner, op.col)
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return Num(t.value, t.col)
        if t.kind == "IDENT":
            if t.text in ("and", "or", "not"):
                self.fail("boolean connectives are not supported", code="NonNormalizablePredicate")
            if t.text in FUNCTIONS:
                return self.call()
            if t.text in RESERVED and t.text not in BUILTIN_CONSTS:
                self.fail(f"unexpected keyword {t.text!r}")
            self.advance()
            return Var(t.text, t.col)
        if t.kind == "OP" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if t.kind == "OP" and t.text == "|":
            self.advance()
            node = self.expr()
            self.expect_op("|")
            return Call("abs", (node,), t.col)
        if t.kind == "BAD":
            self.fail("boolean connectives are not supported", code="NonNormalizablePredicate")
        self.fail(f"expected an expression, found {t.text or 'end of line'!r}")

    def call(self) -> Call:
        name = self.advance()
        self.expect_op("(")
        args = [self.expr()]
        while self.tok.kind == "OP" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect_op(")")
        arity = FUNCTIONS[name.text]
        if arity is not None and len(args) != arity:
            self.fail(f"{name.text}() takes {arity} argument", tok=name)
        return Call(name.text, tuple(args), name.col)

    # declarations

    def line(self, lineno: int):
        t = self.tok
        if t.kind == "EOL":
            return None
        if t.kind != "IDENT":
            self.fail("expected 'var', 'const' or a requirement keyword")
        if t.text == "var":
            self.advance()
            name = self.expect_ident("variable name")
            self.expect_keyword("in")
            lo, hi = self.interval()
            self.expect_eol()
            return VarDecl(name.text, lo, hi, lineno), name.col
        if t.text == "const":
            self.advance()
            name = self.expect_ident("constant name")
            self.expect_op("=")
            node = self.expr()
            self.expect_eol()
            return ConstDecl(name.text, node, line=lineno), name.col
        if t.text in _KEYWORD_CLASS:
            self.advance()
            if self.tok.kind != "STRING":
                self.fail("expected a quoted requirement name")
            name = self.advance()
            if not name.text.strip():
                self.fail("requirement name must not be empty", tok=name)
            self.expect_op(":")
            lhs = self.expr()
            if self.tok.kind == "BAD" and self.tok.text == "!=":
                self.fail("'!=' is a negation and cannot be normalized",
                          code="NonNormalizablePredicate")
            if self.tok.kind != "OP" or self.tok.text not in _CMP_OPS:
                if self.tok.kind == "OP" and self.tok.text == "=":
                    self.fail("use '==' (with 'tol') for equality")
                self.fail("expected a comparison operator")
            op = self.advance().text
            rhs = self.expr()
            tol = None
            if self.tok.kind == "IDENT" and self.tok.text == "tol":
                kw = self.advance()
                if op != "==":
                    self.fail("'tol' only applies to '==' comparisons", tok=kw)
                tol = self.unary()
            ann = None
            if self.tok.kind == "IDENT" and self.tok.text == "bounds":
                self.advance()
                ann = self.interval()
            self.expect_eol()
            if op == "==" and tol is None:
                raise _LineError(t.col, "SyntaxError",
                                 "equality needs a tolerance band: add 'tol <epsilon>'")
            req = RequirementSpec(_KEYWORD_CLASS[t.text], name.text,
                                  Comparison(lhs, op, rhs, tol), ann, line=lineno)
            return req, t.col
        self.fail(f"unknown declaration {t.text!r}")


# ---------------------------------------------------------------------------
# expression utilities


def free_names(expr: Expr) -> list[Var]:
    """All variable references in ``expr`` (with positions), left to right."""
    out = []
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, Var):
            out.append(e)
        elif isinstance(e, Neg):
            stack.append(e.operand)
        elif isinstance(e, BinOp):
            stack.extend((e.right, e.left))
        elif isinstance(e, Call):
            stack.extend(reversed(e.args))
    return out


def substitute(expr: Expr, values: Mapping[str, float]) -> Expr:
    if isinstance(expr, Var):
        return Num(float(values[expr.name]), expr.col) if expr.name in values else expr
    if isinstance(expr, Neg):
        return Neg(substitute(expr.operand, values), expr.col)
    if isinstance(expr, BinOp):
        return BinOp(expr.op, substitute(expr.left, values), substitute(expr.right, values), expr.col)
    if isinstance(expr, Call):
        return Call(expr.fn, tuple(substitute(a, values) for a in expr.args), expr.col)
    return expr


def _fold(op: str, a: float, b: float):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        return None
    return a / b


def simplify(expr: Expr) -> Expr:
    """Constant folding plus a few algebraic identities (``x - x``, ``x + 0``, ...)."""
    if isinstance(expr, Neg):
        inner = simplify(expr.operand)
        if isinstance(inner, Num):
            return Num(-inner.value)
        if isinstance(inner, Neg):
            return inner.operand
        return Neg(inner)
    if isinstance(expr, Call):
        args = tuple(simplify(a) for a in expr.args)
        if all(isinstance(a, Num) for a in args):
            vals = [a.value for a in args]
            if expr.fn == "abs":
                return Num(abs(vals[0]))
            return Num(min(vals) if expr.fn == "min" else max(vals))
        if expr.fn in ("min", "max") and len(args) == 1:
            return args[0]
        return Call(expr.fn, args)
    if isinstance(expr, BinOp):
        a, b = simplify(expr.left), simplify(expr.right)
        op = expr.op
        if isinstance(a, Num) and isinstance(b, Num):
            v = _fold(op, a.value, b.value)
            if v is not None and math.isfinite(v):
                return Num(v)
        if op == "-" and a == b:
            return Num(0.0)
        if op == "+":
            if _is_num(a, 0.0):
                return b
            if _is_num(b, 0.0):
                return a
        if op == "-":
            if _is_num(b, 0.0):
                return a
            if _is_num(a, 0.0):
                return simplify(Neg(b))
        if op == "*":
            if _is_num(a, 1.0):
                return b
            if _is_num(b, 1.0):
                return a
            if _is_num(a, 0.0) or _is_num(b, 0.0):
                return Num(0.0)
        if op == "/" and _is_num(b, 1.0):
            return a
        return BinOp(op, a, b)
    if isinstance(expr, Num):
        return Num(expr.value)
    return Var(expr.name)


def _is_num(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def normalize_comparison(c: Comparison, consts: Mapping[str, float] | None = None) -> Expr:
    """Rewrite a comparison as a signal ``f`` with ``f >= 0`` meaning satisfied.

    ``a >= b`` and ``a > b`` give ``a - b``; ``a <= b`` and ``a < b`` give
    ``b - a``; ``a == b tol eps`` gives ``eps - |a - b|``. Named constants are
    inlined and the result simplified.
    """
    values = dict(BUILTIN_CONSTS)
    values.update(consts or {})
    lhs = substitute(c.lhs, values)
    rhs = substitute(c.rhs, values)
    if c.op in (">=", ">"):
        f = BinOp("-", lhs, rhs)
    elif c.op in ("<=", "<"):
        f = BinOp("-", rhs, lhs)
    elif c.op == "==":
        if c.tol is None:
            raise NonNormalizablePredicate("equality requires a 'tol' band")
        tol = simplify(substitute(c.tol, values))
        if not isinstance(tol, Num):
            raise NonNormalizablePredicate("tolerance must be a constant")
        if not tol.value > 0:
            raise NonNormalizablePredicate("tolerance must be positive")
        f = BinOp("-", tol, Call("abs", (BinOp("-", lhs, rhs),)))
    else:
        raise NonNormalizablePredicate(f"unsupported comparison {c.op!r}")
    return simplify(f)


# interval arithmetic


def interval_eval(expr: Expr, box: Mapping[str, tuple[float, float]]) -> tuple[float, float]:
    """Enclosure of ``expr`` over the axis-aligned ``box`` (name -> (lo, hi))."""
    if isinstance(expr, Num):
        return expr.value, expr.value
    if isinstance(expr, Var):
        if expr.name not in box:
            raise UnknownVariable(expr.name)
        lo, hi = box[expr.name]
        return float(lo), float(hi)
    if isinstance(expr, Neg):
        lo, hi = interval_eval(expr.operand, box)
        return -hi, -lo
    if isinstance(expr, Call):
        ivs = [interval_eval(a, box) for a in expr.args]
        if expr.fn == "abs":
            lo, hi = ivs[0]
            if lo >= 0:
                return lo, hi
            if hi <= 0:
                return -hi, -lo
            return 0.0, max(-lo, hi)
        if expr.fn == "min":
            return min(i[0] for i in ivs), min(i[1] for i in ivs)
        return max(i[0] for i in ivs), max(i[1] for i in ivs)
    a = interval_eval(expr.left, box)
    b = interval_eval(expr.right, box)
    if expr.op == "+":
        return a[0] + b[0], a[1] + b[1]
    if expr.op == "-":
        return a[0] - b[1], a[1] - b[0]
    if expr.op == "*":
        p = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
        return min(p), max(p)
    if b[0] <= 0.0 <= b[1]:
        raise UnboundedSignal("division by an interval containing zero")
    q = (a[0] / b[0], a[0] / b[1], a[1] / b[0], a[1] / b[1])
    return min(q), max(q)


def infer_bounds(f: Expr, decls: Iterable[VarDecl], consts: Mapping[str, float] | None = None,
                 annotation: tuple[float, float] | None = None) -> tuple[float, float]:
    """Bounds ``[l, u]`` of a normalized signal, checked for ``l < 0 < u``."""
    if annotation is not None:
        l, u = float(annotation[0]), float(annotation[1])
    else:
        values = dict(BUILTIN_CONSTS)
        values.update(consts or {})
        g = simplify(substitute(f, values))
        l, u = interval_eval(g, {d.name: (d.lo, d.hi) for d in decls})
    if not (math.isfinite(l) and math.isfinite(u)):
        raise UnboundedSignal(f"signal bounds are not finite: [{l}, {u}]")
    if l >= 0:
        raise TriviallySatisfied(f"signal is never negative over the declared domain: [{l}, {u}]")
    if u <= 0:
        raise TriviallyViolated(f"signal is never positive over the declared domain: [{l}, {u}]")
    return l, u


# evaluation


def compile_expr(expr: Expr) -> Callable:
    """Turn an expression into ``fn(env)``; env values may be floats or arrays."""
    if isinstance(expr, Num):
        v = expr.value
        return lambda env: v
    if isinstance(expr, Var):
        name = expr.name

        def _var(env):
            try:
                return env[name]
            except KeyError:
                raise UnknownVariable(name) from None
        return _var
    if isinstance(expr, Neg):
        inner = compile_expr(expr.operand)
        return lambda env: -inner(env)
    if isinstance(expr, Call):
        args = [compile_expr(a) for a in expr.args]
        if expr.fn == "abs":
            a0 = args[0]
            return lambda env: np.abs(a0(env))
        red = np.minimum if expr.fn == "min" else np.maximum

        def _reduce(env):
            out = args[0](env)
            for g in args[1:]:
                out = red(out, g(env))
            return out
        return _reduce
    left, right = compile_expr(expr.left), compile_expr(expr.right)
    if expr.op == "+":
        return lambda env: left(env) + right(env)
    if expr.op == "-":
        return lambda env: left(env) - right(env)
    if expr.op == "*":
        return lambda env: left(env) * right(env)
    return lambda env: np.divide(left(env), right(env))


_CACHE: dict = {}


def _compiled(expr: Expr) -> Callable:
    fn = _CACHE.get(expr)
    if fn is None:
        fn = _CACHE[expr] = compile_expr(expr)
    return fn


def evaluate(expr: Expr, env: Mapping):
    return _compiled(expr)(env)


# pretty printing


def _fmt_num(v: float) -> str:
    return repr(float(v))


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Num):
        return _fmt_num(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Neg):
        inner = format_expr(expr.operand)
        if isinstance(expr.operand, (BinOp, Neg)) or (
                isinstance(expr.operand, Num) and expr.operand.value < 0):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, Call):
        return f"{expr.fn}({', '.join(format_expr(a) for a in expr.args)})"
    parts = []
    for child in (expr.left, expr.right):
        s = format_expr(child)
        parts.append(f"({s})" if isinstance(child, BinOp) else s)
    return f"{parts[0]} {expr.op} {parts[1]}"


def format_requirement(req: RequirementSpec) -> str:
    c = req.comparison
    s = f'{req.cls.keyword} "{req.name}": {format_expr(c.lhs)} {c.op} {format_expr(c.rhs)}'
    if c.tol is not None:
        tol = format_expr(c.tol)
        s += f" tol {tol}" if isinstance(c.tol, (Num, Var)) else f" tol ({tol})"
    if req.bounds_annotation is not None:
        lo, hi = req.bounds_annotation
        s += f" bounds [{_fmt_num(lo)}, {_fmt_num(hi)}]"
    return s


def format_spec(draft: TaskSpecDraft) -> str:
    lines = []
    for item in draft.items:
        if isinstance(item, VarDecl):
            lines.append(f"var {item.name} in [{_fmt_num(item.lo)}, {_fmt_num(item.hi)}]")
        elif isinstance(item, ConstDecl):
            lines.append(f"const {item.name} = {format_expr(item.expr)}")
        else:
            lines.append(format_requirement(item))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# entry point


def parse_spec(text: Union[str, bytes]) -> TaskSpecDraft:
    """Parse a requirements file into an unvalidated draft.

    Raises :class:`SpecError` carrying every diagnostic found; never raises
    anything else. Warnings (strict comparisons, constant predicates) are
    attached to the returned draft.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SpecError([Diagnostic(1, 1, "SyntaxError", f"input is not valid UTF-8: {exc.reason}")])
    if not isinstance(text, str):
        raise SpecError([Diagnostic(1, 1, "SyntaxError", "input must be text")])

    errors: list[Diagnostic] = []
    warnings: list[Diagnostic] = []
    parsed: list[tuple[Item, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        try:
            out = _LineParser(_tokenize(raw)).line(lineno)
        except _LineError as exc:
            errors.append(Diagnostic(lineno, exc.col, exc.code, exc.message))
            continue
        except RecursionError:
            errors.append(Diagnostic(lineno, 1, "SyntaxError", "expression nested too deeply"))
            continue
        if out is not None:
            parsed.append(out)

    items = _resolve(parsed, errors, warnings)
    if errors:
        raise SpecError(sorted(errors, key=lambda d: (d.line, d.col)))
    return TaskSpecDraft(tuple(items), tuple(warnings))


def _resolve(parsed, errors, warnings) -> list[Item]:
    names: dict[str, int] = {}
    req_names: dict[str, int] = {}
    consts: dict[str, float] = {}
    decls: dict[str, VarDecl] = {}

    def dup(kind, name, line, col, seen):
        if name in seen:
            errors.append(Diagnostic(line, col, "DuplicateName",
                                     f"{kind} {name!r} already declared on line {seen[name]}"))
            return True
        seen[name] = line
        return False

    for item, col in parsed:
        if isinstance(item, VarDecl):
            if dup("name", item.name, item.line, col, names):
                continue
            if not item.lo < item.hi:
                errors.append(Diagnostic(item.line, col, "InvalidDomain",
                                         f"empty domain [{item.lo}, {item.hi}] for {item.name!r}"))
            decls[item.name] = item
        elif isinstance(item, RequirementSpec):
            dup("requirement", item.name, item.line, col, req_names)

    out: list[Item] = []
    for item, col in parsed:
        if isinstance(item, VarDecl):
            out.append(item)
        elif isinstance(item, ConstDecl):
            if dup("name", item.name, item.line, col, names):
                continue
            bad = [v for v in free_names(item.expr)
                   if v.name not in consts and v.name not in BUILTIN_CONSTS]
            if bad:
                errors.append(Diagnostic(item.line, bad[0].col, "UnknownVariable",
                                         f"constant {item.name!r} refers to {bad[0].name!r}, "
                                         "which is not a previously declared constant"))
                continue
            val = simplify(substitute(item.expr, {**BUILTIN_CONSTS, **consts}))
            if not isinstance(val, Num) or not math.isfinite(val.value):
                errors.append(Diagnostic(item.line, col, "SyntaxError",
                                         f"constant {item.name!r} does not evaluate to a finite number"))
                continue
            consts[item.name] = val.value
            out.append(ConstDecl(item.name, item.expr, val.value, item.line))
        else:
            req = _resolve_requirement(item, col, decls, consts, errors, warnings)
            if req is not None:
                out.append(req)
    return out


def _resolve_requirement(req, col, decls, consts, errors, warnings):
    c = req.comparison
    refs = free_names(c.lhs) + free_names(c.rhs) + (free_names(c.tol) if c.tol is not None else [])
    unknown = [v for v in refs if v.name not in decls and v.name not in consts
               and v.name not in BUILTIN_CONSTS]
    if unknown:
        for v in unknown:
            errors.append(Diagnostic(req.line, v.col, "UnknownVariable",
                                     f"{v.name!r} is not a declared variable or constant"))
        return None
    if c.tol is not None and any(v.name in decls for v in free_names(c.tol)):
        errors.append(Diagnostic(req.line, col, "NonNormalizablePredicate",
                                 "tolerance must not depend on state variables"))
        return None
    try:
        f = normalize_comparison(c, consts)
    except NonNormalizablePredicate as exc:
        errors.append(Diagnostic(req.line, col, exc.code, str(exc)))
        return None
    if c.strict:
        warnings.append(Diagnostic(req.line, col, "StrictComparison",
                                   f"{req.name!r}: '{c.op}' is treated as its non-strict form",
                                   "warning"))
    if isinstance(f, Num):
        warnings.append(Diagnostic(req.line, col, "TrivialPredicate",
                                   f"{req.name!r} normalizes to the constant {f.value!r}",
                                   "warning"))
    try:
        bounds = infer_bounds(f, decls.values(), consts, req.bounds_annotation)
    except (TriviallySatisfied, TriviallyViolated, UnboundedSignal) as exc:
        errors.append(Diagnostic(req.line, col, exc.code, f"{req.name!r}: {exc}"))
        return None
    return RequirementSpec(req.cls, req.name, req.comparison, req.bounds_annotation,
                           f, bounds, req.line)


for _cls in (Num, Var, Neg, BinOp, Call):
    _cls.__str__ = format_expr
del _cls
