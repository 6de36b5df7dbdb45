"""A small arithmetic expression language for obstacles and potentials.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' uint)* | '-' factor
    atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

Variables are ``x``, ``y`` and ``s``; functions are ``min``, ``max`` (binary)
and ``abs``, ``exp`` (unary).  Exponents are nonnegative integer literals and
chained powers associate to the right.  Error offsets are byte offsets into
the UTF-8 encoded source.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .field import Axis, ScalarField

VARIABLES = ("x", "y", "s")
FUNCTIONS = {"min": 2, "max": 2, "abs": 1, "exp": 1}


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, expected: Sequence[str] = ()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"syntax error at byte {offset}: {message}{detail}")


class UnknownIdentifier(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at byte {offset}")


class ArityError(ExprError):
    def __init__(self, name: str, expected: int, got: int, start: int, end: int):
        self.name = name
        self.offset = start
        self.span = (start, end)
        super().__init__(
            f"{name}() takes {expected} argument(s), got {got} at bytes {start}-{end}"
        )


class UnboundVariable(ExprError):
    pass


class EvalError(ExprError):
    def __init__(self, message: str, index: tuple, point: tuple):
        self.index = index
        self.point = point
        super().__init__(f"{message} at node {index} (point {point})")


# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]

_BIN_NAMES = {"+": "Add", "-": "Sub", "*": "Mul", "/": "Div"}


def sexpr(e: Expr) -> str:
    """Constructor-style rendering, e.g. ``Min(Pow(x,2),Pow(Sub(x,1),2))``."""
    if isinstance(e, Num):
        v = e.value
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"Neg({sexpr(e.arg)})"
    if isinstance(e, BinOp):
        return f"{_BIN_NAMES[e.op]}({sexpr(e.left)},{sexpr(e.right)})"
    if isinstance(e, Pow):
        return f"Pow({sexpr(e.base)},{e.exponent})"
    return f"{e.fn.capitalize()}({','.join(sexpr(a) for a in e.args)})"


def to_source(e: Expr) -> str:
    """Fully parenthesized source text that parses back to ``e``."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Pow):
        return f"({to_source(e.base)})^{e.exponent}"
    return f"{e.fn}({', '.join(to_source(a) for a in e.args)})"


def free_variables(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return free_variables(e.arg)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, Pow):
        return free_variables(e.base)
    return set().union(*(free_variables(a) for a in e.args))


# lexer

_TOKEN = re.compile(
    rb"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)
_WS = re.compile(rb"\s*")


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, ident, op, end
    text: str
    start: int
    end: int


def _tokenize(data: bytes) -> list:
    toks = []
    pos = 0
    while True:
        pos = _WS.match(data, pos).end()
        if pos >= len(data):
            toks.append(_Tok("end", "", pos, pos))
            return toks
        m = _TOKEN.match(data, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {data[pos:pos + 1]!r}", pos)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind).decode(), m.start(kind), m.end()))
        pos = m.end()


class _Parser:
    def __init__(self, source: str):
        self.toks = _tokenize(source.encode("utf-8"))
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str, expected=None) -> _Tok:
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        raise ExprSyntaxError(
            f"unexpected {self._describe(self.tok)}", self.tok.start, expected or [text]
        )

    @staticmethod
    def _describe(t: _Tok) -> str:
        return "end of input" if t.kind == "end" else repr(t.text)

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(
                f"unexpected {self._describe(self.tok)}",
                self.tok.start,
                ["+", "-", "*", "/", "^", "end of input"],
            )
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            e = BinOp(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.factor())
        base = self.atom()
        exps = []
        while self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            t = self.tok
            if t.kind != "num" or not t.text.isdigit():
                raise ExprSyntaxError(
                    f"exponent must be a nonnegative integer literal, got {self._describe(t)}",
                    t.start,
                    ["unsigned integer"],
                )
            self.advance()
            exps.append(int(t.text))
        if exps:
            k = exps[-1]
            for e in reversed(exps[:-1]):
                k = e**k
            base = Pow(base, k)
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "ident":
            self.advance()
            if t.text in VARIABLES:
                return Var(t.text)
            if t.text not in FUNCTIONS:
                raise UnknownIdentifier(t.text, t.start)
            self.expect("(")
            args = [self.expr()]
            while self.tok.kind == "op" and self.tok.text == ",":
                self.advance()
                args.append(self.expr())
            close = self.expect(")", [",", ")"])
            if len(args) != FUNCTIONS[t.text]:
                raise ArityError(t.text, FUNCTIONS[t.text], len(args), t.start, close.end)
            return Call(t.text, tuple(args))
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(
            f"unexpected {self._describe(t)}", t.start, ["number", "identifier", "(", "-"]
        )


def parse(source: str) -> Expr:
    return _Parser(source).parse()


# evaluation


def _evaluate(e: Expr, env: Mapping[str, np.ndarray], check):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -_evaluate(e.arg, env, check)
    if isinstance(e, Pow):
        b = _evaluate(e.base, env, check)
        return check(np.power(b, float(e.exponent)), "overflow in power")
    if isinstance(e, BinOp):
        a = _evaluate(e.left, env, check)
        b = _evaluate(e.right, env, check)
        if e.op == "+":
            return check(a + b, "overflow in addition")
        if e.op == "-":
            return check(a - b, "overflow in subtraction")
        if e.op == "*":
            return check(a * b, "overflow in multiplication")
        check(np.where(np.asarray(b) == 0.0, np.nan, 1.0), "division by zero")
        return check(a / b, "overflow in division")
    args = [_evaluate(a, env, check) for a in e.args]
    if e.fn == "min":
        return np.minimum(*args)
    if e.fn == "max":
        return np.maximum(*args)
    if e.fn == "abs":
        return np.abs(args[0])
    return check(np.exp(args[0]), "overflow in exp")


def default_variables(ndim: int) -> tuple:
    return ("x",) if ndim == 1 else ("x", "y")


def eval_on_grid(
    e: Expr,
    axes: Sequence[Axis],
    bindings: Optional[Mapping[str, float]] = None,
    variables: Optional[Sequence[str]] = None,
) -> ScalarField:
    """Evaluate ``e`` at every grid node.

    ``variables`` names the axes in order; it defaults to ``x`` in 1D and
    ``x, y`` in 2D (use ``("s", "x")`` for product grids).
    """
    axes = tuple(axes)
    variables = tuple(variables or default_variables(len(axes)))
    if len(variables) != len(axes):
        raise ExprError(f"{len(axes)} axes but variables {variables}")
    bindings = dict(bindings or {})
    missing = free_variables(e) - set(variables) - set(bindings)
    if missing:
        raise UnboundVariable(f"unbound variable(s): {', '.join(sorted(missing))}")
    coords = np.meshgrid(*(a.nodes() for a in axes), indexing="ij")
    env = {name: float(v) for name, v in bindings.items()}
    env.update(zip(variables, coords))
    shape = coords[0].shape

    def check(value, message):
        arr = np.broadcast_to(value, shape)
        bad = ~np.isfinite(arr)
        if bad.any():
            flat = int(np.flatnonzero(bad)[0])
            idx = np.unravel_index(flat, shape)
            idx = tuple(int(i) for i in idx)
            point = tuple(float(c[idx]) for c in coords)
            raise EvalError(message, idx, point)
        return value

    with np.errstate(all="ignore"):
        out = _evaluate(e, env, check)
    return ScalarField(axes, np.broadcast_to(out, shape).copy())


def field_from_source(source: str, axes: Sequence[Axis], **kw) -> ScalarField:
    return eval_on_grid(parse(source), axes, **kw)
