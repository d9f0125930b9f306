"""Scalar expression language for metric components.

Grammar (whitespace insignificant)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus and is right-associative, so ``-x^2``
is ``-(x^2)`` and ``x^-4`` is ``x^(-4)``.  A minus sign directly in front of
a numeric literal is folded into the constant.  Exponents may not depend on
coordinates.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import jets
from .errors import (
    DomainError,
    ExpressionSyntaxError,
    InputError,
    MetricValidationError,
    UnknownIdentifier,
)

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "exp", "log", "sqrt")


# -- AST -----------------------------------------------------------------------


class Expression:
    """Base class of AST nodes; nodes are immutable and compare structurally."""

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"parse_expression({to_text(self)!r})"


@dataclass(frozen=True, repr=False)
class Const(Expression):
    value: float


@dataclass(frozen=True, repr=False)
class Coord(Expression):
    index: int
    name: str


@dataclass(frozen=True, repr=False)
class Param(Expression):
    name: str


@dataclass(frozen=True, repr=False)
class Unary(Expression):
    op: str  # "neg" or a builtin function name
    arg: Expression


@dataclass(frozen=True, repr=False)
class Binary(Expression):
    op: str  # add, sub, mul, div, pow
    left: Expression
    right: Expression


def canonical(e):
    """Prefix form used in docs and tests: ``mul(exp(mul(4,u)),...)``."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, (Coord, Param)):
        return e.name
    if isinstance(e, Unary):
        return f"{e.op}({canonical(e.arg)})"
    return f"{e.op}({canonical(e.left)},{canonical(e.right)})"


# -- tokenizer -------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int  # byte offset


def _tokenize(text):
    tokens = []
    pos = 0
    byte = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", byte)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, chunk, byte))
        byte += len(chunk.encode("utf-8"))
        pos = m.end()
    tokens.append(_Token("end", "", byte))
    return tokens


# -- parser ----------------------------------------------------------------------


class _Parser:
    def __init__(self, text, coordinates, parameters):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.coords = {name: i for i, name in enumerate(coordinates)}
        self.params = None if parameters is None else set(parameters)

    @property
    def tok(self):
        return self.tokens[self.pos]

    def advance(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text):
        if self.tok.text != text or self.tok.kind not in ("op",):
            raise ExpressionSyntaxError(f"expected {text!r}", self.tok.offset)
        return self.advance()

    def parse(self):
        e = self.expr()
        if self.tok.kind != "end":
            raise ExpressionSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self):
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = "add" if self.advance().text == "+" else "sub"
            left = Binary(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = "mul" if self.advance().text == "*" else "div"
            left = Binary(op, left, self.factor())
        return left

    def factor(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            arg = self.factor()
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Unary("neg", arg)
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            caret = self.advance()
            exponent = self.factor()
            if _depends_on_coordinates(exponent):
                raise ExpressionSyntaxError(
                    "exponent must not depend on coordinates", caret.offset
                )
            return Binary("pow", base, exponent)
        return base

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Const(float(t.text))
        if t.kind == "ident":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownIdentifier(t.text, t.offset)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Unary(t.text, arg)
            if t.text in self.coords:
                return Coord(self.coords[t.text], t.text)
            if t.text in FUNCTIONS:
                raise ExpressionSyntaxError(f"function {t.text!r} needs an argument", t.offset)
            if self.params is not None and t.text not in self.params:
                raise UnknownIdentifier(t.text, t.offset)
            return Param(t.text)
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "end":
            raise ExpressionSyntaxError("unexpected end of input", t.offset)
        raise ExpressionSyntaxError(f"unexpected {t.text!r}", t.offset)


def _depends_on_coordinates(e):
    if isinstance(e, Coord):
        return True
    if isinstance(e, Unary):
        return _depends_on_coordinates(e.arg)
    if isinstance(e, Binary):
        return _depends_on_coordinates(e.left) or _depends_on_coordinates(e.right)
    return False


def parse_expression(text, coordinates=(), parameters=None):
    """Parse ``text`` into an :class:`Expression`.

    Identifiers listed in ``coordinates`` become coordinate references.  When
    ``parameters`` is given, any other bare identifier must be one of them;
    when it is ``None`` unknown names are kept as parameter references and
    resolved at evaluation time.
    """
    if not isinstance(text, str):
        raise InputError(f"expression must be a string, got {type(text).__name__}")
    return _Parser(text, tuple(coordinates), parameters).parse()


# -- printer -----------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYMBOL = {"add": " + ", "sub": " - ", "mul": "*", "div": "/", "pow": "^"}


def _format_number(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _prec(e):
    if isinstance(e, Const):
        return 3 if e.value < 0 else 5
    if isinstance(e, Unary):
        return 3 if e.op == "neg" else 5
    if isinstance(e, Binary):
        return _PREC[e.op]
    return 5


def _wrap(e, min_prec):
    s = to_text(e)
    return f"({s})" if _prec(e) < min_prec else s


def to_text(e):
    """Pretty-print with minimal parentheses; ``parse(to_text(e)) == e``."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, (Coord, Param)):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.arg, 3)
        return f"{e.op}({to_text(e.arg)})"
    p = _PREC[e.op]
    if e.op == "pow":
        return _wrap(e.left, 5) + "^" + _wrap(e.right, 3)
    return _wrap(e.left, p) + _SYMBOL[e.op] + _wrap(e.right, p + 1)


# -- evaluation -------------------------------------------------------------------


def _param_value(name, params):
    try:
        return float(params[name])
    except KeyError:
        raise UnknownIdentifier(name) from None


def evaluate(e, point, params=None):
    """Plain float evaluation (used by finite-difference oracles)."""
    params = params or {}
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Coord):
        return float(point[e.index])
    if isinstance(e, Param):
        return _param_value(e.name, params)
    if isinstance(e, Unary):
        x = evaluate(e.arg, point, params)
        if e.op == "neg":
            return -x
        try:
            return float(getattr(math, e.op)(x))
        except (ValueError, OverflowError) as exc:
            raise DomainError(f"{e.op}({x}): {exc}") from None
    a = evaluate(e.left, point, params)
    b = evaluate(e.right, point, params)
    if e.op == "add":
        return a + b
    if e.op == "sub":
        return a - b
    if e.op == "mul":
        return a * b
    if e.op == "div":
        if b == 0:
            raise DomainError("division by zero")
        return a / b
    if b == int(b):
        if a == 0 and b < 0:
            raise DomainError("division by zero")
        return a**b
    if a <= 0:
        raise DomainError("non-integer power of non-positive value")
    return math.exp(b * math.log(a))


def eval_jet(e, point, params=None, order=3):
    """Taylor jet of ``e`` about ``point``, exact through ``order``."""
    params = params or {}
    n = len(point)
    point = [float(x) for x in point]
    return _eval_jet(e, point, params, n, order)


def _eval_jet(e, point, params, n, K):
    if isinstance(e, Const):
        return jets.Jet.constant(e.value, n, K)
    if isinstance(e, Coord):
        if e.index >= n:
            raise InputError(f"coordinate index {e.index} outside chart of dimension {n}")
        return jets.Jet.variable(e.index, point[e.index], n, K)
    if isinstance(e, Param):
        return jets.Jet.constant(_param_value(e.name, params), n, K)
    if isinstance(e, Unary):
        a = _eval_jet(e.arg, point, params, n, K)
        if e.op == "neg":
            return -a
        return jets.jet_func(a, e.op)
    if e.op == "pow":
        base = _eval_jet(e.left, point, params, n, K)
        c = evaluate(e.right, point, params)
        if c == int(c):
            return jets.power(base, c)
        if base.value <= 0:
            raise DomainError("non-integer power of non-positive value")
        return jets.jet_func(jets.jet_func(base, "log") * c, "exp")
    a = _eval_jet(e.left, point, params, n, K)
    b = _eval_jet(e.right, point, params, n, K)
    return jets.jet_arith(a, b, e.op)


def substitute_params(e, params):
    """Replace parameter references by constants."""
    if isinstance(e, Param):
        return Const(_param_value(e.name, params))
    if isinstance(e, Unary):
        return Unary(e.op, substitute_params(e.arg, params))
    if isinstance(e, Binary):
        return Binary(e.op, substitute_params(e.left, params), substitute_params(e.right, params))
    return e


# -- metric charts --------------------------------------------------------------------


@dataclass(frozen=True)
class MetricSpec:
    """A coordinate chart with metric components given as expressions."""

    name: str
    coordinates: tuple
    components: tuple  # n x n tuple of Expressions
    parameters: Mapping[str, float] = field(default_factory=dict)
    sample_box: tuple = ()
    sigma: Expression | None = None
    vector_A: tuple | None = None

    def __post_init__(self):
        n = len(self.coordinates)
        if n < 3:
            raise MetricValidationError(f"dimension must be >= 3, got {n}")
        if len(set(self.coordinates)) != n:
            raise MetricValidationError("coordinate names must be distinct")
        if len(self.components) != n or any(len(row) != n for row in self.components):
            raise MetricValidationError(f"metric must be a {n}x{n} grid")
        for i in range(n):
            for j in range(i + 1, n):
                if self.components[i][j] != self.components[j][i]:
                    raise MetricValidationError(f"metric not symmetric at ({i},{j})")
        if self.sample_box and len(self.sample_box) != n:
            raise MetricValidationError("sample_box needs one interval per coordinate")
        if self.vector_A is not None and len(self.vector_A) != n:
            raise MetricValidationError("vector_A needs one component per coordinate")

    @property
    def dimension(self):
        return len(self.coordinates)

    @classmethod
    def from_strings(
        cls,
        name,
        coordinates,
        metric,
        parameters=None,
        sample_box=None,
        sigma=None,
        vector_A=None,
    ):
        """Build a spec from expression text.

        ``metric`` is either a full n x n grid of strings or a mapping
        ``{(i, j): text}`` listing each independent component once (missing
        entries are zero).
        """
        coordinates = tuple(coordinates)
        parameters = dict(parameters or {})
        n = len(coordinates)

        def p(text):
            return parse_expression(str(text), coordinates, parameters)

        if isinstance(metric, Mapping):
            grid = [[Const(0.0)] * n for _ in range(n)]
            for (i, j), text in metric.items():
                grid[i][j] = grid[j][i] = p(text)
        else:
            if len(metric) != n or any(len(row) != n for row in metric):
                raise MetricValidationError(f"metric must be a {n}x{n} grid")
            grid = [[p(text) for text in row] for row in metric]
        box = tuple(tuple(float(v) for v in iv) for iv in (sample_box or ()))
        return cls(
            name=name,
            coordinates=coordinates,
            components=tuple(tuple(row) for row in grid),
            parameters=parameters,
            sample_box=box,
            sigma=None if sigma is None else p(sigma),
            vector_A=None if vector_A is None else tuple(p(t) for t in vector_A),
        )

    def with_changes(self, **kw):
        values = {
            "name": self.name,
            "coordinates": self.coordinates,
            "components": self.components,
            "parameters": dict(self.parameters),
            "sample_box": self.sample_box,
            "sigma": self.sigma,
            "vector_A": self.vector_A,
        }
        values.update(kw)
        return MetricSpec(**values)

    def parse(self, text):
        return parse_expression(text, self.coordinates, self.parameters)

    def metric_jets(self, point, order):
        """Metric components as a (n, n)-shaped jet."""
        n = self.dimension
        if len(point) != n:
            raise InputError(f"point has {len(point)} coordinates, chart has {n}")
        rows = []
        cache = {}
        for i in range(n):
            row = []
            for j in range(n):
                key = (min(i, j), max(i, j))
                if key not in cache:
                    cache[key] = eval_jet(self.components[i][j], point, self.parameters, order)
                row.append(cache[key])
            rows.append(jets.stack(row))
        return jets.stack(rows)

    def metric_values(self, point):
        n = self.dimension
        g = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                g[i, j] = evaluate(self.components[i][j], point, self.parameters)
        return g

    def vector_jets(self, point, order, exprs=None):
        exprs = self.vector_A if exprs is None else exprs
        return jets.stack([eval_jet(e, point, self.parameters, order) for e in exprs])
