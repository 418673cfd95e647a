"""Potential expressions: parsing, exact symbolic derivatives, evaluation.

The grammar is plain infix arithmetic over a single free variable ``x``:

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' exponent)?          # right-associative
    atom   := NUMBER | 'x' | NAME '(' expr ')' | '(' expr ')'

Exponents are rational literals (``2``, ``-3``, ``(1/2)``, ``0.5``); any
other exponent expression g in ``f^g`` is rewritten as ``exp(g*log(f))``.
Allowed calls: exp, log, sin, cos, sqrt, tanh (``sqrt(u)`` is stored as
``u^(1/2)``).  There is no implicit multiplication.

Derivatives up to fourth order are taken symbolically on the AST with
light simplification (constant folding, 0/1 identities, flattening), so
V'''' is exact rather than a noisy finite difference.  All evaluation is
pure; ``Potential`` is immutable and safe to share between threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import EvalDomainError, ParseError

__all__ = ["Potential", "parse_potential", "parse_expression", "eval_derivs",
           "to_source"]

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "tanh")


# --------------------------------------------------------------------------
# AST nodes

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Add:
    terms: tuple["Expr", ...]


@dataclass(frozen=True)
class Mul:
    factors: tuple["Expr", ...]


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: Fraction


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Const, Var, Add, Mul, Pow, Neg, Call]

_X = Var()
_ZERO = Const(0.0)
_ONE = Const(1.0)


# --------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            at = len(text) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", at)
        if m.lastgroup == "number":
            tokens.append(("number", m.group("number"), m.start("number")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append((m.group("op"), m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


# --------------------------------------------------------------------------
# Parser (recursive descent)

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(f"expected {what}", tok[2], (what,))
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(
                f"unexpected {tok[1]!r}", tok[2], ("operator", "end of input")
            )
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.term()
            node = Add((node, rhs if op == "+" else Neg(rhs)))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            rhs = self.unary()
            node = Mul((node, rhs if op == "*" else Pow(rhs, Fraction(-1))))
        return node

    def unary(self) -> Expr:
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] != "^":
            return base
        self.advance()
        if self.peek()[0] == "end":
            raise ParseError("missing exponent", self.peek()[2], ("exponent",))
        mark = self.i
        rational = self._try_rational_exponent()
        if rational is not None:
            return Pow(base, rational)
        self.i = mark
        exponent = self.unary()
        # non-rational exponent: total rewrite f^g = exp(g*log(f))
        return Call("exp", Mul((exponent, Call("log", base))))

    def _try_rational_exponent(self) -> Fraction | None:
        """Accept NUMBER, -NUMBER, or a parenthesized ratio of them."""
        sign = 1
        if self.peek()[0] == "-":
            self.advance()
            sign = -1
        tok = self.peek()
        if tok[0] == "number":
            self.advance()
            value = sign * _literal_fraction(tok[1])
        elif tok[0] == "(":
            self.advance()
            inner = self._try_rational_exponent()
            if inner is None or self.peek()[0] != ")":
                return None
            self.advance()
            value = sign * inner
        else:
            return None
        if self.peek()[0] == "/":
            self.advance()
            den = self._try_rational_exponent()
            if den is None or den == 0:
                return None
            value = value / den
        # a rational exponent must not be followed by more arithmetic at
        # this precedence level ('^' chains remain right-associative)
        if self.peek()[0] == "^":
            return None
        return value

    def atom(self) -> Expr:
        tok = self.peek()
        if tok[0] == "number":
            self.advance()
            return Const(float(tok[1]))
        if tok[0] == "name":
            self.advance()
            if tok[1] == "x":
                return _X
            if tok[1] in FUNCTIONS:
                self.expect("(", "'('")
                arg = self.expr()
                self.expect(")", "')'")
                if tok[1] == "sqrt":
                    return Pow(arg, Fraction(1, 2))
                return Call(tok[1], arg)
            if self.peek()[0] == "(":
                raise ParseError(f"unsupported function {tok[1]!r}", tok[2],
                                 FUNCTIONS)
            raise ParseError(f"unknown identifier {tok[1]!r}", tok[2],
                             ("x", "number", "function"))
        if tok[0] == "(":
            self.advance()
            node = self.expr()
            self.expect(")", "')'")
            return node
        raise ParseError("expected a value", tok[2],
                         ("number", "x", "function", "'('"))


def _literal_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError:
        # float literal such as 2.5e-1
        return Fraction(float(text))


# --------------------------------------------------------------------------
# Simplification

def _flatten(cls, nodes):
    out = []
    for node in nodes:
        if isinstance(node, cls):
            out.extend(node.terms if cls is Add else node.factors)
        else:
            out.append(node)
    return out


def simplify(node: Expr) -> Expr:
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        arg = simplify(node.arg)
        if isinstance(arg, Const):
            return Const(-arg.value)
        if isinstance(arg, Neg):
            return arg.arg
        return Neg(arg)
    if isinstance(node, Add):
        terms = _flatten(Add, [simplify(t) for t in node.terms])
        const = sum(t.value for t in terms if isinstance(t, Const))
        rest = [t for t in terms if not isinstance(t, Const)]
        if const != 0.0 or not rest:
            rest.append(Const(const))
        if len(rest) == 1:
            return rest[0]
        return Add(tuple(rest))
    if isinstance(node, Mul):
        factors = _flatten(Mul, [simplify(f) for f in node.factors])
        const = 1.0
        rest = []
        for f in factors:
            if isinstance(f, Const):
                const *= f.value
            else:
                rest.append(f)
        if const == 0.0:
            return _ZERO
        if const != 1.0 or not rest:
            rest.insert(0, Const(const))
        if len(rest) == 1:
            return rest[0]
        return Mul(tuple(rest))
    if isinstance(node, Pow):
        base = simplify(node.base)
        if node.exponent == 0:
            return _ONE
        if node.exponent == 1:
            return base
        if isinstance(base, Const):
            folded = _safe_const_pow(base.value, node.exponent)
            if folded is not None:
                return Const(folded)
        if isinstance(base, Pow):
            return Pow(base.base, base.exponent * node.exponent)
        return Pow(base, node.exponent)
    if isinstance(node, Call):
        arg = simplify(node.arg)
        if isinstance(arg, Const):
            try:
                return Const(getattr(math, node.fn)(arg.value))
            except ValueError:
                pass  # leave the domain violation to evaluation time
        return Call(node.fn, arg)
    raise TypeError(f"unknown node {node!r}")


def _safe_const_pow(base: float, exponent: Fraction) -> float | None:
    try:
        if exponent.denominator == 1:
            if base == 0.0 and exponent < 0:
                return None
            return float(base ** int(exponent))
        if base < 0.0 or (base == 0.0 and exponent < 0):
            return None
        return float(base ** float(exponent))
    except OverflowError:
        return None


# --------------------------------------------------------------------------
# Differentiation

def differentiate(node: Expr) -> Expr:
    return simplify(_d(node))


def _d(node: Expr) -> Expr:
    if isinstance(node, Const):
        return _ZERO
    if isinstance(node, Var):
        return _ONE
    if isinstance(node, Neg):
        return Neg(_d(node.arg))
    if isinstance(node, Add):
        return Add(tuple(_d(t) for t in node.terms))
    if isinstance(node, Mul):
        terms = []
        factors = node.factors
        for i in range(len(factors)):
            terms.append(Mul(tuple(
                _d(f) if j == i else f for j, f in enumerate(factors)
            )))
        return Add(tuple(terms))
    if isinstance(node, Pow):
        r = node.exponent
        return Mul((
            Const(float(r)),
            Pow(node.base, r - 1),
            _d(node.base),
        ))
    if isinstance(node, Call):
        u, du = node.arg, _d(node.arg)
        if node.fn == "exp":
            outer = Call("exp", u)
        elif node.fn == "log":
            outer = Pow(u, Fraction(-1))
        elif node.fn == "sin":
            outer = Call("cos", u)
        elif node.fn == "cos":
            outer = Neg(Call("sin", u))
        elif node.fn == "tanh":
            outer = Add((_ONE, Neg(Pow(Call("tanh", u), Fraction(2)))))
        else:
            raise ValueError(f"no derivative rule for {node.fn}")
        return Mul((outer, du))
    raise TypeError(f"unknown node {node!r}")


# --------------------------------------------------------------------------
# Evaluation

def evaluate(node: Expr, x):
    """Evaluate at a float or ndarray; raises EvalDomainError outside domains."""
    if isinstance(x, np.ndarray):
        return _eval_array(node, x)
    return _eval_scalar(node, float(x))


def _eval_scalar(node: Expr, x: float) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval_scalar(node.arg, x)
    if isinstance(node, Add):
        return sum(_eval_scalar(t, x) for t in node.terms)
    if isinstance(node, Mul):
        total = 1.0
        for f in node.factors:
            total *= _eval_scalar(f, x)
        return total
    if isinstance(node, Pow):
        base = _eval_scalar(node.base, x)
        r = node.exponent
        if r.denominator == 1:
            if r < 0 and base == 0.0:
                raise EvalDomainError("division by zero (negative power)")
            return base ** int(r)
        if base < 0.0:
            raise EvalDomainError(f"fractional power {r} of a negative value")
        if r < 0 and base == 0.0:
            raise EvalDomainError("negative fractional power of zero")
        return base ** float(r)
    if isinstance(node, Call):
        arg = _eval_scalar(node.arg, x)
        if node.fn == "log":
            if arg <= 0.0:
                raise EvalDomainError("log of a non-positive value")
            return math.log(arg)
        try:
            return getattr(math, node.fn)(arg)
        except OverflowError:
            raise EvalDomainError(f"{node.fn} overflow") from None
    raise TypeError(f"unknown node {node!r}")


def _eval_array(node: Expr, x: np.ndarray):
    if isinstance(node, Const):
        return np.full(x.shape, node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval_array(node.arg, x)
    if isinstance(node, Add):
        total = _eval_array(node.terms[0], x)
        for t in node.terms[1:]:
            total = total + _eval_array(t, x)
        return total
    if isinstance(node, Mul):
        total = _eval_array(node.factors[0], x)
        for f in node.factors[1:]:
            total = total * _eval_array(f, x)
        return total
    if isinstance(node, Pow):
        base = _eval_array(node.base, x)
        r = node.exponent
        if r.denominator == 1:
            if r < 0 and np.any(base == 0.0):
                raise EvalDomainError("division by zero (negative power)")
            return base ** int(r)
        if np.any(base < 0.0):
            raise EvalDomainError(f"fractional power {r} of a negative value")
        if r < 0 and np.any(base == 0.0):
            raise EvalDomainError("negative fractional power of zero")
        return base ** float(r)
    if isinstance(node, Call):
        arg = _eval_array(node.arg, x)
        if node.fn == "log":
            if np.any(arg <= 0.0):
                raise EvalDomainError("log of a non-positive value")
            return np.log(arg)
        if node.fn == "exp":
            with np.errstate(over="raise"):
                try:
                    return np.exp(arg)
                except FloatingPointError:
                    raise EvalDomainError("exp overflow") from None
        return getattr(np, node.fn)(arg)
    raise TypeError(f"unknown node {node!r}")


# --------------------------------------------------------------------------
# Printing

_PREC = {"add": 1, "mul": 2, "neg": 1.5, "pow": 3, "atom": 9}


def to_source(node: Expr) -> str:
    """Canonical text form; parsing it back gives an equivalent tree."""
    return _print(node, 0)


def _print(node: Expr, parent_prec: float) -> str:
    if isinstance(node, Const):
        text = _fmt_float(node.value)
        prec = _PREC["atom"] if node.value >= 0 else _PREC["neg"]
        return _wrap(text, prec, parent_prec)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return _wrap("-" + _print(node.arg, _PREC["neg"]), _PREC["neg"], parent_prec)
    if isinstance(node, Add):
        parts = [_print(node.terms[0], _PREC["add"])]
        for t in node.terms[1:]:
            if isinstance(t, Neg):
                parts.append(" - " + _print(t.arg, _PREC["add"] + 0.5))
            else:
                parts.append(" + " + _print(t, _PREC["add"] + 0.5))
        return _wrap("".join(parts), _PREC["add"], parent_prec)
    if isinstance(node, Mul):
        parts = [_print(f, _PREC["mul"] + 0.5) for f in node.factors]
        return _wrap("*".join(parts), _PREC["mul"], parent_prec)
    if isinstance(node, Pow):
        r = node.exponent
        if r.denominator == 1 and r >= 0:
            etext = str(int(r))
        else:
            etext = f"({r.numerator}/{r.denominator})"
        body = _print(node.base, _PREC["pow"] + 0.5) + "^" + etext
        return _wrap(body, _PREC["pow"], parent_prec)
    if isinstance(node, Call):
        return f"{node.fn}({_print(node.arg, 0)})"
    raise TypeError(f"unknown node {node!r}")


def _wrap(text: str, prec: float, parent_prec: float) -> str:
    return f"({text})" if prec < parent_prec else text


def _fmt_float(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


# --------------------------------------------------------------------------
# Public surface

@dataclass(frozen=True)
class Potential:
    """A parsed potential with exact symbolic derivatives up to order 4."""

    source: str
    ast: Expr
    d1: Expr
    d2: Expr
    d3: Expr
    d4: Expr
    well_hint: tuple[float, float] | None = None

    def value(self, x):
        return evaluate(self.ast, x)

    def deriv(self, order: int, x):
        """Evaluate the order-th derivative (order in 0..4)."""
        node = (self.ast, self.d1, self.d2, self.d3, self.d4)[order]
        return evaluate(node, x)

    def __call__(self, x):
        return evaluate(self.ast, x)


def parse_expression(text: str) -> Expr:
    """Parse to a simplified AST without precomputing derivatives."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, ("expression",))
    return simplify(_Parser(text).parse())


def parse_potential(text: str,
                    well_hint: tuple[float, float] | None = None) -> Potential:
    """Parse an expression in ``x`` and precompute d1..d4 symbolically."""
    ast = parse_expression(text)
    d1 = differentiate(ast)
    d2 = differentiate(d1)
    d3 = differentiate(d2)
    d4 = differentiate(d3)
    return Potential(text, ast, d1, d2, d3, d4, well_hint)


def eval_derivs(p: Potential, x: float) -> tuple[float, float, float, float, float]:
    """(V, V', V'', V''', V'''') at a point; all five must come out finite."""
    values = tuple(float(p.deriv(k, x)) for k in range(5))
    if not all(math.isfinite(v) for v in values):
        raise EvalDomainError(f"non-finite derivative value at x={x}")
    return values
