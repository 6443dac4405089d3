"""Scalar formulas over chart coordinates with exact second-order derivatives.

Formulas are parsed by a small recursive-descent parser into an immutable
AST.  Evaluation works on scalars or numpy arrays of points; derivatives
come from second-order forward-mode automatic differentiation with truncated
Taylor jets ``(value, gradient, hessian)``.

Grammar (``^`` binds tighter than unary minus, which binds tighter than
``*`` and ``/``; ``^`` is right-associative)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Recognised functions: sin, cos, sinh, cosh, tanh, exp, log, sqrt, arcsinh.
Named constants ``pi`` and ``e`` are accepted; anything else must be a
declared variable or a parameter substituted at parse time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Const",
    "Var",
    "BinOp",
    "Neg",
    "Call",
    "Expression",
    "Jet2",
    "ExpressionError",
    "ParseError",
    "DomainError",
    "parse",
    "eval_jet2",
    "to_text",
    "FUNCTIONS",
]


class ExpressionError(ValueError):
    """Base class for parse and evaluation failures."""


class ParseError(ExpressionError):
    def __init__(self, message: str, position: int, text: str):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}: {text!r}")


class DomainError(ExpressionError):
    """Raised when a sub-expression leaves its domain of definition."""

    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message} in {subexpression!r}")


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Call]

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "arcsinh")
CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------------------
# Parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ParseError("unexpected character", bad, text)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "op" and value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str], params: Mapping[str, float]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = set(variables)
        self.params = dict(params)

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, tv, pos = self.advance()
        if tv != value or kind != "op":
            found = tv if kind != "end" else "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", pos, self.text)

    def parse(self) -> Node:
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", pos, self.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and value == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        kind, value, pos = self.advance()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", pos, self.text)
                self.advance()
                arg = self.expr()
                if self.peek()[1] == ",":
                    raise ParseError(
                        f"function {value!r} takes exactly one argument",
                        self.peek()[2], self.text,
                    )
                self.expect(")")
                return Call(value, arg)
            if value in FUNCTIONS:
                raise ParseError(f"function {value!r} requires an argument", self.peek()[2], self.text)
            if value in self.variables:
                return Var(value)
            if value in self.params:
                return Const(float(self.params[value]))
            if value in CONSTANTS:
                return Const(CONSTANTS[value])
            raise ParseError(f"unknown identifier {value!r}", pos, self.text)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = value if kind != "end" else "end of input"
        raise ParseError(f"unexpected token {found!r}", pos, self.text)


# ---------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_const(v: float) -> str:
    text = repr(float(v))
    if text in ("inf", "-inf", "nan"):
        raise ExpressionError(f"cannot print non-finite constant {text}")
    return text


def to_text(node: Node) -> str:
    """Render an AST as fully re-parseable text."""
    if isinstance(node, Const):
        if _negative_const(node):
            # printed exactly as the parser will read it back: Neg(Const)
            return to_text(Neg(Const(-node.value)))
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if isinstance(node.arg, BinOp) and _PREC[node.arg.op] < _PREC["^"]:
            inner = f"({inner})"
        return f"-{inner}"
    left = to_text(node.left)
    right = to_text(node.right)
    p = _PREC[node.op]
    if _needs_parens(node.left, p, right_side=False, op=node.op):
        left = f"({left})"
    if _needs_parens(node.right, p, right_side=True, op=node.op):
        right = f"({right})"
    return f"{left}{node.op}{right}"


def _negative_const(node: Node) -> bool:
    return isinstance(node, Const) and math.copysign(1.0, node.value) < 0


def _needs_parens(child: Node, parent_prec: int, right_side: bool, op: str) -> bool:
    if isinstance(child, Neg) or _negative_const(child):
        return parent_prec >= _PREC["neg"] or right_side
    if not isinstance(child, BinOp):
        return False
    cp = _PREC[child.op]
    if cp < parent_prec:
        return True
    if cp == parent_prec:
        if op == "^":
            return not right_side
        return right_side
    return False


# ---------------------------------------------------------------------------
# Evaluation

def _as_finite(x, node: Node, what: str = "non-finite result"):
    if not np.all(np.isfinite(x)):
        raise DomainError(what, to_text(node))
    return x


def _check(mask, node: Node, what: str) -> None:
    if np.any(mask):
        raise DomainError(what, to_text(node))


def _unary_value(func: str, a, node: Node):
    if func == "log":
        _check(a <= 0, node, "log of nonpositive value")
        return np.log(a)
    if func == "sqrt":
        _check(a < 0, node, "sqrt of negative value")
        return np.sqrt(a)
    with np.errstate(over="ignore", invalid="ignore"):
        if func == "arcsinh":
            # log(x + sqrt(x^2+1)), written to stay accurate for negative x
            s = np.sign(a)
            r = np.abs(a)
            return s * np.log(r + np.sqrt(r * r + 1.0))
        return getattr(np, func)(a)


def _unary_derivs(func: str, a, node: Node):
    """First and second derivative of the primitive at ``a``."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if func == "sin":
            return np.cos(a), -np.sin(a)
        if func == "cos":
            return -np.sin(a), -np.cos(a)
        if func == "sinh":
            return np.cosh(a), np.sinh(a)
        if func == "cosh":
            return np.sinh(a), np.cosh(a)
        if func == "tanh":
            t = np.tanh(a)
            d1 = 1.0 - t * t
            return d1, -2.0 * t * d1
        if func == "exp":
            ea = np.exp(a)
            return ea, ea
        if func == "log":
            return 1.0 / a, -1.0 / (a * a)
        if func == "sqrt":
            _check(a <= 0, node, "sqrt not differentiable at nonpositive value")
            s = np.sqrt(a)
            return 0.5 / s, -0.25 / (s * a)
        if func == "arcsinh":
            r = 1.0 / np.sqrt(a * a + 1.0)
            return r, -a * r ** 3
    raise ExpressionError(f"unknown function {func!r}")


def _eval_value(node: Node, env: Mapping[str, np.ndarray]):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval_value(node.arg, env)
    if isinstance(node, Call):
        a = _eval_value(node.arg, env)
        return _as_finite(_unary_value(node.func, a, node), node)
    a = _eval_value(node.left, env)
    b = _eval_value(node.right, env)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            _check(np.asarray(b) == 0, node, "division by zero")
            out = a / b
        else:
            out = _power_value(a, b, node)
    return _as_finite(out, node)


def _power_value(a, b, node: Node):
    if isinstance(node.right, Const):
        c = node.right.value
        if float(c).is_integer():
            _check((np.asarray(a) == 0) & (c < 0), node, "zero raised to negative power")
            return np.power(a, c)
        _check(np.asarray(a) < 0, node, "negative base with fractional exponent")
        _check((np.asarray(a) == 0) & (c < 0), node, "zero raised to negative power")
        return np.power(a, c)
    _check(np.asarray(a) <= 0, node, "nonpositive base with variable exponent")
    return np.power(a, b)


@dataclass(frozen=True)
class Jet2:
    """Truncated second-order Taylor jet.

    For a batch of ``P`` points ``value`` has shape ``(P,)``, ``gradient``
    ``(P, n)`` and ``hessian`` ``(P, n, n)``; a single point drops the leading
    axis.
    """

    value: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _sym_outer(a, b):
    # a b^T + b a^T, exactly symmetric since float + and * commute
    return _outer(a, b) + _outer(b, a)


def _bcast(v):
    return np.asarray(v)[..., None]


def _bcast2(v):
    return np.asarray(v)[..., None, None]


def _chain(f0, f1, f2, jet: Jet2) -> Jet2:
    g = _bcast(f1) * jet.gradient
    h = _bcast2(f1) * jet.hessian + _bcast2(f2) * _outer(jet.gradient, jet.gradient)
    return Jet2(f0, g, h)


def _eval_jet(node: Node, env: Mapping[str, Jet2], zero: Jet2) -> Jet2:
    if isinstance(node, Const):
        return Jet2(zero.value + node.value, zero.gradient, zero.hessian)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        j = _eval_jet(node.arg, env, zero)
        return Jet2(-j.value, -j.gradient, -j.hessian)
    if isinstance(node, Call):
        j = _eval_jet(node.arg, env, zero)
        f0 = _as_finite(_unary_value(node.func, j.value, node), node)
        f1, f2 = _unary_derivs(node.func, j.value, node)
        out = _chain(f0, f1, f2, j)
        _as_finite(out.gradient, node, "non-finite derivative")
        _as_finite(out.hessian, node, "non-finite derivative")
        return out
    a = _eval_jet(node.left, env, zero)
    if node.op == "^" and isinstance(node.right, Const):
        return _power_const_jet(a, node.right.value, node)
    b = _eval_jet(node.right, env, zero)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if node.op == "+":
            out = Jet2(a.value + b.value, a.gradient + b.gradient, a.hessian + b.hessian)
        elif node.op == "-":
            out = Jet2(a.value - b.value, a.gradient - b.gradient, a.hessian - b.hessian)
        elif node.op == "*":
            out = _mul(a, b)
        elif node.op == "/":
            _check(np.asarray(b.value) == 0, node, "division by zero")
            bv = b.value
            inv = _chain(1.0 / bv, -1.0 / (bv * bv), 2.0 / (bv * bv * bv), b)
            out = _mul(a, inv)
        else:
            _check(np.asarray(a.value) <= 0, node, "nonpositive base with variable exponent")
            la = _chain(np.log(a.value), 1.0 / a.value, -1.0 / (a.value * a.value), a)
            prod = _mul(b, la)
            ev = np.exp(prod.value)
            out = _chain(np.power(a.value, b.value), ev, ev, prod)
    _as_finite(out.value, node)
    _as_finite(out.gradient, node, "non-finite derivative")
    _as_finite(out.hessian, node, "non-finite derivative")
    return out


def _mul(a: Jet2, b: Jet2) -> Jet2:
    av, bv = np.asarray(a.value), np.asarray(b.value)
    g = av[..., None] * b.gradient + bv[..., None] * a.gradient
    h = (_bcast2(av) * b.hessian + _bcast2(bv) * a.hessian) + _sym_outer(a.gradient, b.gradient)
    return Jet2(av * bv, g, h)


def _power_const_jet(a: Jet2, c: float, node: Node) -> Jet2:
    x = np.asarray(a.value)
    if c == 0.0:
        return Jet2(np.ones_like(x, dtype=float), 0.0 * a.gradient, 0.0 * a.hessian)
    if not float(c).is_integer():
        _check(x < 0, node, "negative base with fractional exponent")
    if c < 1:
        _check(x == 0, node, "power not differentiable at zero")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        f0 = np.power(x, c)
        f1 = c * np.power(x, c - 1.0)
        f2 = c * (c - 1.0) * np.power(x, c - 2.0) if c != 1.0 else np.zeros_like(x, dtype=float)
    if c == 2.0:
        f2 = np.full_like(x, 2.0, dtype=float)
    out = _chain(f0, f1, f2, a)
    _as_finite(out.value, node)
    _as_finite(out.gradient, node, "non-finite derivative")
    _as_finite(out.hessian, node, "non-finite derivative")
    return out


# ---------------------------------------------------------------------------
# Public wrapper

@dataclass(frozen=True)
class Expression:
    """A parsed formula bound to an ordered list of coordinate names."""

    ast: Node
    variables: tuple[str, ...]

    @property
    def text(self) -> str:
        return to_text(self.ast)

    def __str__(self) -> str:
        return self.text

    def free_variables(self) -> tuple[str, ...]:
        found = set()
        stack = [self.ast]
        while stack:
            n = stack.pop()
            if isinstance(n, Var):
                found.add(n.name)
            elif isinstance(n, (Neg, Call)):
                stack.append(n.arg)
            elif isinstance(n, BinOp):
                stack.extend((n.left, n.right))
        return tuple(v for v in self.variables if v in found)

    def is_constant(self) -> bool:
        return not self.free_variables()

    def rebind(self, variables: Sequence[str]) -> "Expression":
        """Same formula over a larger (or reordered) coordinate list."""
        missing = set(self.free_variables()) - set(variables)
        if missing:
            raise ExpressionError(f"variables {sorted(missing)} not in {list(variables)}")
        return Expression(self.ast, tuple(variables))

    def _points(self, point) -> tuple[np.ndarray, bool]:
        p = np.asarray(point, dtype=float)
        n = len(self.variables)
        if n == 1 and p.ndim <= 1:
            # scalar, or a flat array read as a batch of scalar points
            single = p.size == 1 and p.ndim <= 1
            return p.reshape(-1, 1)[: 1 if single else None], single
        if p.shape[-1] != n:
            raise ExpressionError(f"point has {p.shape[-1]} coordinates, expected {n}")
        return p, p.ndim == 1

    def __call__(self, point) -> np.ndarray | float:
        """Value at one point (shape ``(n,)``) or a batch (shape ``(P, n)``).

        For one-variable expressions a flat array is read as a batch.
        """
        p, single = self._points(point)
        env = {name: p[..., i] for i, name in enumerate(self.variables)}
        out = np.asarray(_eval_value(self.ast, env), dtype=float)
        out = np.broadcast_to(out, p.shape[:-1]).copy()
        if single:
            return float(out.reshape(-1)[0])
        return out

    def jet(self, point) -> Jet2:
        return eval_jet2(self, point)


def parse(text: str, variables: Sequence[str], params: Mapping[str, float] | None = None) -> Expression:
    """Parse ``text`` as a formula in ``variables``.

    ``params`` are substituted as numeric literals, so ``K`` and ``N`` never
    survive as runtime symbols.
    """
    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise ExpressionError(f"duplicate variable names in {variables}")
    params = dict(params or {})
    clash = set(params) & set(variables)
    if clash:
        raise ExpressionError(f"names {sorted(clash)} are both variables and parameters")
    return Expression(_Parser(text, variables, params).parse(), variables)


def eval_jet2(e: Expression, point) -> Jet2:
    """Value, gradient and Hessian of ``e`` at ``point`` (or a batch of points)."""
    p, single = e._points(point)
    n = len(e.variables)
    batch = p.shape[:-1]
    eye = np.eye(n)
    zero = Jet2(np.zeros(batch), np.zeros(batch + (n,)), np.zeros(batch + (n, n)))
    env = {
        name: Jet2(p[..., i], np.broadcast_to(eye[i], batch + (n,)), zero.hessian)
        for i, name in enumerate(e.variables)
    }
    j = _eval_jet(e.ast, env, zero)
    value = np.broadcast_to(np.asarray(j.value, dtype=float), batch)
    grad = np.broadcast_to(j.gradient, batch + (n,))
    hess = np.broadcast_to(j.hessian, batch + (n, n))
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    if single:
        return Jet2(float(value.reshape(-1)[0]), grad.reshape(n).copy(), hess.reshape(n, n).copy())
    return Jet2(value.copy(), grad.copy(), hess.copy())
