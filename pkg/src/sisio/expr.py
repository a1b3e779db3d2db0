"""Expression language for vector fields in config files.

Grammar (ASCII, usual precedence, ``^`` right-associative and binding
tighter than unary minus)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | 'x'INT | 'k' | FUNC '(' expr ')' | '(' expr ')'

State variables are 1-indexed (``x1`` is the first coordinate). ``k`` is
the time index and is only accepted when ``allow_time=True``; scenario
signals use it, dynamics do not.

Values are evaluated in IEEE double precision with non-finite results
propagated, and derivatives come from forward-mode dual numbers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ExprSyntaxError

FUNCTIONS = ("sin", "cos", "tan", "exp", "tanh", "abs", "sqrt", "sign")
#: functions with kinks or restricted domains; their derivatives are one-sided at the kink
NONSMOOTH = frozenset({"abs", "sqrt", "sign"})


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based


@dataclass(frozen=True)
class Time:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a name from FUNCTIONS
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Time, Unary, Binary]


# --------------------------------------------------------------------------
# dual numbers

class Dual:
    """Value/derivative pair; fields may be floats or numpy arrays."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv=0.0):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    @staticmethod
    def _lift(other):
        return other if isinstance(other, Dual) else Dual(other, 0.0)

    def __add__(self, other):
        o = Dual._lift(other)
        return Dual(self.value + o.value, self.deriv + o.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        o = Dual._lift(other)
        return Dual(self.value - o.value, self.deriv - o.deriv)

    def __rsub__(self, other):
        return Dual._lift(other) - self

    def __neg__(self):
        return Dual(-self.value, -self.deriv)

    def __mul__(self, other):
        o = Dual._lift(other)
        return Dual(self.value * o.value, self.deriv * o.value + self.value * o.deriv)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Dual._lift(other)
        q = self.value / o.value
        return Dual(q, (self.deriv - q * o.deriv) / o.value)

    def __rtruediv__(self, other):
        return Dual._lift(other) / self


def _dual_pow(u: Dual, v: Dual) -> Dual:
    val = np.power(u.value, v.value)
    c = v.value
    # a zero seed direction contributes nothing, even where u^(c-1) blows up
    base_term = np.where((c == 0) | (u.deriv == 0), 0.0, c * np.power(u.value, c - 1) * u.deriv)
    # the log term only exists when the exponent actually varies
    exp_term = np.where(v.deriv == 0, 0.0, val * v.deriv * np.log(np.abs(u.value)))
    return Dual(val, base_term + exp_term)


def _dual_abs(u: Dual) -> Dual:
    # at the kink take the derivative in the seed direction (one-sided)
    s = np.sign(u.value)
    d = np.where(u.value == 0, np.abs(u.deriv), s * u.deriv)
    return Dual(np.abs(u.value), d)


def _dual_func(name: str, u: Dual) -> Dual:
    x, du = u.value, u.deriv
    if name == "sin":
        return Dual(np.sin(x), np.cos(x) * du)
    if name == "cos":
        return Dual(np.cos(x), -np.sin(x) * du)
    if name == "tan":
        c = np.cos(x)
        return Dual(np.tan(x), du / (c * c))
    if name == "exp":
        e = np.exp(x)
        return Dual(e, e * du)
    if name == "tanh":
        t = np.tanh(x)
        return Dual(t, (1.0 - t * t) * du)
    if name == "abs":
        return _dual_abs(u)
    if name == "sqrt":
        r = np.sqrt(x)
        return Dual(r, np.where(du == 0, 0.0, du / (2.0 * r)))
    if name == "sign":
        return Dual(np.sign(x), 0.0 * du)
    raise KeyError(name)


_FLOAT_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "sign": np.sign,
}


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        m = _TOKEN.match(stripped, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(stripped[pos:]) - len(stripped[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {stripped[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(stripped)))
    return tokens


class _Parser:
    def __init__(self, text: str, n_vars: int | None, allow_time: bool):
        self.tokens = _tokenize(text)
        self.i = 0
        self.n_vars = n_vars
        self.allow_time = allow_time

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value or kind not in ("op",):
            raise ExprSyntaxError(f"expected {value!r}, found {v or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        node = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {v!r}", pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        kind, v, _ = self.peek()
        if kind == "op" and v == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and v == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, v, pos = self.take()
        if kind == "num":
            return Const(float(v))
        if kind == "op" and v == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "id":
            if v in FUNCTIONS:
                return self.call(v, pos)
            m = re.fullmatch(r"x([1-9]\d*)", v)
            if m:
                idx = int(m.group(1)) - 1
                if self.n_vars is not None and idx >= self.n_vars:
                    raise ExprSyntaxError(
                        f"unknown identifier {v!r}: state dimension is {self.n_vars}", pos
                    )
                return Var(idx)
            if v == "k" and self.allow_time:
                return Time()
            raise ExprSyntaxError(f"unknown identifier {v!r}", pos)
        raise ExprSyntaxError(f"unexpected token {v or 'end of input'!r}", pos)

    def call(self, name: str, pos: int) -> Expr:
        kind, v, p = self.peek()
        if not (kind == "op" and v == "("):
            raise ExprSyntaxError(f"function {name!r} must be called with parentheses", p)
        self.take()
        args = [self.expr()]
        while self.peek()[0] == "op" and self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if len(args) != 1:
            raise ExprSyntaxError(f"{name} takes 1 argument, got {len(args)}", pos)
        return Unary(name, args[0])


def parse(text: str, n_vars: int | None = None, allow_time: bool = False) -> Expr:
    """Parse ``text`` into an immutable AST.

    ``n_vars`` bounds the admissible ``x<i>`` references; ``None`` accepts any.
    """
    return _Parser(text, n_vars, allow_time).parse()


# --------------------------------------------------------------------------
# evaluation

def _walk(node: Expr, xs, t, const_lift):
    if isinstance(node, Const):
        return const_lift(node.value)
    if isinstance(node, Var):
        return xs[node.index]
    if isinstance(node, Time):
        return const_lift(t)
    if isinstance(node, Unary):
        a = _walk(node.arg, xs, t, const_lift)
        if node.op == "neg":
            return -a
        if isinstance(a, Dual):
            return _dual_func(node.op, a)
        return _FLOAT_FUNCS[node.op](a)
    if isinstance(node, Binary):
        a = _walk(node.left, xs, t, const_lift)
        b = _walk(node.right, xs, t, const_lift)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        if isinstance(a, Dual) or isinstance(b, Dual):
            return _dual_pow(Dual._lift(a), Dual._lift(b))
        return np.power(a, b)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Expr, x=(), k: float = 0.0) -> float:
    """Evaluate at state ``x`` (and time ``k`` for scenario signals)."""
    xs = [np.float64(v) for v in np.atleast_1d(np.asarray(x, dtype=float))]
    with np.errstate(all="ignore"):
        return float(_walk(node, xs, np.float64(k), np.float64))


def evaluate_batch(node: Expr, X) -> np.ndarray:
    """Evaluate at many points; ``X`` has shape ``(n, N)``; returns shape ``(N,)``."""
    X = np.asarray(X, dtype=float)
    with np.errstate(all="ignore"):
        out = _walk(node, list(X), 0.0, np.float64)
    return np.broadcast_to(np.asarray(out, dtype=float), X.shape[1:]).copy()


def partial(node: Expr, x, j: int) -> float:
    """Forward-mode derivative of ``node`` w.r.t. coordinate ``j`` (0-based) at ``x``."""
    xs = [Dual(np.float64(v), np.float64(1.0 if i == j else 0.0)) for i, v in enumerate(np.atleast_1d(np.asarray(x, dtype=float)))]
    with np.errstate(all="ignore"):
        out = _walk(node, xs, 0.0, lambda c: Dual(np.float64(c), np.float64(0.0)))
    return float(out.deriv)


def partial_batch(node: Expr, X, j: int) -> np.ndarray:
    """Vectorized :func:`partial` over points stored column-wise in ``X``."""
    X = np.asarray(X, dtype=float)
    shape = X.shape[1:]
    xs = [Dual(X[i], np.full(shape, 1.0 if i == j else 0.0)) for i in range(X.shape[0])]
    with np.errstate(all="ignore"):
        out = _walk(node, xs, 0.0, lambda c: Dual(np.float64(c), np.float64(0.0)))
    return np.broadcast_to(np.asarray(out.deriv, dtype=float), shape).copy()


def evaluate_vector(nodes: Sequence[Expr], x, k: float = 0.0) -> np.ndarray:
    return np.array([evaluate(nd, x, k) for nd in nodes], dtype=float)


def _py_source(node: Expr) -> str:
    if isinstance(node, Const):
        return f"_F({node.value!r})"
    if isinstance(node, Var):
        return f"x[{node.index}]"
    if isinstance(node, Time):
        return "k"
    if isinstance(node, Unary):
        a = _py_source(node.arg)
        return f"(-{a})" if node.op == "neg" else f"_fn_{node.op}({a})"
    a, b = _py_source(node.left), _py_source(node.right)
    if node.op == "^":
        return f"_pow({a}, {b})"
    return f"({a} {node.op} {b})"


def compile_vector(nodes: Sequence[Expr]):
    """Compile expressions into one callable ``fn(x, k=0.0) -> ndarray``.

    Performs the same numpy scalar operations in the same order as
    :func:`evaluate`, so results agree bit for bit.
    """
    body = ", ".join(_py_source(nd) for nd in nodes)
    src = (
        "def _compiled(x, k=0.0):\n"
        "    x = [_F(v) for v in x]\n"
        "    k = _F(k)\n"
        "    with _errstate(all='ignore'):\n"
        f"        return _array(({body}{',' if nodes else ''}), dtype=float)\n"
    )
    env = {f"_fn_{name}": fn for name, fn in _FLOAT_FUNCS.items()}
    env.update(_F=np.float64, _pow=np.power, _errstate=np.errstate, _array=np.array)
    exec(compile(src, "<sisio-expr>", "exec"), env)
    return env["_compiled"]


# --------------------------------------------------------------------------
# printing

def to_string(node: Expr) -> str:
    """Fully parenthesized text that parses back to an equivalent tree."""
    if isinstance(node, Const):
        v = node.value
        if math.isinf(v) or math.isnan(v):
            raise ValueError(f"cannot print non-finite constant {v}")
        return repr(v) if v >= 0 else f"(-{repr(-v)})"
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Time):
        return "k"
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{to_string(node.arg)})"
        return f"{node.op}({to_string(node.arg)})"
    return f"({to_string(node.left)} {node.op} {to_string(node.right)})"


def max_var_index(node: Expr) -> int:
    """Largest 0-based variable index referenced, or -1."""
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Unary):
        return max_var_index(node.arg)
    if isinstance(node, Binary):
        return max(max_var_index(node.left), max_var_index(node.right))
    return -1


def uses_nonsmooth(node: Expr) -> bool:
    if isinstance(node, Unary):
        return node.op in NONSMOOTH or uses_nonsmooth(node.arg)
    if isinstance(node, Binary):
        return uses_nonsmooth(node.left) or uses_nonsmooth(node.right)
    return False
