"""Small arithmetic expression language over the variables ``t`` and ``x``.

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | 't' | 'x' | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Expressions evaluate on numpy arrays and can be differentiated symbolically,
which is what the curvature code relies on.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvaluationError, ExprSyntaxError, UnknownFunction

VARIABLES = ("t", "x")
FUNCTIONS = {
    "sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1,
    "min": None, "max": None,
}

# binding strength used by the printer
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------- tokenizer

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            col = pos + 1
            while col - 1 < len(text) and text[col - 1].isspace():
                col += 1
            raise ExprSyntaxError(f"unexpected character {text[col - 1]!r}", col)
        kind = m.lastgroup
        start = m.start(kind) + 1
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownFunction(val, pos)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[val]
                if arity is not None and len(args) != arity:
                    raise ExprSyntaxError(f"{val} takes {arity} argument(s)", pos)
                if arity is None and len(args) < 2:
                    raise ExprSyntaxError(f"{val} needs at least two arguments", pos)
                return Call(val, tuple(args))
            if val in VARIABLES:
                return Var(val)
            if val in FUNCTIONS:
                raise ExprSyntaxError(f"function {val!r} used without arguments", pos)
            raise ExprSyntaxError(f"unknown variable {val!r}", pos)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"expected a value, found {found}", pos)


def parse_expression(text: str) -> "Expression":
    """Parse ``text`` into an :class:`Expression`."""
    return Expression(_Parser(text).parse())


# ---------------------------------------------------------------- printing

def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    if isinstance(node, Num) and (node.value < 0 or np.signbit(node.value)):
        return 0
    return _PREC["atom"]


def _wrap(node, need_parens):
    s = to_text(node)
    return f"({s})" if need_parens else s


def to_text(node: Node) -> str:
    if isinstance(node, Num):
        v = float(node.value)
        if v.is_integer() and abs(v) < 1e15 and not np.signbit(v):
            return str(int(v))
        return repr(v)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _prec(node.operand) < _PREC["neg"])
    p = _PREC[node.op]
    if node.op == "^":
        left = _wrap(node.left, _prec(node.left) <= p)
        right = _wrap(node.right, _prec(node.right) < _PREC["neg"])
        return f"{left}^{right}"
    left = _wrap(node.left, _prec(node.left) < p)
    right = _wrap(node.right, _prec(node.right) <= p)
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------- evaluation

def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvaluationError("division by zero")
            return a / b
        with np.errstate(all="ignore"):
            out = np.power(np.asarray(a, dtype=float), b)
        if not np.all(np.isfinite(out)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b)):
            raise EvaluationError("power outside its domain")
        return out
    args = [_eval(a, env) for a in node.args]
    name = node.name
    if name == "log":
        if np.any(np.asarray(args[0]) <= 0):
            raise EvaluationError("log of a non-positive value")
        return np.log(args[0])
    if name == "sqrt":
        if np.any(np.asarray(args[0]) < 0):
            raise EvaluationError("sqrt of a negative value")
        return np.sqrt(args[0])
    if name == "min":
        out = args[0]
        for a in args[1:]:
            out = np.minimum(out, a)
        return out
    if name == "max":
        out = args[0]
        for a in args[1:]:
            out = np.maximum(out, a)
        return out
    return {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}[name](args[0])


# ---------------------------------------------------------------- calculus

ZERO = Num(0.0)
ONE = Num(1.0)


def _is(node, value):
    return isinstance(node, Num) and node.value == value


def _both_num(a, b):
    return isinstance(a, Num) and isinstance(b, Num)


def _add(a, b):
    if _both_num(a, b):
        return Num(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _both_num(a, b) and a.value >= b.value:
        return Num(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if _both_num(a, b):
        return Num(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def _neg(a):
    if _is(a, 0):
        return ZERO
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _depends(node, var):
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return _depends(node.operand, var)
    if isinstance(node, BinOp):
        return _depends(node.left, var) or _depends(node.right, var)
    return any(_depends(a, var) for a in node.args)


def _diff(node, var):
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if isinstance(node, Neg):
        return _neg(_diff(node.operand, var))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = _diff(a, var), _diff(b, var)
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if node.op == "/":
            return _div(_sub(_mul(da, b), _mul(a, db)), BinOp("^", b, Num(2.0)))
        # power
        if not _depends(b, var):
            exponent = _sub(b, ONE)
            power = a if _is(exponent, 1) else BinOp("^", a, exponent)
            return _mul(_mul(b, power), da)
        return _mul(node, _add(_mul(db, Call("log", (a,))), _div(_mul(b, da), a)))
    name, args = node.name, node.args
    if name in ("min", "max"):
        # fold pairwise: min(a, b) = (a + b - |a - b|) / 2
        acc = args[0]
        for other in args[1:]:
            spread = Call("abs", (BinOp("-", acc, other),))
            s = BinOp("-" if name == "min" else "+", BinOp("+", acc, other), spread)
            acc = BinOp("/", s, Num(2.0))
        return _diff(acc, var)
    a = args[0]
    da = _diff(a, var)
    if _is(da, 0):
        return ZERO
    if name == "sin":
        return _mul(Call("cos", (a,)), da)
    if name == "cos":
        return _neg(_mul(Call("sin", (a,)), da))
    if name == "exp":
        return _mul(node, da)
    if name == "log":
        return _div(da, a)
    if name == "sqrt":
        return _div(da, _mul(Num(2.0), node))
    return _mul(_div(a, node), da)  # abs


class Expression:
    """Parsed expression; callable as ``expr(t, x)`` on scalars or arrays."""

    def __init__(self, node: Node):
        self.node = node

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        out = _eval(self.node, {"t": t, "x": x})
        shape = np.broadcast(t, x).shape
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def diff(self, var: str) -> "Expression":
        if var not in VARIABLES:
            raise ValueError(f"can only differentiate in {VARIABLES}")
        return Expression(_diff(self.node, var))

    def __str__(self):
        return to_text(self.node)

    def __repr__(self):
        return f"Expression({to_text(self.node)!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.node == other.node

    def __hash__(self):
        return hash(self.node)
