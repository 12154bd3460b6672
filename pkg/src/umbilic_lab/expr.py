"""Tiny arithmetic expression language with symbolic differentiation.

Grammar (whitespace-insensitive)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

``FUNC`` is one of ``sin cos exp sqrt``; ``pi`` is a predefined constant.
Expressions evaluate on numpy arrays (broadcasting over the variable arrays)
and differentiate to new expressions, with constant folding so that repeated
differentiation stays small.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid

FUNCTIONS = ("sin", "cos", "exp", "sqrt")
CONSTANTS = {"pi": math.pi}


class Node:
    def eval(self, env):
        raise NotImplementedError

    def diff(self, var):
        raise NotImplementedError

    def variables(self):
        return set()


@dataclass(frozen=True)
class Num(Node):
    value: float

    def eval(self, env):
        return self.value

    def diff(self, var):
        return ZERO

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(Node):
    name: str

    def eval(self, env):
        return env[self.name]

    def diff(self, var):
        return ONE if var == self.name else ZERO

    def variables(self):
        return {self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: Node
    right: Node

    def eval(self, env):
        a = self.left.eval(env)
        b = self.right.eval(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def diff(self, var):
        a, b = self.left, self.right
        da, db = a.diff(var), b.diff(var)
        if self.op == "+":
            return add(da, db)
        if self.op == "-":
            return sub(da, db)
        if self.op == "*":
            return add(mul(da, b), mul(a, db))
        if self.op == "/":
            return div(sub(mul(da, b), mul(a, db)), power(b, Num(2.0)))
        # power
        if isinstance(b, Num):
            return mul(mul(b, power(a, Num(b.value - 1.0))), da)
        # general a^b = exp(b log a)
        return mul(self, add(mul(db, call("log", a)), div(mul(b, da), a)))

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def eval(self, env):
        return -self.arg.eval(env)

    def diff(self, var):
        return neg(self.arg.diff(var))

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        return f"(-{self.arg})"


_NUMPY_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "log": np.log}


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node

    def eval(self, env):
        return _NUMPY_FUNCS[self.func](self.arg.eval(env))

    def variables(self):
        return self.arg.variables()

    def diff(self, var):
        x = self.arg
        dx = x.diff(var)
        if isinstance(dx, Num) and dx.value == 0.0:
            return ZERO
        if self.func == "sin":
            outer = call("cos", x)
        elif self.func == "cos":
            outer = neg(call("sin", x))
        elif self.func == "exp":
            outer = self
        elif self.func == "sqrt":
            outer = div(Num(0.5), self)
        else:  # log
            outer = div(ONE, x)
        return mul(outer, dx)

    def __str__(self):
        return f"{self.func}({self.arg})"


ZERO = Num(0.0)
ONE = Num(1.0)


def _is(node, value):
    return isinstance(node, Num) and node.value == value


def add(a, b):
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Binary("+", a, b)


def sub(a, b):
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Binary("-", a, b)


def mul(a, b):
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Binary("*", a, b)


def div(a, b):
    if _is(a, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    return Binary("/", a, b)


def power(a, b):
    if _is(b, 0.0):
        return ONE
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value ** b.value)
    return Binary("^", a, b)


def neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def call(func, a):
    if isinstance(a, Num):
        return Num(float(_NUMPY_FUNCS[func](a.value)))
    return Call(func, a)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text):
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ConfigInvalid(f"unexpected character {text[pos:pos + 1]!r} at offset {pos} in {text!r}")
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "op" and value == "**":
            value = "^"
        tokens.append((kind, value, m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            raise ConfigInvalid(f"expected {value!r} at offset {pos} in {self.text!r}")

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ConfigInvalid(f"trailing input {val!r} at offset {pos} in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return power(base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return call(val, arg)
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if val not in self.variables:
                raise ConfigInvalid(f"unknown name {val!r} at offset {pos} in {self.text!r}")
            return Var(val)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ConfigInvalid(f"unexpected token {val!r} at offset {pos} in {self.text!r}")


def parse(text, variables):
    """Parse ``text`` into an expression tree over the given variable names."""
    return _Parser(text, variables).parse()


class VectorExpression:
    """A vector of expressions with cached first and second derivatives."""

    def __init__(self, components, variables):
        self.variables = list(variables)
        self.sources = list(components)
        self.nodes = [parse(c, self.variables) for c in components]
        self.first = [[n.diff(v) for v in self.variables] for n in self.nodes]
        self.second = [
            [[d.diff(w) for w in self.variables] for d in row] for row in self.first
        ]

    def _env(self, U):
        U = np.asarray(U, dtype=float)
        return {v: U[..., i] for i, v in enumerate(self.variables)}, U.shape[:-1]

    @staticmethod
    def _fill(node, env, shape):
        return np.broadcast_to(np.asarray(node.eval(env), dtype=float), shape)

    def value(self, U):
        env, shape = self._env(U)
        return np.stack([self._fill(n, env, shape) for n in self.nodes], axis=-1)

    def jacobian(self, U):
        env, shape = self._env(U)
        rows = [np.stack([self._fill(d, env, shape) for d in row], axis=-1) for row in self.first]
        return np.stack(rows, axis=-2)

    def hessian(self, U):
        env, shape = self._env(U)
        comps = []
        for row in self.second:
            mats = [np.stack([self._fill(d, env, shape) for d in r], axis=-1) for r in row]
            comps.append(np.stack(mats, axis=-2))
        return np.stack(comps, axis=-3)
