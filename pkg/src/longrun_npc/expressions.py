"""Tiny arithmetic expression grammar for user-specified models.

Supported syntax: ``+ - * / ^``, parentheses, the functions ``exp``, ``log``,
``sqrt``, decimal literals, and the coordinate variables ``x1 .. xn``.
Exponentiation is right associative; unary minus binds looser than ``^``
(so ``-x1^2`` is ``-(x1^2)``).

Expressions keep their source text, so serializing a parsed expression and
parsing it again is value-identical by construction.
"""

import re

import numpy as np

__all__ = ["Expression", "ExpressionError", "parse_expression"]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCTIONS = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt}


class ExpressionError(ValueError):
    """Raised when an expression fails to parse or references unknown names."""


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ExpressionError(f"bad character at position {pos}: {text[pos:]!r}")
        pos = m.end()
        if m.lastgroup == "num":
            out.append(("num", float(m.group("num"))))
        elif m.lastgroup == "name":
            out.append(("name", m.group("name")))
        else:
            out.append(("op", m.group("op")))
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, tokens, dimension):
        self.tokens = tokens
        self.pos = 0
        self.dimension = dimension

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, val = self.next()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r}, found {val!r}")

    def parse(self):
        node = self.expr()
        kind, val = self.peek()
        if kind != "end":
            raise ExpressionError(f"trailing input at token {val!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.next()
            node = ("binop", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            _, op = self.next()
            node = ("binop", op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.next()
            return ("neg", self.unary())
        if self.peek() == ("op", "+"):
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.next()
            return ("binop", "^", base, self.unary())
        return base

    def atom(self):
        kind, val = self.next()
        if kind == "num":
            return ("num", val)
        if kind == "name":
            if self.peek() == ("op", "("):
                if val not in _FUNCTIONS:
                    raise ExpressionError(f"unknown function {val!r}")
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return ("call", val, arg)
            m = re.fullmatch(r"x(\d+)", val)
            if m is None:
                raise ExpressionError(f"unknown name {val!r} (variables are x1..xn)")
            idx = int(m.group(1))
            if not 1 <= idx <= self.dimension:
                raise ExpressionError(
                    f"variable {val!r} out of range for dimension {self.dimension}"
                )
            return ("var", idx - 1)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected token {val!r}")


def _evaluate(node, cols):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return cols[node[1]]
    if tag == "neg":
        return -_evaluate(node[1], cols)
    if tag == "call":
        return _FUNCTIONS[node[1]](_evaluate(node[2], cols))
    _, op, left, right = node
    a, b = _evaluate(left, cols), _evaluate(right, cols)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return np.power(a, b)


class Expression:
    """A parsed scalar expression in the coordinates ``x1 .. xn``."""

    def __init__(self, source, dimension):
        self.source = source
        self.dimension = dimension
        self._ast = _Parser(_tokenize(source), dimension).parse()

    def __call__(self, x):
        """Evaluate at ``x`` of shape (n,) or at a batch of shape (N, n)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            cols = [x[i] for i in range(self.dimension)]
            return float(_evaluate(self._ast, cols))
        cols = [x[:, i] for i in range(self.dimension)]
        out = _evaluate(self._ast, cols)
        return np.broadcast_to(np.asarray(out, dtype=float), (x.shape[0],)).copy()

    def serialize(self):
        return self.source

    def __repr__(self):
        return f"Expression({self.source!r}, dimension={self.dimension})"


def parse_expression(source, dimension):
    """Parse ``source`` into an :class:`Expression` over ``x1 .. x<dimension>``."""
    return Expression(source, dimension)
