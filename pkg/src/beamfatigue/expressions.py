"""Small arithmetic expression language for loads, heat sources and initial data.

Grammar (usual precedence, ``^`` binds tighter than unary minus and is
right-associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Names are the variables ``x``, ``t``, ``theta`` (restricted per use site) and
the constant ``pi``.  Functions: sin, cos, exp, sqrt, abs (one argument),
max, min (two or more).  Evaluation is elementwise over numpy arrays.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

ALL_VARIABLES = ("x", "t", "theta")
CONSTANTS = {"pi": math.pi}
_UNARY_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}
_VARIADIC_FUNCS = {"max": np.maximum, "min": np.minimum}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


class ExpressionError(ValueError):
    """Parse error; ``offset`` is the byte offset into the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float

    def text(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var:
    name: str

    def text(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: object

    def text(self):
        return f"(-{self.operand.text()})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def text(self):
        return f"({self.left.text()} {self.op} {self.right.text()})"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    def text(self):
        return f"{self.name}({', '.join(a.text() for a in self.args)})"


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise ExpressionError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = mt.lastgroup
        if kind != "ws":
            tokens.append((kind, mt.group(), pos))
        pos = mt.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, variables):
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

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ExpressionError(message, _byte_offset(self.text, tok[2]))

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "end":
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {what}")
        return self.take()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
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
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(tok)
            if val in self.variables:
                return Var(val)
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if val in _UNARY_FUNCS or val in _VARIADIC_FUNCS:
                raise self.error(f"function {val!r} needs an argument list", tok)
            raise self.error(f"unknown identifier {val!r}", tok)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected token {val!r}", tok)

    def call(self, name_tok):
        name = name_tok[1]
        if name not in _UNARY_FUNCS and name not in _VARIADIC_FUNCS:
            raise self.error(f"unknown function {name!r}", name_tok)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[0] == "op" and self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if name in _UNARY_FUNCS and len(args) != 1:
            raise self.error(f"{name} takes 1 argument, got {len(args)}", name_tok)
        if name in _VARIADIC_FUNCS and len(args) < 2:
            raise self.error(f"{name} takes at least 2 arguments, got {len(args)}", name_tok)
        return Call(name, tuple(args))


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
            return np.divide(a, b)
        return np.power(np.asarray(a, dtype=float), b)
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        if node.name in _UNARY_FUNCS:
            return _UNARY_FUNCS[node.name](args[0])
        out = args[0]
        for a in args[1:]:
            out = _VARIADIC_FUNCS[node.name](out, a)
        return out
    raise TypeError(f"not an expression node: {node!r}")


def _uses(node, acc):
    if isinstance(node, Var):
        acc.add(node.name)
    elif isinstance(node, Neg):
        _uses(node.operand, acc)
    elif isinstance(node, BinOp):
        _uses(node.left, acc)
        _uses(node.right, acc)
    elif isinstance(node, Call):
        for a in node.args:
            _uses(a, acc)
    return acc


class ForcingExpression:
    """Parsed expression; call with keyword arrays for the variables it uses."""

    def __init__(self, source: str, tree, variables):
        self.source = source
        self.tree = tree
        self.variables = tuple(variables)

    def __repr__(self):
        return f"ForcingExpression({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, ForcingExpression) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    @property
    def free_variables(self) -> set:
        return _uses(self.tree, set())

    def to_text(self) -> str:
        return self.tree.text()

    def evaluate(self, **env):
        missing = self.free_variables - set(env)
        if missing:
            raise KeyError(f"missing values for {sorted(missing)}")
        with np.errstate(all="ignore"):
            return _eval(self.tree, env)

    def __call__(self, *args):
        """Positional call in the declared variable order."""
        return self.evaluate(**dict(zip(self.variables, args)))


def parse_expression(text: str, variables=ALL_VARIABLES) -> ForcingExpression:
    for v in variables:
        if v not in ALL_VARIABLES:
            raise ValueError(f"unsupported variable {v!r}")
    tree = _Parser(text, variables).parse()
    return ForcingExpression(text, tree, variables)
