"""Parse and evaluate scalar expressions in the single variable ``r``.

The grammar covers ``+ - * / ^`` with conventional precedence (``^`` binds
tightest, then unary minus, then ``* /``, then ``+ -``), parentheses,
decimal literals, and the functions ``exp``, ``log``, ``sqrt``, ``sin``,
``cos``.  Parsed expressions are immutable and evaluation is deterministic,
so they can be shared freely across threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

__all__ = [
    "Expression",
    "ExprError",
    "ExprSyntaxError",
    "UnknownSymbolError",
    "EvalDomainError",
    "parse",
    "evaluate",
    "to_text",
]

FUNCTIONS = {
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
}
VARIABLE = "r"


class ExprError(ValueError):
    """Base class for expression parsing and evaluation failures."""


class ExprSyntaxError(ExprError):
    """Malformed input; carries the source offset and the expected token set."""

    def __init__(self, offset: int, expected, found: str):
        self.offset = offset
        self.expected = frozenset(expected)
        self.found = found
        choices = ", ".join(sorted(self.expected))
        super().__init__(
            f"syntax error at offset {offset}: found {found}, expected one of: {choices}"
        )


class UnknownSymbolError(ExprError):
    """An identifier other than the variable ``r`` or a known function."""

    def __init__(self, offset: int, name: str):
        self.offset = offset
        self.name = name
        super().__init__(
            f"unknown identifier {name!r} at offset {offset}; "
            f"the variable is {VARIABLE!r} and functions are {sorted(FUNCTIONS)}"
        )


class EvalDomainError(ExprError):
    """Evaluation left the numeric domain (log/sqrt of a negative number,
    division by zero, or overflow to a non-finite value)."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


Node = Union[Const, Var, Unary, Binary]


@dataclass(frozen=True)
class Expression:
    """An immutable parsed expression over the variable ``r``."""

    ast: Node


_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^":
            tokens.append(("op", ch, i))
            i += 1
            continue
        if ch == "(":
            tokens.append(("lparen", ch, i))
            i += 1
            continue
        if ch == ")":
            tokens.append(("rparen", ch, i))
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(("number", m.group(), i))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(("ident", m.group(), i))
            i = m.end()
            continue
        raise ExprSyntaxError(i, {"number", "identifier", "operator", "'('"}, repr(ch))
    tokens.append(("end", "", n))
    return tokens


_ATOM_EXPECTED = {"number", f"'{VARIABLE}'", "function name", "'('", "'-'"}


class _Parser:
    def __init__(self, tokens):
        self._tokens = tokens
        self._pos = 0

    def _peek(self):
        return self._tokens[self._pos]

    def _advance(self):
        tok = self._tokens[self._pos]
        self._pos += 1
        return tok

    def parse(self) -> Node:
        node = self._sum()
        kind, value, offset = self._peek()
        if kind != "end":
            raise ExprSyntaxError(
                offset, {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"}, repr(value)
            )
        return node

    def _sum(self) -> Node:
        node = self._term()
        while self._peek()[0] == "op" and self._peek()[1] in "+-":
            op = self._advance()[1]
            node = Binary(op, node, self._term())
        return node

    def _term(self) -> Node:
        node = self._unary()
        while self._peek()[0] == "op" and self._peek()[1] in "*/":
            op = self._advance()[1]
            node = Binary(op, node, self._unary())
        return node

    def _unary(self) -> Node:
        kind, value, _ = self._peek()
        if kind == "op" and value == "-":
            self._advance()
            return Unary("neg", self._unary())
        return self._power()

    def _power(self) -> Node:
        base = self._atom()
        kind, value, _ = self._peek()
        if kind == "op" and value == "^":
            self._advance()
            return Binary("^", base, self._unary())
        return base

    def _atom(self) -> Node:
        kind, value, offset = self._advance()
        if kind == "number":
            return Const(float(value))
        if kind == "ident":
            if value == VARIABLE:
                return Var()
            if value in FUNCTIONS:
                kind2, value2, offset2 = self._advance()
                if kind2 != "lparen":
                    raise ExprSyntaxError(offset2, {"'('"}, repr(value2) if value2 else "end of input")
                inner = self._sum()
                kind3, value3, offset3 = self._advance()
                if kind3 != "rparen":
                    raise ExprSyntaxError(offset3, {"')'"}, repr(value3) if value3 else "end of input")
                return Unary(value, inner)
            raise UnknownSymbolError(offset, value)
        if kind == "lparen":
            inner = self._sum()
            kind2, value2, offset2 = self._advance()
            if kind2 != "rparen":
                raise ExprSyntaxError(offset2, {"')'"}, repr(value2) if value2 else "end of input")
            return inner
        found = repr(value) if value else "end of input"
        raise ExprSyntaxError(offset, _ATOM_EXPECTED, found)


def parse(text: str) -> Expression:
    """Parse ``text`` into an :class:`Expression`.

    Raises :class:`ExprSyntaxError` (with byte offset and the expected token
    set) on malformed input and :class:`UnknownSymbolError` for identifiers
    other than ``r`` or the supported functions.
    """
    return Expression(_Parser(_tokenize(text)).parse())


def _finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise EvalDomainError(f"non-finite result from {what}")
    return value


def _eval_node(node: Node, r: float) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return r
    if isinstance(node, Unary):
        arg = _eval_node(node.arg, r)
        if node.op == "neg":
            return -arg
        try:
            value = FUNCTIONS[node.op](arg)
        except ValueError:
            raise EvalDomainError(f"{node.op}() of out-of-domain argument {arg!r}") from None
        except OverflowError:
            raise EvalDomainError(f"{node.op}() overflowed at argument {arg!r}") from None
        return _finite(value, f"{node.op}()")
    left = _eval_node(node.left, r)
    right = _eval_node(node.right, r)
    op = node.op
    if op == "+":
        return _finite(left + right, "addition")
    if op == "-":
        return _finite(left - right, "subtraction")
    if op == "*":
        return _finite(left * right, "multiplication")
    if op == "/":
        if right == 0.0:
            raise EvalDomainError("division by zero")
        return _finite(left / right, "division")
    try:
        value = math.pow(left, right)
    except ValueError:
        raise EvalDomainError(f"{left!r} ^ {right!r} is out of domain") from None
    except OverflowError:
        raise EvalDomainError(f"{left!r} ^ {right!r} overflowed") from None
    return _finite(value, "exponentiation")


def evaluate(expression: Expression, r: float) -> float:
    """Evaluate ``expression`` at ``r`` in IEEE double precision.

    Domain violations raise :class:`EvalDomainError` instead of propagating
    NaN or infinity.
    """
    return _eval_node(expression.ast, float(r))


# Precedence levels used when printing: atoms render without parentheses,
# a negative constant prints like a unary minus and must be fenced wherever
# a bare unary minus would be.
_LVL_SUM, _LVL_PROD, _LVL_NEG, _LVL_POW, _LVL_ATOM = 1, 2, 3, 4, 5


def _render(node: Node):
    if isinstance(node, Const):
        text = repr(node.value)
        return text, (_LVL_ATOM if node.value >= 0 else _LVL_NEG)
    if isinstance(node, Var):
        return VARIABLE, _LVL_ATOM
    if isinstance(node, Unary):
        inner, level = _render(node.arg)
        if node.op == "neg":
            if level < _LVL_NEG:
                inner = f"({inner})"
            return f"-{inner}", _LVL_NEG
        return f"{node.op}({inner})", _LVL_ATOM
    left, llevel = _render(node.left)
    right, rlevel = _render(node.right)
    if node.op in "+-":
        if llevel < _LVL_SUM:
            left = f"({left})"
        if rlevel <= _LVL_SUM:
            right = f"({right})"
        return f"{left} {node.op} {right}", _LVL_SUM
    if node.op in "*/":
        if llevel < _LVL_PROD:
            left = f"({left})"
        if rlevel <= _LVL_PROD:
            right = f"({right})"
        return f"{left} {node.op} {right}", _LVL_PROD
    # "^": the base slot only accepts atoms, the exponent slot accepts a unary
    if llevel < _LVL_ATOM:
        left = f"({left})"
    if rlevel < _LVL_NEG:
        right = f"({right})"
    return f"{left}^{right}", _LVL_POW


def to_text(expression: Expression) -> str:
    """Render an expression so that re-parsing evaluates identically."""
    return _render(expression.ast)[0]
