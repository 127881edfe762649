"""Integrand expressions over ``x`` and named parameters.

Grammar (EBNF)::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := ("-")? power
    power  := atom ("^" power)?
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so the
exponent itself must not start with a unary minus: write ``x^(-x)``, not
``x^-x``.  NUMBER is an unsigned decimal literal with optional exponent.
The identifier ``pi`` is a built-in constant; every other bare IDENT is a
variable resolved against a :class:`Bindings` map at evaluation time.

All arithmetic is IEEE-754 binary64.  Evaluating outside a function's
domain (log of a non-positive value, square root of a negative value,
division by zero, a negative base raised to a non-integer power, or any
overflow to non-finite) raises :class:`DomainError`; NaNs never propagate
silently out of :func:`evaluate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Tuple, Union

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Call",
    "BinOp",
    "Bindings",
    "ExprError",
    "ParseError",
    "DomainError",
    "UnboundVariableError",
    "parse",
    "evaluate",
    "evaluate_array",
    "free_vars",
    "to_source",
    "as_array_function",
]

Bindings = Dict[str, float]


class ExprError(ValueError):
    """Base class for expression errors."""


class ParseError(ExprError):
    """Syntax error; ``offset`` is the byte offset into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(ExprError):
    """Evaluation left the real domain (log(-1), sqrt(-1), 1/0, overflow...)."""


class UnboundVariableError(ExprError):
    """A variable in the tree has no value in the bindings."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    lhs: "Expr"
    rhs: "Expr"


Expr = Union[Const, Var, Call, BinOp]

# scalar implementation, vectorized implementation
_FUNCTIONS: Dict[str, Tuple[Callable[[float], float], Callable[[np.ndarray], np.ndarray]]] = {
    "neg": (lambda v: -v, np.negative),
    "sin": (math.sin, np.sin),
    "cos": (math.cos, np.cos),
    "tan": (math.tan, np.tan),
    "sinh": (math.sinh, np.sinh),
    "cosh": (math.cosh, np.cosh),
    "tanh": (math.tanh, np.tanh),
    "exp": (math.exp, np.exp),
    "log": (math.log, np.log),
    "sqrt": (math.sqrt, np.sqrt),
    "erf": (math.erf, np.vectorize(math.erf, otypes=[np.float64])),
    "abs": (abs, np.abs),
}

_CONSTANTS = {"pi": math.pi}


# --- tokenizer -------------------------------------------------------------

_TOK_NUMBER = "number"
_TOK_IDENT = "ident"
_TOK_OP = "op"
_TOK_END = "end"


def _tokenize(source: str) -> Iterator[Tuple[str, str, int]]:
    if not source.isascii():
        offset = next(i for i, ch in enumerate(source) if ord(ch) > 127)
        raise ParseError(f"non-ASCII character {source[offset]!r}", offset)
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in "+-*/^()":
            yield (_TOK_OP, ch, i)
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            start = i
            while i < n and source[i].isdigit():
                i += 1
            if i < n and source[i] == ".":
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            text = source[start:i]
            if text == ".":
                raise ParseError("malformed number", start)
            yield (_TOK_NUMBER, text, start)
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            yield (_TOK_IDENT, source[start:i], start)
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    yield (_TOK_END, "", n)


class _Parser:
    def __init__(self, source: str):
        self.tokens = list(_tokenize(source))
        self.pos = 0

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> Tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, text, offset = self.peek()
        if kind != _TOK_OP or text != op:
            raise ParseError(f"expected {op!r}", offset)
        self.advance()

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while True:
            kind, text, _ = self.peek()
            if kind == _TOK_OP and text in "+-":
                self.advance()
                node = BinOp(text, node, self.parse_term())
            else:
                return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while True:
            kind, text, _ = self.peek()
            if kind == _TOK_OP and text in "*/":
                self.advance()
                node = BinOp(text, node, self.parse_factor())
            else:
                return node

    def parse_factor(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == _TOK_OP and text == "-":
            self.advance()
            return Call("neg", self.parse_power())
        return self.parse_power()

    def parse_power(self) -> Expr:
        node = self.parse_atom()
        kind, text, _ = self.peek()
        if kind == _TOK_OP and text == "^":
            self.advance()
            # exponent is another power: no leading unary minus without parens
            return BinOp("^", node, self.parse_power())
        return node

    def parse_atom(self) -> Expr:
        kind, text, offset = self.advance()
        if kind == _TOK_NUMBER:
            return Const(float(text))
        if kind == _TOK_IDENT:
            nkind, ntext, _ = self.peek()
            if nkind == _TOK_OP and ntext == "(":
                if text not in _FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", offset)
                self.advance()
                arg = self.parse_expr()
                self.expect_op(")")
                return Call(text, arg)
            if text in _CONSTANTS:
                return Const(_CONSTANTS[text])
            return Var(text)
        if kind == _TOK_OP and text == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected {text!r}" if text else "unexpected end of input", offset)


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree under standard precedence."""
    parser = _Parser(source)
    node = parser.parse_expr()
    kind, text, offset = parser.peek()
    if kind != _TOK_END:
        raise ParseError(f"trailing input {text!r}", offset)
    return node


# --- evaluation ------------------------------------------------------------


def _pow_scalar(base: float, exponent: float) -> float:
    if base == 0.0 and exponent == 0.0:
        return 1.0
    try:
        return math.pow(base, exponent)
    except ValueError:
        raise DomainError(f"{base!r} ^ {exponent!r} is outside the real domain") from None
    except OverflowError:
        raise DomainError(f"{base!r} ^ {exponent!r} overflows") from None


def evaluate(e: Expr, bindings: Bindings) -> float:
    """Evaluate ``e`` with variables bound to binary64 values.

    Pure: the same tree and bindings always give a bit-identical result.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(bindings[e.name])
        except KeyError:
            raise UnboundVariableError(f"variable {e.name!r} is not bound") from None
    if isinstance(e, Call):
        arg = evaluate(e.arg, bindings)
        if e.func == "log" and arg <= 0.0:
            raise DomainError(f"log of non-positive value {arg!r}")
        if e.func == "sqrt" and arg < 0.0:
            raise DomainError(f"sqrt of negative value {arg!r}")
        try:
            out = _FUNCTIONS[e.func][0](arg)
        except (ValueError, OverflowError) as exc:
            raise DomainError(f"{e.func}({arg!r}): {exc}") from None
        return _check_finite(out, e.func)
    lhs = evaluate(e.lhs, bindings)
    rhs = evaluate(e.rhs, bindings)
    op = e.op
    if op == "+":
        out = lhs + rhs
    elif op == "-":
        out = lhs - rhs
    elif op == "*":
        out = lhs * rhs
    elif op == "/":
        if rhs == 0.0:
            raise DomainError("division by zero")
        out = lhs / rhs
    else:
        out = _pow_scalar(lhs, rhs)
    return _check_finite(out, op)


def _check_finite(value: float, context: str) -> float:
    if not math.isfinite(value):
        raise DomainError(f"non-finite result from {context!r}")
    return value


def evaluate_array(e: Expr, bindings: Dict[str, np.ndarray]) -> np.ndarray:
    """Vectorized evaluation; domain trouble yields NaN/Inf entries, not errors.

    Intended for quadrature grids and plotting, where the caller applies its
    own policy (endpoint nudging, dropping) to non-finite entries.
    """
    with np.errstate(all="ignore"):
        return np.asarray(_eval_array(e, bindings), dtype=np.float64)


def _eval_array(e: Expr, bindings: Dict[str, np.ndarray]):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return bindings[e.name]
        except KeyError:
            raise UnboundVariableError(f"variable {e.name!r} is not bound") from None
    if isinstance(e, Call):
        return _FUNCTIONS[e.func][1](_eval_array(e.arg, bindings))
    lhs = _eval_array(e.lhs, bindings)
    rhs = _eval_array(e.rhs, bindings)
    op = e.op
    if op == "+":
        return lhs + rhs
    if op == "-":
        return lhs - rhs
    if op == "*":
        return lhs * rhs
    if op == "/":
        return lhs / rhs
    return np.power(lhs, rhs)


def as_array_function(e: Expr, variable: str = "x", fixed: Bindings | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Curry ``e`` into a vectorized single-variable callable."""
    fixed_arrays = {k: np.float64(v) for k, v in (fixed or {}).items()}

    def f(xs: np.ndarray) -> np.ndarray:
        arr = np.asarray(xs, dtype=np.float64)
        return evaluate_array(e, {variable: arr, **fixed_arrays})

    return f


def free_vars(e: Expr) -> List[str]:
    """Free variables; ``x`` first if present, the rest lexicographic."""
    names: set = set()
    _collect(e, names)
    ordered = sorted(names - {"x"})
    return (["x"] if "x" in names else []) + ordered


def _collect(e: Expr, out: set) -> None:
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, Call):
        _collect(e.arg, out)
    elif isinstance(e, BinOp):
        _collect(e.lhs, out)
        _collect(e.rhs, out)


def to_source(e: Expr) -> str:
    """Fully parenthesized source; reparses to a structurally identical tree."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        if e.func == "neg":
            return f"(-{to_source(e.arg)})"
        return f"{e.func}({to_source(e.arg)})"
    return f"({to_source(e.lhs)}{e.op}{to_source(e.rhs)})"
