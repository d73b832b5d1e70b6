"""
Expression core module for the LRL laboratory.

Parses, evaluates and symbolically differentiates scalar functions of a single
variable, e.g. the angular law v(th), the radial law g(r) or the time law g(t).

Grammar (whitespace insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

so '^' binds tighter than unary minus and is right associative.
"""

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

from ..utils.exceptions import ExprSyntaxError, UnknownIdentifier, DomainError, BadParameter

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi}

# printing precedence
_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class Num:
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
    fn: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"Unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(_Token("eof", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, text: str, var: str, params: Mapping[str, float]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.var = var
        self.params = params

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _expect(self, text: str) -> None:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"Expected {text!r}, found {found!r}", self.tok.offset)
        self._advance()

    def parse(self) -> Node:
        node = self._expr()
        if self.tok.kind != "eof":
            raise ExprSyntaxError(f"Unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def _expr(self) -> Node:
        node = self._term()
        while self.tok.text in ("+", "-"):
            op = self._advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Node:
        node = self._unary()
        while self.tok.text in ("*", "/"):
            op = self._advance().text
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Node:
        if self.tok.text == "-":
            self._advance()
            arg = self._unary()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        return self._power()

    def _power(self) -> Node:
        base = self._primary()
        if self.tok.text == "^":
            self._advance()
            return BinOp("^", base, self._unary())
        return base

    def _primary(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self._advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self._advance()
            if tok.text in FUNCTIONS:
                self._expect("(")
                arg = self._expr()
                self._expect(")")
                return Call(tok.text, arg)
            if tok.text == self.var:
                return Var(tok.text)
            if tok.text in self.params:
                return Num(float(self.params[tok.text]))
            if tok.text in CONSTANTS:
                return Num(CONSTANTS[tok.text])
            raise UnknownIdentifier(f"Unknown identifier {tok.text!r}",
                                    details={"offset": tok.offset, "name": tok.text, "variable": self.var})
        if tok.text == "(":
            self._advance()
            node = self._expr()
            self._expect(")")
            return node
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"Unexpected {found!r}", tok.offset)


# ---------------------------------------------------------------- printing

def _num_text(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _prec(node: Node) -> int:
    if isinstance(node, Num):
        return _UNARY if node.value < 0 else _ATOM
    if isinstance(node, (Var, Call)):
        return _ATOM
    if isinstance(node, Neg):
        return _UNARY
    return {"+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "^": _POW}[node.op]


def _wrap(node: Node, minimum: int) -> str:
    text = to_text(node)
    return f"({text})" if _prec(node) < minimum else text


def to_text(node: Node) -> str:
    """Render a node in the grammar accepted by parse."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, _UNARY)
    if node.op in ("+", "-"):
        return _wrap(node.left, _ADD) + node.op + _wrap(node.right, _MUL)
    if node.op in ("*", "/"):
        return _wrap(node.left, _MUL) + node.op + _wrap(node.right, _UNARY)
    return _wrap(node.left, _ATOM) + "^" + _wrap(node.right, _UNARY)


# ---------------------------------------------------------------- simplifying constructors

def _exact(a: float, b: float, op: str) -> Optional[float]:
    """Fold a op b only when the double result is exact."""
    try:
        fa, fb = Fraction(a), Fraction(b)
        if op == "+":
            exact, approx = fa + fb, a + b
        elif op == "-":
            exact, approx = fa - fb, a - b
        elif op == "*":
            exact, approx = fa * fb, a * b
        elif op == "/":
            if b == 0:
                return None
            exact, approx = fa / fb, a / b
        else:
            if not b.is_integer() or abs(b) > 64 or (a == 0 and b < 0):
                return None
            exact, approx = fa ** int(b), a ** int(b)
    except (OverflowError, ValueError, ZeroDivisionError):
        return None
    if not math.isfinite(approx) or Fraction(approx) != exact:
        return None
    return approx


def _is(node: Node, value: float) -> bool:
    return isinstance(node, Num) and node.value == value


def neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def binop(op: str, a: Node, b: Node) -> Node:
    """Build a op b applying the basic simplification rules."""
    if isinstance(a, Num) and isinstance(b, Num):
        folded = _exact(a.value, b.value, op)
        if folded is not None:
            return Num(folded)
    if op == "+":
        if _is(b, 0):
            return a
        if _is(a, 0):
            return b
    elif op == "-":
        if _is(b, 0):
            return a
        if _is(a, 0):
            return neg(b)
    elif op == "*":
        if _is(a, 0) or _is(b, 0):
            return Num(0.0)
        if _is(a, 1):
            return b
        if _is(b, 1):
            return a
        if _is(a, -1):
            return neg(b)
        if _is(b, -1):
            return neg(a)
    elif op == "/":
        if _is(a, 0):
            return Num(0.0)
        if _is(b, 1):
            return a
    elif op == "^":
        if _is(b, 1):
            return a
        if _is(b, 0):
            return Num(1.0)
    return BinOp(op, a, b)


def simplify(node: Node) -> Node:
    """Rebuild a tree bottom-up through the simplifying constructors."""
    if isinstance(node, (Num, Var)):
        return node
    if isinstance(node, Neg):
        return neg(simplify(node.arg))
    if isinstance(node, Call):
        return Call(node.fn, simplify(node.arg))
    return binop(node.op, simplify(node.left), simplify(node.right))


# ---------------------------------------------------------------- differentiation

def _has_var(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, (Neg, Call)):
        return _has_var(node.arg)
    return _has_var(node.left) or _has_var(node.right)


def derivative(node: Node) -> Node:
    """Exact symbolic derivative with respect to the free variable."""
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0)
    if isinstance(node, Neg):
        return neg(derivative(node.arg))
    if isinstance(node, Call):
        a = node.arg
        da = derivative(a)
        if node.fn == "sin":
            outer = Call("cos", a)
        elif node.fn == "cos":
            outer = neg(Call("sin", a))
        elif node.fn == "tan":
            return binop("/", da, binop("^", Call("cos", a), Num(2.0)))
        elif node.fn == "exp":
            outer = node
        elif node.fn == "log":
            return binop("/", da, a)
        elif node.fn == "sqrt":
            return binop("/", da, binop("*", Num(2.0), node))
        else:  # abs
            outer = binop("/", a, node)
        return binop("*", outer, da)

    a, b = node.left, node.right
    if node.op in ("+", "-"):
        return binop(node.op, derivative(a), derivative(b))
    if node.op == "*":
        return binop("+", binop("*", derivative(a), b), binop("*", a, derivative(b)))
    if node.op == "/":
        numer = binop("-", binop("*", derivative(a), b), binop("*", a, derivative(b)))
        return binop("/", numer, binop("^", b, Num(2.0)))
    # power
    if not _has_var(b):
        return binop("*", binop("*", b, binop("^", a, binop("-", b, Num(1.0)))), derivative(a))
    if not _has_var(a):
        return binop("*", binop("*", node, Call("log", a)), derivative(b))
    inner = binop("+", binop("*", derivative(b), Call("log", a)),
                  binop("/", binop("*", b, derivative(a)), a))
    return binop("*", node, inner)


# ---------------------------------------------------------------- evaluation

def _safe_div(x: float, y: float) -> float:
    if y == 0.0:
        raise DomainError("Division by zero")
    return x / y


def _safe_pow(x: float, y: float) -> float:
    try:
        return math.pow(x, y)
    except ValueError:
        raise DomainError(f"{x!r}^{y!r} is undefined")
    except OverflowError:
        raise DomainError(f"{x!r}^{y!r} overflows")


def _safe_log(x: float) -> float:
    if x <= 0.0:
        raise DomainError(f"log of non-positive value {x!r}")
    return math.log(x)


def _safe_sqrt(x: float) -> float:
    if x < 0.0:
        raise DomainError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        raise DomainError(f"exp({x!r}) overflows")


_CALLS: Dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": _safe_exp,
    "log": _safe_log,
    "sqrt": _safe_sqrt,
    "abs": abs,
}

_BINARY: Dict[str, Callable[[float, float], float]] = {
    "+": lambda x, y: x + y,
    "-": lambda x, y: x - y,
    "*": lambda x, y: x * y,
    "/": _safe_div,
    "^": _safe_pow,
}


def compile_node(node: Node) -> Callable[[float], float]:
    """Compile a tree into nested closures of one float argument."""
    if isinstance(node, Num):
        value = node.value
        return lambda x: value
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Neg):
        inner = compile_node(node.arg)
        return lambda x: -inner(x)
    if isinstance(node, Call):
        fn = _CALLS[node.fn]
        inner = compile_node(node.arg)
        return lambda x: fn(inner(x))
    op = _BINARY[node.op]
    left, right = compile_node(node.left), compile_node(node.right)
    return lambda x: op(left(x), right(x))


# ---------------------------------------------------------------- public API

@dataclass(frozen=True)
class Expr:
    """Parsed scalar function of the single variable `var`."""

    node: Node
    var: str

    def __call__(self, value: float) -> float:
        try:
            out = self._compiled(float(value))
        except (OverflowError, ValueError):
            raise DomainError(f"Cannot evaluate {self} at {self.var}={value!r}")
        if not math.isfinite(out):
            raise DomainError(f"Non-finite value evaluating {self} at {self.var}={value!r}")
        return out

    @cached_property
    def _compiled(self) -> Callable[[float], float]:
        return compile_node(self.node)

    def diff(self) -> "Expr":
        return Expr(derivative(self.node), self.var)

    @property
    def is_constant(self) -> bool:
        return not _has_var(self.node)

    def __str__(self) -> str:
        return to_text(self.node)

    @classmethod
    def constant(cls, value: float, var: str) -> "Expr":
        return cls(Num(float(value)), var)


def parse(text: str, var: str, params: Optional[Mapping[str, float]] = None) -> Expr:
    """Parse a function string.

    Args:
        text: Function text, e.g. "sin(3*(th-0.5))"
        var: Name of the free variable
        params: Named constants substituted while parsing

    Returns:
        Expr over var

    Raises:
        ExprSyntaxError: Malformed text; carries the byte offset
        UnknownIdentifier: Name that is not var, pi, a parameter or a function
    """
    if not text or not text.strip():
        raise ExprSyntaxError("Empty expression", 0)
    if var in FUNCTIONS or var in CONSTANTS:
        raise BadParameter(f"Variable name {var!r} is reserved")
    return Expr(_Parser(text, var, dict(params or {})).parse(), var)


def evaluate(e: Expr, value: float) -> float:
    """Evaluate e at value in IEEE double precision.

    Raises:
        DomainError: log of non-positive, sqrt of negative, division by zero, overflow
    """
    return e(value)


def diff(e: Expr) -> Expr:
    return e.diff()


def describe(text: str, var: str, at: Optional[float] = None,
             params: Optional[Mapping[str, float]] = None) -> Dict[str, object]:
    """Parse text and report its printed form, derivatives and optional values."""
    e = parse(text, var, params)
    d1 = e.diff()
    d2 = d1.diff()
    result: Dict[str, object] = {
        "variable": var,
        "expression": str(e),
        "derivative": str(d1),
        "second_derivative": str(d2),
    }
    if at is not None:
        result["at"] = float(at)
        result["value"] = e(at)
        result["derivative_value"] = d1(at)
        result["second_derivative_value"] = d2(at)
    return result


__all__ = [
    "Expr", "Num", "Var", "Neg", "BinOp", "Call", "Node",
    "parse", "evaluate", "diff", "derivative", "simplify", "to_text", "describe",
]
