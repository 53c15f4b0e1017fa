"""Complex-valued potential expressions: parsing, evaluation, differentiation.

Every potential consumed by the rest of the package goes through this layer.
Expressions are small immutable ASTs over one distinguished variable (the
spatial coordinate, usually ``x`` or ``r``) and any number of named real
parameters (``s``, ``g``, ...).

Grammar, lowest precedence first::

    sum    := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ['^' exponent]
    atom   := number | 'i' | ident | ident '(' sum ')' | '(' sum ')'

Exponents are numeric literals (optionally signed or a ratio inside
parentheses, e.g. ``x^2``, ``abs(x)^3.15``, ``u^(-4/3)``), never general
subexpressions, so every power node carries a plain real exponent.

Supported functions: exp, log, sin, cos, sqrt, abs, sgn.  abs and sgn are
defined for real arguments only; derivatives use the a.e. convention
d|x|/dx = sgn(x) and d sgn(x)/dx = 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "Const",
    "Var",
    "Param",
    "Neg",
    "BinOp",
    "Pow",
    "Fun",
    "Node",
    "PotentialExpr",
    "ParseError",
    "EvalError",
    "parse",
    "evaluate",
    "evaluate_array",
    "differentiate",
    "substitute",
    "to_string",
    "constant_fold",
    "uses_kink_functions",
]

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "abs", "sgn")

# tolerance for "this complex value is really a real number" in abs/sgn
_REAL_TOL = 1e-12


class ParseError(ValueError):
    """Syntax error with the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalError(ValueError):
    """Evaluation failure: unbound identifier, domain error, division by zero."""


class _Base:
    """Operator sugar shared by all node classes, for programmatic AST building."""

    def __add__(self, other):
        return BinOp("+", self, _as_node(other))

    def __radd__(self, other):
        return BinOp("+", _as_node(other), self)

    def __sub__(self, other):
        return BinOp("-", self, _as_node(other))

    def __rsub__(self, other):
        return BinOp("-", _as_node(other), self)

    def __mul__(self, other):
        return BinOp("*", self, _as_node(other))

    def __rmul__(self, other):
        return BinOp("*", _as_node(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, _as_node(other))

    def __rtruediv__(self, other):
        return BinOp("/", _as_node(other), self)

    def __neg__(self):
        return Neg(self)


@dataclass(frozen=True)
class Const(_Base):
    value: complex


@dataclass(frozen=True)
class Var(_Base):
    name: str


@dataclass(frozen=True)
class Param(_Base):
    name: str


@dataclass(frozen=True)
class Neg(_Base):
    arg: "Node"


@dataclass(frozen=True)
class BinOp(_Base):
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow(_Base):
    base: "Node"
    exponent: float
    integer: bool


@dataclass(frozen=True)
class Fun(_Base):
    name: str
    arg: "Node"


Node = Union[Const, Var, Param, Neg, BinOp, Pow, Fun]


def _as_node(v) -> Node:
    if isinstance(v, _Base):
        return v
    if isinstance(v, (int, float, complex)):
        return Const(complex(v))
    raise TypeError(f"cannot coerce {type(v).__name__} to expression node")


def power(base, exponent: float) -> Pow:
    """Power node with the integer-exponent flag set from the value."""
    e = float(exponent)
    return Pow(_as_node(base), e, float(e).is_integer())


@dataclass(frozen=True)
class PotentialExpr:
    """An expression tree together with its symbol table.

    ``variable`` names the spatial coordinate; every other identifier in the
    tree is a parameter.  ``symbols`` lists all identifiers present.
    """

    root: Node
    variable: str
    symbols: tuple[str, ...]

    def __call__(self, x, **params):
        b = dict(params)
        b[self.variable] = x
        return evaluate(self, b)


def _collect_symbols(node: Node, out: set[str]) -> None:
    if isinstance(node, (Var, Param)):
        out.add(node.name)
    elif isinstance(node, Neg):
        _collect_symbols(node.arg, out)
    elif isinstance(node, BinOp):
        _collect_symbols(node.left, out)
        _collect_symbols(node.right, out)
    elif isinstance(node, Pow):
        _collect_symbols(node.base, out)
    elif isinstance(node, Fun):
        _collect_symbols(node.arg, out)


def make_expr(root: Node, variable: str = "x") -> PotentialExpr:
    """Wrap a programmatically built AST, folding constants."""
    root = constant_fold(root)
    syms: set[str] = set()
    _collect_symbols(root, syms)
    return PotentialExpr(root, variable, tuple(sorted(syms)))


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_TOK_NUM = "num"
_TOK_IDENT = "ident"
_TOK_OP = "op"
_TOK_END = "end"


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            seen_exp = False
            while j < n:
                d = text[j]
                if d.isdigit():
                    j += 1
                elif d == "." and not seen_dot and not seen_exp:
                    seen_dot = True
                    j += 1
                elif d in "eE" and not seen_exp and j > i and j + 1 < n and (
                    text[j + 1].isdigit() or (text[j + 1] in "+-" and j + 2 < n and text[j + 2].isdigit())
                ):
                    seen_exp = True
                    j += 2 if text[j + 1] in "+-" else 1
                else:
                    break
            toks.append((_TOK_NUM, text[i:j], i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append((_TOK_IDENT, text[i:j], i))
            i = j
        elif c in "+-*/^()":
            toks.append((_TOK_OP, c, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {c!r}", i)
    toks.append((_TOK_END, "", n))
    return toks


class _Parser:
    def __init__(self, text: str, variable: str):
        self.text = text
        self.variable = variable
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def advance(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect_op(self, op: str):
        kind, val, off = self.peek()
        if kind != _TOK_OP or val != op:
            raise ParseError(f"expected {op!r}", off)
        return self.advance()

    def parse_sum(self) -> Node:
        node = self.parse_term()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val in "+-":
                self.advance()
                rhs = self.parse_term()
                node = BinOp(val, node, rhs)
            else:
                return node

    def parse_term(self) -> Node:
        node = self.parse_unary()
        while True:
            kind, val, _ = self.peek()
            if kind == _TOK_OP and val in "*/":
                self.advance()
                rhs = self.parse_unary()
                node = BinOp(val, node, rhs)
            else:
                return node

    def parse_unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == _TOK_OP and val == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Node:
        base = self.parse_atom()
        kind, val, off = self.peek()
        if kind == _TOK_OP and val == "^":
            self.advance()
            exponent, exp_off = self.parse_exponent()
            integer = float(exponent).is_integer()
            if not integer and isinstance(base, (Var, Param)):
                raise ParseError(
                    "non-integer power of a bare identifier is ambiguous for negative "
                    "values; write abs(x)^p for even symmetry or sgn(x)*abs(x)^p for odd",
                    exp_off,
                )
            return Pow(base, float(exponent), integer)
        return base

    def parse_exponent(self) -> tuple[float, int]:
        # number | '-' number | '(' ['-'] number ['/' number] ')'
        kind, val, off = self.peek()
        sign = 1.0
        parenthesized = False
        if kind == _TOK_OP and val == "(":
            parenthesized = True
            self.advance()
            kind, val, off = self.peek()
        if kind == _TOK_OP and val == "-":
            sign = -1.0
            self.advance()
            kind, val, off = self.peek()
        if kind != _TOK_NUM:
            raise ParseError("expected numeric exponent", off)
        self.advance()
        result = sign * float(val)
        if parenthesized:
            kind, v2, _ = self.peek()
            if kind == _TOK_OP and v2 == "/":
                self.advance()
                kind, v3, off3 = self.peek()
                if kind != _TOK_NUM:
                    raise ParseError("expected numeric denominator in exponent", off3)
                self.advance()
                result /= float(v3)
            self.expect_op(")")
        return result, off

    def parse_atom(self) -> Node:
        kind, val, off = self.peek()
        if kind == _TOK_NUM:
            self.advance()
            return Const(complex(float(val)))
        if kind == _TOK_IDENT:
            self.advance()
            if val == "i":
                return Const(1j)
            nkind, nval, _ = self.peek()
            if nkind == _TOK_OP and nval == "(":
                if val not in FUNCTIONS:
                    raise ParseError(f"unknown function {val!r}", off)
                self.advance()
                arg = self.parse_sum()
                self.expect_op(")")
                return Fun(val, arg)
            if val == self.variable:
                return Var(val)
            return Param(val)
        if kind == _TOK_OP and val == "(":
            self.advance()
            node = self.parse_sum()
            self.expect_op(")")
            return node
        raise ParseError("expected expression", off)


def parse(text: str, variable: str = "x") -> PotentialExpr:
    """Parse expression text; ``variable`` names the spatial coordinate."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(text, variable)
    root = p.parse_sum()
    kind, val, off = p.peek()
    if kind != _TOK_END:
        raise ParseError(f"unexpected trailing input {val!r}", off)
    root = constant_fold(root)
    syms: set[str] = set()
    _collect_symbols(root, syms)
    return PotentialExpr(root, variable, tuple(sorted(syms)))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _require_real(z: complex, fname: str) -> float:
    if abs(z.imag) > _REAL_TOL * (1.0 + abs(z)):
        raise EvalError(f"{fname} applied to non-real argument {z}")
    return z.real


def _eval_node(node: Node, b: dict) -> complex:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, (Var, Param)):
        try:
            return complex(b[node.name])
        except KeyError:
            raise EvalError(f"unbound identifier {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval_node(node.arg, b)
    if isinstance(node, BinOp):
        lhs = _eval_node(node.left, b)
        rhs = _eval_node(node.right, b)
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            return lhs * rhs
        if rhs == 0:
            raise EvalError("division by zero")
        return lhs / rhs
    if isinstance(node, Pow):
        base = _eval_node(node.base, b)
        if node.integer:
            return base ** int(node.exponent)
        if base == 0 and node.exponent < 0:
            raise EvalError("zero base with negative exponent")
        return base ** node.exponent
    if isinstance(node, Fun):
        v = _eval_node(node.arg, b)
        f = node.name
        if f == "exp":
            return cmath.exp(v)
        if f == "log":
            if v == 0:
                raise EvalError("log(0)")
            return cmath.log(v)
        if f == "sin":
            return cmath.sin(v)
        if f == "cos":
            return cmath.cos(v)
        if f == "sqrt":
            return cmath.sqrt(v)
        if f == "abs":
            return complex(abs(_require_real(v, "abs")))
        if f == "sgn":
            x = _require_real(v, "sgn")
            return complex(0.0 if x == 0 else math.copysign(1.0, x))
    raise EvalError(f"unknown node {node!r}")


def evaluate(e: Union[PotentialExpr, Node], bindings: dict) -> complex:
    """Evaluate at a point.  Fails loudly on unbound identifiers."""
    node = e.root if isinstance(e, PotentialExpr) else e
    return _eval_node(node, bindings)


def _eval_vec(node: Node, b: dict) -> np.ndarray:
    if isinstance(node, Const):
        return np.asarray(node.value, dtype=complex)
    if isinstance(node, (Var, Param)):
        try:
            return np.asarray(b[node.name], dtype=complex)
        except KeyError:
            raise EvalError(f"unbound identifier {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval_vec(node.arg, b)
    if isinstance(node, BinOp):
        lhs = _eval_vec(node.left, b)
        rhs = _eval_vec(node.right, b)
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            return lhs * rhs
        if np.any(rhs == 0):
            raise EvalError("division by zero")
        return lhs / rhs
    if isinstance(node, Pow):
        base = _eval_vec(node.base, b)
        if node.integer:
            return base ** int(node.exponent)
        if node.exponent < 0 and np.any(base == 0):
            raise EvalError("zero base with negative exponent")
        return base ** node.exponent
    if isinstance(node, Fun):
        v = _eval_vec(node.arg, b)
        f = node.name
        if f == "exp":
            return np.exp(v)
        if f == "log":
            if np.any(v == 0):
                raise EvalError("log(0)")
            return np.log(v)
        if f == "sin":
            return np.sin(v)
        if f == "cos":
            return np.cos(v)
        if f == "sqrt":
            return np.sqrt(v)
        # abs/sgn need (near-)real input
        if np.any(np.abs(v.imag) > _REAL_TOL * (1.0 + np.abs(v))):
            raise EvalError(f"{f} applied to non-real argument")
        x = v.real
        if f == "abs":
            return np.abs(x).astype(complex)
        return np.sign(x).astype(complex)
    raise EvalError(f"unknown node {node!r}")


def evaluate_array(e: Union[PotentialExpr, Node], name: str, xs: np.ndarray, params: dict | None = None) -> np.ndarray:
    """Vectorized evaluation over an array bound to ``name``."""
    node = e.root if isinstance(e, PotentialExpr) else e
    b = dict(params or {})
    b[name] = np.asarray(xs)
    out = _eval_vec(node, b)
    return np.broadcast_to(out, np.shape(xs)).astype(complex) if out.shape != np.shape(xs) else out


# ---------------------------------------------------------------------------
# differentiation and folding
# ---------------------------------------------------------------------------

_ZERO = Const(0j)
_ONE = Const(1 + 0j)


def _diff(node: Node, var: str) -> Node:
    if isinstance(node, Const):
        return _ZERO
    if isinstance(node, (Var, Param)):
        return _ONE if node.name == var else _ZERO
    if isinstance(node, Neg):
        return Neg(_diff(node.arg, var))
    if isinstance(node, BinOp):
        lu = _diff(node.left, var)
        ru = _diff(node.right, var)
        if node.op == "+":
            return BinOp("+", lu, ru)
        if node.op == "-":
            return BinOp("-", lu, ru)
        if node.op == "*":
            return BinOp("+", BinOp("*", lu, node.right), BinOp("*", node.left, ru))
        # quotient rule
        num = BinOp("-", BinOp("*", lu, node.right), BinOp("*", node.left, ru))
        den = Pow(node.right, 2.0, True)
        return BinOp("/", num, den)
    if isinstance(node, Pow):
        du = _diff(node.base, var)
        p = node.exponent
        inner = Pow(node.base, p - 1.0, node.integer)
        return BinOp("*", BinOp("*", Const(complex(p)), inner), du)
    if isinstance(node, Fun):
        du = _diff(node.arg, var)
        u = node.arg
        f = node.name
        if f == "exp":
            outer: Node = Fun("exp", u)
        elif f == "log":
            outer = BinOp("/", _ONE, u)
        elif f == "sin":
            outer = Fun("cos", u)
        elif f == "cos":
            outer = Neg(Fun("sin", u))
        elif f == "sqrt":
            outer = BinOp("/", _ONE, BinOp("*", Const(2 + 0j), Fun("sqrt", u)))
        elif f == "abs":
            outer = Fun("sgn", u)
        elif f == "sgn":
            return _ZERO
        else:
            raise EvalError(f"unknown function {f!r}")
        return BinOp("*", outer, du)
    raise EvalError(f"unknown node {node!r}")


def differentiate(e: Union[PotentialExpr, Node], var: str) -> Union[PotentialExpr, Node]:
    """Symbolic derivative with respect to ``var``, constants folded."""
    if isinstance(e, PotentialExpr):
        d = constant_fold(_diff(e.root, var))
        syms: set[str] = set()
        _collect_symbols(d, syms)
        return PotentialExpr(d, e.variable, tuple(sorted(syms)))
    return constant_fold(_diff(e, var))


def _is_const(node: Node, value=None) -> bool:
    return isinstance(node, Const) and (value is None or node.value == value)


def constant_fold(node: Node) -> Node:
    """Fold constant subtrees and arithmetic identities.  No other rewriting."""
    if isinstance(node, (Const, Var, Param)):
        return node
    if isinstance(node, Neg):
        a = constant_fold(node.arg)
        if isinstance(a, Const):
            return Const(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(node, BinOp):
        l = constant_fold(node.left)
        r = constant_fold(node.right)
        if isinstance(l, Const) and isinstance(r, Const):
            if node.op == "+":
                return Const(l.value + r.value)
            if node.op == "-":
                return Const(l.value - r.value)
            if node.op == "*":
                return Const(l.value * r.value)
            if r.value != 0:
                return Const(l.value / r.value)
            return BinOp("/", l, r)  # leave the division-by-zero for eval to report
        if node.op == "+":
            if _is_const(l, 0):
                return r
            if _is_const(r, 0):
                return l
        elif node.op == "-":
            if _is_const(r, 0):
                return l
            if _is_const(l, 0):
                return Neg(r) if not isinstance(r, Const) else Const(-r.value)
        elif node.op == "*":
            if _is_const(l, 0) or _is_const(r, 0):
                return _ZERO
            if _is_const(l, 1):
                return r
            if _is_const(r, 1):
                return l
        elif node.op == "/":
            if _is_const(l, 0):
                return _ZERO
            if _is_const(r, 1):
                return l
        return BinOp(node.op, l, r)
    if isinstance(node, Pow):
        base = constant_fold(node.base)
        if node.exponent == 0:
            return _ONE
        if node.exponent == 1:
            return base
        if isinstance(base, Const):
            if node.integer:
                return Const(base.value ** int(node.exponent))
            if base.value != 0:
                return Const(base.value ** node.exponent)
        return Pow(base, node.exponent, node.integer)
    if isinstance(node, Fun):
        arg = constant_fold(node.arg)
        if isinstance(arg, Const):
            try:
                return Const(_eval_node(Fun(node.name, arg), {}))
            except EvalError:
                pass
        return Fun(node.name, arg)
    raise EvalError(f"unknown node {node!r}")


def substitute(node: Node, name: str, replacement: Node) -> Node:
    """Replace every Var/Param named ``name`` by ``replacement`` (no folding)."""
    if isinstance(node, (Var, Param)):
        return replacement if node.name == name else node
    if isinstance(node, Const):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, name, replacement))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, name, replacement), substitute(node.right, name, replacement))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, name, replacement), node.exponent, node.integer)
    if isinstance(node, Fun):
        return Fun(node.name, substitute(node.arg, name, replacement))
    raise EvalError(f"unknown node {node!r}")


def uses_kink_functions(e: Union[PotentialExpr, Node]) -> bool:
    """True when the tree contains abs or sgn (kink at the origin)."""
    node = e.root if isinstance(e, PotentialExpr) else e
    if isinstance(node, Fun):
        if node.name in ("abs", "sgn"):
            return True
        return uses_kink_functions(node.arg)
    if isinstance(node, Neg):
        return uses_kink_functions(node.arg)
    if isinstance(node, BinOp):
        return uses_kink_functions(node.left) or uses_kink_functions(node.right)
    if isinstance(node, Pow):
        return uses_kink_functions(node.base)
    return False


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

def _fmt_real(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_const(c: complex) -> str:
    re, im = c.real, c.imag
    if im == 0:
        return _fmt_real(re) if re >= 0 else f"(-{_fmt_real(-re)})"
    if re == 0:
        if im == 1:
            return "i"
        if im == -1:
            return "(-i)"
        if im > 0:
            return f"({_fmt_real(im)}*i)"
        return f"(-{_fmt_real(-im)}*i)"
    im_part = f"+ {_fmt_real(im)}*i" if im > 0 else f"- {_fmt_real(-im)}*i"
    re_part = _fmt_real(re) if re >= 0 else f"-{_fmt_real(-re)}"
    return f"({re_part} {im_part})"


# precedence levels for printing: sum 1, product 2, unary 3, power 4, atom 5
def _print(node: Node, parent_level: int) -> str:
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Neg):
        s = f"-{_print(node.arg, 3)}"
        return f"({s})" if parent_level > 3 else s
    if isinstance(node, BinOp):
        level = 1 if node.op in "+-" else 2
        # right child needs a bump for non-associative - and /
        ls = _print(node.left, level)
        rs = _print(node.right, level + (1 if node.op in "-/" else 0))
        s = f"{ls} {node.op} {rs}" if level == 1 else f"{ls}{node.op}{rs}"
        return f"({s})" if parent_level > level else s
    if isinstance(node, Pow):
        bs = _print(node.base, 5)
        e = node.exponent
        if node.integer and e >= 0:
            es = str(int(e))
        else:
            es = f"({_fmt_real(e)})" if e < 0 or not node.integer else str(int(e))
        s = f"{bs}^{es}"
        return f"({s})" if parent_level > 4 else s
    if isinstance(node, Fun):
        return f"{node.name}({_print(node.arg, 1)})"
    raise EvalError(f"unknown node {node!r}")


def to_string(e: Union[PotentialExpr, Node]) -> str:
    """Canonical printable form; parse(to_string(e)) folds back to e."""
    node = e.root if isinstance(e, PotentialExpr) else e
    return _print(node, 1)
