# bernreach/dynamics.py
"""
Plant dynamics: expression ASTs, their parser and printer, three evaluation
backends (float/numpy, interval, Taylor model) and symbolic Lie derivatives.

Grammar:
    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' uint)?
    base   := number | ident | ('sin' | 'cos') '(' expr ')' | '(' expr ')'

'^' binds tighter than unary minus, which binds tighter than '*' and '/'.
Divisors must be non-zero numeric literals.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from bernreach import ReachError
from bernreach.interval import Box, Interval, iv_cos, iv_div_scalar, iv_pow, iv_sin
from bernreach.poly import MultiPoly, poly_add, poly_mul, poly_scale
from bernreach.taylor import (
    TaylorModel,
    tm_add,
    tm_const,
    tm_div_const,
    tm_elem_cos,
    tm_elem_sin,
    tm_mul,
    tm_neg,
    tm_pow,
    tm_sub,
)

logger = logging.getLogger(__name__)

FUNCTIONS = ("sin", "cos")


class DynamicsError(ReachError):
    """Raised on inconsistent system definitions."""


class ExprSyntaxError(DynamicsError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnboundVariableError(DynamicsError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable '{name}'")
        self.name = name


# ==============================================================================
# AST
# ==============================================================================


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Num


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, (Add, Sub, Mul)):
            stack += [node.left, node.right]
        elif isinstance(node, (Neg, Sin, Cos)):
            stack.append(node.arg)
        elif isinstance(node, Div):
            stack.append(node.left)
        elif isinstance(node, Pow):
            stack.append(node.base)
    return out


# ==============================================================================
# PARSER AND PRINTER
# ==============================================================================

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    raw = text.encode("utf-8")

    def byte_offset(i: int) -> int:
        return len(text[:i].encode("utf-8"))

    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character '{text[start]}'", byte_offset(start))
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), byte_offset(m.start(kind))))
        pos = m.end()
    tokens.append(_Token("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str] | None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables = None if variables is None else set(variables)

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> _Token:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected '{text}', found '{found}'", self.tok.offset)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected token '{self.tok.text}'", self.tok.offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            start = self.tok.offset
            rhs = self.factor()
            if op == "*":
                e = Mul(e, rhs)
                continue
            divisor = _literal_value(rhs)
            if divisor is None:
                raise ExprSyntaxError("division by a non-literal", start)
            if divisor == 0.0:
                raise ExprSyntaxError("division by zero", start)
            e = Div(e, Num(divisor))
        return e

    def factor(self) -> Expr:
        if self.tok.text == "-":
            self.advance()
            return Neg(self.factor())
        base = self.base()
        if self.tok.text == "^":
            self.advance()
            t = self.tok
            if t.kind != "num" or not t.text.isdigit():
                raise ExprSyntaxError(f"exponent must be a non-negative integer, found '{t.text or 'end of input'}'", t.offset)
            self.advance()
            return Pow(base, int(t.text))
        return base

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "ident":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Sin(arg) if t.text == "sin" else Cos(arg)
            if self.variables is not None and t.text not in self.variables:
                raise ExprSyntaxError(f"unknown identifier '{t.text}'", t.offset)
            return Var(t.text)
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        found = t.text or "end of input"
        raise ExprSyntaxError(f"unexpected token '{found}'", t.offset)


def _literal_value(e: Expr) -> float | None:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        inner = _literal_value(e.arg)
        return None if inner is None else -inner
    return None


def parse_expr(text: str, variables: Sequence[str] | None = None) -> Expr:
    """Parse text; identifiers are checked against variables when given."""
    return _Parser(text, variables).parse()


def _num_text(v: float) -> str:
    s = repr(float(v))
    return f"({s})" if v < 0 or s.startswith("-") else s


def print_expr(e: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{print_expr(e.arg)})"
    if isinstance(e, Add):
        return f"({print_expr(e.left)} + {print_expr(e.right)})"
    if isinstance(e, Sub):
        return f"({print_expr(e.left)} - {print_expr(e.right)})"
    if isinstance(e, Mul):
        return f"({print_expr(e.left)} * {print_expr(e.right)})"
    if isinstance(e, Div):
        return f"({print_expr(e.left)} / {_num_text(e.right.value)})"
    if isinstance(e, Pow):
        return f"({print_expr(e.base)}^{e.exp})"
    if isinstance(e, Sin):
        return f"sin({print_expr(e.arg)})"
    if isinstance(e, Cos):
        return f"cos({print_expr(e.arg)})"
    raise DynamicsError(f"unknown expression node {e!r}")


# ==============================================================================
# EVALUATION BACKENDS
# ==============================================================================


def _evaluate(e: Expr, lookup: Callable[[str], object], ops: dict, memo: dict) -> object:
    key = id(e)
    if key in memo:
        return memo[key][1]
    if isinstance(e, Num):
        value = ops["num"](e.value)
    elif isinstance(e, Var):
        value = lookup(e.name)
    elif isinstance(e, Neg):
        value = ops["neg"](_evaluate(e.arg, lookup, ops, memo))
    elif isinstance(e, Add):
        value = ops["add"](_evaluate(e.left, lookup, ops, memo), _evaluate(e.right, lookup, ops, memo))
    elif isinstance(e, Sub):
        value = ops["sub"](_evaluate(e.left, lookup, ops, memo), _evaluate(e.right, lookup, ops, memo))
    elif isinstance(e, Mul):
        value = ops["mul"](_evaluate(e.left, lookup, ops, memo), _evaluate(e.right, lookup, ops, memo))
    elif isinstance(e, Div):
        value = ops["div"](_evaluate(e.left, lookup, ops, memo), e.right.value)
    elif isinstance(e, Pow):
        value = ops["pow"](_evaluate(e.base, lookup, ops, memo), e.exp)
    elif isinstance(e, Sin):
        value = ops["sin"](_evaluate(e.arg, lookup, ops, memo))
    elif isinstance(e, Cos):
        value = ops["cos"](_evaluate(e.arg, lookup, ops, memo))
    else:
        raise DynamicsError(f"unknown expression node {e!r}")
    # keep e alive so its id stays unique while memoized
    memo[key] = (e, value)
    return value


def _binding(*envs: Mapping[str, object]) -> Callable[[str], object]:
    def lookup(name: str) -> object:
        for env in envs:
            if name in env:
                return env[name]
        raise UnboundVariableError(name)

    return lookup


_FLOAT_OPS = {
    "num": lambda v: v,
    "neg": lambda a: -a,
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, c: a / c,
    "pow": lambda a, n: a**n,
    "sin": np.sin,
    "cos": np.cos,
}

_INTERVAL_OPS = {
    "num": lambda v: Interval(v, v),
    "neg": lambda a: -a,
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": iv_div_scalar,
    "pow": iv_pow,
    "sin": iv_sin,
    "cos": iv_cos,
}


def expr_eval(e: Expr, x: Mapping[str, object], u: Mapping[str, object] | None = None):
    """Float evaluation; array bindings evaluate element-wise."""
    return _evaluate(e, _binding(x, u or {}), _FLOAT_OPS, {})


def expr_interval_eval(e: Expr, x: Mapping[str, Interval], u: Mapping[str, Interval] | None = None) -> Interval:
    return _evaluate(e, _binding(x, u or {}), _INTERVAL_OPS, {})


def expr_tm_eval(
    e: Expr,
    x_tms: Mapping[str, TaylorModel],
    u_tms: Mapping[str, TaylorModel] | None = None,
    order: int | None = None,
    memo: dict | None = None,
) -> TaylorModel:
    """Taylor-model evaluation; all bindings must share one domain."""
    bindings = {**(u_tms or {}), **x_tms}
    if not bindings:
        raise DynamicsError("Taylor-model evaluation needs at least one binding")
    ref = next(iter(bindings.values()))
    k = order or ref.order
    ops = {
        "num": lambda v: tm_const(v, ref.vars, ref.domain, k),
        "neg": tm_neg,
        "add": tm_add,
        "sub": tm_sub,
        "mul": lambda a, b: tm_mul(a, b, k),
        "div": tm_div_const,
        "pow": lambda a, n: tm_pow(a, n, k),
        "sin": lambda a: tm_elem_sin(a, k),
        "cos": lambda a: tm_elem_cos(a, k),
    }
    return _evaluate(e, _binding(x_tms, u_tms or {}), ops, memo if memo is not None else {})


# ==============================================================================
# DIFFERENTIATION AND SIMPLIFICATION
# ==============================================================================

ZERO = Num(0.0)
ONE = Num(1.0)


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def s_add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Add(a, b)


def s_neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def s_sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return s_neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Sub(a, b)


def s_mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return s_neg(b)
    if _is(b, -1.0):
        return s_neg(a)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Mul(a, b)


def s_div(a: Expr, c: float) -> Expr:
    if c == 1.0:
        return a
    if isinstance(a, Num):
        return Num(a.value / c)
    return Div(a, Num(c))


def s_pow(b: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return b
    if isinstance(b, Num):
        return Num(b.value**n)
    return Pow(b, n)


def diff(e: Expr, var: str, memo: dict | None = None) -> Expr:
    """∂e/∂var with constant folding and 0/1 elimination."""
    memo = {} if memo is None else memo
    key = id(e)
    if key in memo:
        return memo[key][1]
    if isinstance(e, Num):
        out = ZERO
    elif isinstance(e, Var):
        out = ONE if e.name == var else ZERO
    elif isinstance(e, Neg):
        out = s_neg(diff(e.arg, var, memo))
    elif isinstance(e, Add):
        out = s_add(diff(e.left, var, memo), diff(e.right, var, memo))
    elif isinstance(e, Sub):
        out = s_sub(diff(e.left, var, memo), diff(e.right, var, memo))
    elif isinstance(e, Mul):
        out = s_add(s_mul(diff(e.left, var, memo), e.right), s_mul(e.left, diff(e.right, var, memo)))
    elif isinstance(e, Div):
        out = s_div(diff(e.left, var, memo), e.right.value)
    elif isinstance(e, Pow):
        out = s_mul(s_mul(Num(float(e.exp)), s_pow(e.base, e.exp - 1)), diff(e.base, var, memo))
    elif isinstance(e, Sin):
        out = s_mul(Cos(e.arg), diff(e.arg, var, memo))
    elif isinstance(e, Cos):
        out = s_mul(s_neg(Sin(e.arg)), diff(e.arg, var, memo))
    else:
        raise DynamicsError(f"unknown expression node {e!r}")
    memo[key] = (e, out)
    return out


def _to_poly(e: Expr, names: tuple[str, ...], memo: dict) -> MultiPoly | None:
    """Exact polynomial form of a sin/cos-free subtree, else None."""
    key = id(e)
    if key in memo:
        return memo[key][1]
    if isinstance(e, Num):
        out = MultiPoly.constant(names, e.value)
    elif isinstance(e, Var):
        out = MultiPoly.variable(names, e.name)
    elif isinstance(e, Neg):
        a = _to_poly(e.arg, names, memo)
        out = None if a is None else poly_scale(a, -1.0)
    elif isinstance(e, (Add, Sub, Mul)):
        a = _to_poly(e.left, names, memo)
        b = _to_poly(e.right, names, memo)
        if a is None or b is None:
            out = None
        elif isinstance(e, Add):
            out = poly_add(a, b)
        elif isinstance(e, Sub):
            out = poly_add(a, poly_scale(b, -1.0))
        else:
            out = poly_mul(a, b)
    elif isinstance(e, Div):
        a = _to_poly(e.left, names, memo)
        out = None if a is None else poly_scale(a, 1.0 / e.right.value)
    elif isinstance(e, Pow):
        a = _to_poly(e.base, names, memo)
        if a is None:
            out = None
        else:
            out = MultiPoly.constant(names, 1.0)
            for _ in range(e.exp):
                out = poly_mul(out, a)
    else:
        out = None
    memo[key] = (e, out)
    return out


def poly_to_expr(p: MultiPoly) -> Expr:
    """Canonical sum of monomials, highest degree first."""
    out: Expr | None = None
    for exp in sorted(p.terms, key=lambda e: (-sum(e), tuple(-v for v in e))):
        c = p.terms[exp]
        mono: Expr | None = None
        for name, k in zip(p.vars, exp):
            if k == 0:
                continue
            factor = Var(name) if k == 1 else Pow(Var(name), k)
            mono = factor if mono is None else Mul(mono, factor)
        mag = abs(c)
        if mono is None:
            term: Expr = Num(mag)
        elif mag == 1.0:
            term = mono
        else:
            term = Mul(Num(mag), mono)
        if out is None:
            out = term if c > 0 else Neg(term)
        else:
            out = Add(out, term) if c > 0 else Sub(out, term)
    return out if out is not None else ZERO


def simplify(e: Expr, names: Sequence[str] | None = None) -> Expr:
    """Collect every maximal sin/cos-free subtree into canonical polynomial form."""
    vars = tuple(sorted(free_vars(e))) if names is None else tuple(names)
    memo: dict = {}

    def walk(node: Expr) -> Expr:
        p = _to_poly(node, vars, memo)
        if p is not None:
            return poly_to_expr(p)
        if isinstance(node, Add):
            return s_add(walk(node.left), walk(node.right))
        if isinstance(node, Sub):
            return s_sub(walk(node.left), walk(node.right))
        if isinstance(node, Mul):
            return s_mul(walk(node.left), walk(node.right))
        if isinstance(node, Neg):
            return s_neg(walk(node.arg))
        if isinstance(node, Div):
            return s_div(walk(node.left), node.right.value)
        if isinstance(node, Pow):
            return s_pow(walk(node.base), node.exp)
        if isinstance(node, Sin):
            return Sin(walk(node.arg))
        if isinstance(node, Cos):
            return Cos(walk(node.arg))
        return node

    return walk(e)


def lie_derivative(e: Expr, field: Mapping[str, Expr] | Sequence[Expr], state_vars: Sequence[str] | None = None) -> Expr:
    """Σ_i ∂e/∂x_i · field_i; variables missing from field (controls) are constants."""
    if not isinstance(field, Mapping):
        if state_vars is None:
            raise DynamicsError("a positional field needs state variable names")
        if len(state_vars) != len(field):
            raise DynamicsError(f"{len(field)} field entries for {len(state_vars)} state variables")
        field = dict(zip(state_vars, field))
    acc: Expr = ZERO
    for name, fi in field.items():
        acc = s_add(acc, s_mul(diff(e, name), fi))
    names = set(free_vars(e)) | set(field)
    for fi in field.values():
        names |= free_vars(fi)
    return simplify(acc, tuple(sorted(names)))


# ==============================================================================
# SYSTEMS
# ==============================================================================


@dataclass(frozen=True, eq=False)
class SystemSpec:
    state_vars: tuple[str, ...]
    rhs: tuple[Expr, ...]
    control_step: float
    steps: int
    init: Box
    goal: Box
    control_vars: tuple[str, ...] = ("u",)
    name: str = "system"
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.state_vars)
        if n == 0:
            raise DynamicsError("a system needs at least one state variable")
        if len(set(self.state_vars) | set(self.control_vars)) != n + len(self.control_vars):
            raise DynamicsError("state and control variable names must be distinct")
        if len(self.rhs) != n:
            raise DynamicsError(f"{len(self.rhs)} right-hand sides for {n} state variables")
        if not self.control_step > 0.0:
            raise DynamicsError(f"control step must be positive, got {self.control_step}")
        if self.steps < 1:
            raise DynamicsError(f"step count must be >= 1, got {self.steps}")
        if len(self.init) != n:
            raise DynamicsError(f"init has {len(self.init)} dimensions, system has {n}")
        if len(self.goal) != n:
            raise DynamicsError(f"goal has {len(self.goal)} dimensions, system has {n}")
        known = set(self.state_vars) | set(self.control_vars)
        for name, e in zip(self.state_vars, self.rhs):
            unknown = free_vars(e) - known
            if unknown:
                raise DynamicsError(f"d{name}/dt uses undeclared variables {sorted(unknown)}")

    @property
    def dim(self) -> int:
        return len(self.state_vars)

    @property
    def control_dim(self) -> int:
        return len(self.control_vars)

    @property
    def field(self) -> dict[str, Expr]:
        return dict(zip(self.state_vars, self.rhs))

    def rhs_eval(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """f(x, u) for x of shape (..., n) and u of shape (..., m)."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        env_x = {name: x[..., j] for j, name in enumerate(self.state_vars)}
        env_u = {name: u[..., j] for j, name in enumerate(self.control_vars)}
        shape = x.shape[:-1]
        cols = [np.broadcast_to(np.asarray(expr_eval(e, env_x, env_u), dtype=float), shape) for e in self.rhs]
        return np.stack(cols, axis=-1)

    def rhs_interval(self, X: Box, U: Box) -> list[Interval]:
        env_x = dict(zip(self.state_vars, X))
        env_u = dict(zip(self.control_vars, U))
        return [expr_interval_eval(e, env_x, env_u) for e in self.rhs]


def lie_series(sys: SystemSpec, order: int) -> dict[str, list[Expr]]:
    """For each state variable, [x, L x, L² x, ..., L^order x]."""
    out = {}
    field = sys.field
    for name in sys.state_vars:
        series: list[Expr] = [Var(name)]
        for _ in range(order):
            series.append(lie_derivative(series[-1], field))
        out[name] = series
        logger.debug(f"[DYNAMICS] Lie series of {name} to order {order}")
    return out
