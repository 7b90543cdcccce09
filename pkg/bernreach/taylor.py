# bernreach/taylor.py
"""
Taylor models: a polynomial over a domain box plus an interval remainder.

A TaylorModel (p, I) over D represents any f with f(x) ∈ p(x) + I for every
x ∈ D. Polynomial coefficients are floats, so each operation adds a small
rounding slack to the remainder to keep that contract.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from bernreach import ReachError
from bernreach.interval import (
    Box,
    Interval,
    _down,
    _prod_err,
    _sum_err,
    _up,
    iv_div_scalar,
    iv_scale,
    symmetric,
)
from bernreach.poly import (
    MultiPoly,
    poly_add,
    poly_bound,
    poly_eval,
    poly_extend,
    poly_magnitude,
    poly_mul,
    poly_scale,
    poly_split,
    poly_substitute,
)

_EPS = float(np.finfo(float).eps)


class TaylorModelError(ReachError):
    """Raised on mismatched domains, arity errors or invalid orders."""


@dataclass(frozen=True, eq=False)
class TaylorModel:
    poly: MultiPoly
    rem: Interval
    domain: Box
    order: int

    def __post_init__(self) -> None:
        if self.order < 1:
            raise TaylorModelError(f"Taylor model order must be >= 1, got {self.order}")
        if len(self.domain) != len(self.poly.vars):
            raise TaylorModelError(f"domain has {len(self.domain)} dimensions for variables {self.poly.vars}")
        if self.poly.degree > self.order:
            raise TaylorModelError(f"polynomial degree {self.poly.degree} exceeds order {self.order}")

    @property
    def vars(self) -> tuple[str, ...]:
        return self.poly.vars

    def with_rem(self, rem: Interval) -> "TaylorModel":
        return TaylorModel(self.poly, rem, self.domain, self.order)


def _same_space(a: TaylorModel, b: TaylorModel) -> None:
    if a.vars != b.vars or a.domain != b.domain:
        raise TaylorModelError(f"Taylor model domains differ: {a.vars} over {a.domain} vs {b.vars} over {b.domain}")


def _abs_poly(p: MultiPoly, errors: dict) -> MultiPoly:
    return MultiPoly._raw(p.vars, {e: abs(v) for e, v in errors.items()})


def tm_const(c: float, vars: Sequence[str], domain: Box, order: int) -> TaylorModel:
    return TaylorModel(MultiPoly.constant(vars, c), Interval(0.0, 0.0), domain, order)


def tm_var(name: str, vars: Sequence[str], domain: Box, order: int) -> TaylorModel:
    return TaylorModel(MultiPoly.variable(vars, name), Interval(0.0, 0.0), domain, order)


def tm_identity(box: Box, names: Sequence[str], order: int, suffix: str = "_0") -> list[TaylorModel]:
    """TMs x_j = mid_j + rad_j·s_j over normalized variables s_j ∈ [-1, 1]."""
    if len(names) != len(box):
        raise TaylorModelError(f"{len(names)} names for a {len(box)}-dimensional box")
    vars = tuple(f"{n}{suffix}" for n in names)
    domain = Box.from_pairs([(-1.0, 1.0)] * len(vars))
    out = []
    for j, iv in enumerate(box):
        if iv.lo == iv.hi:
            out.append(tm_const(iv.lo, vars, domain, order))
            continue
        mid = 0.5 * iv.lo + 0.5 * iv.hi
        rad = iv.rad
        exp = tuple(1 if k == j else 0 for k in range(len(vars)))
        poly = MultiPoly(vars, {(0,) * len(vars): mid, exp: rad})
        slack = 2.0 * _EPS * iv.mag
        out.append(TaylorModel(poly, symmetric(slack), domain, order))
    return out


def tm_enclosure(a: TaylorModel) -> Interval:
    return poly_bound(a.poly, a.domain) + a.rem


def tm_neg(a: TaylorModel) -> TaylorModel:
    return TaylorModel(poly_scale(a.poly, -1.0), -a.rem, a.domain, a.order)


def tm_add(a: TaylorModel, b: TaylorModel) -> TaylorModel:
    _same_space(a, b)
    poly = poly_add(a.poly, b.poly)
    errors = {}
    for exp, cb in b.poly.terms.items():
        ca = a.poly.terms.get(exp)
        if ca is not None:
            s = ca + cb
            err = _sum_err(ca, cb, s)
            if err:
                errors[exp] = err
    rem = a.rem + b.rem
    if errors:
        rem = rem + symmetric(_up(poly_magnitude(_abs_poly(poly, errors), a.domain)))
    return TaylorModel(poly, rem, a.domain, max(a.order, b.order))


def tm_sub(a: TaylorModel, b: TaylorModel) -> TaylorModel:
    return tm_add(a, tm_neg(b))


def tm_add_const(a: TaylorModel, c: float) -> TaylorModel:
    return tm_add(a, tm_const(c, a.vars, a.domain, a.order))


def tm_scale(a: TaylorModel, c: float) -> TaylorModel:
    c = float(c)
    if c == 0.0:
        return tm_const(0.0, a.vars, a.domain, a.order)
    poly = poly_scale(a.poly, c)
    errors = {}
    for exp, v in a.poly.terms.items():
        err = _prod_err(v, c, v * c)
        if err != 0.0:
            errors[exp] = err if err == err else _EPS * abs(v * c)
    rem = iv_scale(a.rem, c)
    if errors:
        rem = rem + symmetric(_up(poly_magnitude(_abs_poly(poly, errors), a.domain)))
    return TaylorModel(poly, rem, a.domain, a.order)


def tm_div_const(a: TaylorModel, c: float) -> TaylorModel:
    """a / c for a non-zero literal c."""
    if c == 0.0:
        raise TaylorModelError("division by zero")
    q = 1.0 / c
    poly_part = tm_scale(TaylorModel(a.poly, Interval(0.0, 0.0), a.domain, a.order), q)
    # |1/c - q| <= eps·|q| on the polynomial part
    slack = _EPS * abs(q) * poly_magnitude(a.poly, a.domain)
    rem = poly_part.rem + iv_div_scalar(a.rem, c)
    if slack:
        rem = rem + symmetric(_up(slack))
    return poly_part.with_rem(rem)


def tm_truncate(a: TaylorModel, order: int) -> TaylorModel:
    """Drop terms above order into the remainder."""
    low, high = poly_split(a.poly, order)
    rem = a.rem if high.is_zero else a.rem + poly_bound(high, a.domain)
    return TaylorModel(low, rem, a.domain, order)


def tm_mul(a: TaylorModel, b: TaylorModel, order: int | None = None) -> TaylorModel:
    _same_space(a, b)
    k = order if order is not None else max(a.order, b.order)
    product = poly_mul(a.poly, b.poly)
    low, high = poly_split(product, k)
    rem = a.rem * b.rem
    if not high.is_zero:
        rem = rem + poly_bound(high, a.domain)
    if not (b.rem.lo == 0.0 and b.rem.hi == 0.0):
        rem = rem + poly_bound(a.poly, a.domain) * b.rem
    if not (a.rem.lo == 0.0 and a.rem.hi == 0.0):
        rem = rem + poly_bound(b.poly, b.domain) * a.rem
    if not (a.poly.is_zero or b.poly.is_zero or _exact_monomial_product(a.poly, b.poly)):
        terms = len(a.poly.terms) + len(b.poly.terms) + 2
        slack = terms * _EPS * poly_magnitude(a.poly, a.domain) * poly_magnitude(b.poly, b.domain)
        rem = rem + symmetric(_up(slack))
    return TaylorModel(low, rem, a.domain, k)


def _exact_monomial_product(p: MultiPoly, q: MultiPoly) -> bool:
    if len(p.terms) != 1 or len(q.terms) != 1:
        return False
    (ca,) = p.terms.values()
    (cb,) = q.terms.values()
    return _prod_err(ca, cb, ca * cb) == 0.0


def tm_pow(a: TaylorModel, n: int, order: int | None = None) -> TaylorModel:
    if n < 0:
        raise TaylorModelError(f"negative exponent {n}")
    k = order if order is not None else a.order
    result = tm_const(1.0, a.vars, a.domain, k)
    base = a
    while n:
        if n & 1:
            result = tm_mul(result, base, k)
        n >>= 1
        if n:
            base = tm_mul(base, base, k)
    return result


def tm_compose_poly(outer: MultiPoly, args: Sequence[TaylorModel], order: int) -> TaylorModel:
    """Enclosure of outer(f_1, ..., f_m) for any f_i represented by args[i]."""
    if len(args) != len(outer.vars):
        raise TaylorModelError(f"polynomial over {len(outer.vars)} variables composed with {len(args)} arguments")
    if not args:
        raise TaylorModelError("composition needs at least one argument")
    for arg in args[1:]:
        _same_space(args[0], arg)
    head = args[0]
    powers: list[list[TaylorModel]] = [[tm_const(1.0, head.vars, head.domain, order), arg] for arg in args]

    def power(j: int, e: int) -> TaylorModel:
        while len(powers[j]) <= e:
            powers[j].append(tm_mul(powers[j][-1], args[j], order))
        return powers[j][e]

    acc = tm_const(0.0, head.vars, head.domain, order)
    for exp, c in sorted(outer.terms.items()):
        term: TaylorModel | None = None
        for j, e in enumerate(exp):
            if e == 0:
                continue
            factor = power(j, e)
            term = factor if term is None else tm_mul(term, factor, order)
        if term is None:
            acc = tm_add_const(acc, c)
        else:
            acc = tm_add(acc, tm_scale(term, c) if c != 1.0 else term)
    return TaylorModel(acc.poly, acc.rem, acc.domain, order) if acc.poly.degree <= order else tm_truncate(acc, order)


def _tm_elem_trig(a: TaylorModel, order: int, kind: str) -> TaylorModel:
    enc = tm_enclosure(a)
    if not (math.isfinite(enc.lo) and math.isfinite(enc.hi)):
        return tm_const(0.0, a.vars, a.domain, order).with_rem(Interval(-1.0, 1.0))
    c = enc.mid
    sc, cc = math.sin(c), math.cos(c)
    derivs = [sc, cc, -sc, -cc] if kind == "sin" else [cc, -sc, -cc, sc]
    b = tm_add_const(a, -c)
    r = tm_enclosure(b).mag
    acc = tm_const(derivs[0], a.vars, a.domain, order)
    # sin(c), cos(c) and 1/i! each carry relative error below 2 eps
    coeff_slack = 0.0 if c == 0.0 else 2.0 * _EPS
    power = None
    for i in range(1, order + 1):
        power = b if power is None else tm_mul(power, b, order)
        coef = derivs[i % 4] / math.factorial(i)
        if coef != 0.0:
            acc = tm_add(acc, tm_scale(power, coef))
            coeff_slack += 4.0 * _EPS * r**i / math.factorial(i)
    lagrange = r ** (order + 1) / math.factorial(order + 1)
    bound = (lagrange + coeff_slack) * (1.0 + 8.0 * _EPS)
    if bound == 0.0:
        return acc
    return acc.with_rem(acc.rem + symmetric(_up(bound)))


def tm_elem_sin(a: TaylorModel, order: int | None = None) -> TaylorModel:
    return _tm_elem_trig(a, order or a.order, "sin")


def tm_elem_cos(a: TaylorModel, order: int | None = None) -> TaylorModel:
    return _tm_elem_trig(a, order or a.order, "cos")


def tm_extend(a: TaylorModel, name: str, interval: Interval) -> TaylorModel:
    """Add a variable the model does not depend on."""
    return TaylorModel(poly_extend(a.poly, [name]), a.rem, Box(a.domain.dims + (interval,)), a.order)


def tm_substitute(a: TaylorModel, name: str, value: float) -> TaylorModel:
    """Fix variable name to value (which must lie in its domain)."""
    if name not in a.vars:
        raise TaylorModelError(f"unknown variable '{name}' (have {a.vars})")
    j = a.vars.index(name)
    if not a.domain[j].contains(value):
        raise TaylorModelError(f"value {value} outside the domain {a.domain[j]} of '{name}'")
    poly = poly_substitute(a.poly, name, value)
    fixed = Box(a.domain.dims[:j] + (Interval(value, value),) + a.domain.dims[j + 1 :])
    slack = (a.poly.degree + 2) * _EPS * poly_magnitude(a.poly, fixed)
    rest = Box(a.domain.dims[:j] + a.domain.dims[j + 1 :])
    return TaylorModel(poly, a.rem + symmetric(_up(slack)), rest, a.order)


def tm_eval(a: TaylorModel, point: Sequence[float]) -> Interval:
    """Interval containing every represented function value at point."""
    v = poly_eval(a.poly, point)
    slack = (a.poly.degree + len(a.poly.terms) + 2) * _EPS * poly_magnitude(a.poly, Box.point(point))
    return Interval(_down(v - slack), _up(v + slack)) + a.rem
