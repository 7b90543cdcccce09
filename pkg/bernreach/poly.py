# bernreach/poly.py
"""
Sparse multivariate polynomials with real coefficients.

A MultiPoly maps exponent tuples to non-zero float coefficients over a fixed,
ordered variable list. Values are treated as immutable once built.
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from bernreach import ReachError
from bernreach.interval import Box, Interval, _down, _up

_EPS = float(np.finfo(float).eps)
_EVAL_CHUNK = 8192

Exponent = tuple[int, ...]


class PolyError(ReachError):
    """Raised on ill-formed polynomials or mismatched variable spaces."""


class MultiPoly:
    __slots__ = ("vars", "terms", "_arrays")

    def __init__(self, vars: Sequence[str], terms: Mapping[Sequence[int], float] | None = None):
        names = tuple(vars)
        if len(set(names)) != len(names):
            raise PolyError(f"duplicate variable names in {names}")
        n = len(names)
        acc: dict[Exponent, float] = {}
        for exp, coeff in (terms or {}).items():
            key = tuple(int(e) for e in exp)
            if len(key) != n:
                raise PolyError(f"exponent {key} has {len(key)} entries, expected {n}")
            if any(e < 0 for e in key):
                raise PolyError(f"negative exponent in {key}")
            c = float(coeff)
            if not math.isfinite(c):
                raise PolyError(f"non-finite coefficient {coeff} for {key}")
            acc[key] = acc.get(key, 0.0) + c
        self.vars = names
        self.terms = {k: v for k, v in acc.items() if v != 0.0}
        self._arrays = None

    @classmethod
    def _raw(cls, vars: tuple[str, ...], terms: dict[Exponent, float]) -> "MultiPoly":
        obj = cls.__new__(cls)
        obj.vars = vars
        obj.terms = {k: v for k, v in terms.items() if v != 0.0}
        obj._arrays = None
        return obj

    @classmethod
    def zero(cls, vars: Sequence[str]) -> "MultiPoly":
        return cls._raw(tuple(vars), {})

    @classmethod
    def constant(cls, vars: Sequence[str], c: float) -> "MultiPoly":
        names = tuple(vars)
        return cls(names, {(0,) * len(names): c})

    @classmethod
    def variable(cls, vars: Sequence[str], name: str) -> "MultiPoly":
        names = tuple(vars)
        if name not in names:
            raise PolyError(f"unknown variable '{name}' (have {names})")
        exp = tuple(1 if v == name else 0 for v in names)
        return cls._raw(names, {exp: 1.0})

    @property
    def nvars(self) -> int:
        return len(self.vars)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def constant_term(self) -> float:
        return self.terms.get((0,) * len(self.vars), 0.0)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(exponents T×n, coefficients T) views, cached."""
        if self._arrays is None:
            n = len(self.vars)
            if self.terms:
                exps = np.array(list(self.terms.keys()), dtype=np.int64).reshape(-1, n)
                coeffs = np.array(list(self.terms.values()), dtype=float)
            else:
                exps = np.zeros((0, n), dtype=np.int64)
                coeffs = np.zeros(0, dtype=float)
            self._arrays = (exps, coeffs)
        return self._arrays

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def __add__(self, other: "MultiPoly | float") -> "MultiPoly":
        return poly_add(self, _lift(self, other))

    __radd__ = __add__

    def __sub__(self, other: "MultiPoly | float") -> "MultiPoly":
        return poly_add(self, poly_scale(_lift(self, other), -1.0))

    def __rsub__(self, other: float) -> "MultiPoly":
        return poly_add(_lift(self, other), poly_scale(self, -1.0))

    def __neg__(self) -> "MultiPoly":
        return poly_scale(self, -1.0)

    def __mul__(self, other: "MultiPoly | float") -> "MultiPoly":
        if isinstance(other, MultiPoly):
            return poly_mul(self, other)
        return poly_scale(self, float(other))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"MultiPoly({self.vars}, {format_poly(self)})"

    def __str__(self) -> str:
        return format_poly(self)


def _lift(p: MultiPoly, other: "MultiPoly | float") -> MultiPoly:
    if isinstance(other, MultiPoly):
        return other
    return MultiPoly.constant(p.vars, float(other))


def _check_space(p: MultiPoly, q: MultiPoly) -> None:
    if p.vars != q.vars:
        raise PolyError(f"variable spaces differ: {p.vars} vs {q.vars}")


def _check_dim(p: MultiPoly, n: int) -> None:
    if len(p.vars) != n:
        raise PolyError(f"polynomial has {len(p.vars)} variables, got {n} values")


def format_poly(p: MultiPoly) -> str:
    if not p.terms:
        return "0"
    parts = []
    for exp in sorted(p.terms, key=lambda e: (sum(e), e)):
        c = p.terms[exp]
        factors = [v if e == 1 else f"{v}^{e}" for v, e in zip(p.vars, exp) if e]
        parts.append("*".join([repr(c)] + factors))
    return " + ".join(parts)


def poly_eval(p: MultiPoly, x: Sequence[float]) -> float:
    _check_dim(p, len(x))
    total = 0.0
    for exp, c in p.terms.items():
        m = c
        for xj, e in zip(x, exp):
            if e:
                m *= float(xj) ** e
        total += m
    return total


def _power_columns(X: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """Monomial values N×T for points X (N×n)."""
    N, n = X.shape
    out = np.ones((N, exps.shape[0]))
    for j in range(n):
        ej = exps[:, j]
        top = int(ej.max()) if ej.size else 0
        if top == 0:
            continue
        table = X[:, j : j + 1] ** np.arange(top + 1)
        out *= table[:, ej]
    return out


def poly_eval_batch(p: MultiPoly, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_dim(p, X.shape[1])
    exps, coeffs = p.arrays()
    if coeffs.size == 0:
        return np.zeros(X.shape[0])
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], _EVAL_CHUNK):
        chunk = X[start : start + _EVAL_CHUNK]
        out[start : start + chunk.shape[0]] = _power_columns(chunk, exps) @ coeffs
    return out


def poly_add(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    _check_space(p, q)
    terms = dict(p.terms)
    for exp, c in q.terms.items():
        terms[exp] = terms.get(exp, 0.0) + c
    return MultiPoly._raw(p.vars, terms)


def poly_scale(p: MultiPoly, c: float) -> MultiPoly:
    c = float(c)
    if c == 0.0:
        return MultiPoly.zero(p.vars)
    return MultiPoly._raw(p.vars, {e: v * c for e, v in p.terms.items()})


def poly_mul(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    _check_space(p, q)
    terms: dict[Exponent, float] = {}
    q_items = list(q.terms.items())
    for ea, ca in p.terms.items():
        for eb, cb in q_items:
            key = tuple(a + b for a, b in zip(ea, eb))
            terms[key] = terms.get(key, 0.0) + ca * cb
    return MultiPoly._raw(p.vars, terms)


def poly_split(p: MultiPoly, order: int) -> tuple[MultiPoly, MultiPoly]:
    """Split into (terms of total degree ≤ order, terms above it)."""
    low, high = {}, {}
    for exp, c in p.terms.items():
        (low if sum(exp) <= order else high)[exp] = c
    return MultiPoly._raw(p.vars, low), MultiPoly._raw(p.vars, high)


def _binomial_expansion(a: float, b: float, e: int) -> list[tuple[int, float]]:
    out = []
    for i in range(e + 1):
        w = math.comb(e, i) * (a**i) * (b ** (e - i))
        if w != 0.0:
            out.append((i, w))
    return out


def poly_affine_compose(p: MultiPoly, scale: Sequence[float], shift: Sequence[float]) -> MultiPoly:
    """q(x) = p(scale ⊙ x + shift)."""
    n = len(p.vars)
    if len(scale) != n or len(shift) != n:
        raise PolyError(f"affine map needs {n} scale and shift entries")
    if any(float(s) == 0.0 for s in scale):
        raise PolyError("affine scale entries must be non-zero")
    cache: dict[tuple[int, int], list[tuple[int, float]]] = {}
    out: dict[Exponent, float] = {}
    for exp, c in p.terms.items():
        partial: dict[Exponent, float] = {(): c}
        for j, e in enumerate(exp):
            key = (j, e)
            if key not in cache:
                cache[key] = _binomial_expansion(float(scale[j]), float(shift[j]), e)
            nxt: dict[Exponent, float] = {}
            for head, v in partial.items():
                for i, w in cache[key]:
                    k = head + (i,)
                    nxt[k] = nxt.get(k, 0.0) + v * w
            partial = nxt
        for k, v in partial.items():
            out[k] = out.get(k, 0.0) + v
    return MultiPoly._raw(p.vars, out)


def _power_range(lo: float, hi: float, top: int) -> tuple[np.ndarray, np.ndarray]:
    e = np.arange(top + 1)
    mag = max(abs(lo), abs(hi))
    mig = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))
    with np.errstate(over="ignore"):
        a, b = lo**e, hi**e
        even_lo, even_hi = mig**e, mag**e
    is_even = e % 2 == 0
    plo = np.where(is_even, even_lo, np.minimum(a, b))
    phi = np.where(is_even, even_hi, np.maximum(a, b))
    return plo, phi


def poly_bound(p: MultiPoly, b: Box) -> Interval:
    """Sound enclosure of p over b by monomial-wise interval evaluation."""
    _check_dim(p, len(b))
    exps, coeffs = p.arrays()
    if coeffs.size == 0:
        return Interval(0.0, 0.0)
    T, n = exps.shape
    lo = np.ones(T)
    hi = np.ones(T)
    with np.errstate(invalid="ignore", over="ignore"):
        for j, iv in enumerate(b):
            ej = exps[:, j]
            top = int(ej.max())
            if top == 0:
                continue
            plo, phi = _power_range(iv.lo, iv.hi, top)
            a_lo, a_hi = plo[ej], phi[ej]
            cands = np.stack([lo * a_lo, lo * a_hi, hi * a_lo, hi * a_hi])
            lo, hi = cands.min(axis=0), cands.max(axis=0)
        t_lo = np.where(coeffs >= 0.0, coeffs * lo, coeffs * hi)
        t_hi = np.where(coeffs >= 0.0, coeffs * hi, coeffs * lo)
    if not (np.all(np.isfinite(t_lo)) and np.all(np.isfinite(t_hi))):
        return Interval(-math.inf, math.inf)
    scale = float(np.sum(np.maximum(np.abs(t_lo), np.abs(t_hi))))
    slack = (int(exps.sum(axis=1).max()) + n + T + 4) * _EPS * scale
    return Interval(_down(float(np.sum(t_lo)) - slack), _up(float(np.sum(t_hi)) + slack))


def poly_magnitude(p: MultiPoly, b: Box) -> float:
    """Upper bound of Σ|c_α|·max|x^α| over b."""
    _check_dim(p, len(b))
    exps, coeffs = p.arrays()
    if coeffs.size == 0:
        return 0.0
    mags = np.array([iv.mag for iv in b], dtype=float)
    with np.errstate(over="ignore"):
        mono = np.prod(mags[None, :] ** exps, axis=1) if exps.shape[1] else np.ones(coeffs.size)
        total = float(np.sum(np.abs(coeffs) * mono))
    T, n = exps.shape
    return _up(total * (1.0 + (int(exps.sum(axis=1).max()) + n + T + 4) * _EPS))


def poly_substitute(p: MultiPoly, name: str, value: float) -> MultiPoly:
    """Fix one variable to a value; the result lives over the remaining variables."""
    if name not in p.vars:
        raise PolyError(f"unknown variable '{name}' (have {p.vars})")
    j = p.vars.index(name)
    value = float(value)
    rest = p.vars[:j] + p.vars[j + 1 :]
    terms: dict[Exponent, float] = {}
    for exp, c in p.terms.items():
        key = exp[:j] + exp[j + 1 :]
        terms[key] = terms.get(key, 0.0) + c * value ** exp[j]
    return MultiPoly._raw(rest, terms)


def poly_extend(p: MultiPoly, names: Iterable[str]) -> MultiPoly:
    """Append variables the polynomial does not depend on."""
    extra = tuple(names)
    clash = set(extra) & set(p.vars)
    if clash:
        raise PolyError(f"variables already present: {sorted(clash)}")
    pad = (0,) * len(extra)
    return MultiPoly._raw(p.vars + extra, {e + pad: c for e, c in p.terms.items()})
