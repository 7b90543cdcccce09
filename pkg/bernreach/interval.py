# bernreach/interval.py
"""
Sound interval and box arithmetic.

Endpoints are rounded outward to the neighbouring double whenever a result is
inexact. Exactness of sums and products is detected with error-free
transformations, so exact inputs such as [1,2]+[3,4] stay exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from bernreach import ReachError

_INF = float("inf")
_EPS = float(np.finfo(float).eps)
_SPLITTER = 134217729.0  # 2**27 + 1
_SPLIT_LIMIT = 1e290
_TINY = 1e-290
_TRIG_LIMIT = 1e8
TWO_PI = 2.0 * math.pi


class IntervalError(ReachError):
    """Raised on malformed intervals, boxes or partitions."""


def _down(x: float) -> float:
    return float(np.nextafter(x, -_INF))


def _up(x: float) -> float:
    return float(np.nextafter(x, _INF))


def _sum_err(a: float, b: float, s: float) -> float:
    """Exact error of s = fl(a + b)."""
    if not math.isfinite(s):
        return 0.0
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _prod_err(a: float, b: float, p: float) -> float:
    """Exact error of p = fl(a * b); NaN when it cannot be recovered."""
    if not math.isfinite(p):
        return 0.0
    if abs(a) > _SPLIT_LIMIT or abs(b) > _SPLIT_LIMIT or (p != 0.0 and abs(p) < _TINY):
        return math.nan
    ah, al = _split(a)
    bh, bl = _split(b)
    return al * bl - (((p - ah * bh) - al * bh) - ah * bl)


def _lower(v: float, err: float) -> float:
    if v == _INF:
        return float(np.finfo(float).max)
    if err != err or err < 0.0:
        return _down(v)
    return v


def _upper(v: float, err: float) -> float:
    if v == -_INF:
        return -float(np.finfo(float).max)
    if err != err or err > 0.0:
        return _up(v)
    return v


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise IntervalError(f"invalid interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @property
    def width(self) -> float:
        w = self.hi - self.lo
        return _upper(w, _sum_err(self.hi, -self.lo, w))

    @property
    def mid(self) -> float:
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def rad(self) -> float:
        m = self.mid
        return _up(max(m - self.lo, self.hi - m))

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __add__(self, other: "Interval | float") -> "Interval":
        return iv_add(self, as_interval(other))

    __radd__ = __add__

    def __sub__(self, other: "Interval | float") -> "Interval":
        return iv_sub(self, as_interval(other))

    def __rsub__(self, other: float) -> "Interval":
        return iv_sub(as_interval(other), self)

    def __mul__(self, other: "Interval | float") -> "Interval":
        return iv_mul(self, as_interval(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Interval":
        return iv_neg(self)


ZERO = Interval(0.0, 0.0)


def as_interval(x: "Interval | float") -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval(float(x), float(x))


def symmetric(e: float) -> Interval:
    e = abs(float(e))
    return Interval(-e, e)


def iv_add(a: Interval, b: Interval) -> Interval:
    lo = a.lo + b.lo
    hi = a.hi + b.hi
    return Interval(_lower(lo, _sum_err(a.lo, b.lo, lo)), _upper(hi, _sum_err(a.hi, b.hi, hi)))


def iv_neg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def iv_sub(a: Interval, b: Interval) -> Interval:
    return iv_add(a, iv_neg(b))


def iv_mul(a: Interval, b: Interval) -> Interval:
    los, his = [], []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            p = x * y
            if p != p:  # 0 * inf
                return Interval(-_INF, _INF)
            err = _prod_err(x, y, p)
            los.append(_lower(p, err))
            his.append(_upper(p, err))
    return Interval(min(los), max(his))


def iv_scale(a: Interval, c: float) -> Interval:
    return iv_mul(a, Interval(c, c))


def iv_div_scalar(a: Interval, c: float) -> Interval:
    if c == 0.0:
        raise IntervalError("division of an interval by zero")
    q1, q2 = a.lo / c, a.hi / c
    return Interval(_down(min(q1, q2)), _up(max(q1, q2)))


def _pow_nonneg(x: float, n: int) -> tuple[float, float]:
    lo = hi = x
    for _ in range(n - 1):
        p = lo * x
        lo = _lower(p, _prod_err(lo, x, p))
        p = hi * x
        hi = _upper(p, _prod_err(hi, x, p))
    return max(lo, 0.0), hi


def _pow_point(x: float, n: int) -> tuple[float, float]:
    if x >= 0.0:
        return _pow_nonneg(x, n)
    lo, hi = _pow_nonneg(-x, n)
    if n % 2 == 0:
        return lo, hi
    return -hi, -lo


def iv_pow(a: Interval, n: int) -> Interval:
    """Integer power with even-power tightening: x^(2k) over a ⊆ [0, mag^(2k)]."""
    if n < 0:
        raise IntervalError(f"negative exponent {n}")
    if n == 0:
        return Interval(1.0, 1.0)
    if n == 1:
        return a
    if n % 2 == 1:
        return Interval(_pow_point(a.lo, n)[0], _pow_point(a.hi, n)[1])
    if a.lo <= 0.0 <= a.hi:
        return Interval(0.0, _pow_nonneg(a.mag, n)[1])
    mig = min(abs(a.lo), abs(a.hi))
    return Interval(_pow_nonneg(mig, n)[0], _pow_nonneg(a.mag, n)[1])


def iv_hull(a: Interval, b: Interval) -> Interval:
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def iv_intersect(a: Interval, b: Interval) -> Interval | None:
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if lo > hi:
        return None
    return Interval(lo, hi)


def _trig(a: Interval, fn, base: float) -> Interval:
    # extremes of fn sit at base + kπ with value (-1)^k
    if not (math.isfinite(a.lo) and math.isfinite(a.hi)):
        return Interval(-1.0, 1.0)
    if a.hi - a.lo >= TWO_PI or a.mag > _TRIG_LIMIT:
        return Interval(-1.0, 1.0)
    tol = 8.0 * _EPS * max(1.0, a.mag)
    values = [fn(a.lo), fn(a.hi)]
    k_lo = math.ceil((a.lo - tol - base) / math.pi)
    k_hi = math.floor((a.hi + tol - base) / math.pi)
    for k in range(k_lo, k_hi + 1):
        values.append(1.0 if k % 2 == 0 else -1.0)
    lo = max(-1.0, _down(_down(min(values))))
    hi = min(1.0, _up(_up(max(values))))
    return Interval(lo, hi)


def iv_sin(a: Interval) -> Interval:
    return _trig(a, math.sin, 0.5 * math.pi)


def iv_cos(a: Interval) -> Interval:
    return _trig(a, math.cos, 0.0)


@dataclass(frozen=True)
class Box:
    dims: tuple[Interval, ...]

    def __post_init__(self) -> None:
        dims = tuple(self.dims)
        for d in dims:
            if not isinstance(d, Interval):
                raise IntervalError(f"box dimension {d!r} is not an Interval")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "Box":
        return cls(tuple(Interval(float(lo), float(hi)) for lo, hi in pairs))

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> "Box":
        if len(lo) != len(hi):
            raise IntervalError(f"bound lengths differ: {len(lo)} vs {len(hi)}")
        return cls(tuple(Interval(float(a), float(b)) for a, b in zip(lo, hi)))

    @classmethod
    def point(cls, x: Sequence[float]) -> "Box":
        return cls(tuple(Interval(float(v), float(v)) for v in x))

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.dims)

    def __getitem__(self, j: int) -> Interval:
        return self.dims[j]

    @property
    def lo(self) -> np.ndarray:
        return np.array([d.lo for d in self.dims], dtype=float)

    @property
    def hi(self) -> np.ndarray:
        return np.array([d.hi for d in self.dims], dtype=float)

    def widths(self) -> np.ndarray:
        return np.array([d.width for d in self.dims], dtype=float)

    def max_width(self) -> float:
        return float(self.widths().max()) if self.dims else 0.0

    def to_pairs(self) -> list[list[float]]:
        return [[d.lo, d.hi] for d in self.dims]

    def contains(self, x: Sequence[float], tol: float = 0.0) -> bool:
        if len(x) != len(self.dims):
            raise IntervalError(f"point has {len(x)} coordinates, box has {len(self.dims)}")
        return all(d.contains(float(v), tol) for d, v in zip(self.dims, x))

    def subset_of(self, other: "Box") -> bool:
        _same_dim(self, other)
        return all(a.subset_of(b) for a, b in zip(self.dims, other.dims))

    def hull(self, other: "Box") -> "Box":
        _same_dim(self, other)
        return Box(tuple(iv_hull(a, b) for a, b in zip(self.dims, other.dims)))

    def inflate(self, rel: float, absolute: float) -> "Box":
        out = []
        for d in self.dims:
            pad = rel * (d.hi - d.lo) + absolute
            out.append(Interval(_down(d.lo - pad), _up(d.hi + pad)))
        return Box(tuple(out))


def _same_dim(a: Box, b: Box) -> None:
    if len(a) != len(b):
        raise IntervalError(f"box dimensions differ: {len(a)} vs {len(b)}")


def box_partition(x: Box, p: Sequence[int]) -> list[Box]:
    """Grid partition into ∏p_j cells; cell k spans l_j + k_j/p_j·w_j .. l_j + (k_j+1)/p_j·w_j."""
    if len(p) != len(x):
        raise IntervalError(f"partition vector has {len(p)} entries, box has {len(x)} dimensions")
    axes = []
    for d, pj in zip(x, p):
        pj = int(pj)
        if pj < 1:
            raise IntervalError(f"partition counts must be positive, got {pj}")
        w = d.hi - d.lo
        cuts = [d.lo + (k / pj) * w for k in range(pj + 1)]
        cuts[0], cuts[-1] = d.lo, d.hi
        axes.append([Interval(cuts[k], cuts[k + 1]) for k in range(pj)])
    return [Box(cell) for cell in itertools.product(*axes)]


def box_center(b: Box) -> np.ndarray:
    return np.array([0.5 * d.lo + 0.5 * d.hi for d in b], dtype=float)
