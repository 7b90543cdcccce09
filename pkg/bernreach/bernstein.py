# bernreach/bernstein.py
"""
Bernstein polynomial abstraction of a controller over a box.

The controller is rescaled to the unit box, sampled on the grid k/d, the
samples are converted from the Bernstein basis to the power basis, and the
result is mapped back onto the original box. The sample tensor is kept so
that the error sampler can evaluate the same polynomial by de Casteljau.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Callable, Iterator, Sequence

import numpy as np

from bernreach import ReachError, settings
from bernreach.interval import Box
from bernreach.nn import Network, nn_eval_batch
from bernreach.poly import MultiPoly, poly_affine_compose
from bernreach.workers import map_chunks

if TYPE_CHECKING:
    from bernreach.error import ErrorReport

logger = logging.getLogger(__name__)

_UNIT_TOL = 1e-12

# f maps an N×m array of unit-box points to N (or N×outputs) values
UnitFunction = Callable[[np.ndarray], np.ndarray]


class BernsteinError(ReachError):
    """Raised on invalid degrees, degenerate boxes or non-finite samples."""


@dataclass(frozen=True)
class DegreeVector:
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise BernsteinError("degree vector is empty")
        if any(v < 1 for v in vals):
            raise BernsteinError(f"degrees must be >= 1, got {vals}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, d: "DegreeVector | Sequence[int] | int", m: int | None = None) -> "DegreeVector":
        if isinstance(d, DegreeVector):
            out = d
        elif isinstance(d, int):
            out = cls((d,) * (m or 1))
        else:
            out = cls(tuple(d))
        if m is not None and len(out) != m:
            raise BernsteinError(f"degree vector has {len(out)} entries, expected {m}")
        return out

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    @property
    def grid_size(self) -> int:
        return math.prod(v + 1 for v in self.values)


@dataclass(frozen=True, eq=False)
class BernsteinAbstraction:
    """P_o(x) + [-eps_o, eps_o] encloses output o of the controller over domain."""

    polys: tuple[MultiPoly, ...]
    eps: tuple[float, ...]
    domain: Box
    degree: DegreeVector
    unit_polys: tuple[MultiPoly, ...] = ()
    coeffs: np.ndarray | None = None
    reports: tuple["ErrorReport", ...] = field(default=())


def unit_vars(m: int) -> tuple[str, ...]:
    return tuple(f"x{j + 1}" for j in range(m))


def unit_grid(d: DegreeVector) -> np.ndarray:
    """All grid points k/d in C order, shape ∏(d_j+1) × m."""
    axes = [np.arange(dj + 1) / dj for dj in d]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.reshape(-1) for a in mesh], axis=1)


def bernstein_coefficients(f: UnitFunction, d: DegreeVector, workers: int | None = None) -> np.ndarray:
    """Samples f(k/d) as a tensor of shape (d_1+1, ..., d_m+1, outputs)."""
    d = DegreeVector.of(d)
    grid = unit_grid(d)

    def run(start: int, stop: int) -> np.ndarray:
        vals = np.asarray(f(grid[start:stop]), dtype=float)
        return vals.reshape(stop - start, -1)

    chunks = map_chunks(run, grid.shape[0], settings.CHUNK_SIZE, workers or settings.WORKERS)
    values = np.concatenate(chunks, axis=0)
    if not np.all(np.isfinite(values)):
        raise BernsteinError("non-finite sample while building Bernstein coefficients")
    return values.reshape(tuple(v + 1 for v in d) + (values.shape[1],))


@lru_cache(maxsize=64)
def _conversion_matrix(d: int) -> np.ndarray:
    """M[i, k]: power coefficient of x^i contributed by the k-th basis polynomial."""
    M = np.zeros((d + 1, d + 1))
    for k in range(d + 1):
        for i in range(k, d + 1):
            M[i, k] = float(math.comb(d, k) * math.comb(d - k, i - k) * (-1) ** (i - k))
    M.setflags(write=False)
    return M


def bernstein_to_power(coeffs: np.ndarray, vars: Sequence[str] | None = None) -> MultiPoly:
    """Expand a single-output coefficient tensor to a power-basis polynomial on the unit box."""
    a = np.asarray(coeffs, dtype=float)
    names = tuple(vars) if vars is not None else unit_vars(a.ndim)
    if len(names) != a.ndim:
        raise BernsteinError(f"{a.ndim}-dimensional coefficients need {a.ndim} variable names")
    for axis, size in enumerate(a.shape):
        M = _conversion_matrix(size - 1)
        a = np.moveaxis(np.tensordot(M, a, axes=([1], [axis])), 0, axis)
    terms = {tuple(int(i) for i in idx): float(a[idx]) for idx in np.ndindex(a.shape) if a[idx] != 0.0}
    return MultiPoly(names, terms)


def bernstein_unit(f: UnitFunction, d: DegreeVector | Sequence[int], vars: Sequence[str] | None = None) -> MultiPoly:
    """B_{f,d} in the power basis for a scalar f on the unit box."""
    d = DegreeVector.of(d)
    coeffs = bernstein_coefficients(f, d)
    if coeffs.shape[-1] != 1:
        raise BernsteinError(f"bernstein_unit expects a scalar function, got {coeffs.shape[-1]} outputs")
    return bernstein_to_power(coeffs[..., 0], vars)


def de_casteljau_eval(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray | float:
    """Tensor-product de Casteljau evaluation of a single-output coefficient tensor."""
    coeffs = np.asarray(coeffs, dtype=float)
    single = np.ndim(x) == 1
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    m = coeffs.ndim
    if pts.shape[1] != m:
        raise BernsteinError(f"points have {pts.shape[1]} coordinates, coefficients have {m} axes")
    if np.any(pts < -_UNIT_TOL) or np.any(pts > 1.0 + _UNIT_TOL):
        raise BernsteinError("de Casteljau evaluation point outside the unit box")
    pts = np.clip(pts, 0.0, 1.0)
    n = pts.shape[0]
    c = np.broadcast_to(coeffs, (n,) + coeffs.shape)
    for j in range(m):
        t = pts[:, j].reshape((n,) + (1,) * (c.ndim - 1))
        while c.shape[1] > 1:
            c = (1.0 - t) * c[:, :-1] + t * c[:, 1:]
        c = c[:, 0]
    return float(c[0]) if single else c


def unit_affine_map(x: Box) -> tuple[np.ndarray, np.ndarray]:
    """(scale, shift) with x' = scale·x + shift mapping x onto the unit box."""
    lo, hi = x.lo, x.hi
    w = hi - lo
    if np.any(w <= 0.0):
        j = int(np.argmax(w <= 0.0))
        raise BernsteinError(f"box dimension {j + 1} is degenerate ([{lo[j]}, {hi[j]}]); thicken it first")
    return 1.0 / w, -lo / w


def to_unit(x: Box, points: np.ndarray) -> np.ndarray:
    lo, hi = x.lo, x.hi
    w = np.where(hi > lo, hi - lo, 1.0)
    return np.clip((np.asarray(points, dtype=float) - lo) / w, 0.0, 1.0)


def rescaled(f: Callable[[np.ndarray], np.ndarray], x: Box) -> UnitFunction:
    """κ'(x') = κ(l + (u - l)·x')."""
    lo, hi = x.lo, x.hi

    def g(u: np.ndarray) -> np.ndarray:
        return f(lo + (hi - lo) * u)

    return g


def approx_function(
    f: Callable[[np.ndarray], np.ndarray],
    x: Box,
    d: DegreeVector | Sequence[int],
    vars: Sequence[str] | None = None,
    workers: int | None = None,
) -> tuple[np.ndarray, list[MultiPoly], list[MultiPoly]]:
    """(coefficient tensor, unit-box polys, original-box polys) per output of f."""
    d = DegreeVector.of(d, len(x))
    scale, shift = unit_affine_map(x)
    names = tuple(vars) if vars is not None else unit_vars(len(x))
    coeffs = bernstein_coefficients(rescaled(f, x), d, workers)
    unit = [bernstein_to_power(coeffs[..., o], names) for o in range(coeffs.shape[-1])]
    polys = [poly_affine_compose(q, scale, shift) for q in unit]
    logger.debug(f"[BERNSTEIN] degree {d.values}: {d.grid_size} samples, {len(polys)} outputs")
    return coeffs, unit, polys


def approx_controller(net: Network, x: Box, d: DegreeVector | Sequence[int], workers: int | None = None) -> list[MultiPoly]:
    if len(x) != net.input_dim:
        raise BernsteinError(f"box has {len(x)} dimensions, network expects {net.input_dim}")
    _, _, polys = approx_function(lambda X: nn_eval_batch(net, X), x, d, workers=workers)
    return polys
