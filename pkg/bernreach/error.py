# bernreach/error.py
"""
Certified approximation error of a Bernstein abstraction.

Two bounds are available for |κ(x) - P(x)| over a box: a closed-form one from
the Lipschitz constant and the degree, and a sampling one that evaluates the
deviation at the centres of an adaptive grid and adds the grid's Lipschitz
radius. The smaller of the two is used, plus the measured power-basis
conversion slack.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, Field

from bernreach import ReachError, settings
from bernreach.bernstein import (
    BernsteinAbstraction,
    DegreeVector,
    approx_function,
    de_casteljau_eval,
    to_unit,
)
from bernreach.interval import Box
from bernreach.lipschitz import network_lipschitz
from bernreach.nn import Network, nn_eval_batch, output_network
from bernreach.poly import MultiPoly, poly_eval_batch, poly_magnitude
from bernreach.workers import map_chunks

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)


class CertificationError(ReachError):
    """Raised when an error bound cannot be certified."""


class ErrorReport(BaseModel):
    eps_t: float = Field(ge=0.0)
    eps_s: float = Field(ge=0.0)
    eps_used: float = Field(ge=0.0)
    p: list[int]
    delta_p: float = Field(ge=0.0)
    samples: int = Field(ge=0)
    lipschitz: float = Field(ge=0.0)
    conversion_slack: float = Field(default=0.0, ge=0.0)
    capped: bool = False


class SamplingResult(NamedTuple):
    eps_s: float
    p: list[int]
    delta_p: float
    samples: int
    capped: bool
    discrepancy: float


def t_error(L: float, d: DegreeVector | Sequence[int], x: Box) -> float:
    """(L/2)·sqrt(Σ 1/d_j)·max_j (u_j - l_j)."""
    if L < 0.0:
        raise CertificationError(f"Lipschitz constant must be non-negative, got {L}")
    d = DegreeVector.of(d, len(x))
    if L == 0.0:
        return 0.0
    value = 0.5 * L * math.sqrt(sum(1.0 / dj for dj in d)) * x.max_width()
    return float(np.nextafter(value * (1.0 + 4 * _EPS), np.inf))


def sampling_precision(x: Box, L: float, p: Sequence[int]) -> float:
    """δ(p) = L·sqrt(Σ ((u_j - l_j)/p_j)²)."""
    w = x.widths() / np.asarray(p, dtype=float)
    value = L * math.sqrt(float(np.sum(w * w)))
    return float(np.nextafter(value * (1.0 + (len(p) + 4) * _EPS), np.inf)) if value > 0.0 else 0.0


def adaptive_partition(x: Box, L: float, delta_bar: float) -> list[int]:
    if delta_bar <= 0.0:
        raise CertificationError(f"sampling precision must be positive, got {delta_bar}")
    if L < 0.0:
        raise CertificationError(f"Lipschitz constant must be non-negative, got {L}")
    m = len(x)
    widths = x.widths()
    p = [max(1, math.ceil(L * w * math.sqrt(m) / delta_bar)) for w in widths]
    # rounding in the ceiling can leave δ(p) a hair above δ̄
    while sampling_precision(x, L, p) > delta_bar:
        j = int(np.argmax(widths / np.asarray(p, dtype=float)))
        p[j] += 1
    return p


def _cap_partition(p: list[int], max_samples: int) -> list[int]:
    total = math.prod(p)
    if total <= max_samples:
        return p
    out = list(p)
    while math.prod(out) > max_samples:
        free = [j for j, v in enumerate(out) if v > 1]
        if not free:
            break
        factor = (max_samples / math.prod(out)) ** (1.0 / len(free))
        for j in free:
            out[j] = max(1, min(out[j] - 1, math.floor(out[j] * factor)))
    return out


def _cell_centers(x: Box, p: Sequence[int], start: int, stop: int) -> np.ndarray:
    idx = np.unravel_index(np.arange(start, stop), tuple(p))
    lo, w = x.lo, x.hi - x.lo
    cols = [lo[j] + (2 * idx[j] + 1) / (2.0 * p[j]) * w[j] for j in range(len(p))]
    return np.stack(cols, axis=1)


def sample_deviation(
    fn: Callable[[np.ndarray], np.ndarray],
    poly: MultiPoly,
    x: Box,
    L: float,
    delta_bar: float,
    coeffs: np.ndarray | None = None,
    unit_poly: MultiPoly | None = None,
    max_samples: int | None = None,
    workers: int | None = None,
) -> SamplingResult:
    """Centre-grid deviation scan; also measures the power/de Casteljau discrepancy."""
    p = adaptive_partition(x, L, delta_bar)
    cap = max_samples or settings.MAX_SAMPLES
    capped_p = _cap_partition(p, cap)
    capped = capped_p != p
    if capped:
        logger.warning(
            f"[ERROR] partition {p} exceeds {cap} samples, using {capped_p}; "
            f"δ(p)={sampling_precision(x, L, capped_p):.4g} against δ̄={delta_bar:.4g}"
        )
        p = capped_p
    total = math.prod(p)

    def scan(start: int, stop: int) -> tuple[float, float]:
        centers = _cell_centers(x, p, start, stop)
        exact = np.asarray(fn(centers), dtype=float).reshape(-1)
        power = poly_eval_batch(poly, centers)
        if coeffs is not None:
            unit_pts = to_unit(x, centers)
            approx = de_casteljau_eval(coeffs, unit_pts)
            disc = float(np.max(np.abs(power - approx)))
            if unit_poly is not None:
                disc = max(disc, float(np.max(np.abs(poly_eval_batch(unit_poly, unit_pts) - approx))))
        else:
            approx = power
            disc = 0.0
        dev = np.abs(exact - approx)
        if not np.all(np.isfinite(dev)):
            raise CertificationError("non-finite deviation at a sampling centre")
        return float(np.max(dev)), disc

    parts = map_chunks(scan, total, settings.CHUNK_SIZE, workers or settings.WORKERS)
    max_dev = max(part[0] for part in parts)
    disc = max(part[1] for part in parts)
    delta_p = sampling_precision(x, L, p)
    eps_s = float(np.nextafter(max_dev + delta_p, np.inf))
    return SamplingResult(eps_s, list(p), delta_p, total, capped, disc)


def center_deviations(
    fn: Callable[[np.ndarray], np.ndarray],
    poly: MultiPoly,
    x: Box,
    p: Sequence[int],
) -> np.ndarray:
    """|fn(c) - poly(c)| at every cell centre, shaped like the partition p."""
    if any(pj < 1 for pj in p):
        raise CertificationError(f"partition counts must be >= 1, got {list(p)}")
    if len(p) != len(x):
        raise CertificationError(f"partition has {len(p)} entries for a {len(x)}-dimensional box")
    total = math.prod(p)
    centers = _cell_centers(x, p, 0, total)
    exact = np.asarray(fn(centers), dtype=float).reshape(-1)
    return np.abs(exact - poly_eval_batch(poly, centers)).reshape(tuple(p))


def s_error(
    net_output: Callable[[np.ndarray], np.ndarray],
    poly: MultiPoly,
    x: Box,
    L: float,
    delta_bar: float,
) -> tuple[float, list[int], float]:
    res = sample_deviation(net_output, poly, x, L, delta_bar)
    return res.eps_s, res.p, res.delta_p


def _conversion_floor(poly: MultiPoly, x: Box) -> float:
    terms = len(poly.terms)
    if poly.degree == 0:
        return 0.0
    return 16.0 * _EPS * (terms + len(x) * poly.degree + 1) * poly_magnitude(poly, x)


def certify_output(
    fn: Callable[[np.ndarray], np.ndarray],
    poly: MultiPoly,
    x: Box,
    d: DegreeVector | Sequence[int],
    L: float,
    delta_bar: float,
    coeffs: np.ndarray | None = None,
    unit_poly: MultiPoly | None = None,
    max_samples: int | None = None,
    workers: int | None = None,
) -> ErrorReport:
    """ErrorReport for a single scalar output with a known Lipschitz constant."""
    eps_t = t_error(L, d, x)
    res = sample_deviation(fn, poly, x, L, delta_bar, coeffs, unit_poly, max_samples, workers)
    slack = 2.0 * res.discrepancy + _conversion_floor(poly, x)
    if unit_poly is not None:
        slack += _conversion_floor(unit_poly, Box.from_pairs([(0.0, 1.0)] * len(x)))
    eps_used = float(np.nextafter(min(eps_t, res.eps_s) + slack, np.inf)) if (eps_t or res.eps_s or slack) else 0.0
    return ErrorReport(
        eps_t=eps_t,
        eps_s=res.eps_s,
        eps_used=eps_used,
        p=res.p,
        delta_p=res.delta_p,
        samples=res.samples,
        lipschitz=L,
        conversion_slack=slack,
        capped=res.capped,
    )


def certify(
    net: Network,
    polys: Sequence[MultiPoly],
    x: Box,
    d: DegreeVector | Sequence[int],
    delta_bar: float,
    coeffs: np.ndarray | None = None,
    unit_polys: Sequence[MultiPoly] | None = None,
    per_output: bool = False,
    max_samples: int | None = None,
    workers: int | None = None,
) -> list[ErrorReport]:
    if len(polys) != net.output_dim:
        raise CertificationError(f"{len(polys)} polynomials for {net.output_dim} controller outputs")
    d = DegreeVector.of(d, len(x))
    L_all = network_lipschitz(net, x)
    reports = []
    for o, poly in enumerate(polys):
        L = network_lipschitz(output_network(net, o), x) if per_output else L_all
        report = certify_output(
            lambda X, o=o: nn_eval_batch(net, X)[:, o],
            poly,
            x,
            d,
            L,
            delta_bar,
            coeffs=None if coeffs is None else coeffs[..., o],
            unit_poly=None if unit_polys is None else unit_polys[o],
            max_samples=max_samples,
            workers=workers,
        )
        logger.debug(
            f"[ERROR] output {o}: L={L:.4g} eps_t={report.eps_t:.4g} eps_s={report.eps_s:.4g} "
            f"p={report.p} slack={report.conversion_slack:.3g}"
        )
        reports.append(report)
    return reports


def build_abstraction(
    net: Network,
    x: Box,
    d: DegreeVector | Sequence[int],
    delta_bar: float,
    per_output: bool = False,
    max_samples: int | None = None,
    workers: int | None = None,
) -> BernsteinAbstraction:
    """Polynomials plus certified ε̄ for every controller output over x."""
    d = DegreeVector.of(d, len(x))
    if len(x) != net.input_dim:
        raise CertificationError(f"box has {len(x)} dimensions, network expects {net.input_dim}")
    coeffs, unit, polys = approx_function(lambda X: nn_eval_batch(net, X), x, d, workers=workers)
    reports = certify(net, polys, x, d, delta_bar, coeffs, unit, per_output, max_samples, workers)
    return BernsteinAbstraction(
        polys=tuple(polys),
        eps=tuple(r.eps_used for r in reports),
        domain=x,
        degree=d,
        unit_polys=tuple(unit),
        coeffs=coeffs,
        reports=tuple(reports),
    )
