# bernreach/lipschitz.py
"""
Certified Lipschitz constants of a network over an input box.

Interval bounds are pushed through the layers; each layer then contributes a
factor computed from the activation slope supremum over its pre-activation
box times an upper bound on the induced 2-norm of its weight matrix.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from bernreach.interval import Box
from bernreach.nn import Activation, Network, NetworkError, apply_activation

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
_POWER_ITERS = 500
_POWER_TOL = 1e-13
_SAFETY = (1e-6, 1e-4, 1e-2)


@dataclass(frozen=True)
class LayerIntervals:
    pre_activation: Box
    post_activation: Box


def _matvec_bounds(W: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Wp = np.maximum(W, 0.0)
    Wn = np.minimum(W, 0.0)
    out_lo = Wp @ lo + Wn @ hi + b
    out_hi = Wp @ hi + Wn @ lo + b
    err = (W.shape[1] + 2) * _EPS * (np.abs(W) @ np.maximum(np.abs(lo), np.abs(hi)) + np.abs(b))
    return np.nextafter(out_lo - err, -np.inf), np.nextafter(out_hi + err, np.inf)


def _activation_bounds(act: Activation, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if act is Activation.LINEAR:
        return lo, hi
    if act is Activation.RELU:
        return np.maximum(lo, 0.0), np.maximum(hi, 0.0)
    a, b = apply_activation(act, lo), apply_activation(act, hi)
    floor = 0.0 if act is Activation.SIGMOID else -1.0
    a = np.maximum(np.nextafter(a - 4 * _EPS * np.abs(a), -np.inf), floor)
    b = np.minimum(np.nextafter(b + 4 * _EPS * np.abs(b), np.inf), 1.0)
    return a, b


def propagate_intervals(net: Network, x: Box) -> list[LayerIntervals]:
    if len(x) != net.input_dim:
        raise NetworkError(f"box has {len(x)} dimensions, network expects {net.input_dim}")
    lo, hi = x.lo, x.hi
    out = []
    for layer in net.layers:
        pre_lo, pre_hi = _matvec_bounds(layer.weights, layer.bias, lo, hi)
        lo, hi = _activation_bounds(layer.act, pre_lo, pre_hi)
        out.append(LayerIntervals(Box.from_bounds(pre_lo, pre_hi), Box.from_bounds(lo, hi)))
    return out


def _power_run(A: np.ndarray, v: np.ndarray) -> float:
    v = v / np.linalg.norm(v)
    lam = 0.0
    for _ in range(_POWER_ITERS):
        w = A @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - lam) <= _POWER_TOL * nw:
            return nw
        lam = nw
    return lam


def _power_estimate(W: np.ndarray) -> float:
    # several starts; a single fixed one can be orthogonal to the top singular vector
    A = W.T @ W
    n = A.shape[0]
    starts = [
        np.ones(n) + np.linspace(0.0, 0.5, n),
        A[:, int(np.argmax(np.linalg.norm(A, axis=0)))],
        np.random.default_rng(0).normal(size=n),
    ]
    lam = max(_power_run(A, v) for v in starts if np.any(v))
    return math.sqrt(lam)


def _certified_power_bound(W: np.ndarray) -> float | None:
    """σ_max estimate times a safety factor, kept only if μI − WᵀW is positive definite."""
    est = _power_estimate(W)
    A = W.T @ W
    for safety in _SAFETY:
        bound = max(est, _EPS) * (1.0 + safety)
        try:
            np.linalg.cholesky(bound * bound * np.eye(A.shape[0]) - A)
        except np.linalg.LinAlgError:
            continue
        return bound
    return None


def matrix_opnorm_ub(W: np.ndarray) -> float:
    """Certified upper bound on the induced 2-norm of W."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.size == 0 or not np.any(W):
        return 0.0
    aw = np.abs(W)
    norm_1 = float(aw.sum(axis=0).max())
    norm_inf = float(aw.sum(axis=1).max())
    slack = 1.0 + (sum(W.shape) + 4) * _EPS
    analytic = min(math.sqrt(norm_1 * norm_inf), math.sqrt(float(np.sum(W * W)))) * slack
    power = _certified_power_bound(W)
    if power is None:
        logger.debug(f"[LIPSCHITZ] power bound not certified for {W.shape} matrix")
        return analytic
    return min(analytic, power)


def _slope_sup(act: Activation, pre: Box) -> float:
    a, b = pre.lo, pre.hi
    straddle = (a <= 0.0) & (b >= 0.0)
    if act is Activation.SIGMOID:
        sa, sb = apply_activation(act, a), apply_activation(act, b)
        slope = np.where(straddle, 0.25, 0.25 - np.minimum((0.5 - sa) ** 2, (0.5 - sb) ** 2))
    else:
        ta, tb = np.tanh(a), np.tanh(b)
        slope = np.where(straddle, 1.0, 1.0 - np.minimum(ta**2, tb**2))
    # slope values are within a few ulps; keep the supremum an upper bound
    return float(np.max(slope)) * (1.0 + 8 * _EPS) + 4 * _EPS


def layer_lipschitz(act: Activation, W: np.ndarray, pre: Box) -> float:
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if act is Activation.LINEAR:
        return matrix_opnorm_ub(W)
    if act is Activation.RELU:
        alive = pre.hi > 0.0
        return min(matrix_opnorm_ub(W * alive[:, None]), matrix_opnorm_ub(W))
    return min(_slope_sup(act, pre), global_slope(act)) * matrix_opnorm_ub(W)


def global_slope(act: Activation) -> float:
    return 0.25 if act is Activation.SIGMOID else 1.0


def global_layer_bound(act: Activation, W: np.ndarray) -> float:
    """Box-independent factor: ¼‖W‖ for sigmoid, ‖W‖ otherwise."""
    return global_slope(act) * matrix_opnorm_ub(W)


def lipschitz_profile(net: Network, x: Box) -> tuple[float, list[float]]:
    intervals = propagate_intervals(net, x)
    factors = [layer_lipschitz(layer.act, layer.weights, li.pre_activation) for layer, li in zip(net.layers, intervals)]
    total = 1.0
    for f in factors:
        total *= f
    total = float(np.nextafter(total * (1.0 + len(factors) * _EPS), np.inf)) if total > 0.0 else 0.0
    if not math.isfinite(total):
        raise NetworkError("Lipschitz bound overflowed")
    return total, factors


def network_lipschitz(net: Network, x: Box) -> float:
    return lipschitz_profile(net, x)[0]
