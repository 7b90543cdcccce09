# bernreach/flowpipe.py
"""
Closed-loop reachability: controller abstraction plus Taylor-model flowpipes.

Every control step abstracts the controller over the current reachable set as
U_i = P(x) + [-ε̄, ε̄], then integrates ẋ = f(x, U_i) over the control period
in sub-steps. Each sub-step builds a time-Taylor expansion from Lie
derivatives, bounds the truncation with the next Lie derivative over an a
priori enclosure and hands the end-of-step Taylor models to the next one.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np

from bernreach import ReachError
from bernreach.config import ConfigError, Mode, VerifyParams
from bernreach.dynamics import Expr, Num, SystemSpec, expr_interval_eval, expr_tm_eval, lie_series
from bernreach.error import ErrorReport, build_abstraction
from bernreach.interval import Box, Interval, _down, _up, iv_div_scalar, iv_intersect, symmetric
from bernreach.lipschitz import propagate_intervals
from bernreach.nn import Network
from bernreach.poly import MultiPoly
from bernreach.taylor import (
    TaylorModel,
    tm_add,
    tm_add_const,
    tm_compose_poly,
    tm_const,
    tm_div_const,
    tm_enclosure,
    tm_extend,
    tm_identity,
    tm_mul,
    tm_substitute,
)

logger = logging.getLogger(__name__)

TIME_VAR = "t"
_MAX_PICARD = 50
_INFLATE_REL = 0.1
_INFLATE_ABS = 1e-4
_EPS = float(np.finfo(float).eps)


class EnclosureError(ReachError):
    """Raised when no a priori enclosure exists above the minimum step size."""


class FlowpipeError(ReachError):
    """Raised on inconsistent verification inputs."""


@dataclass(frozen=True, eq=False)
class Flowpipe:
    t_lo: float
    t_hi: float
    tm: tuple[TaylorModel, ...]
    box: Box
    h: float

    def __post_init__(self) -> None:
        if not self.t_lo < self.t_hi:
            raise FlowpipeError(f"empty flowpipe time span [{self.t_lo}, {self.t_hi}]")


@dataclass(frozen=True, eq=False)
class StepResult:
    u_tm: tuple[TaylorModel, ...]
    pipes: tuple[Flowpipe, ...]
    next_init: tuple[TaylorModel, ...]
    eps: tuple[float, ...]
    reports: tuple[ErrorReport, ...] = ()


class VerdictKind(str, Enum):
    YES = "Yes"
    UNKNOWN = "Unknown"


@dataclass(frozen=True, eq=False)
class Verdict:
    kind: VerdictKind
    step: int
    flowpipes: tuple[Flowpipe, ...] = ()
    per_step_eps: tuple[tuple[float, ...], ...] = ()
    step_boxes: tuple[Box, ...] = ()
    first_goal_step: int | None = None
    mode: Mode = Mode.BERNSTEIN
    reason: str = ""
    elapsed: float = 0.0

    def __str__(self) -> str:
        return f"{self.kind.value}({self.step})"

    @property
    def max_width(self) -> float:
        return max((p.box.max_width() for p in self.flowpipes), default=0.0)


@dataclass(frozen=True)
class Enclosure:
    box: Box
    h: float


# ==============================================================================
# CONTROLLER ABSTRACTION
# ==============================================================================


def enclosure_box(tms: Sequence[TaylorModel]) -> Box:
    return Box(tuple(tm_enclosure(tm) for tm in tms))


def _thickened(box: Box, eps: float) -> Box:
    dims = []
    for d in box:
        if d.hi - d.lo < eps:
            dims.append(Interval(_down(d.lo - eps), _up(d.hi + eps)))
        else:
            dims.append(d)
    return Box(tuple(dims))


def controller_tm(
    net: Network,
    x_set: Sequence[TaylorModel],
    degree: Sequence[int],
    delta_bar: float,
    order: int,
    *,
    thicken: float = 1e-9,
    per_output: bool = False,
    max_samples: int | None = None,
    workers: int | None = None,
    extra_eps: float = 0.0,
) -> tuple[list[TaylorModel], list[ErrorReport]]:
    """U = P(X) + [-ε̄, ε̄] as Taylor models over the variables of x_set."""
    if len(x_set) != net.input_dim:
        raise FlowpipeError(f"{len(x_set)} state models for a controller with {net.input_dim} inputs")
    box = _thickened(enclosure_box(x_set), thicken)
    abstraction = build_abstraction(net, box, degree, delta_bar, per_output, max_samples, workers)
    # x'_j = (x_j - l_j) / (u_j - l_j) keeps the composition on the unit box
    unit_args = [tm_div_const(tm_add_const(tm, -d.lo), d.hi - d.lo) for tm, d in zip(x_set, box)]
    u_tms = []
    for q, eps in zip(abstraction.unit_polys, abstraction.eps):
        u = tm_compose_poly(q, unit_args, order)
        total = eps + extra_eps
        u_tms.append(u.with_rem(u.rem + symmetric(_up(total))) if total > 0.0 else u)
    logger.debug(f"[BERNSTEIN] abstraction over {box.to_pairs()}: eps={list(abstraction.eps)}")
    return u_tms, list(abstraction.reports)


def interval_controller_tm(net: Network, x_set: Sequence[TaylorModel], order: int, extra_eps: float = 0.0) -> tuple[list[TaylorModel], list[float]]:
    """Zero-order abstraction: the interval image of the enclosure as constant-plus-remainder models."""
    box = enclosure_box(x_set)
    out_box = propagate_intervals(net, box)[-1].post_activation
    ref = x_set[0]
    u_tms, radii = [], []
    for d in out_box:
        mid = 0.5 * d.lo + 0.5 * d.hi
        rem = Interval(_down(d.lo - mid - extra_eps), _up(d.hi - mid + extra_eps))
        u_tms.append(tm_const(mid, ref.vars, ref.domain, order).with_rem(rem))
        radii.append(max(-rem.lo, rem.hi))
    return u_tms, radii


# ==============================================================================
# VALIDATED INTEGRATION
# ==============================================================================


def _picard(sys: SystemSpec, X: Box, U: Box, h: float) -> Box | None:
    hI = Interval(0.0, h)
    B = X
    for _ in range(_MAX_PICARD):
        try:
            F = sys.rhs_interval(B, U)
        except ReachError:
            return None
        N = Box(tuple(x + hI * f for x, f in zip(X, F)))
        if not all(math.isfinite(d.lo) and math.isfinite(d.hi) for d in N):
            return None
        if N.subset_of(B):
            return B
        B = B.hull(N).inflate(_INFLATE_REL, _INFLATE_ABS)
    return None


def apriori_enclosure(sys: SystemSpec, X: Box, U: Box, h: float, h_min: float | None = None) -> Enclosure:
    """Box B with X + [0,h]·f(B,U) ⊆ B; h is halved until one is found."""
    if not h > 0.0:
        raise EnclosureError(f"step size must be positive, got {h}")
    h_min = h / 1024.0 if h_min is None else h_min
    while True:
        B = _picard(sys, X, U, h)
        if B is not None:
            return Enclosure(B, h)
        if h / 2.0 < h_min:
            raise EnclosureError(f"no a priori enclosure down to step size {h_min:.3g}")
        h /= 2.0
        logger.warning(f"[ENCLOSURE] Picard iteration failed, halving step to {h:.4g}")


def _time_powers(vars: tuple[str, ...], domain: Box, order: int, h: float) -> list[TaylorModel]:
    """t^i/i! for i = 0..order with coefficient rounding in the remainder."""
    j = vars.index(TIME_VAR)
    out = []
    for i in range(order + 1):
        exp = tuple(i if k == j else 0 for k in range(len(vars)))
        coef = 1.0 / math.factorial(i)
        err = _EPS * coef * h**i if i > 1 else 0.0
        out.append(TaylorModel(MultiPoly(vars, {exp: coef}), symmetric(_up(err)), domain, order))
    return out


def tm_integrate_step(
    sys: SystemSpec,
    x0: Sequence[TaylorModel],
    u_tm: Sequence[TaylorModel],
    h: float,
    order: int,
    *,
    t_lo: float = 0.0,
    t_hi: float | None = None,
    lie: dict[str, list[Expr]] | None = None,
    h_min: float | None = None,
) -> Flowpipe:
    """Flowpipe over local time [0, h'] where h' ≤ h is the step actually taken."""
    if len(x0) != sys.dim or len(u_tm) != sys.control_dim:
        raise FlowpipeError(f"expected {sys.dim} state and {sys.control_dim} control models")
    lie = lie if lie is not None else lie_series(sys, order + 1)
    X = enclosure_box(x0)
    U = enclosure_box(u_tm)
    enc = apriori_enclosure(sys, X, U, h, h_min)
    if enc.h != h:
        t_hi = None
    h = enc.h
    time_iv = Interval(0.0, h)

    x_env = {name: tm_extend(tm, TIME_VAR, time_iv) for name, tm in zip(sys.state_vars, x0)}
    u_env = {name: tm_extend(tm, TIME_VAR, time_iv) for name, tm in zip(sys.control_vars, u_tm)}
    ref = next(iter(x_env.values()))
    powers = _time_powers(ref.vars, ref.domain, order, h)
    B_env = dict(zip(sys.state_vars, enc.box))
    U_env = dict(zip(sys.control_vars, U))
    h_pow = Interval(0.0, _up(h ** (order + 1)) * (1.0 + 4 * _EPS))

    memo: dict = {}
    tms = []
    for name in sys.state_vars:
        series = lie[name]
        acc = expr_tm_eval(series[0], x_env, u_env, order, memo)
        for i in range(1, order + 1):
            if isinstance(series[i], Num) and series[i].value == 0.0:
                continue
            coeff = expr_tm_eval(series[i], x_env, u_env, order, memo)
            acc = tm_add(acc, tm_mul(coeff, powers[i], order))
        tail = expr_interval_eval(series[order + 1], B_env, U_env) * h_pow
        acc = acc.with_rem(acc.rem + iv_div_scalar(tail, float(math.factorial(order + 1))))
        tms.append(acc)

    dims = []
    for tm, b in zip(tms, enc.box):
        e = tm_enclosure(tm)
        dims.append(iv_intersect(e, b) or e)
    end = t_lo + h if t_hi is None else t_hi
    return Flowpipe(t_lo, end, tuple(tms), Box(tuple(dims)), h)


def advance(pipe: Flowpipe) -> list[TaylorModel]:
    """State models at the end of the pipe's local time span."""
    return [tm_substitute(tm, TIME_VAR, pipe.h) for tm in pipe.tm]


def integrate_control_step(
    sys: SystemSpec,
    x_tms: Sequence[TaylorModel],
    u_tms: Sequence[TaylorModel],
    t_start: float,
    t_end: float,
    h_nominal: float,
    order: int,
    lie: dict[str, list[Expr]],
    h_min: float,
) -> tuple[list[Flowpipe], list[TaylorModel]]:
    """Sub-steps tiling [t_start, t_end] exactly."""
    pipes = []
    cursor = t_start
    current = list(x_tms)
    sliver = 1e-9 * (t_end - t_start)
    while cursor < t_end:
        remaining = t_end - cursor
        h = h_nominal if remaining - h_nominal > sliver else remaining
        last = h == remaining
        pipe = tm_integrate_step(
            sys, current, u_tms, h, order, t_lo=cursor, t_hi=t_end if last else None, lie=lie, h_min=h_min
        )
        pipes.append(pipe)
        current = advance(pipe)
        cursor = pipe.t_hi
    return pipes, current


# ==============================================================================
# VERIFICATION LOOP
# ==============================================================================


def control_step(
    sys: SystemSpec,
    net: Network,
    x_tms: Sequence[TaylorModel],
    i: int,
    params: VerifyParams,
    lie: dict[str, list[Expr]],
) -> StepResult:
    """One iteration of the loop: abstract the controller over X_i, then cover [iδc, (i+1)δc]."""
    delta_c = sys.control_step
    reports: list[ErrorReport] = []
    if params.mode is Mode.INTERVAL:
        u_tms, radii = interval_controller_tm(net, x_tms, params.tm_order, params.extra_eps)
        eps = tuple(radii)
    else:
        u_tms, reports = _bernstein_controller(net, x_tms, params, sys.dim)
        eps = tuple(r.eps_used + params.extra_eps for r in reports)
    pipes, next_init = integrate_control_step(
        sys,
        x_tms,
        u_tms,
        i * delta_c,
        (i + 1) * delta_c,
        delta_c / params.substeps,
        params.tm_order,
        lie,
        delta_c * params.min_step_ratio,
    )
    return StepResult(tuple(u_tms), tuple(pipes), tuple(next_init), eps, tuple(reports))


def _bernstein_controller(net: Network, x_tms: Sequence[TaylorModel], params: VerifyParams, dim: int) -> tuple[list[TaylorModel], list[ErrorReport]]:
    return controller_tm(
        net,
        x_tms,
        params.degree_for(dim),
        params.delta_bar,
        params.tm_order,
        thicken=params.thicken,
        per_output=params.per_output,
        max_samples=params.max_samples,
        workers=params.workers,
        extra_eps=params.extra_eps,
    )


def verify(sys: SystemSpec, net: Network, params: VerifyParams | None = None) -> Verdict:
    params = params or VerifyParams()
    if net.input_dim != sys.dim:
        raise FlowpipeError(f"controller takes {net.input_dim} inputs, system has {sys.dim} states")
    if net.output_dim != sys.control_dim:
        raise FlowpipeError(f"controller has {net.output_dim} outputs, system has {sys.control_dim} controls")
    started = time.perf_counter()
    order = params.tm_order
    lie = lie_series(sys, order + 1)
    names = list(sys.state_vars)
    x_tms = tm_identity(sys.init, names, order)

    pipes: list[Flowpipe] = []
    eps_hist: list[tuple[float, ...]] = []
    boxes: list[Box] = [enclosure_box(x_tms)]
    first_goal: int | None = None

    def finish(kind: VerdictKind, step: int, reason: str = "") -> Verdict:
        elapsed = time.perf_counter() - started
        logger.info(f"[VERIFY] {sys.name} ({params.mode.value}): {kind.value}({step}) in {elapsed:.2f}s {reason}".rstrip())
        return Verdict(kind, step, tuple(pipes), tuple(eps_hist), tuple(boxes), first_goal, params.mode, reason, elapsed)

    for i in range(sys.steps):
        try:
            result = control_step(sys, net, x_tms, i, params, lie)
        except ConfigError:
            raise
        except ReachError as exc:
            logger.warning(f"[VERIFY] step {i}: {exc}")
            return finish(VerdictKind.UNKNOWN, i, str(exc))
        pipes.extend(result.pipes)
        eps_hist.append(result.eps)
        x_tms = list(result.next_init)
        box = enclosure_box(x_tms)
        boxes.append(box)
        widest = max([p.box.max_width() for p in result.pipes] + [box.max_width()])
        if not math.isfinite(widest) or widest > params.width_cap:
            logger.warning(f"[VERIFY] step {i}: flowpipe width {widest:.4g} exceeds cap {params.width_cap}")
            return finish(VerdictKind.UNKNOWN, i, f"width {widest:.4g} exceeds cap")
        logger.debug(f"[VERIFY] step {i + 1}/{sys.steps}: width {widest:.4g} eps {list(result.eps)}")
        if params.check_every_step and first_goal is None and box.subset_of(sys.goal):
            first_goal = i + 1
        if params.rebox_every and (i + 1) % params.rebox_every == 0:
            x_tms = tm_identity(box, names, order)

    if boxes[-1].subset_of(sys.goal):
        return finish(VerdictKind.YES, sys.steps)
    return finish(VerdictKind.UNKNOWN, sys.steps, "final set not inside the goal")


def verify_interval_baseline(sys: SystemSpec, net: Network, params: VerifyParams | None = None) -> Verdict:
    params = (params or VerifyParams()).model_copy(update={"mode": Mode.INTERVAL})
    return verify(sys, net, params)


def run(sys: SystemSpec, net: Network, params: VerifyParams) -> Verdict:
    if params.mode is Mode.INTERVAL:
        return verify_interval_baseline(sys, net, params)
    return verify(sys, net, params)


# ==============================================================================
# SERIALIZATION
# ==============================================================================


def flowpipes_to_json(pipes: Sequence[Flowpipe]) -> list[dict[str, Any]]:
    return [{"t_lo": p.t_lo, "t_hi": p.t_hi, "box": p.box.to_pairs()} for p in pipes]


@dataclass(frozen=True)
class FlowpipeBox:
    """A flowpipe read back from JSON: time span and box only."""

    t_lo: float
    t_hi: float
    box: Box


def flowpipes_from_json(data: Sequence[dict[str, Any]]) -> list[FlowpipeBox]:
    try:
        return [FlowpipeBox(float(d["t_lo"]), float(d["t_hi"]), Box.from_pairs(d["box"])) for d in data]
    except (KeyError, TypeError, ValueError) as exc:
        raise FlowpipeError(f"malformed flowpipe record: {exc}") from exc


def verdict_to_json(v: Verdict) -> dict[str, Any]:
    out: dict[str, Any] = {
        "kind": v.kind.value,
        "step": v.step,
        "eps": [list(e) for e in v.per_step_eps],
        "mode": v.mode.value,
        "max_width": v.max_width,
        "elapsed": round(v.elapsed, 3),
    }
    if v.first_goal_step is not None:
        out["first_goal_step"] = v.first_goal_step
    if v.reason:
        out["reason"] = v.reason
    return out


def verdict_from_json(data: dict[str, Any]) -> Verdict:
    try:
        return Verdict(
            kind=VerdictKind(data["kind"]),
            step=int(data["step"]),
            per_step_eps=tuple(tuple(float(x) for x in e) for e in data.get("eps", [])),
            first_goal_step=data.get("first_goal_step"),
            mode=Mode(data.get("mode", Mode.BERNSTEIN.value)),
            reason=data.get("reason", ""),
            elapsed=float(data.get("elapsed", 0.0)),
        )
    except (KeyError, ValueError) as exc:
        raise FlowpipeError(f"malformed verdict: {exc}") from exc
