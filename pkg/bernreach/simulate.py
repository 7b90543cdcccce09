# bernreach/simulate.py
"""
Closed-loop simulation: classical RK4 with zero-order-hold control.

Within [iδc, (i+1)δc] the control is fixed at κ(x(iδc)). Trajectories are
integrated as one batch per worker chunk.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from bernreach import ReachError, settings
from bernreach.dynamics import SystemSpec
from bernreach.nn import Network, nn_eval_batch
from bernreach.workers import map_chunks

logger = logging.getLogger(__name__)


class SimulationError(ReachError):
    """Raised when a trajectory leaves the finite floats."""

    def __init__(self, message: str, time: float):
        super().__init__(f"t={time:.6g}: {message}")
        self.time = time


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def at(self, t: float) -> np.ndarray:
        """State at the recorded time closest to t."""
        return self.states[int(np.argmin(np.abs(self.times - t)))]


def _substeps(sys: SystemSpec, dt: float) -> tuple[int, float]:
    if not dt > 0.0:
        raise ReachError(f"simulation step must be positive, got {dt}")
    n = max(1, math.ceil(sys.control_step / dt - 1e-9))
    return n, sys.control_step / n


def _rk4(sys: SystemSpec, x: np.ndarray, u: np.ndarray, h: float) -> np.ndarray:
    k1 = sys.rhs_eval(x, u)
    k2 = sys.rhs_eval(x + 0.5 * h * k1, u)
    k3 = sys.rhs_eval(x + 0.5 * h * k2, u)
    k4 = sys.rhs_eval(x + h * k3, u)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_batch(
    sys: SystemSpec,
    net: Network,
    x0: np.ndarray,
    dt: float,
    steps: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """times (T,) and states (B, T, n) for initial states x0 of shape (B, n)."""
    X = np.array(x0, dtype=float, ndmin=2)
    if X.shape[1] != sys.dim:
        raise ReachError(f"initial states have {X.shape[1]} components, system has {sys.dim}")
    n_sub, h = _substeps(sys, dt)
    steps = sys.steps if steps is None else steps
    total = steps * n_sub
    states = np.empty((X.shape[0], total + 1, sys.dim))
    states[:, 0] = X
    times = np.empty(total + 1)
    times[0] = 0.0
    k = 0
    for i in range(steps):
        u = nn_eval_batch(net, X)
        for s in range(n_sub):
            X = _rk4(sys, X, u, h)
            k += 1
            times[k] = i * sys.control_step + (s + 1) * h
            if not np.all(np.isfinite(X)):
                raise SimulationError("state diverged", times[k])
            states[:, k] = X
        # land exactly on the control boundary
        times[k] = (i + 1) * sys.control_step
    return times, states


def simulate(sys: SystemSpec, net: Network, x0: Sequence[float], dt: float, steps: int | None = None) -> Trajectory:
    times, states = simulate_batch(sys, net, np.asarray(x0, dtype=float)[None, :], dt, steps)
    return Trajectory(times, states[0])


def sample_initial_states(sys: SystemSpec, count: int, seed: int = 0) -> np.ndarray:
    """Uniform draws from the initial box; the first 2^n (up to count) are its vertices."""
    rng = np.random.default_rng(seed)
    lo, hi = sys.init.lo, sys.init.hi
    n = sys.dim
    vertices = []
    if n <= 10:
        for mask in range(min(count, 2**n)):
            vertices.append([hi[j] if mask >> j & 1 else lo[j] for j in range(n)])
    rest = rng.uniform(lo, hi, size=(count - len(vertices), n))
    return np.vstack([np.asarray(vertices, dtype=float).reshape(-1, n), rest])


def sample_trajectories(
    sys: SystemSpec,
    net: Network,
    count: int = 100,
    dt: float | None = None,
    seed: int = 0,
    workers: int | None = None,
) -> list[Trajectory]:
    dt = dt or sys.control_step / 200.0
    X0 = sample_initial_states(sys, count, seed)

    def run(start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
        return simulate_batch(sys, net, X0[start:stop], dt)

    chunk = max(1, math.ceil(count / (workers or settings.WORKERS)))
    parts = map_chunks(run, count, chunk, workers or settings.WORKERS)
    out = []
    for times, states in parts:
        out.extend(Trajectory(times, s) for s in states)
    logger.info(f"[SIMULATE] {len(out)} trajectories of {sys.name} with dt={dt:.3g}")
    return out


def write_trajectories_csv(trajectories: Sequence[Trajectory], path: str | Path, state_vars: Sequence[str] | None = None) -> None:
    if not trajectories:
        names = list(state_vars or [])
    else:
        n = trajectories[0].states.shape[1]
        names = list(state_vars) if state_vars else [f"x{j + 1}" for j in range(n)]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["traj", "t", *names])
        for k, traj in enumerate(trajectories):
            for t, x in zip(traj.times, traj.states):
                writer.writerow([k, repr(float(t)), *(repr(float(v)) for v in x)])


def read_trajectories_csv(path: str | Path) -> list[Trajectory]:
    rows: dict[int, list[list[float]]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        next(reader, None)
        for row in reader:
            rows.setdefault(int(row[0]), []).append([float(v) for v in row[1:]])
    out = []
    for k in sorted(rows):
        data = np.asarray(rows[k])
        out.append(Trajectory(data[:, 0], data[:, 1:]))
    return out


def trajectory_containment(trajectories: Sequence[Trajectory], flowpipes: Sequence, tol: float = 0.0) -> list[tuple[int, float]]:
    """(trajectory index, time) of every recorded state outside the flowpipe box covering its time."""
    violations = []
    spans = np.array([[p.t_lo, p.t_hi] for p in flowpipes]) if flowpipes else np.empty((0, 2))
    for k, traj in enumerate(trajectories):
        for t, x in zip(traj.times, traj.states):
            hits = np.nonzero((spans[:, 0] <= t + 1e-12) & (t - 1e-12 <= spans[:, 1]))[0]
            if hits.size == 0:
                continue
            if not any(flowpipes[j].box.contains(x, tol) for j in hits):
                violations.append((k, float(t)))
    return violations
