# bernreach/benchmarks.py
"""
Benchmark systems and handcrafted controllers.

The six systems are stored in system-file form and go through load_system,
so they double as schema examples. Controllers are small exact embeddings of
state feedback laws into feed-forward networks:

    linear     relu(g·x + β) - relu(-g·x - β) = g·x + β
    saturated  A·tanh(g·x) (tanh) or A·(2σ(2g·x) - 1) (sigmoid)
    mixed      relu split, then tanh, then a linear read-out
"""
from __future__ import annotations

import logging
from typing import Any, Iterable, Sequence

import numpy as np

from bernreach import ReachError
from bernreach.config import Mode, load_system, resolve_params
from bernreach.dynamics import SystemSpec
from bernreach.flowpipe import run, verdict_to_json
from bernreach.nn import Activation, Layer, Network

logger = logging.getLogger(__name__)

_WIDE = [-100.0, 100.0]

BENCHMARKS: dict[str, dict[str, Any]] = {
    "ex1": {
        "name": "ex1",
        "state_vars": ["x1", "x2"],
        "dynamics": ["x2", "u*x2^2 - x1"],
        "control_step": 0.2,
        "steps": 35,
        "init": [[0.8, 0.9], [0.5, 0.6]],
        "goal": [[0.0, 0.2], [0.05, 0.3]],
        "params": {"degree": [3, 3], "delta_bar": 0.01, "tm_order": 5},
    },
    "ex2": {
        "name": "ex2",
        "state_vars": ["x1", "x2"],
        "dynamics": ["x2 - x1^3", "u"],
        "control_step": 0.2,
        "steps": 9,
        "init": [[0.7, 0.9], [0.7, 0.9]],
        "goal": [[-0.3, 0.1], [-0.35, 0.5]],
        "params": {"degree": [3, 3], "delta_bar": 0.01, "tm_order": 5},
    },
    "ex3": {
        "name": "ex3",
        "state_vars": ["x1", "x2"],
        "dynamics": ["-x1*(0.1 + (x1 + x2)^2)", "(u + x1)*(0.1 + (x1 + x2)^2)"],
        "control_step": 0.1,
        "steps": 60,
        "init": [[0.8, 0.9], [0.4, 0.5]],
        "goal": [[0.2, 0.3], [-0.3, -0.05]],
        "params": {"degree": [3, 3], "delta_bar": 0.01, "tm_order": 5},
    },
    "ex4": {
        "name": "ex4",
        "state_vars": ["x1", "x2", "x3"],
        "dynamics": ["-x1 + x2 - x3", "-x1*(x3 + 1) - x2", "-x1 + u"],
        "control_step": 0.1,
        "steps": 10,
        "init": [[0.25, 0.27], [0.08, 0.1], [0.25, 0.27]],
        "goal": [[-0.05, 0.05], [-0.05, 0.0], _WIDE],
        "params": {"degree": [2, 2, 2], "delta_bar": 0.01, "tm_order": 4},
    },
    "ex5": {
        "name": "ex5",
        "state_vars": ["x1", "x2", "x3"],
        "dynamics": ["x1^3 - x2", "x3", "u"],
        "control_step": 0.2,
        "steps": 10,
        "init": [[0.38, 0.4], [0.45, 0.47], [0.25, 0.27]],
        "goal": [[-0.4, -0.28], [0.05, 0.22], _WIDE],
        "params": {"degree": [2, 2, 2], "delta_bar": 0.01, "tm_order": 4},
    },
    "ex6": {
        "name": "ex6",
        "state_vars": ["x1", "x2", "x3", "x4"],
        "dynamics": ["x2", "-x1 + 0.1*sin(x3)", "x4", "u"],
        "control_step": 0.5,
        "steps": 10,
        "init": [[-0.77, -0.75], [-0.45, -0.43], [0.51, 0.54], [-0.3, -0.28]],
        "goal": [[-0.1, 0.2], [-0.9, -0.6], _WIDE, _WIDE],
        "params": {"degree": [2, 2, 2, 2], "delta_bar": 0.01, "tm_order": 4, "substeps": 20},
    },
}

GAINS: dict[str, tuple[float, ...]] = {
    "ex1": (0.0, -2.0),
    "ex2": (-2.0, -2.0),
    "ex3": (-1.5, -1.5),
    "ex4": (0.5, 0.0, -1.0),
    "ex5": (1.0, -2.0, -3.0),
    "ex6": (0.5, 0.5, -1.0, -2.0),
}


def get_benchmark(name: str) -> SystemSpec:
    if name not in BENCHMARKS:
        raise ReachError(f"unknown benchmark '{name}' (have {', '.join(BENCHMARKS)})")
    return load_system(BENCHMARKS[name])


# ==============================================================================
# CONTROLLERS
# ==============================================================================


def linear_relu_controller(gains: Sequence[float], bias: float = 0.0) -> Network:
    g = np.asarray(gains, dtype=float)
    hidden = Layer(np.vstack([g, -g]), np.array([bias, -bias]), Activation.RELU)
    out = Layer(np.array([[1.0, -1.0]]), np.zeros(1), Activation.LINEAR)
    return Network(len(g), (hidden, out))


def saturated_controller(gains: Sequence[float], act: Activation | str = Activation.TANH, amplitude: float = 1.0) -> Network:
    g = np.asarray(gains, dtype=float)
    act = Activation(act)
    if act is Activation.TANH:
        hidden = Layer(g[None, :], np.zeros(1), act)
        out = Layer(np.array([[amplitude]]), np.zeros(1), Activation.LINEAR)
    elif act is Activation.SIGMOID:
        hidden = Layer(2.0 * g[None, :], np.zeros(1), act)
        out = Layer(np.array([[2.0 * amplitude]]), np.array([-amplitude]), Activation.LINEAR)
    else:
        raise ReachError(f"saturation needs tanh or sigmoid, got {act.value}")
    return Network(len(g), (hidden, out))


def mixed_controller(gains: Sequence[float], amplitude: float = 1.0) -> Network:
    g = np.asarray(gains, dtype=float)
    split = Layer(np.vstack([g, -g]), np.zeros(2), Activation.RELU)
    squash = Layer(np.array([[1.0, -1.0]]), np.zeros(1), Activation.TANH)
    out = Layer(np.array([[amplitude]]), np.zeros(1), Activation.LINEAR)
    return Network(len(g), (split, squash, out))


def random_controller(
    n_in: int,
    n_out: int = 1,
    hidden: Sequence[int] = (10,),
    act: Activation | str | Sequence[Activation | str] = Activation.RELU,
    seed: int = 0,
    scale: float = 1.0,
) -> Network:
    """Glorot-scaled random network; act may be one activation or one per hidden layer."""
    rng = np.random.default_rng(seed)
    acts = [Activation(act)] * len(hidden) if isinstance(act, (str, Activation)) else [Activation(a) for a in act]
    if len(acts) != len(hidden):
        raise ReachError(f"{len(acts)} activations for {len(hidden)} hidden layers")
    widths = [n_in, *hidden, n_out]
    layers = []
    for s, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        w = rng.normal(0.0, scale * np.sqrt(2.0 / (a + b)), size=(b, a))
        bias = rng.normal(0.0, 0.1 * scale, size=b)
        layers.append(Layer(w, bias, acts[s] if s < len(hidden) else Activation.LINEAR))
    return Network(n_in, tuple(layers))


CONTROLLER_KINDS = ("linear", "tanh", "mixed")


def make_controller(benchmark: str, kind: str = "linear") -> Network:
    if benchmark not in GAINS:
        raise ReachError(f"no gains for benchmark '{benchmark}'")
    gains = GAINS[benchmark]
    if kind == "linear":
        return linear_relu_controller(gains)
    if kind == "tanh":
        return saturated_controller(gains, Activation.TANH, amplitude=2.0)
    if kind == "sigmoid":
        return saturated_controller(gains, Activation.SIGMOID, amplitude=2.0)
    if kind == "mixed":
        return mixed_controller(gains, amplitude=2.0)
    raise ReachError(f"unknown controller kind '{kind}'")


# ==============================================================================
# SUITE
# ==============================================================================


def run_suite(
    names: Iterable[str] | None = None,
    kinds: Iterable[str] = ("linear",),
    modes: Iterable[Mode | str] = (Mode.BERNSTEIN, Mode.INTERVAL),
    overrides: dict[str, Any] | None = None,
) -> list[dict[str, Any]]:
    """Verify every (benchmark, controller, mode) combination; one record per run."""
    records = []
    for name in names or BENCHMARKS:
        system = get_benchmark(name)
        for kind in kinds:
            net = make_controller(name, kind)
            for mode in modes:
                params = resolve_params(system, overrides, mode=Mode(mode))
                logger.info(f"[BENCH] {name} / {kind} / {Mode(mode).value}")
                try:
                    verdict = run(system, net, params)
                except ReachError as exc:
                    logger.error(f"[BENCH] {name} / {kind} failed: {exc}")
                    records.append({"benchmark": name, "controller": kind, "mode": Mode(mode).value, "error": str(exc)})
                    continue
                eps = [max(e) for e in verdict.per_step_eps]
                records.append(
                    {
                        "benchmark": name,
                        "controller": kind,
                        "mode": Mode(mode).value,
                        "verdict": str(verdict),
                        "max_eps": max(eps, default=0.0),
                        "mean_eps": float(np.mean(eps)) if eps else 0.0,
                        "step_widths": [b.max_width() for b in verdict.step_boxes],
                        **verdict_to_json(verdict),
                    }
                )
    return records
