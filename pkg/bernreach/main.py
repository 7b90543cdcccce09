# bernreach/main.py
"""
Command-line entry point.

    python -m bernreach.main verify --model m.txt --system s.json --degree 3,3 --delta 0.01
    python -m bernreach.main approx --model m.txt --box "0,1;0,1" --degree 3,3 --probe 10000
    python -m bernreach.main lipschitz --model m.txt --system s.json
    python -m bernreach.main simulate --model m.txt --system s.json --out traj.csv
    python -m bernreach.main bench --names ex1,ex2 --modes bernstein,interval

Results go to stdout as JSON; logs go to stderr. Exit codes: 0 on Yes or
success, 1 on Unknown, 2 on errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from bernreach import ReachError, settings
from bernreach.benchmarks import BENCHMARKS, CONTROLLER_KINDS, run_suite
from bernreach.config import ConfigError, Mode, RunConfig, load_system, resolve_params
from bernreach.error import build_abstraction
from bernreach.flowpipe import VerdictKind, flowpipes_to_json, run, verdict_to_json
from bernreach.interval import Box
from bernreach.lipschitz import global_layer_bound, lipschitz_profile
from bernreach.nn import load_network, nn_eval_batch
from bernreach.poly import poly_eval_batch
from bernreach.render import emit_svg
from bernreach.simulate import sample_trajectories, trajectory_containment, write_trajectories_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNKNOWN = 1
EXIT_ERROR = 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from exc


def _box(text: str) -> Box:
    """Parse 'l1,u1;l2,u2' into a Box."""
    try:
        pairs = [[float(v) for v in part.split(",")] for part in text.split(";")]
        return Box.from_pairs(pairs)
    except (ValueError, ReachError) as exc:
        raise argparse.ArgumentTypeError(f"expected 'l1,u1;l2,u2', got '{text}'") from exc


def _print(payload: Any) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    logger.info(f"[OUTPUT] wrote {path}")


def _domain(args: argparse.Namespace) -> Box:
    if args.box is not None:
        return args.box
    if args.system is not None:
        return load_system(args.system).init
    raise ConfigError("either --box or --system is required")


# ==============================================================================
# SUBCOMMANDS
# ==============================================================================


def cmd_verify(args: argparse.Namespace) -> int:
    system = load_system(args.system)
    net = load_network(args.model)
    overrides = {
        "degree": args.degree,
        "delta_bar": args.delta,
        "tm_order": args.order,
        "substeps": args.substeps,
        "mode": args.mode,
        "width_cap": args.width_cap,
        "check_every_step": args.check_every_step or None,
        "rebox_every": args.rebox_every,
        "per_output": args.per_output or None,
        "max_samples": args.max_samples,
        "workers": args.workers,
        "flowpipes_out": args.flowpipes,
        "trajectories_out": args.trajectories_out,
        "svg_out": args.svg,
        "trajectories": args.trajectories,
        "sim_dt": args.sim_dt,
        "seed": args.seed,
        "plot_dims": tuple(args.dims) if args.dims else None,
    }
    config = resolve_params(system, overrides, base=RunConfig, model_path=args.model, system_path=args.system)
    verdict = run(system, net, config)
    payload = verdict_to_json(verdict)

    if config.flowpipes_out:
        _write_json(config.flowpipes_out, flowpipes_to_json(verdict.flowpipes))
    if config.trajectories and (config.trajectories_out or config.svg_out):
        trajectories = sample_trajectories(system, net, config.trajectories, config.sim_dt, config.seed, config.workers)
        violations = trajectory_containment(trajectories, verdict.flowpipes)
        payload["containment_violations"] = len(violations)
        if violations:
            logger.error(f"[SIMULATE] {len(violations)} simulated states fall outside the flowpipes")
        if config.trajectories_out:
            write_trajectories_csv(trajectories, config.trajectories_out, system.state_vars)
        if config.svg_out:
            svg = emit_svg(verdict.flowpipes, trajectories, system.goal, config.plot_dims, labels=_labels(system, config.plot_dims))
            config.svg_out.write_text(svg, encoding="utf-8")
    elif config.svg_out:
        svg = emit_svg(verdict.flowpipes, [], system.goal, config.plot_dims, labels=_labels(system, config.plot_dims))
        config.svg_out.write_text(svg, encoding="utf-8")

    _print(payload)
    return EXIT_OK if verdict.kind is VerdictKind.YES else EXIT_UNKNOWN


def _labels(system, dims: Sequence[int]) -> tuple[str, str]:
    return system.state_vars[dims[0]], system.state_vars[dims[1]]


def cmd_approx(args: argparse.Namespace) -> int:
    net = load_network(args.model)
    box = _domain(args)
    degree = args.degree or [3] * len(box)
    abstraction = build_abstraction(net, box, degree, args.delta, args.per_output, args.max_samples, args.workers)
    payload: dict[str, Any] = {
        "box": box.to_pairs(),
        "degree": list(abstraction.degree),
        "polynomials": [str(p) for p in abstraction.polys],
        "eps": list(abstraction.eps),
        "reports": [r.model_dump() for r in abstraction.reports],
    }
    if args.probe:
        rng = np.random.default_rng(args.seed)
        X = rng.uniform(box.lo, box.hi, size=(args.probe, len(box)))
        exact = nn_eval_batch(net, X)
        observed = [float(np.max(np.abs(exact[:, o] - poly_eval_batch(p, X)))) for o, p in enumerate(abstraction.polys)]
        payload["probe"] = {"samples": args.probe, "max_deviation": observed}
        for o, (obs, eps) in enumerate(zip(observed, abstraction.eps)):
            if obs > eps:
                logger.error(f"[BERNSTEIN] output {o}: observed deviation {obs:.4g} exceeds certified {eps:.4g}")
    _print(payload)
    return EXIT_OK


def cmd_lipschitz(args: argparse.Namespace) -> int:
    net = load_network(args.model)
    box = _domain(args)
    L, factors = lipschitz_profile(net, box)
    baseline = [global_layer_bound(layer.act, layer.weights) for layer in net.layers]
    _print({"box": box.to_pairs(), "lipschitz": L, "factors": factors, "global_factors": baseline, "global": float(np.prod(baseline))})
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    system = load_system(args.system)
    net = load_network(args.model)
    trajectories = sample_trajectories(system, net, args.count, args.dt, args.seed, args.workers)
    if args.out:
        write_trajectories_csv(trajectories, args.out, system.state_vars)
    finals = np.array([t.states[-1] for t in trajectories])
    in_goal = sum(system.goal.contains(x) for x in finals)
    _print(
        {
            "system": system.name,
            "trajectories": len(trajectories),
            "final_lo": finals.min(axis=0).tolist(),
            "final_hi": finals.max(axis=0).tolist(),
            "in_goal": int(in_goal),
        }
    )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    overrides = {"workers": args.workers, "max_samples": args.max_samples, "substeps": args.substeps, "tm_order": args.order}
    records = run_suite(args.names, args.kinds, [Mode(m) for m in args.modes], overrides)
    if args.out:
        _write_json(args.out, records)
    _print(records)
    return EXIT_ERROR if any("error" in r for r in records) else EXIT_OK


# ==============================================================================
# PARSER
# ==============================================================================


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    p.add_argument("--workers", type=int, default=None, help=f"Worker threads (default {settings.WORKERS})")
    p.add_argument("--max-samples", type=int, default=None, help="Cap on S-error sampling cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bernreach", description="Reachability of neural-network controlled systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="Build flowpipes and decide goal reachability")
    _common(p)
    p.add_argument("--model", type=Path, required=True, help="Controller weight file")
    p.add_argument("--system", type=Path, required=True, help="System JSON file")
    p.add_argument("--degree", type=_int_list, default=None, help="Bernstein degree per state, e.g. 3,3")
    p.add_argument("--delta", type=float, default=None, help="Sampling precision δ̄")
    p.add_argument("--order", type=int, default=None, help="Taylor model order")
    p.add_argument("--substeps", type=int, default=None, help="Integration sub-steps per control step")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    p.add_argument("--width-cap", type=float, default=None, help="Box width treated as blow-up")
    p.add_argument("--check-every-step", action="store_true")
    p.add_argument("--rebox-every", type=int, default=None)
    p.add_argument("--per-output", action="store_true", help="Per-output Lipschitz constants")
    p.add_argument("--flowpipes", type=Path, default=None, help="Write flowpipe JSON here")
    p.add_argument("--trajectories-out", type=Path, default=None, help="Write simulated trajectories CSV here")
    p.add_argument("--svg", type=Path, default=None, help="Write an SVG plot here")
    p.add_argument("--trajectories", type=int, default=None, help="Number of simulated trajectories")
    p.add_argument("--sim-dt", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dims", type=_int_list, default=None, help="Projection axes for the plot, e.g. 0,1")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("approx", help="Bernstein abstraction of a controller over a box")
    _common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--box", type=_box, default=None, help="Domain as 'l1,u1;l2,u2'")
    p.add_argument("--system", type=Path, default=None, help="Use the system's initial set as domain")
    p.add_argument("--degree", type=_int_list, default=None)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--per-output", action="store_true")
    p.add_argument("--probe", type=int, default=0, help="Random points for an empirical error check")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_approx)

    p = sub.add_parser("lipschitz", help="Layer-wise Lipschitz bound over a box")
    _common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--box", type=_box, default=None)
    p.add_argument("--system", type=Path, default=None)
    p.set_defaults(handler=cmd_lipschitz)

    p = sub.add_parser("simulate", help="RK4 closed-loop trajectories from the initial set")
    _common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--system", type=Path, required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="Trajectory CSV path")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("bench", help="Run the benchmark suite")
    _common(p)
    p.add_argument("--names", type=lambda s: s.split(","), default=list(BENCHMARKS))
    p.add_argument("--kinds", type=lambda s: s.split(","), default=["linear"], help=f"Any of {', '.join(CONTROLLER_KINDS)}")
    p.add_argument("--modes", type=lambda s: s.split(","), default=[m.value for m in Mode])
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--substeps", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    settings.configure_logging(args.verbose)
    try:
        return args.handler(args)
    except (ReachError, OSError, ValueError) as exc:
        logger.error(f"[{args.command.upper()}] {exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
