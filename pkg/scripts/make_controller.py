#!/usr/bin/env python3
"""
Controller file helper for bernreach
Usage:
  python -m scripts.make_controller --benchmark ex1 [--kind linear|tanh|sigmoid|mixed] --out ex1.nn
  python -m scripts.make_controller --gains "0,-2" [--kind linear] --out c.nn
  python -m scripts.make_controller --random 2 --hidden 10,10 --act tanh --seed 3 --out r.nn

Also writes the benchmark's system JSON next to the controller when --system is given,
so the pair can go straight into `python -m bernreach.main verify`.
"""
import argparse
import json
import sys

from bernreach import ReachError
from bernreach.benchmarks import BENCHMARKS, linear_relu_controller, make_controller, mixed_controller, random_controller, saturated_controller
from bernreach.nn import Network, save_network


def build(args) -> Network:
    if args.random:
        hidden = [int(v) for v in args.hidden.split(",")]
        return random_controller(args.random, 1, hidden, args.act, seed=args.seed)
    if args.gains:
        gains = [float(v) for v in args.gains.split(",")]
        if args.kind == "linear":
            return linear_relu_controller(gains)
        if args.kind == "mixed":
            return mixed_controller(gains, args.amplitude)
        return saturated_controller(gains, args.kind, args.amplitude)
    return make_controller(args.benchmark, args.kind)


def main():
    parser = argparse.ArgumentParser(description="Write a handcrafted controller weight file")
    parser.add_argument("--benchmark", choices=sorted(BENCHMARKS), default="ex1")
    parser.add_argument("--kind", choices=["linear", "tanh", "sigmoid", "mixed"], default="linear")
    parser.add_argument("--gains", default=None, help="Comma-separated feedback gains, e.g. '0,-2'")
    parser.add_argument("--amplitude", type=float, default=2.0, help="Saturation level for tanh/sigmoid/mixed")
    parser.add_argument("--random", type=int, default=0, help="Random network with this many inputs")
    parser.add_argument("--hidden", default="10", help="Hidden widths for --random")
    parser.add_argument("--act", default="relu", help="Hidden activation for --random")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="Weight file to write")
    parser.add_argument("--system", default=None, help="Also write the benchmark system JSON here")
    args = parser.parse_args()

    try:
        net = build(args)
        save_network(net, args.out)
    except (ReachError, ValueError) as e:
        print(json.dumps({"status": "error", "reason": str(e)}, indent=2))
        sys.exit(2)
    if args.system:
        with open(args.system, "w", encoding="utf-8") as f:
            json.dump(BENCHMARKS[args.benchmark], f, indent=2)

    result = {
        "status": "success",
        "model": args.out,
        "system": args.system,
        "inputs": net.input_dim,
        "widths": [layer.out_dim for layer in net.layers],
        "activations": [layer.act.value for layer in net.layers],
    }
    print(json.dumps(result, ensure_ascii=False, indent=2))


if __name__ == "__main__":
    main()
