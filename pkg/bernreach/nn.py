# bernreach/nn.py
"""
Feed-forward controller networks: representation, forward evaluation and the
plain-text weight-file format.

Weight file layout (whitespace separated, '#' starts a comment line):

    input_dim
    output_dim
    H                      # hidden layer count
    width_1 ... width_H
    act_1 ... act_H [act_out]
    then per layer, per neuron: incoming weights followed by the bias

The output activation may be omitted, in which case it is linear.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from bernreach import ReachError

logger = logging.getLogger(__name__)


class NetworkError(ReachError):
    """Raised on dimension mismatches and non-finite evaluations."""


class NetworkFormatError(NetworkError):
    """Raised when a weight file cannot be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Activation(str, Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    LINEAR = "linear"


def apply_activation(act: Activation, y: np.ndarray) -> np.ndarray:
    if act is Activation.RELU:
        return np.maximum(y, 0.0)
    if act is Activation.SIGMOID:
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-y))
    if act is Activation.TANH:
        return np.tanh(y)
    return y


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    act: Activation

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float, ndmin=2)
        b = np.array(self.bias, dtype=float).reshape(-1)
        if w.ndim != 2:
            raise NetworkError(f"weights must be a matrix, got shape {w.shape}")
        if b.shape[0] != w.shape[0]:
            raise NetworkError(f"bias has {b.shape[0]} entries for {w.shape[0]} neurons")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NetworkError("layer parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "act", Activation(self.act))

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class Network:
    input_dim: int
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise NetworkError("a network needs at least one layer")
        width = int(self.input_dim)
        for s, layer in enumerate(layers):
            if layer.in_dim != width:
                raise NetworkError(f"layer {s} expects {layer.in_dim} inputs, previous width is {width}")
            width = layer.out_dim
        object.__setattr__(self, "input_dim", int(self.input_dim))
        object.__setattr__(self, "layers", layers)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.input_dim == other.input_dim
            and len(self.layers) == len(other.layers)
            and all(
                a.act is b.act and np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
                for a, b in zip(self.layers, other.layers)
            )
        )

    __hash__ = None  # type: ignore[assignment]


def nn_eval_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Evaluate on rows of X (N×input_dim); returns N×output_dim."""
    Y = np.atleast_2d(np.asarray(X, dtype=float))
    if Y.shape[1] != net.input_dim:
        raise NetworkError(f"input has {Y.shape[1]} coordinates, network expects {net.input_dim}")
    for s, layer in enumerate(net.layers):
        Y = apply_activation(layer.act, Y @ layer.weights.T + layer.bias)
        if not np.all(np.isfinite(Y)):
            raise NetworkError(f"non-finite activation in layer {s}")
    return Y


def nn_eval(net: Network, x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    return nn_eval_batch(net, x[None, :])[0]


def output_network(net: Network, o: int) -> Network:
    """The sub-network computing output coordinate o only."""
    if not 0 <= o < net.output_dim:
        raise NetworkError(f"output index {o} out of range for {net.output_dim} outputs")
    last = net.layers[-1]
    head = Layer(last.weights[o : o + 1], last.bias[o : o + 1], last.act)
    return Network(net.input_dim, net.layers[:-1] + (head,))


def _tokens(text: str) -> list[tuple[str, int]]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        out.extend((tok, no) for tok in line.split())
    return out


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


class _Reader:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.pos = 0
        self.last_line = text.count("\n") + 1

    def line(self) -> int:
        if self.pos < len(self.toks):
            return self.toks[self.pos][1]
        return self.toks[-1][1] if self.toks else self.last_line

    def peek(self) -> str | None:
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def take(self, what: str) -> str:
        if self.pos >= len(self.toks):
            raise NetworkFormatError(f"malformed header: missing {what}", self.line())
        tok = self.toks[self.pos][0]
        self.pos += 1
        return tok

    def take_int(self, what: str, minimum: int) -> int:
        line = self.line()
        tok = self.take(what)
        try:
            value = int(tok)
        except ValueError:
            raise NetworkFormatError(f"malformed header: expected integer {what}, got '{tok}'", line) from None
        if value < minimum:
            raise NetworkFormatError(f"malformed header: {what} must be >= {minimum}, got {value}", line)
        return value

    def take_activation(self, what: str) -> Activation:
        line = self.line()
        tok = self.take(what)
        try:
            return Activation(tok.lower())
        except ValueError:
            raise NetworkFormatError(f"unknown activation '{tok}' for {what}", line) from None


def parse_network(text: str) -> Network:
    r = _Reader(text)
    input_dim = r.take_int("input_dim", 1)
    output_dim = r.take_int("output_dim", 1)
    hidden = r.take_int("hidden layer count", 0)
    widths = [r.take_int(f"width of hidden layer {s + 1}", 1) for s in range(hidden)]
    acts = [r.take_activation(f"hidden layer {s + 1}") for s in range(hidden)]
    nxt = r.peek()
    if nxt is not None and not _is_number(nxt):
        acts.append(r.take_activation("output layer"))
    else:
        acts.append(Activation.LINEAR)

    dims = [input_dim] + widths + [output_dim]
    expected = sum(dims[s] * dims[s + 1] + dims[s + 1] for s in range(len(dims) - 1))
    rest = r.toks[r.pos :]
    if len(rest) != expected:
        line = rest[-1][1] if rest else r.line()
        raise NetworkFormatError(f"expected {expected} parameters, found {len(rest)}", line)

    values = np.empty(expected)
    for i, (tok, line) in enumerate(rest):
        try:
            v = float(tok)
        except ValueError:
            raise NetworkFormatError(f"malformed parameter '{tok}'", line) from None
        if not math.isfinite(v):
            raise NetworkFormatError(f"non-finite parameter '{tok}'", line)
        values[i] = v

    layers = []
    pos = 0
    for s in range(len(dims) - 1):
        n_in, n_out = dims[s], dims[s + 1]
        block = values[pos : pos + n_out * (n_in + 1)].reshape(n_out, n_in + 1)
        pos += n_out * (n_in + 1)
        layers.append(Layer(block[:, :n_in], block[:, n_in], acts[s]))
    net = Network(input_dim, tuple(layers))
    logger.debug(f"[NETWORK] parsed {input_dim}->{widths}->{output_dim} with {expected} parameters")
    return net


def serialize_network(net: Network) -> str:
    hidden = net.layers[:-1]
    lines = [str(net.input_dim), str(net.output_dim), str(len(hidden))]
    lines += [str(layer.out_dim) for layer in hidden]
    lines += [layer.act.value for layer in net.layers]
    for layer in net.layers:
        for row, b in zip(layer.weights, layer.bias):
            lines += [repr(float(w)) for w in row]
            lines.append(repr(float(b)))
    return "\n".join(lines) + "\n"


def load_network(path: str | Path) -> Network:
    path = Path(path)
    logger.info(f"[NETWORK] loading {path}")
    return parse_network(path.read_text(encoding="utf-8"))


def save_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(serialize_network(net), encoding="utf-8")
