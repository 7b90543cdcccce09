import math

import numpy as np
import pytest

from bernreach.interval import Box
from bernreach.lipschitz import (
    global_layer_bound,
    layer_lipschitz,
    lipschitz_profile,
    matrix_opnorm_ub,
    network_lipschitz,
    propagate_intervals,
)
from bernreach.nn import Activation, Layer, Network, apply_activation, nn_eval_batch


def test_opnorm_examples():
    assert matrix_opnorm_ub(np.eye(3)) == pytest.approx(1.0, rel=1e-6)
    assert matrix_opnorm_ub(np.diag([3.0, 2.0])) == pytest.approx(3.0, rel=1e-6)
    assert matrix_opnorm_ub(np.ones((2, 2))) == pytest.approx(2.0, rel=1e-6)
    assert matrix_opnorm_ub(np.zeros((2, 3))) == 0.0


def test_opnorm_never_underestimates():
    rng = np.random.default_rng(8)
    for _ in range(100):
        W = rng.normal(size=tuple(rng.integers(1, 12, size=2)))
        assert matrix_opnorm_ub(W) >= np.linalg.norm(W, 2)


def test_propagate_examples():
    lin = Network(1, (Layer([[1.0]], [0.0], "linear"),))
    (li,) = propagate_intervals(lin, Box.from_pairs([[0, 1]]))
    assert li.pre_activation.to_pairs()[0] == pytest.approx([0.0, 1.0])
    assert li.post_activation.to_pairs()[0] == pytest.approx([0.0, 1.0])
    relu = Network(1, (Layer([[1.0]], [-3.0], "relu"),))
    (li,) = propagate_intervals(relu, Box.from_pairs([[1, 2]]))
    assert li.post_activation.to_pairs() == [[0.0, 0.0]]
    sig = Network(1, (Layer([[0.0]], [0.0], "sigmoid"),))
    (li,) = propagate_intervals(sig, Box.from_pairs([[-1, 1]]))
    assert li.post_activation.to_pairs()[0] == pytest.approx([0.5, 0.5])


def test_layer_examples():
    W = np.array([[1.0, -2.0], [0.5, 0.3]])
    straddle = Box.from_pairs([[-1, 1], [-0.5, 2]])
    assert layer_lipschitz(Activation.SIGMOID, W, straddle) == pytest.approx(0.25 * matrix_opnorm_ub(W), rel=1e-9)
    dead = Box.from_pairs([[-3, -1], [-2, 0]])
    assert layer_lipschitz(Activation.RELU, W, dead) == 0.0
    t = layer_lipschitz(Activation.TANH, np.array([[1.0]]), Box.from_pairs([[1, 2]]))
    assert t == pytest.approx(1.0 - math.tanh(1.0) ** 2, rel=1e-6)
    assert t >= 1.0 - math.tanh(1.0) ** 2


def test_network_examples():
    ident = Network(2, (Layer(np.eye(2), np.zeros(2), "linear"),))
    assert network_lipschitz(ident, Box.from_pairs([[0, 1], [0, 1]])) == pytest.approx(1.0, rel=1e-6)
    W1, W2 = np.array([[2.0, 0.0], [0.0, 1.0]]), np.array([[0.0, 3.0]])
    stacked = Network(2, (Layer(W1, np.zeros(2), "linear"), Layer(W2, np.zeros(1), "linear")))
    L, factors = lipschitz_profile(stacked, Box.from_pairs([[0, 1], [0, 1]]))
    assert factors == pytest.approx([2.0, 3.0], rel=1e-6)
    assert L == pytest.approx(6.0, rel=1e-6)
    dead = Network(1, (Layer([[1.0]], [-5.0], "relu"), Layer([[4.0]], [1.0], "linear")))
    assert network_lipschitz(dead, Box.from_pairs([[0, 1]])) == 0.0


def test_empirical_soundness_and_refinement(random_networks):
    rng = np.random.default_rng(21)
    for net in random_networks():
        lo = rng.uniform(-1, 0.5, size=2)
        box = Box.from_bounds(lo, lo + rng.uniform(0.05, 1.0, size=2))
        L, factors = lipschitz_profile(net, box)
        X = rng.uniform(box.lo, box.hi, size=(2000, 2))
        Y = rng.uniform(box.lo, box.hi, size=(2000, 2))
        gap = np.linalg.norm(nn_eval_batch(net, X) - nn_eval_batch(net, Y), axis=1)
        dist = np.linalg.norm(X - Y, axis=1)
        assert np.all(gap <= L * dist * (1 + 1e-12) + 1e-12)
        for layer, f in zip(net.layers, factors):
            assert f <= global_layer_bound(layer.act, layer.weights)


def test_relu_refinement_with_masked_rows():
    # top right-singular direction is orthogonal to the fixed power-iteration start
    q1 = np.array([1.5, -1.0]) / math.sqrt(3.25)
    q2 = np.array([1.0, 1.5]) / math.sqrt(3.25)
    W = np.vstack([2.0 * q1, q2, [0.1, 0.0]])
    pre = Box.from_pairs([[-1, 1], [-1, 1], [-2, -0.5]])
    f = layer_lipschitz(Activation.RELU, W, pre)
    assert f <= global_layer_bound(Activation.RELU, W)
    assert f >= np.linalg.norm(W[:2], 2)
    assert f == pytest.approx(2.0, rel=1e-4)
    assert matrix_opnorm_ub(W[:2]) == pytest.approx(2.0, rel=1e-4)


def test_shrinking_box_never_increases_bound(random_networks):
    for net in random_networks(10):
        outer = Box.from_pairs([[-1, 1], [-1, 1]])
        inner = Box.from_pairs([[-0.2, 0.3], [0.1, 0.4]])
        assert network_lipschitz(net, inner) <= network_lipschitz(net, outer)


def test_propagation_contains_exact_activations(random_networks):
    rng = np.random.default_rng(6)
    for net in random_networks(10):
        box = Box.from_pairs([[-0.5, 0.7], [0.2, 0.9]])
        layers = propagate_intervals(net, box)
        X = rng.uniform(box.lo, box.hi, size=(500, 2))
        H = X
        for layer, li in zip(net.layers, layers):
            pre = H @ layer.weights.T + layer.bias
            H = apply_activation(layer.act, pre)
            assert np.all(pre >= li.pre_activation.lo) and np.all(pre <= li.pre_activation.hi)
            assert np.all(H >= li.post_activation.lo) and np.all(H <= li.post_activation.hi)
