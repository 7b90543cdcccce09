import numpy as np
import pytest

from bernreach.benchmarks import random_controller
from bernreach.nn import (
    Activation,
    Layer,
    Network,
    NetworkError,
    NetworkFormatError,
    load_network,
    nn_eval,
    nn_eval_batch,
    output_network,
    parse_network,
    save_network,
    serialize_network,
)

MIXED = """\
# 2 inputs, relu then tanh hidden layers
2
1
2
3
2
relu
tanh
linear
1.0
-1.0
0.5
0.5
2.0
0.0
-1.0
0.0
0.25
1.0
1.0
1.0
0.0
-1.0
0.5
0.75
-0.5
0.1
-0.2
0.05
"""


def test_linear_eval():
    net = Network(1, (Layer([[2.0]], [1.0], Activation.LINEAR),))
    assert nn_eval(net, [3.0]).tolist() == [7.0]


def test_relu_dead_and_sigmoid_half():
    relu = Network(2, (Layer([[1.0, 1.0], [2.0, 0.0]], [-10.0, -10.0], Activation.RELU),))
    assert nn_eval(relu, [1.0, 2.0]).tolist() == [0.0, 0.0]
    sig = Network(3, (Layer(np.zeros((4, 3)), np.zeros(4), Activation.SIGMOID),))
    assert nn_eval(sig, [1.0, -2.0, 5.0]).tolist() == [0.5] * 4


def test_zero_network_returns_activation_of_zero():
    layers = (
        Layer(np.zeros((3, 2)), np.zeros(3), Activation.SIGMOID),
        Layer(np.zeros((2, 3)), np.zeros(2), Activation.TANH),
        Layer(np.zeros((1, 2)), np.zeros(1), Activation.RELU),
    )
    net = Network(2, layers)
    assert nn_eval(net, [4.0, -1.0]).tolist() == [0.0]


def test_dimension_errors():
    net = Network(2, (Layer(np.ones((1, 2)), [0.0], "linear"),))
    with pytest.raises(NetworkError):
        nn_eval(net, [1.0])
    with pytest.raises(NetworkError):
        Network(3, (Layer(np.ones((1, 2)), [0.0], "linear"),))
    with pytest.raises(NetworkError):
        Layer(np.ones((2, 2)), [0.0], "relu")
    with pytest.raises(NetworkError):
        Network(2, ())


def test_non_finite_intermediate():
    net = Network(1, (Layer([[1e308]], [0.0], "linear"), Layer([[1e308]], [0.0], "linear")))
    with pytest.raises(NetworkError):
        nn_eval(net, [10.0])


def test_parse_minimal():
    net = parse_network("1\n1\n0\nlinear\n2.0\n1.0\n")
    assert len(net.layers) == 1
    assert nn_eval(net, [3.0]).tolist() == [7.0]


def test_parse_defaults_output_to_linear():
    net = parse_network("1\n1\n1\n1\nrelu\n1.0\n0.0\n-1.0\n0.5\n")
    assert net.layers[-1].act is Activation.LINEAR
    assert nn_eval(net, [2.0]).tolist() == [-1.5]


def test_parse_mixed_matches_hand_composition():
    net = parse_network(MIXED)
    assert [layer.act for layer in net.layers] == [Activation.RELU, Activation.TANH, Activation.LINEAR]
    W1 = np.array([[1.0, -1.0], [0.5, 2.0], [-1.0, 0.0]])
    b1 = np.array([0.5, 0.0, 0.25])
    W2 = np.array([[1.0, 1.0, 1.0], [-1.0, 0.5, 0.75]])
    b2 = np.array([0.0, -0.5])
    W3 = np.array([[0.1, -0.2]])
    b3 = np.array([0.05])
    rng = np.random.default_rng(0)
    for x in rng.uniform(-2, 2, size=(100, 2)):
        h = np.maximum(W1 @ x + b1, 0.0)
        h = np.tanh(W2 @ h + b2)
        assert nn_eval(net, x) == pytest.approx(W3 @ h + b3)


def test_parse_unknown_activation():
    with pytest.raises(NetworkFormatError) as info:
        parse_network("1\n1\n1\n1\ngelu\n1.0\n0.0\n1.0\n0.0\n")
    assert "gelu" in str(info.value)
    assert info.value.line == 5


def test_parse_truncated():
    with pytest.raises(NetworkFormatError) as info:
        parse_network("1\n1\n1\n2\nrelu\nlinear\n1.0\n0.0\n1.0\n")
    assert "expected 7 parameters, found 3" in str(info.value)


def test_parse_bad_header():
    with pytest.raises(NetworkFormatError) as info:
        parse_network("two\n1\n0\n1.0\n0.0\n")
    assert info.value.line == 1
    with pytest.raises(NetworkFormatError):
        parse_network("")


def test_round_trip_exact(tmp_path):
    for seed, act in enumerate(["relu", "sigmoid", "tanh"]):
        net = random_controller(2, 2, (5, 3), act, seed=seed)
        again = parse_network(serialize_network(net))
        assert again == net
        assert parse_network(serialize_network(again)) == net
        path = tmp_path / f"{act}.nn"
        save_network(net, path)
        assert load_network(path) == net


def test_batch_and_output_network():
    net = random_controller(3, 2, (6,), "tanh", seed=4)
    X = np.random.default_rng(2).uniform(-1, 1, size=(50, 3))
    Y = nn_eval_batch(net, X)
    assert Y.shape == (50, 2)
    assert np.allclose(Y[7], nn_eval(net, X[7]))
    head = output_network(net, 1)
    assert head.output_dim == 1
    assert np.allclose(nn_eval_batch(head, X)[:, 0], Y[:, 1])
    with pytest.raises(NetworkError):
        output_network(net, 2)
