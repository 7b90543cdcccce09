import logging
import math

import numpy as np
import pytest

from bernreach.benchmarks import linear_relu_controller, random_controller
from bernreach.bernstein import DegreeVector, bernstein_coefficients, bernstein_to_power, bernstein_unit
from bernreach.error import (
    CertificationError,
    adaptive_partition,
    build_abstraction,
    center_deviations,
    certify_output,
    sample_deviation,
    sampling_precision,
    t_error,
)
from bernreach.interval import Box
from bernreach.nn import nn_eval_batch
from bernreach.poly import MultiPoly, poly_eval_batch

UNIT2 = Box.from_pairs([[0, 1], [0, 1]])


def square(X):
    return X[:, 0] ** 2


def test_t_error_examples():
    assert t_error(1.0, (3, 3), UNIT2) == pytest.approx(0.408248, abs=1e-6)
    assert t_error(2.0, (4, 4), Box.from_pairs([[0, 2], [0, 1]])) == pytest.approx(math.sqrt(2), abs=1e-9)
    assert t_error(0.0, (2, 2), UNIT2) == 0.0
    with pytest.raises(CertificationError):
        t_error(-1.0, (2, 2), UNIT2)


def test_t_error_rounds_up():
    assert t_error(1.0, (3, 3), UNIT2) >= 0.5 * math.sqrt(2 / 3)


def test_sampling_precision_examples():
    assert sampling_precision(UNIT2, 1.0, [2, 2]) == pytest.approx(math.sqrt(0.5))
    assert sampling_precision(UNIT2, 0.0, [1, 1]) == 0.0


@pytest.mark.parametrize("L,delta_bar", [(0.0, 0.1), (1.0, 0.1), (2.0, 0.01), (7.5, 0.03)])
def test_adaptive_partition_meets_precision(L, delta_bar):
    x = Box.from_pairs([[0, 2], [-1, 0.5]])
    p = adaptive_partition(x, L, delta_bar)
    assert all(pj >= 1 for pj in p)
    assert sampling_precision(x, L, p) <= delta_bar
    if L == 0.0:
        assert p == [1, 1]


def test_adaptive_partition_rejects_bad_inputs():
    with pytest.raises(CertificationError):
        adaptive_partition(UNIT2, 1.0, 0.0)
    with pytest.raises(CertificationError):
        adaptive_partition(UNIT2, -1.0, 0.1)


def test_center_deviations():
    one = MultiPoly.constant(("x1", "x2"), 1.0)
    dev = center_deviations(lambda X: np.zeros(len(X)), one, UNIT2, [2, 3])
    assert dev.shape == (2, 3)
    assert np.allclose(dev, 1.0)
    x = MultiPoly.variable(("x1", "x2"), "x1")
    dev = center_deviations(lambda X: np.zeros(len(X)), x, UNIT2, [4, 1])
    assert dev[:, 0].tolist() == pytest.approx([0.125, 0.375, 0.625, 0.875])
    with pytest.raises(CertificationError):
        center_deviations(square, one, UNIT2, [0, 2])
    with pytest.raises(CertificationError):
        center_deviations(square, one, UNIT2, [2])


@pytest.mark.parametrize("delta_bar", [0.1, 0.01, 0.001])
def test_square_degree_two_error(delta_bar):
    x = Box.from_pairs([[0, 1]])
    d = DegreeVector((2,))
    coeffs = bernstein_coefficients(square, d)[..., 0]
    poly = bernstein_to_power(coeffs)
    report = certify_output(square, poly, x, d, 2.0, delta_bar, coeffs=coeffs, unit_poly=poly)
    # sup |x² - (x + x²)/2| on [0, 1] is 1/8 at x = 1/2
    assert report.eps_s >= 0.125
    assert report.eps_s <= 0.125 + 2 * report.delta_p
    assert report.delta_p <= delta_bar
    assert report.eps_t == pytest.approx(math.sqrt(0.5))
    assert report.eps_used <= report.eps_t + report.conversion_slack
    assert report.eps_used <= report.eps_s + report.conversion_slack + 1e-15
    assert report.conversion_slack < 1e-10
    assert not report.capped


def test_capped_partition_still_sound(caplog):
    poly = bernstein_unit(lambda X: np.sin(3 * X[:, 0]) + X[:, 1], [2, 2])
    fn = lambda X: np.sin(3 * X[:, 0]) + X[:, 1]
    with caplog.at_level(logging.WARNING, logger="bernreach.error"):
        res = sample_deviation(fn, poly, UNIT2, 4.0, 0.001, max_samples=100)
    assert f"δ(p)={res.delta_p:.4g}" in caplog.text
    assert res.capped
    assert res.samples <= 100
    assert res.delta_p == pytest.approx(sampling_precision(UNIT2, 4.0, res.p))
    X = np.random.default_rng(0).uniform(0, 1, size=(5000, 2))
    assert np.max(np.abs(fn(X) - poly_eval_batch(poly, X))) <= res.eps_s


def test_build_abstraction_is_sound(random_networks):
    rng = np.random.default_rng(12)
    for k, net in enumerate(random_networks()):
        lo = rng.uniform(-1, 0.5, size=2)
        x = Box.from_bounds(lo, lo + rng.uniform(0.05, 0.5, size=2))
        ab = build_abstraction(net, x, [3, 3], 0.05, per_output=k % 2 == 1, workers=2)
        assert len(ab.polys) == len(ab.eps) == len(ab.reports) == 1
        X = rng.uniform(x.lo, x.hi, size=(100_000, 2))
        Y = nn_eval_batch(net, X)[:, 0]
        assert np.max(np.abs(Y - poly_eval_batch(ab.polys[0], X))) <= ab.eps[0]
        r = ab.reports[0]
        assert r.eps_used <= (min(r.eps_t, r.eps_s) + r.conversion_slack) * (1 + 1e-12)


def test_build_abstraction_two_outputs():
    net = random_controller(2, 2, (8,), "tanh", seed=1)
    x = Box.from_pairs([[-0.3, -0.1], [0.4, 0.7]])
    ab = build_abstraction(net, x, [2, 3], 0.05, per_output=True)
    assert len(ab.polys) == len(ab.eps) == 2
    X = np.random.default_rng(2).uniform(x.lo, x.hi, size=(4000, 2))
    Y = nn_eval_batch(net, X)
    for o in range(2):
        assert np.max(np.abs(Y[:, o] - poly_eval_batch(ab.polys[o], X))) <= ab.eps[o]


def test_linear_controller_error_is_sampling_radius():
    net = linear_relu_controller([1.0, -1.0])
    ab = build_abstraction(net, Box.from_pairs([[0, 0.5], [-0.5, 0]]), [2, 2], 0.02)
    (r,) = ab.reports
    assert r.eps_s <= r.delta_p + 1e-12
    assert ab.eps[0] <= 0.02 + 1e-9


def test_build_abstraction_dimension_mismatch():
    net = linear_relu_controller([1.0, -1.0, 2.0])
    with pytest.raises(CertificationError):
        build_abstraction(net, UNIT2, [2, 2], 0.1)
