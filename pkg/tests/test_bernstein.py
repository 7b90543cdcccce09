import numpy as np
import pytest

from bernreach.bernstein import (
    BernsteinError,
    DegreeVector,
    approx_controller,
    approx_function,
    bernstein_coefficients,
    bernstein_to_power,
    bernstein_unit,
    de_casteljau_eval,
    unit_affine_map,
    unit_grid,
)
from bernreach.benchmarks import linear_relu_controller, random_controller
from bernreach.interval import Box
from bernreach.nn import Layer, Network
from bernreach.poly import MultiPoly, poly_eval, poly_eval_batch


def test_degree_vector():
    assert DegreeVector.of(3, 2).values == (3, 3)
    assert DegreeVector.of([2, 4]).grid_size == 15
    with pytest.raises(BernsteinError):
        DegreeVector.of([0, 2])
    with pytest.raises(BernsteinError):
        DegreeVector.of([2, 2], 3)


def test_unit_grid_order():
    g = unit_grid(DegreeVector((1, 2)))
    assert g.tolist() == [[0, 0], [0, 0.5], [0, 1], [1, 0], [1, 0.5], [1, 1]]


def test_identity_degree_one():
    p = bernstein_unit(lambda X: X[:, 0], [1])
    assert p == MultiPoly(("x1",), {(1,): 1.0})


def test_constant_any_degree():
    for d in [1, 3, 6]:
        p = bernstein_unit(lambda X: np.full(len(X), 2.5), [d])
        assert p.degree == 0
        assert p.constant_term == pytest.approx(2.5)


def test_square_degree_two():
    p = bernstein_unit(lambda X: X[:, 0] ** 2, [2])
    expected = {(1,): 0.5, (2,): 0.5}
    assert set(p.terms) == set(expected)
    for k, v in expected.items():
        assert p.terms[k] == pytest.approx(v)


def test_affine_reproduction_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = int(rng.integers(1, 3))
        a, c = rng.uniform(-3, 3, size=m), float(rng.uniform(-2, 2))
        d = tuple(int(k) for k in rng.integers(1, 6, size=m))
        p = bernstein_unit(lambda X: X @ a + c, d)
        for exp, coef in p.terms.items():
            if sum(exp) == 0:
                assert coef == pytest.approx(c, abs=1e-9)
            elif sum(exp) == 1:
                assert coef == pytest.approx(a[exp.index(1)], abs=1e-9)
            else:
                assert abs(coef) <= 1e-9
        for corner in np.array(np.meshgrid(*[[0.0, 1.0]] * m)).reshape(m, -1).T:
            assert poly_eval(p, corner) == pytest.approx(corner @ a + c, abs=1e-9)


def test_de_casteljau_matches_power_form():
    rng = np.random.default_rng(3)
    coeffs = rng.normal(size=(4, 3))
    p = bernstein_to_power(coeffs)
    X = rng.uniform(0, 1, size=(300, 2))
    assert np.allclose(de_casteljau_eval(coeffs, X), poly_eval_batch(p, X), atol=1e-12)
    assert de_casteljau_eval(coeffs, [0.0, 0.0]) == pytest.approx(coeffs[0, 0])
    assert de_casteljau_eval(coeffs, [1.0, 1.0]) == pytest.approx(coeffs[-1, -1])
    with pytest.raises(BernsteinError):
        de_casteljau_eval(coeffs, [1.5, 0.0])


def test_de_casteljau_small_examples():
    assert de_casteljau_eval(np.array([0.0, 0.25, 1.0]), [0.5]) == pytest.approx(0.375)
    assert de_casteljau_eval(np.array([2.0, 4.0]), [0.25]) == pytest.approx(2.5)
    assert de_casteljau_eval(np.full((3, 2), 1.5), [0.3, 0.8]) == pytest.approx(1.5)


def test_interpolates_at_corners():
    f = lambda X: np.sin(3 * X[:, 0]) * X[:, 1]
    p = bernstein_unit(f, [4, 3])
    for corner in [[0, 0], [0, 1], [1, 0], [1, 1]]:
        assert poly_eval(p, corner) == pytest.approx(f(np.array([corner], dtype=float))[0], abs=1e-12)


def test_converges_with_degree():
    f = lambda X: np.exp(X[:, 0]) * np.cos(X[:, 1])
    X = np.random.default_rng(1).uniform(0, 1, size=(500, 2))
    errs = [np.max(np.abs(poly_eval_batch(bernstein_unit(f, [d, d]), X) - f(X))) for d in (2, 4, 8, 16)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.05


def test_affine_map_back_to_box():
    x = Box.from_pairs([[2, 5], [-1, 1]])
    scale, shift = unit_affine_map(x)
    assert scale.tolist() == pytest.approx([1 / 3, 0.5])
    assert shift.tolist() == pytest.approx([-2 / 3, 0.5])
    _, unit, polys = approx_function(lambda X: 2 * X[:, 0] - X[:, 1], x, [2, 2])
    for pt in [[2, -1], [3.5, 0.2], [5, 1]]:
        assert poly_eval(polys[0], pt) == pytest.approx(2 * pt[0] - pt[1])
    with pytest.raises(BernsteinError):
        unit_affine_map(Box.from_pairs([[1, 1]]))


def test_coefficients_are_samples():
    net = random_controller(2, 2, (4,), "tanh", seed=2)
    c = bernstein_coefficients(lambda X: X[:, 0] + 10 * X[:, 1], DegreeVector((2, 2)))
    assert c.shape == (3, 3, 1)
    assert c[1, 2, 0] == pytest.approx(0.5 + 10.0)
    two = bernstein_coefficients(lambda X: np.stack([X[:, 0], X[:, 1]], axis=1), DegreeVector((1, 1)))
    assert two.shape == (2, 2, 2)
    polys = approx_controller(net, Box.from_pairs([[0, 1], [0, 1]]), [3, 3])
    assert len(polys) == 2


def test_linear_relu_controller_reproduced_on_active_region():
    net = linear_relu_controller([1.0, -2.0])
    x = Box.from_pairs([[-1, 1], [-2, 2]])
    (p,) = approx_controller(net, x, [2, 2])
    for pt in [[-1, -2], [0.3, 0.7], [1, 2]]:
        assert poly_eval(p, pt) == pytest.approx(pt[0] - 2 * pt[1], abs=1e-9)


def test_non_finite_samples_rejected():
    net = Network(1, (Layer([[1.0]], [0.0], "linear"),))
    with pytest.raises(BernsteinError):
        bernstein_unit(lambda X: np.full(len(X), np.inf), [2])
    with pytest.raises(BernsteinError):
        approx_controller(net, Box.from_pairs([[0, 1], [0, 1]]), [2, 2])
