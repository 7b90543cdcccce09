import numpy as np
import pytest

from bernreach.interval import Box, Interval
from bernreach.poly import (
    MultiPoly,
    PolyError,
    poly_add,
    poly_affine_compose,
    poly_bound,
    poly_eval,
    poly_eval_batch,
    poly_extend,
    poly_magnitude,
    poly_mul,
    poly_scale,
    poly_split,
    poly_substitute,
)

XY = ("x1", "x2")


def random_poly(rng, vars=XY, terms=5, degree=3):
    out = {}
    for _ in range(terms):
        exp = tuple(int(e) for e in rng.integers(0, degree + 1, size=len(vars)))
        out[exp] = float(rng.integers(-5, 6))
    return MultiPoly(vars, out)


def test_eval_examples():
    p = MultiPoly(XY, {(0, 0): 1.0, (1, 1): 2.0})
    assert poly_eval(p, [1, 1]) == 3.0
    assert poly_eval(MultiPoly.zero(XY), [4, 2]) == 0.0
    q = MultiPoly(XY, {(2, 0): 1.0, (0, 1): -1.0})
    assert poly_eval(q, [3, 4]) == 5.0
    with pytest.raises(PolyError):
        poly_eval(q, [1.0])


def test_canonical_form_drops_zeros():
    p = MultiPoly(XY, {(1, 0): 1.0, (0, 1): 0.0})
    assert list(p.terms) == [(1, 0)]
    assert poly_add(p, poly_scale(p, -1.0)).is_zero


def test_ring_examples():
    x = MultiPoly.variable(("x1",), "x1")
    assert poly_mul(x, x) == MultiPoly(("x1",), {(2,): 1.0})
    one = MultiPoly.constant(("x1",), 1.0)
    assert poly_mul(one + x, one - x) == MultiPoly(("x1",), {(0,): 1.0, (2,): -1.0})


def test_ring_laws():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p, q, r = (random_poly(rng) for _ in range(3))
        assert poly_add(p, q) == poly_add(q, p)
        assert poly_mul(p, q) == poly_mul(q, p)
        assert poly_mul(poly_mul(p, q), r) == poly_mul(p, poly_mul(q, r))
        assert poly_mul(p, poly_add(q, r)) == poly_add(poly_mul(p, q), poly_mul(p, r))


def test_space_mismatch():
    with pytest.raises(PolyError):
        poly_add(MultiPoly.variable(("a",), "a"), MultiPoly.variable(("b",), "b"))
    with pytest.raises(PolyError):
        MultiPoly(XY, {(1,): 1.0})


def test_affine_compose_examples():
    l, u = 2.0, 5.0
    p = MultiPoly.variable(("x",), "x")
    q = poly_affine_compose(p, [1 / (u - l)], [-l / (u - l)])
    for x in [2.0, 3.5, 5.0]:
        assert poly_eval(q, [x]) == pytest.approx((x - l) / (u - l))
    assert poly_affine_compose(p, [1.0], [0.0]) == p
    sq = MultiPoly(("x",), {(2,): 1.0})
    assert poly_affine_compose(sq, [0.5], [0.0]) == MultiPoly(("x",), {(2,): 0.25})
    with pytest.raises(PolyError):
        poly_affine_compose(p, [0.0], [1.0])


def test_affine_compose_random_points():
    rng = np.random.default_rng(5)
    p = random_poly(rng, terms=6, degree=4)
    scale, shift = [0.7, -1.3], [0.2, 0.5]
    q = poly_affine_compose(p, scale, shift)
    X = rng.uniform(-1, 1, size=(1000, 2))
    expected = poly_eval_batch(p, X * np.array(scale) + np.array(shift))
    assert np.allclose(poly_eval_batch(q, X), expected, rtol=1e-9, atol=1e-9)


def test_bound_examples():
    sq = MultiPoly(("x1",), {(2,): 1.0})
    b = poly_bound(sq, Box.from_pairs([[-1, 1]]))
    assert b.lo == pytest.approx(0.0, abs=1e-14) and b.lo <= 0.0
    assert b.hi == pytest.approx(1.0) and b.hi >= 1.0
    c = poly_bound(MultiPoly.constant(XY, 2.5), Box.from_pairs([[0, 1], [3, 9]]))
    assert c.contains(2.5) and c.width < 1e-13
    xy = poly_bound(MultiPoly(XY, {(1, 1): 1.0}), Box.from_pairs([[0, 1], [0, 1]]))
    assert xy.lo == pytest.approx(0.0, abs=1e-14) and xy.hi == pytest.approx(1.0)
    assert poly_bound(MultiPoly.zero(XY), Box.from_pairs([[0, 1], [0, 1]])) == Interval(0, 0)


def test_bound_soundness():
    rng = np.random.default_rng(9)
    for _ in range(20):
        p = random_poly(rng, terms=6, degree=4)
        lo = rng.uniform(-2, 1, size=2)
        box = Box.from_bounds(lo, lo + rng.uniform(0.1, 2, size=2))
        enc = poly_bound(p, box)
        X = rng.uniform(box.lo, box.hi, size=(1000, 2))
        vals = poly_eval_batch(p, X)
        assert np.all(vals >= enc.lo) and np.all(vals <= enc.hi)
        assert poly_magnitude(p, box) >= np.max(np.abs(vals))


def test_batch_matches_pointwise():
    rng = np.random.default_rng(1)
    p = random_poly(rng)
    X = rng.uniform(-1, 1, size=(20, 2))
    assert np.allclose(poly_eval_batch(p, X), [poly_eval(p, x) for x in X])


def test_split_substitute_extend():
    p = MultiPoly(XY, {(0, 0): 1.0, (1, 1): 2.0, (3, 0): 4.0})
    low, high = poly_split(p, 2)
    assert low == MultiPoly(XY, {(0, 0): 1.0, (1, 1): 2.0})
    assert high == MultiPoly(XY, {(3, 0): 4.0})
    s = poly_substitute(p, "x2", 0.5)
    assert s.vars == ("x1",)
    assert s == MultiPoly(("x1",), {(0,): 1.0, (1,): 1.0, (3,): 4.0})
    e = poly_extend(p, ["t"])
    assert e.vars == ("x1", "x2", "t")
    assert poly_eval(e, [0.3, 0.2, 9.0]) == poly_eval(p, [0.3, 0.2])
    with pytest.raises(PolyError):
        poly_extend(p, ["x1"])


def test_degree_and_str():
    p = MultiPoly(XY, {(0, 0): 1.0, (2, 1): -3.0})
    assert p.degree == 3
    assert p.constant_term == 1.0
    assert str(p) == "1.0 + -3.0*x1^2*x2"
    assert str(MultiPoly.zero(XY)) == "0"
