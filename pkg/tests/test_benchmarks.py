import numpy as np
import pytest

from bernreach import ReachError
from bernreach.benchmarks import (
    BENCHMARKS,
    GAINS,
    get_benchmark,
    linear_relu_controller,
    make_controller,
    mixed_controller,
    random_controller,
    run_suite,
    saturated_controller,
)
from bernreach.config import Mode, VerifyParams, resolve_params
from bernreach.flowpipe import VerdictKind, run
from bernreach.nn import nn_eval_batch
from bernreach.simulate import sample_trajectories, trajectory_containment
from bernreach.workers import chunk_ranges, map_chunks


def test_benchmarks_have_gains():
    assert set(BENCHMARKS) == set(GAINS)
    for name in BENCHMARKS:
        sys = get_benchmark(name)
        assert len(GAINS[name]) == sys.dim
    with pytest.raises(ReachError):
        get_benchmark("ex9")


def test_controllers_embed_their_laws():
    g = np.array([0.5, -1.5, 2.0])
    X = np.random.default_rng(0).uniform(-1, 1, size=(200, 3))
    lin = X @ g
    assert np.allclose(nn_eval_batch(linear_relu_controller(g), X)[:, 0], lin)
    assert np.allclose(nn_eval_batch(linear_relu_controller(g, bias=0.3), X)[:, 0], lin + 0.3)
    assert np.allclose(nn_eval_batch(saturated_controller(g, "tanh", 2.0), X)[:, 0], 2.0 * np.tanh(lin))
    assert np.allclose(nn_eval_batch(saturated_controller(g, "sigmoid", 2.0), X)[:, 0], 2.0 * np.tanh(lin))
    assert np.allclose(nn_eval_batch(mixed_controller(g, 2.0), X)[:, 0], 2.0 * np.tanh(lin))
    with pytest.raises(ReachError):
        saturated_controller(g, "relu")


def test_make_controller_kinds():
    for kind in ("linear", "tanh", "sigmoid", "mixed"):
        net = make_controller("ex4", kind)
        assert net.input_dim == 3 and net.output_dim == 1
    with pytest.raises(ReachError):
        make_controller("ex1", "cubic")
    with pytest.raises(ReachError):
        make_controller("nope")


def test_random_controller():
    a = random_controller(2, 1, (10, 5), ["relu", "tanh"], seed=7)
    assert [layer.out_dim for layer in a.layers] == [10, 5, 1]
    assert [layer.act.value for layer in a.layers] == ["relu", "tanh", "linear"]
    assert a == random_controller(2, 1, (10, 5), ["relu", "tanh"], seed=7)
    with pytest.raises(ReachError):
        random_controller(2, 1, (10, 5), ["relu"])


def test_worker_chunks_keep_order():
    assert chunk_ranges(5, 2) == [(0, 2), (2, 4), (4, 5)]
    assert chunk_ranges(0, 3) == []
    serial = map_chunks(lambda a, b: list(range(a, b)), 10, 3, workers=1)
    pooled = map_chunks(lambda a, b: list(range(a, b)), 10, 3, workers=4)
    assert serial == pooled == [[0, 1, 2], [3, 4, 5], [6, 7, 8], [9]]


@pytest.mark.slow
@pytest.mark.parametrize("name", ["ex1", "ex2", "ex3", "ex4"])
def test_flowpipes_contain_simulations(name):
    sys = get_benchmark(name)
    net = make_controller(name, "tanh")
    verdict = run(sys, net, resolve_params(sys, {"workers": 2}))
    trajs = sample_trajectories(sys, net, count=100, workers=2)
    assert verdict.flowpipes
    assert trajectory_containment(trajs, verdict.flowpipes, tol=1e-9) == []


@pytest.mark.slow
def test_interval_baseline_hits_width_cap_first():
    sys = get_benchmark("ex1")
    net = make_controller("ex1", "tanh")
    bern = run(sys, net, resolve_params(sys, {"workers": 2}))
    # the widest Bernstein flowpipe as cap: the Bernstein run is unaffected by it
    cap = max([bern.max_width] + [b.max_width() for b in bern.step_boxes])
    capped = run(sys, net, resolve_params(sys, {"workers": 2, "width_cap": cap}))
    assert str(capped) == str(bern)
    box = run(sys, net, resolve_params(sys, {"workers": 2, "width_cap": cap}, mode=Mode.INTERVAL))
    for b, i in zip(bern.step_boxes[1:], box.step_boxes[1:]):
        assert b.max_width() <= i.max_width()
    assert box.kind is VerdictKind.UNKNOWN
    assert "exceeds cap" in box.reason
    assert box.step < bern.step


def test_verify_params_from_benchmark():
    params = resolve_params(get_benchmark("ex6"))
    assert isinstance(params, VerifyParams)
    assert params.substeps == 20
    assert params.degree_for(4) == [2, 2, 2, 2]


@pytest.mark.slow
def test_suite_records():
    records = run_suite(["ex2"], ["linear"], overrides={"workers": 2, "degree": [2, 2], "tm_order": 3, "substeps": 4})
    assert [r["mode"] for r in records] == ["bernstein", "interval"]
    for r in records:
        assert r["benchmark"] == "ex2" and r["controller"] == "linear"
        assert "error" in r or len(r["step_widths"]) >= 1
