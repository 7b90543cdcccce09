import numpy as np
import pytest

from bernreach.benchmarks import random_controller

ACTS = ["relu", "sigmoid", "tanh", ["relu", "tanh"], ["tanh", "relu", "sigmoid"]]


@pytest.fixture
def random_networks():
    """Seeded 2-input controllers with 1-3 hidden layers of width <= 20, pure and mixed activations."""

    def make(count=20):
        nets = []
        for k in range(count):
            act = ACTS[k % len(ACTS)]
            depth = len(act) if isinstance(act, list) else 1 + k % 3
            widths = tuple(int(w) for w in np.random.default_rng(k).integers(2, 21, size=depth))
            nets.append(random_controller(2, 1, widths, act, seed=100 + k))
        return nets

    return make
