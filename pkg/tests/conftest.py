"""Shared fixtures: tiny hand-built models and a small trained moons model.

Also hosts the acceptance-line reporter: tests in test_acceptance.py record
one PASS/FAIL line per criterion and the terminal summary prints them all,
whether or not output capture is on.
"""

import numpy as np
import pytest

from geoattr import datasets, nets

ACCEPTANCE_LINES = []


def record_acceptance(number, name, passed, detail):
    line = (f"ACCEPTANCE {number:2d} [{name}]: "
            f"{'PASS' if passed else 'FAIL'} — {detail}")
    ACCEPTANCE_LINES.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def fd_gradient(fn, x, h=1e-5):
    """Central finite differences of a scalar function, one column per input."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def linear_logit_model(w=None, b=None):
    """Single affine layer into the softmax head: logits = W x + b.

    Gradients are globally constant in logit space, which makes straight
    integrated gradients exact for any step count.
    """
    if w is None:
        w = np.array([[1.0, -2.0], [0.5, 1.5]])
    if b is None:
        b = np.array([0.1, -0.2])
    return nets.MlpModel([np.asarray(w, dtype=np.float64)],
                         [np.asarray(b, dtype=np.float64)])


def symmetric_fixture_model(seed=0, width=8):
    """ReLU MLP exactly invariant under swapping its two inputs.

    Hidden units come in tied mirror pairs: unit 2u sees (a, b), unit
    2u + 1 sees (b, a), with equal biases and equal outgoing weights, so
    swapping the inputs permutes the hidden layer and leaves logits fixed.
    """
    rng = np.random.default_rng(seed)
    half = rng.normal(0.0, 1.0, size=(width, 2))
    w1 = np.empty((2 * width, 2))
    w1[0::2] = half
    w1[1::2] = half[:, ::-1]
    b_half = rng.normal(0.0, 0.3, size=width)
    b1 = np.repeat(b_half, 2)
    w2_half = rng.normal(0.0, 1.0, size=(2, width))
    w2 = np.repeat(w2_half, 2, axis=1)
    b2 = rng.normal(0.0, 0.3, size=2)
    return nets.MlpModel([w1, w2], [b1, b2])


@pytest.fixture(scope="session")
def small_moons_model():
    """Quickly trained two-hidden-layer moons classifier for unit tests."""
    ds = datasets.make_moons(1200, 0.12, seed=3)
    train_set, test_set = datasets.split(ds, 0.8, seed=3)
    model = nets.MlpModel.initialize([2, 32, 32, 2], seed=3)
    model, _ = nets.train(model, train_set.points, train_set.labels,
                          epochs=40, learning_rate=0.05, seed=3)
    acc = float(np.mean(nets.predict(model, test_set.points) == test_set.labels))
    assert acc > 0.9
    return model


@pytest.fixture(scope="session")
def moons_points():
    ds = datasets.make_moons(400, 0.12, seed=3)
    return ds.points
