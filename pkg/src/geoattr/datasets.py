"""Half-moons generation and deterministic splitting.

Upper moon (label 1): (cos t, sin t), t in [0, pi].
Lower moon (label 0): (1 - cos t, -sin t + 0.5), t in [0, pi].
t is evenly spaced per class; i.i.d. Gaussian noise is added to both
coordinates afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    points: np.ndarray  # (n, 2) float64
    labels: np.ndarray  # (n,) int64 in {0, 1}
    noise_sigma: float
    seed: int

    def __len__(self):
        return self.points.shape[0]


def make_moons(n, noise_sigma, seed):
    """n points split ceil/floor between upper (label 1) and lower moons."""
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    n_upper = (n + 1) // 2
    n_lower = n // 2
    t_up = np.linspace(0.0, np.pi, n_upper)
    t_lo = np.linspace(0.0, np.pi, n_lower)
    upper = np.column_stack([np.cos(t_up), np.sin(t_up)])
    lower = np.column_stack([1.0 - np.cos(t_lo), -np.sin(t_lo) + 0.5])
    points = np.vstack([upper, lower])
    labels = np.concatenate([np.ones(n_upper, dtype=np.int64),
                             np.zeros(n_lower, dtype=np.int64)])
    rng = np.random.default_rng(seed)
    points = points + rng.normal(0.0, noise_sigma, size=points.shape)
    return Dataset(points, labels, float(noise_sigma), int(seed))


def split(ds, train_fraction, seed):
    """Disjoint shuffled (train, test) split; sizes floor(n*frac) / rest."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(ds)
    n_train = int(np.floor(n * train_fraction))
    if n_train == 0 or n_train == n:
        raise ValueError(f"degenerate split sizes {n_train}/{n - n_train}")
    order = np.random.default_rng(seed).permutation(n)
    tr, te = order[:n_train], order[n_train:]
    train = Dataset(ds.points[tr], ds.labels[tr], ds.noise_sigma, ds.seed)
    test = Dataset(ds.points[te], ds.labels[te], ds.noise_sigma, ds.seed)
    return train, test


def save_csv(ds, path):
    with open(path, "w") as fh:
        fh.write("x0,x1,label\n")
        for (x0, x1), y in zip(ds.points, ds.labels):
            fh.write(f"{x0:.17g},{x1:.17g},{y}\n")


def load_csv(path):
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    return Dataset(data[:, :2].copy(), data[:, 2].astype(np.int64), 0.0, 0)
