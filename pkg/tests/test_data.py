import numpy as np
import pytest

from geoattr import datasets


def test_noiseless_arcs_hit_known_points():
    ds = datasets.make_moons(8, 0.0, seed=0)
    upper = ds.points[ds.labels == 1]
    lower = ds.points[ds.labels == 0]
    # upper moon runs (1, 0) -> (-1, 0); lower runs (0, 0.5) -> (2, 0.5)
    assert np.allclose(upper[0], [1.0, 0.0], atol=1e-12)
    assert np.allclose(upper[-1], [-1.0, 0.0], atol=1e-12)
    assert np.allclose(lower[0], [0.0, 0.5], atol=1e-12)
    assert np.allclose(lower[-1], [2.0, 0.5], atol=1e-12)


def test_class_sizes_split_ceil_floor():
    for n in (7, 8, 101):
        ds = datasets.make_moons(n, 0.1, seed=1)
        assert int((ds.labels == 1).sum()) == (n + 1) // 2
        assert int((ds.labels == 0).sum()) == n // 2


def test_generation_is_deterministic_and_noise_scales():
    a = datasets.make_moons(100, 0.2, seed=5)
    b = datasets.make_moons(100, 0.2, seed=5)
    assert np.array_equal(a.points, b.points)
    clean = datasets.make_moons(100, 0.0, seed=5)
    dev = np.abs(a.points - clean.points)
    assert dev.max() > 0
    assert dev.max() < 0.2 * 6  # ~6 sigma bound


def test_make_moons_validation():
    with pytest.raises(ValueError):
        datasets.make_moons(1, 0.1, seed=0)
    with pytest.raises(ValueError):
        datasets.make_moons(10, -0.1, seed=0)


def test_split_is_disjoint_and_sized():
    ds = datasets.make_moons(103, 0.1, seed=2)
    train, test = datasets.split(ds, 0.8, seed=2)
    assert len(train) == int(np.floor(103 * 0.8))
    assert len(train) + len(test) == 103
    merged = np.vstack([train.points, test.points])
    assert np.unique(merged, axis=0).shape[0] == 103


def test_split_determinism_and_validation():
    ds = datasets.make_moons(50, 0.1, seed=2)
    a1, _ = datasets.split(ds, 0.5, seed=7)
    a2, _ = datasets.split(ds, 0.5, seed=7)
    assert np.array_equal(a1.points, a2.points)
    with pytest.raises(ValueError):
        datasets.split(ds, 0.0, seed=0)
    with pytest.raises(ValueError):
        datasets.split(ds, 1.0, seed=0)
    tiny = datasets.make_moons(2, 0.1, seed=0)
    with pytest.raises(ValueError):
        datasets.split(tiny, 0.1, seed=0)  # floor(0.2) = 0 train points


def test_csv_round_trip(tmp_path):
    ds = datasets.make_moons(20, 0.3, seed=9)
    path = tmp_path / "moons.csv"
    datasets.save_csv(ds, path)
    header = path.read_text().splitlines()[0]
    assert header == "x0,x1,label"
    loaded = datasets.load_csv(path)
    assert np.array_equal(loaded.points, ds.points)
    assert np.array_equal(loaded.labels, ds.labels)
