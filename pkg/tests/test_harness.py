import numpy as np
import pytest

from geoattr import harness, nets


def test_run_config_from_dict_round_trip():
    cfg = harness.RunConfig.from_dict(
        {"epochs": 5, "hidden": [8, 8], "seeds": [0, 1], "noise": 0.2}
    )
    assert cfg.epochs == 5
    assert cfg.hidden == (8, 8)
    assert cfg.seeds == (0, 1)


def test_run_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        harness.RunConfig.from_dict({"epochz": 5})


def test_explained_target_is_lowest_scoring_class(small_moons_model):
    base = np.array([-0.5, -0.5])
    target = harness.explained_target(small_moons_model, base)
    logp = nets.forward(small_moons_model, base)
    assert target.class_index == int(np.argmin(logp))
    assert target.space == "probability"


def _smoke_config(**overrides):
    defaults = dict(
        n_points=300, epochs=10, learning_rate=0.02, ig_steps=16,
        knn_k=5, m_edge=4, m_attr=4, seeds=(0, 1), noise_grid=(0.1, 0.3),
        methods=("ig", "random"),
    )
    defaults.update(overrides)
    return harness.RunConfig(**defaults)


def test_attribute_test_set_all_methods(small_moons_model, moons_points):
    cfg = _smoke_config(
        method_params={"gradient_shap": {"n_samples": 4},
                       "geodesic_svi": {"iters": 5, "n_points": 6}},
    )
    pts = moons_points[:30]
    base = np.array([-0.5, -0.5])
    for method in ("ig", "input_x_gradient", "gradient_shap", "occlusion",
                   "random", "enhanced_ig", "geodesic_knn", "geodesic_svi"):
        attrs = harness.attribute_test_set(method, small_moons_model, pts,
                                           base, cfg, seed=0)
        assert len(attrs) == 30
        assert all(a.values.shape == (2,) for a in attrs)
    with pytest.raises(ValueError):
        harness.attribute_test_set("smoothgrad", small_moons_model, pts, base, cfg)


def test_attribute_test_set_is_deterministic(small_moons_model, moons_points):
    cfg = _smoke_config()
    pts = moons_points[:20]
    base = np.array([-0.5, -0.5])
    for method in ("gradient_shap", "random"):
        a = harness.attribute_test_set(method, small_moons_model, pts, base,
                                       cfg, seed=3)
        b = harness.attribute_test_set(method, small_moons_model, pts, base,
                                       cfg, seed=3)
        c = harness.attribute_test_set(method, small_moons_model, pts, base,
                                       cfg, seed=4)
        assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
        assert not all(np.array_equal(x.values, y.values) for x, y in zip(a, c))


def test_run_benchmark_shapes_and_auc():
    cfg = _smoke_config()
    result = harness.run_benchmark(cfg)
    assert len(result.purity) == 2 * 2 * 2  # methods x noises x seeds
    assert len(result.purity_class1) == len(result.purity)
    assert set(result.auc_mean) == set(cfg.methods)
    for method in cfg.methods:
        per_seed = [result.auc[(method, s)] for s in cfg.seeds]
        assert np.isclose(result.auc_mean[method], np.mean(per_seed))
        assert 0.0 <= result.auc_mean[method] <= 1.0


def test_residual_report_rows(small_moons_model, moons_points):
    cfg = _smoke_config(methods=("ig", "geodesic_knn"))
    rows, ref = harness.residual_report(cfg, small_moons_model, moons_points[:40])
    assert [r["method"] for r in rows] == ["ig", "geodesic_knn"]
    assert ref.shape == (40,)
    for row in rows:
        assert row["completeness_median"] <= row["completeness_p95"]
