import numpy as np
import pytest

from geoattr import knn_graph, methods, nets
from conftest import linear_logit_model


def test_method_config_rejects_unknown_tags():
    methods.MethodConfig("ig")
    with pytest.raises(ValueError):
        methods.MethodConfig("saliency_v2")


def test_input_x_gradient_values(small_moons_model):
    target = nets.ScalarTarget(1, "probability")
    x = np.array([0.8, 0.3])
    attr = methods.input_x_gradient(small_moons_model, target, x)
    g = nets.input_gradient(small_moons_model, x, target)
    assert np.allclose(attr.values, x * g)
    assert np.isclose(attr.f_baseline,
                      nets.scalar_output(small_moons_model, np.zeros(2), target))


def test_gradient_shap_exact_on_constant_gradient_model():
    # constant gradient: every sampled gradient is identical, so expected
    # gradients collapse to (x - baseline) * w for any sample count
    model = linear_logit_model()
    target = nets.ScalarTarget(0, "logit")
    x, base = np.array([1.0, 2.0]), np.array([-1.0, 0.0])
    attr = methods.gradient_shap(model, target, x, base, n_samples=3,
                                 noise_sigma=0.5, seed=0)
    assert np.allclose(attr.values, (x - base) * model.weights[0][0], atol=1e-12)


def test_gradient_shap_determinism_and_validation(small_moons_model):
    target = nets.ScalarTarget(1, "probability")
    x, base = np.array([1.0, 0.2]), np.array([-0.5, -0.5])
    a = methods.gradient_shap(small_moons_model, target, x, base, seed=5)
    b = methods.gradient_shap(small_moons_model, target, x, base, seed=5)
    c = methods.gradient_shap(small_moons_model, target, x, base, seed=6)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    with pytest.raises(ValueError):
        methods.gradient_shap(small_moons_model, target, x, base, n_samples=0)


def test_occlusion_hand_check(small_moons_model):
    target = nets.ScalarTarget(1, "probability")
    x, base = np.array([1.0, 0.2]), np.array([-0.5, -0.5])
    attr = methods.occlusion(small_moons_model, target, x, base)
    f_x = nets.scalar_output(small_moons_model, x, target)
    for i in range(2):
        masked = x.copy()
        masked[i] = base[i]
        expected = f_x - nets.scalar_output(small_moons_model, masked, target)
        assert np.isclose(attr.values[i], expected)
    with pytest.raises(ValueError):
        methods.occlusion(small_moons_model, target, x, base, window=2)


def test_enhanced_ig_is_euclidean_geodesic(small_moons_model, moons_points):
    target = nets.ScalarTarget(1, "probability")
    x, base = np.array([1.3, 0.1]), np.array([-0.5, -0.5])
    samples = moons_points[:60]
    attr, path = methods.enhanced_ig(small_moons_model, target, x, base,
                                     samples, k=5, m_attr=8)
    ref, ref_path = knn_graph.geodesic_ig_knn(
        small_moons_model, target, x, base, samples, k=5,
        m_attr=8, rule="euclidean",
    )
    assert np.allclose(attr.values, ref.values)
    assert np.allclose(path.anchors, ref_path.anchors)


def test_random_attribution_determinism(small_moons_model):
    x = np.array([0.5, 0.5])
    a = methods.random_attribution(x, seed=1)
    b = methods.random_attribution(x, seed=1)
    assert np.array_equal(a.values, b.values)
    target = nets.ScalarTarget(1, "probability")
    c = methods.random_attribution(x, 1, small_moons_model, target,
                                   np.array([-0.5, -0.5]))
    assert np.array_equal(a.values, c.values)
    assert c.f_input == nets.scalar_output(small_moons_model, x, target)
