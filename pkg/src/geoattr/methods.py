"""Comparison attribution methods and a tag-based dispatch for the CLI.

Tags: ig, input_x_gradient, gradient_shap, occlusion, enhanced_ig,
random, geodesic_knn, geodesic_svi. All return the shared Attribution
record with residual fields filled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import energy, knn_graph, nets, paths

METHOD_TAGS = (
    "ig", "input_x_gradient", "gradient_shap", "occlusion",
    "enhanced_ig", "random", "geodesic_knn", "geodesic_svi",
)


@dataclass
class MethodConfig:
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHOD_TAGS:
            raise ValueError(f"unknown method tag {self.method!r}")


def _attribution(values, model, target, x, baseline):
    f_in = nets.scalar_output(model, x, target)
    f_base = nets.scalar_output(model, baseline, target)
    return paths.Attribution(
        values=np.asarray(values, dtype=np.float64),
        f_input=f_in,
        f_baseline=f_base,
        completeness_residual=paths.completeness_residual(values, f_in, f_base),
        strong_completeness_residual=paths.strong_completeness_residual(
            values, f_in, f_base),
    )


def input_x_gradient(model, target, x):
    """x * grad f(x); residuals reported against the zero baseline."""
    x = np.asarray(x, dtype=np.float64)
    grad = nets.input_gradient(model, x, target)
    return _attribution(x * grad, model, target, x, np.zeros_like(x))


def gradient_shap(model, target, x, baseline, n_samples=64, noise_sigma=0.1,
                  seed=0):
    """Expected gradients over noised interpolants.

    Mean over draws of (x - baseline) * grad f(baseline + a(x - baseline)
    + eps), a ~ U(0,1), eps ~ N(0, sigma^2 I); deterministic given seed.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, 1.0, size=(n_samples, 1))
    eps = rng.normal(0.0, noise_sigma, size=(n_samples, x.shape[0])) \
        if noise_sigma > 0 else np.zeros((n_samples, x.shape[0]))
    pts = baseline + alpha * (x - baseline) + eps
    _, grads = nets.batch_scalar_and_gradient(model, pts, target)
    values = (x - baseline) * grads.mean(axis=0)
    return _attribution(values, model, target, x, baseline)


def occlusion(model, target, x, baseline, window=1):
    """Per-feature replacement: A_i = f(x) - f(x with x_i <- baseline_i)."""
    if window != 1:
        raise ValueError("only window=1 is supported for tabular inputs")
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    d = x.shape[0]
    masked = np.tile(x, (d, 1))
    masked[np.arange(d), np.arange(d)] = baseline[np.arange(d)]
    f_x = nets.scalar_output(model, x, target)
    f_masked = nets.scalar_output(model, masked, target)
    return _attribution(f_x - f_masked, model, target, x, baseline)


def enhanced_ig(model, target, x, baseline, samples, k, m_attr=64):
    """kNN shortest path with plain Euclidean edge weights (model-agnostic
    route), gradients integrated along the resulting anchors."""
    return knn_graph.geodesic_ig_knn(
        model, target, x, baseline, samples, k,
        m_attr=m_attr, rule="euclidean",
    )


def random_attribution(x, seed, model=None, target=None, baseline=None):
    """i.i.d. standard normal scores; residuals filled when a model is given."""
    x = np.asarray(x, dtype=np.float64)
    values = np.random.default_rng(seed).standard_normal(x.shape[0])
    if model is None:
        return paths.Attribution(values, 0.0, 0.0,
                                 abs(float(values.sum())),
                                 float(np.abs(values).sum()))
    base = np.zeros_like(x) if baseline is None else np.asarray(baseline)
    return _attribution(values, model, target, x, base)
