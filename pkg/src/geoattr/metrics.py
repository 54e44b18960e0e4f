"""Faithfulness and axiom metrics.

Purity: rank evaluation points by the absolute attribution sum, take the
top half, and average the model's argmax-predicted label (class 1 = upper
moon). Its AUC over a noise grid summarizes robustness to dataset noise.

Comprehensiveness / log-odds mask the top-k% features by |attribution|
and measure the probability drop / logit change of the predicted class.
"""

from __future__ import annotations

import numpy as np

from . import nets

_P_CLAMP = 1e-12


def abs_score(attr_values):
    return float(np.abs(attr_values).sum())


def purity(model, attributions, points, positive_class=1):
    """Fraction of the top-ceil(N/2) points (by sum_i |A_i|) predicted as
    the positive class.

    Ties in the ranking break toward the lower point index. positive_class
    defaults to 1; the harness passes the explained class.
    """
    if len(attributions) != len(points) or len(points) < 2:
        raise ValueError("need matching attributions/points with N >= 2")
    scores = np.array([abs_score(a.values) for a in attributions])
    order = np.argsort(-scores, kind="stable")
    top = order[: int(np.ceil(len(points) / 2))]
    pred = nets.predict(model, np.asarray(points))
    return float((pred[top] == positive_class).mean())


def purity_auc(noise_grid, purities):
    """Trapezoidal area under purity vs noise, normalized by the grid span."""
    grid = np.asarray(noise_grid, dtype=np.float64)
    vals = np.asarray(purities, dtype=np.float64)
    if grid.size < 2 or grid.size != vals.size:
        raise ValueError("need >= 2 matching grid/purity values")
    if not np.all(np.diff(grid) > 0):
        raise ValueError("noise grid must be strictly increasing")
    return float(np.trapezoid(vals, grid) / (grid[-1] - grid[0]))


def _mask_top_features(x, attr_values, k_percent, mask_fill):
    d = x.shape[0]
    n_mask = int(np.ceil(k_percent / 100.0 * d))
    order = np.argsort(-np.abs(attr_values), kind="stable")
    masked = x.copy()
    idx = order[:n_mask]
    masked[idx] = mask_fill[idx]
    return masked


def comprehensiveness(model, target, x, attr_values, k_percent, mask_fill):
    """Predicted-class probability drop after masking the top-k% features."""
    if not 0.0 < k_percent <= 100.0:
        raise ValueError("k_percent must be in (0, 100]")
    x = np.asarray(x, dtype=np.float64)
    mask_fill = np.asarray(mask_fill, dtype=np.float64)
    prob = nets.ScalarTarget(target.class_index, "probability")
    p_orig = nets.scalar_output(model, x, prob)
    p_masked = nets.scalar_output(
        model, _mask_top_features(x, attr_values, k_percent, mask_fill), prob
    )
    return float(p_orig - p_masked)


def log_odds(model, target, x, attr_values, k_percent, mask_fill):
    """Logit change after masking; negative when masking hurts the class."""
    if not 0.0 < k_percent <= 100.0:
        raise ValueError("k_percent must be in (0, 100]")
    x = np.asarray(x, dtype=np.float64)
    mask_fill = np.asarray(mask_fill, dtype=np.float64)
    prob = nets.ScalarTarget(target.class_index, "probability")
    p_orig = np.clip(nets.scalar_output(model, x, prob), _P_CLAMP, 1 - _P_CLAMP)
    p_masked = np.clip(
        nets.scalar_output(
            model, _mask_top_features(x, attr_values, k_percent, mask_fill), prob
        ),
        _P_CLAMP, 1 - _P_CLAMP,
    )
    return float(np.log(p_masked / (1 - p_masked)) - np.log(p_orig / (1 - p_orig)))


def mask_curve_summary(k_grid, values, kind):
    """AUC for comprehensiveness curves, AOC for log-odds curves.

    Both are the (signed) area between the curve and y = 0 over the k
    grid, normalized by the grid span; log-odds area is negated so that
    higher summaries mean stronger degradation.
    """
    grid = np.asarray(k_grid, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    if grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise ValueError("k grid must be strictly increasing with >= 2 points")
    area = float(np.trapezoid(vals, grid) / (grid[-1] - grid[0]))
    if kind == "auc":
        return area
    if kind == "aoc":
        return -area
    raise ValueError(f"unknown summary kind {kind!r}")


def symmetry_check(model, method_fn, points, baseline):
    """Worst |A_0 - A_1| over probe points with x_0 = x_1.

    The model must be exactly symmetric under swapping the two inputs and
    the baseline must lie on the diagonal; both are verified first.
    """
    baseline = np.asarray(baseline, dtype=np.float64)
    if baseline[0] != baseline[1]:
        raise ValueError("baseline must lie on the x0 = x1 diagonal")
    worst = 0.0
    for x in np.atleast_2d(points):
        if x[0] != x[1]:
            raise ValueError("probe points must satisfy x0 = x1")
        # verify swap-invariance off the diagonal, where it is not vacuous
        probe = x + np.array([0.37, -0.59])
        out = nets.forward(model, probe)
        out_sw = nets.forward(model, probe[::-1].copy())
        if not np.allclose(out, out_sw, atol=1e-12):
            raise ValueError("fixture model is not symmetric in its two inputs")
        attr = method_fn(x)
        worst = max(worst, abs(float(attr.values[0] - attr.values[1])))
    return worst
