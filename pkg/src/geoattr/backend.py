"""Kernel backend selection.

The fused forward + input-gradient pass dominates the runtime of every
attribution method here, so it exists twice: a Cython extension
(``geoattr._fastgrad``) and a vectorized numpy implementation in
:mod:`geoattr.nets`. Neither dominates everywhere: the compiled kernel
has no per-call overhead but scalar throughput, while numpy pays ~25 us
of call overhead per layer and then runs at BLAS speed. In ``auto`` mode
(the default) each call picks the compiled kernel for small batches and
numpy for large ones, at a measured crossover of roughly 5e4 fused
flops per call; ``GEOATTR_BACKEND=numpy|compiled`` forces one side.

``benchmarks/kernel_bench.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from . import _fastgrad  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:
    _fastgrad = None
    HAVE_COMPILED = False

_SPACE_CODES = {"probability": 0, "log_probability": 1, "logit": 2}


# Fused flops per call below which the compiled kernel beats numpy's
# per-call overhead (measured with benchmarks/kernel_bench.py).
AUTO_WORK_CUTOFF = 50_000


def active():
    """Return the mode in effect: 'compiled', 'numpy', or 'auto'."""
    choice = os.environ.get("GEOATTR_BACKEND", "auto")
    if choice == "numpy":
        return "numpy"
    if choice == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("GEOATTR_BACKEND=compiled but extension not built")
        return "compiled"
    return "auto"


def select(model, batch_size):
    """Resolve the backend for one call: 'compiled' or 'numpy'."""
    mode = active()
    if mode != "auto":
        return mode
    if not HAVE_COMPILED:
        return "numpy"
    sizes = model.layer_sizes
    per_sample = 2 * sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))
    return "compiled" if batch_size * per_sample <= AUTO_WORK_CUTOFF else "numpy"


def _pack(model):
    cache = getattr(model, "_packed", None)
    if cache is None:
        wbuf = np.concatenate([w.ravel(order="C") for w in model.weights])
        bbuf = np.concatenate(model.biases)
        sizes = np.asarray(model.layer_sizes, dtype=np.int64)
        cache = (np.ascontiguousarray(wbuf), np.ascontiguousarray(bbuf), sizes)
        model._packed = cache
    return cache


def compiled_scalar_and_gradient(model, x, target):
    wbuf, bbuf, sizes = _pack(model)
    n, d = x.shape
    out_f = np.empty(n)
    out_g = np.empty((n, d))
    _fastgrad.mlp_scalar_grad(
        wbuf, bbuf, sizes, x,
        target.class_index, _SPACE_CODES[target.space],
        out_f, out_g,
    )
    return out_f, out_g
