# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused MLP forward + input-gradient kernel.

Mirrors geoattr.nets.numpy_scalar_and_gradient for a ReLU MLP with a
log-softmax head; one pass per sample, no temporaries beyond two work
buffers. ReLU'(0) = 0, matching the numpy path.
"""

from libc.math cimport exp, log
from libc.stdlib cimport free, malloc


def mlp_scalar_grad(double[::1] wbuf, double[::1] bbuf, long[::1] sizes,
                    double[:, ::1] x, int class_index, int space,
                    double[::1] out_f, double[:, ::1] out_g):
    cdef Py_ssize_t n_layers = sizes.shape[0] - 1
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t c = sizes[n_layers]
    cdef Py_ssize_t maxw = 0
    cdef Py_ssize_t i, l, j, k, s
    for i in range(n_layers + 1):
        if sizes[i] > maxw:
            maxw = sizes[i]

    # per-layer offsets into the flat weight/bias buffers
    cdef Py_ssize_t *woff = <Py_ssize_t *> malloc((n_layers + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *boff = <Py_ssize_t *> malloc((n_layers + 1) * sizeof(Py_ssize_t))
    # pre-activations of every layer for one sample, plus two work vectors
    cdef double *pre = <double *> malloc(n_layers * maxw * sizeof(double))
    cdef double *h = <double *> malloc(maxw * sizeof(double))
    cdef double *g = <double *> malloc(maxw * sizeof(double))
    cdef double *g2 = <double *> malloc(maxw * sizeof(double))
    cdef double *p = <double *> malloc(c * sizeof(double))
    if not (woff and boff and pre and h and g and g2 and p):
        free(woff); free(boff); free(pre); free(h); free(g); free(g2); free(p)
        raise MemoryError()

    woff[0] = 0
    boff[0] = 0
    for l in range(n_layers):
        woff[l + 1] = woff[l] + sizes[l + 1] * sizes[l]
        boff[l + 1] = boff[l] + sizes[l + 1]

    cdef Py_ssize_t fan_in, fan_out, wbase, bbase
    cdef double acc, mx, lse, fval, dot

    with nogil:
        for s in range(n):
            for j in range(d):
                h[j] = x[s, j]
            for l in range(n_layers):
                fan_in = sizes[l]
                fan_out = sizes[l + 1]
                wbase = woff[l]
                bbase = boff[l]
                for j in range(fan_out):
                    acc = bbuf[bbase + j]
                    for k in range(fan_in):
                        acc += wbuf[wbase + j * fan_in + k] * h[k]
                    pre[l * maxw + j] = acc
                if l < n_layers - 1:
                    for j in range(fan_out):
                        h[j] = pre[l * maxw + j] if pre[l * maxw + j] > 0.0 else 0.0
                else:
                    for j in range(fan_out):
                        h[j] = pre[l * maxw + j]

            # softmax over the logits in h[0:c]
            mx = h[0]
            for j in range(1, c):
                if h[j] > mx:
                    mx = h[j]
            lse = 0.0
            for j in range(c):
                lse += exp(h[j] - mx)
            lse = log(lse)
            for j in range(c):
                p[j] = exp(h[j] - mx - lse)

            if space == 0:  # probability
                fval = p[class_index]
                for j in range(c):
                    g[j] = -fval * p[j]
                g[class_index] += fval
            elif space == 1:  # log-probability
                fval = h[class_index] - mx - lse
                for j in range(c):
                    g[j] = -p[j]
                g[class_index] += 1.0
            else:  # logit
                fval = h[class_index]
                for j in range(c):
                    g[j] = 0.0
                g[class_index] = 1.0
            out_f[s] = fval

            # reverse pass: g holds d f / d pre[l]
            for l in range(n_layers - 1, -1, -1):
                fan_in = sizes[l]
                fan_out = sizes[l + 1]
                wbase = woff[l]
                for k in range(fan_in):
                    dot = 0.0
                    for j in range(fan_out):
                        dot += g[j] * wbuf[wbase + j * fan_in + k]
                    g2[k] = dot
                if l > 0:
                    for k in range(fan_in):
                        g[k] = g2[k] if pre[(l - 1) * maxw + k] > 0.0 else 0.0
                else:
                    for k in range(d):
                        out_g[s, k] = g2[k]

    free(woff); free(boff); free(pre); free(h); free(g); free(g2); free(p)
