# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel core.

Fused single-pass versions of the elementwise/row-wise kernels that the
numpy backend spreads over several temporaries. Semantics mirror `_pykern`
bit-for-bit up to floating-point reassociation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport erf, exp, fabs, log, log1p, sqrt, pow

cnp.import_array()

cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT_2PI = 0.3989422804014327


def relu_fwd(cnp.ndarray x_arr):
    cdef double[::1] x = x_arr.ravel()
    out_arr = np.empty_like(x_arr)
    cdef double[::1] out = out_arr.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = x[i] if x[i] > 0.0 else 0.0
    return out_arr


def relu_bwd(cnp.ndarray x_arr, cnp.ndarray g_arr):
    cdef double[::1] x = x_arr.ravel()
    cdef double[::1] g = g_arr.ravel()
    out_arr = np.empty_like(x_arr)
    cdef double[::1] out = out_arr.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = g[i] if x[i] > 0.0 else 0.0
    return out_arr


def gelu_fwd(cnp.ndarray x_arr):
    cdef double[::1] x = x_arr.ravel()
    out_arr = np.empty_like(x_arr)
    cdef double[::1] out = out_arr.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = 0.5 * x[i] * (1.0 + erf(x[i] * INV_SQRT2))
    return out_arr


def gelu_bwd(cnp.ndarray x_arr, cnp.ndarray g_arr):
    cdef double[::1] x = x_arr.ravel()
    cdef double[::1] g = g_arr.ravel()
    out_arr = np.empty_like(x_arr)
    cdef double[::1] out = out_arr.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double cdf, pdf
    for i in range(n):
        cdf = 0.5 * (1.0 + erf(x[i] * INV_SQRT2))
        pdf = INV_SQRT_2PI * exp(-0.5 * x[i] * x[i])
        out[i] = g[i] * (cdf + x[i] * pdf)
    return out_arr


def softplus_fwd(cnp.ndarray x_arr):
    cdef double[::1] x = x_arr.ravel()
    out_arr = np.empty_like(x_arr)
    cdef double[::1] out = out_arr.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double m
    for i in range(n):
        m = x[i] if x[i] > 0.0 else 0.0
        out[i] = m + log1p(exp(-fabs(x[i])))
    return out_arr


def softplus_bwd(cnp.ndarray x_arr, cnp.ndarray g_arr):
    cdef double[::1] x = x_arr.ravel()
    cdef double[::1] g = g_arr.ravel()
    out_arr = np.empty_like(x_arr)
    cdef double[::1] out = out_arr.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = g[i] / (1.0 + exp(-x[i]))
    return out_arr


def softmax_fwd(cnp.ndarray x_arr):
    cdef double[:, ::1] x = x_arr
    out_arr = np.empty_like(x_arr)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, n = x.shape[0], k = x.shape[1]
    cdef double m, s
    for i in range(n):
        m = x[i, 0]
        for j in range(1, k):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(k):
            out[i, j] = exp(x[i, j] - m)
            s += out[i, j]
        for j in range(k):
            out[i, j] /= s
    return out_arr


def softmax_bwd(cnp.ndarray y_arr, cnp.ndarray g_arr):
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] g = g_arr
    out_arr = np.empty_like(y_arr)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, n = y.shape[0], k = y.shape[1]
    cdef double dot
    for i in range(n):
        dot = 0.0
        for j in range(k):
            dot += g[i, j] * y[i, j]
        for j in range(k):
            out[i, j] = y[i, j] * (g[i, j] - dot)
    return out_arr


def nll_fwd(cnp.ndarray logits_arr, cnp.ndarray labels_arr):
    cdef double[:, ::1] logits = logits_arr
    cdef long[::1] labels = labels_arr
    probs_arr = np.empty_like(logits_arr)
    cdef double[:, ::1] probs = probs_arr
    cdef Py_ssize_t i, j, n = logits.shape[0], k = logits.shape[1]
    cdef double m, s, lse, loss = 0.0
    for i in range(n):
        m = logits[i, 0]
        for j in range(1, k):
            if logits[i, j] > m:
                m = logits[i, j]
        s = 0.0
        for j in range(k):
            probs[i, j] = exp(logits[i, j] - m)
            s += probs[i, j]
        lse = log(s)
        loss += lse - (logits[i, labels[i]] - m)
        for j in range(k):
            probs[i, j] /= s
    return loss / n, probs_arr


def nll_bwd(cnp.ndarray probs_arr, cnp.ndarray labels_arr, double gscale):
    cdef double[:, ::1] probs = probs_arr
    cdef long[::1] labels = labels_arr
    out_arr = probs_arr.copy()
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, n = probs.shape[0], k = probs.shape[1]
    cdef double scale = gscale / n
    for i in range(n):
        out[i, labels[i]] -= 1.0
        for j in range(k):
            out[i, j] *= scale
    return out_arr


def layer_norm_fwd(cnp.ndarray x_arr, cnp.ndarray gain_arr, cnp.ndarray bias_arr,
                   double eps):
    cdef double[:, ::1] x = x_arr
    cdef double[::1] gain = gain_arr
    cdef double[::1] bias = bias_arr
    cdef Py_ssize_t i, j, n = x.shape[0], d = x.shape[1]
    out_arr = np.empty_like(x_arr)
    mean_arr = np.empty(n, dtype=np.float64)
    rstd_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] mean = mean_arr
    cdef double[::1] rstd = rstd_arr
    cdef double mu, var, diff
    for i in range(n):
        mu = 0.0
        for j in range(d):
            mu += x[i, j]
        mu /= d
        var = 0.0
        for j in range(d):
            diff = x[i, j] - mu
            var += diff * diff
        var /= d
        mean[i] = mu
        rstd[i] = 1.0 / sqrt(var + eps)
        for j in range(d):
            out[i, j] = (x[i, j] - mu) * rstd[i] * gain[j] + bias[j]
    return out_arr, mean_arr, rstd_arr


def layer_norm_bwd(cnp.ndarray x_arr, cnp.ndarray gain_arr, cnp.ndarray mean_arr,
                   cnp.ndarray rstd_arr, cnp.ndarray g_arr):
    cdef double[:, ::1] x = x_arr
    cdef double[::1] gain = gain_arr
    cdef double[::1] mean = mean_arr
    cdef double[::1] rstd = rstd_arr
    cdef double[:, ::1] g = g_arr
    cdef Py_ssize_t i, j, n = x.shape[0], d = x.shape[1]
    gx_arr = np.empty_like(x_arr)
    ggain_arr = np.zeros(d, dtype=np.float64)
    gbias_arr = np.zeros(d, dtype=np.float64)
    cdef double[:, ::1] gx = gx_arr
    cdef double[::1] ggain = ggain_arr
    cdef double[::1] gbias = gbias_arr
    cdef double xhat, gxhat, m1, m2
    for i in range(n):
        m1 = 0.0
        m2 = 0.0
        for j in range(d):
            xhat = (x[i, j] - mean[i]) * rstd[i]
            gxhat = g[i, j] * gain[j]
            ggain[j] += g[i, j] * xhat
            gbias[j] += g[i, j]
            m1 += gxhat
            m2 += gxhat * xhat
        m1 /= d
        m2 /= d
        for j in range(d):
            xhat = (x[i, j] - mean[i]) * rstd[i]
            gxhat = g[i, j] * gain[j]
            gx[i, j] = rstd[i] * (gxhat - m1 - xhat * m2)
    return gx_arr, ggain_arr, gbias_arr


def adam_update(cnp.ndarray p_arr, cnp.ndarray g_arr, cnp.ndarray m_arr,
                cnp.ndarray v_arr, long t, double lr, double beta1,
                double beta2, double eps):
    cdef double[::1] p = p_arr
    cdef double[::1] g = g_arr
    cdef double[::1] m = m_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double bc1 = 1.0 - pow(beta1, t)
    cdef double bc2 = 1.0 - pow(beta2, t)
    cdef double mhat, vhat
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        mhat = m[i] / bc1
        vhat = v[i] / bc2
        p[i] -= lr * mhat / (sqrt(vhat) + eps)
