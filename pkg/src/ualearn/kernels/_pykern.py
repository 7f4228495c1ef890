"""Pure-numpy kernel implementations.

Fallback backend used when the compiled extension is unavailable (or when
forced via UALEARN_KERNELS=python). Semantics must match `_ckern` exactly;
the parity test suite compares both backends elementwise.

All kernels take and return float64 C-contiguous arrays. Row-wise kernels
(softmax, layer norm, NLL) expect 2-D input.
"""

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


def relu_fwd(x):
    return np.maximum(x, 0.0)


def relu_bwd(x, g):
    return np.where(x > 0.0, g, 0.0)


def gelu_fwd(x):
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def gelu_bwd(x, g):
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return g * (cdf + x * pdf)


def softplus_fwd(x):
    # log(1 + e^x), stable on both tails
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def softplus_bwd(x, g):
    return g / (1.0 + np.exp(-x))


def softmax_fwd(x):
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_bwd(y, g):
    dot = (g * y).sum(axis=1, keepdims=True)
    return y * (g - dot)


def nll_fwd(logits, labels):
    """Mean negative log-likelihood of `labels` under softmax(logits).

    Returns (loss, probs); probs is kept for the backward pass.
    """
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(logits.shape[0]), labels]
    loss = float(np.mean(lse - picked))
    probs = np.exp(shifted - lse[:, None])
    return loss, probs


def nll_bwd(probs, labels, gscale):
    n = probs.shape[0]
    gx = probs.copy()
    gx[np.arange(n), labels] -= 1.0
    gx *= gscale / n
    return gx


def layer_norm_fwd(x, gain, bias, eps):
    mean = x.mean(axis=1)
    var = ((x - mean[:, None]) ** 2).mean(axis=1)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[:, None]) * rstd[:, None]
    return xhat * gain + bias, mean, rstd


def layer_norm_bwd(x, gain, mean, rstd, g):
    d = x.shape[1]
    xhat = (x - mean[:, None]) * rstd[:, None]
    ggain = (g * xhat).sum(axis=0)
    gbias = g.sum(axis=0)
    gxhat = g * gain
    m1 = gxhat.mean(axis=1, keepdims=True)
    m2 = (gxhat * xhat).mean(axis=1, keepdims=True)
    gx = rstd[:, None] * (gxhat - m1 - xhat * m2)
    return gx, ggain, gbias


def adam_update(p, g, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step, in place on flat arrays."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
