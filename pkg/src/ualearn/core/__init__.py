"""Numeric substrate: tensors with reverse-mode AD, RNG, optimizer."""

import numpy as np

from .gradcheck import check_gradients
from .optim import Adam
from .rng import Rng
from .tensor import (
    Tensor,
    activation,
    add,
    add_bias,
    add_scalar,
    concat_cols,
    concat_rows,
    cross_entropy,
    exp,
    gelu,
    layer_norm,
    log,
    logdet_psd,
    matmul,
    mul,
    mul_cols,
    no_grad,
    relu,
    reshape,
    scale,
    slice_cols,
    slice_rows,
    softmax_lastdim,
    softplus,
    square,
    sub,
    tmean,
    transpose,
    tsum,
)


def sample_standard_normal(rng, shape):
    """I.i.d. standard-normal Tensor; bit-identical under a fixed seed."""
    return Tensor(rng.normal(shape))


__all__ = [
    "Adam", "Rng", "Tensor", "activation", "add", "add_bias", "add_scalar",
    "check_gradients", "concat_cols", "concat_rows", "cross_entropy", "exp",
    "gelu", "layer_norm", "log", "logdet_psd", "matmul", "mul", "mul_cols", "no_grad",
    "relu", "reshape", "sample_standard_normal", "scale", "slice_cols",
    "slice_rows", "softmax_lastdim", "softplus", "square", "sub", "tmean",
    "transpose", "tsum",
]
