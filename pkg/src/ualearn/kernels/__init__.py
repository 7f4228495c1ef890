"""Kernel backend selection.

The hot kernels (activations, softmax, layer norm, NLL, Adam) exist twice:
a compiled Cython extension (`_ckern`) and a pure-numpy fallback
(`_pykern`). The compiled core is preferred when importable; set
UALEARN_KERNELS=python or UALEARN_KERNELS=cython to force a backend
(forcing cython raises if the extension was not built).

Matrix multiplication is deliberately not duplicated: both backends go
through BLAS (`np.dot`), which a hand-rolled loop cannot beat at any size
that matters here.
"""

import os

import numpy as np

_forced = os.environ.get("UALEARN_KERNELS", "").strip().lower()
if _forced not in ("", "cython", "python"):
    raise RuntimeError(f"UALEARN_KERNELS must be 'cython' or 'python', got {_forced!r}")

if _forced == "python":
    from . import _pykern as _impl

    BACKEND = "python"
elif _forced == "cython":
    from . import _ckern as _impl

    BACKEND = "cython"
else:
    try:
        from . import _ckern as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _pykern as _impl

        BACKEND = "python"

relu_fwd = _impl.relu_fwd
relu_bwd = _impl.relu_bwd
gelu_fwd = _impl.gelu_fwd
gelu_bwd = _impl.gelu_bwd
softplus_fwd = _impl.softplus_fwd
softplus_bwd = _impl.softplus_bwd
softmax_fwd = _impl.softmax_fwd
softmax_bwd = _impl.softmax_bwd
nll_fwd = _impl.nll_fwd
nll_bwd = _impl.nll_bwd
layer_norm_fwd = _impl.layer_norm_fwd
layer_norm_bwd = _impl.layer_norm_bwd
adam_update = _impl.adam_update


def matmul(a, b):
    return np.dot(a, b)


def backend_name():
    return BACKEND
