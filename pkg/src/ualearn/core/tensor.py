"""Dense float64 tensors with reverse-mode automatic differentiation.

A small tape-based engine: every operation returns a new Tensor holding
its parents and a backward closure. Calling `backward()` on a scalar loss
runs the tape in reverse topological order, accumulating gradients
additively into every reachable tensor with `requires_grad`.

Shapes are explicit; the only broadcasting allowed is bias addition
(`add_bias`) and Python-scalar arithmetic. Everything else must reshape
first, which keeps each backward rule a one-liner you can audit.
"""

import numpy as np

from .. import kernels


_grad_enabled = True


class no_grad:
    """Context manager that disables tape recording (inference mode)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def _as_array(data):
    arr = np.ascontiguousarray(data, dtype=np.float64)
    return arr


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = _as_array(data)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ValueError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def backward(self):
        """Reverse-mode accumulation from a scalar loss.

        Repeated calls without zeroing add into existing grads.
        """
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar loss, shape is {self.shape}")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return add_scalar(self, other)

    def __radd__(self, other):
        return add_scalar(self, other)

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return sub(self, other)
        return add_scalar(self, -other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, shape):
        return reshape(self, shape)

    @property
    def T(self):
        return transpose(self)


def _make(data, parents, backward):
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _add_grad(t, g):
    if t.requires_grad:
        t._accumulate(g)


# -- arithmetic ---------------------------------------------------------

def add(a, b):
    if a.shape != b.shape:
        raise ValueError(f"add needs equal shapes, got {a.shape} and {b.shape}")
    data = a.data + b.data

    def backward(g):
        _add_grad(a, g)
        _add_grad(b, g)

    return _make(data, (a, b), backward)


def sub(a, b):
    if a.shape != b.shape:
        raise ValueError(f"sub needs equal shapes, got {a.shape} and {b.shape}")
    data = a.data - b.data

    def backward(g):
        _add_grad(a, g)
        _add_grad(b, -g)

    return _make(data, (a, b), backward)


def mul(a, b):
    if a.shape != b.shape:
        raise ValueError(f"mul needs equal shapes, got {a.shape} and {b.shape}")
    data = a.data * b.data

    def backward(g):
        _add_grad(a, g * b.data)
        _add_grad(b, g * a.data)

    return _make(data, (a, b), backward)


def scale(a, c):
    c = float(c)
    data = a.data * c

    def backward(g):
        _add_grad(a, g * c)

    return _make(data, (a,), backward)


def add_scalar(a, c):
    c = float(c)
    data = a.data + c

    def backward(g):
        _add_grad(a, g)

    return _make(data, (a,), backward)


def add_bias(mat, vec):
    """Row-broadcast bias add: mat[n, d] + vec[d]."""
    if mat.data.ndim != 2 or vec.data.ndim != 1 or mat.shape[1] != vec.shape[0]:
        raise ValueError(f"add_bias needs (n,d)+(d,), got {mat.shape} and {vec.shape}")
    data = mat.data + vec.data

    def backward(g):
        _add_grad(mat, g)
        _add_grad(vec, g.sum(axis=0))

    return _make(data, (mat, vec), backward)


def mul_cols(mat, col):
    """Column-broadcast multiply: mat[n, d] * col[n, 1]."""
    if mat.data.ndim != 2 or col.shape != (mat.shape[0], 1):
        raise ValueError(f"mul_cols needs (n,d)*(n,1), got {mat.shape} and {col.shape}")
    data = mat.data * col.data

    def backward(g):
        _add_grad(mat, g * col.data)
        _add_grad(col, (g * mat.data).sum(axis=1, keepdims=True))

    return _make(data, (mat, col), backward)


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    data = kernels.matmul(a.data, b.data)

    def backward(g):
        _add_grad(a, kernels.matmul(g, b.data.T))
        _add_grad(b, kernels.matmul(a.data.T, g))

    return _make(data, (a, b), backward)


def transpose(a):
    if a.data.ndim != 2:
        raise ValueError(f"transpose needs a matrix, got shape {a.shape}")
    data = np.ascontiguousarray(a.data.T)

    def backward(g):
        _add_grad(a, np.ascontiguousarray(g.T))

    return _make(data, (a,), backward)


def reshape(a, shape):
    data = np.ascontiguousarray(a.data.reshape(shape))
    old = a.shape

    def backward(g):
        _add_grad(a, g.reshape(old))

    return _make(data, (a,), backward)


def tsum(a):
    data = np.asarray(a.data.sum())

    def backward(g):
        _add_grad(a, np.broadcast_to(g, a.shape).copy() if a.shape else g)

    return _make(data, (a,), backward)


def tmean(a):
    n = a.data.size
    data = np.asarray(a.data.mean())

    def backward(g):
        _add_grad(a, np.broadcast_to(g / n, a.shape).copy())

    return _make(data, (a,), backward)


def log(a):
    data = np.log(a.data)

    def backward(g):
        _add_grad(a, g / a.data)

    return _make(data, (a,), backward)


def exp(a):
    data = np.exp(a.data)

    def backward(g):
        _add_grad(a, g * data)

    return _make(data, (a,), backward)


def square(a):
    data = a.data * a.data

    def backward(g):
        _add_grad(a, 2.0 * g * a.data)

    return _make(data, (a,), backward)


def softplus(a):
    data = kernels.softplus_fwd(a.data)

    def backward(g):
        _add_grad(a, kernels.softplus_bwd(a.data, g))

    return _make(data, (a,), backward)


# -- activations --------------------------------------------------------

def relu(a):
    data = kernels.relu_fwd(a.data)

    def backward(g):
        _add_grad(a, kernels.relu_bwd(a.data, g))

    return _make(data, (a,), backward)


def gelu(a):
    data = kernels.gelu_fwd(a.data)

    def backward(g):
        _add_grad(a, kernels.gelu_bwd(a.data, g))

    return _make(data, (a,), backward)


def softmax_lastdim(a):
    if a.data.ndim != 2:
        raise ValueError(f"softmax_lastdim needs a matrix, got shape {a.shape}")
    data = kernels.softmax_fwd(a.data)

    def backward(g):
        _add_grad(a, kernels.softmax_bwd(data, g))

    return _make(data, (a,), backward)


_ACTIVATIONS = {"relu": relu, "gelu": gelu, "softmax_lastdim": softmax_lastdim,
                "identity": lambda t: t}


def activation(a, kind):
    try:
        return _ACTIVATIONS[kind](a)
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None


def layer_norm(x, gain, bias, eps=1e-8):
    if eps <= 0:
        raise ValueError(f"layer_norm eps must be > 0, got {eps}")
    if x.data.ndim != 2:
        raise ValueError(f"layer_norm needs a matrix, got shape {x.shape}")
    d = x.shape[1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ValueError(
            f"layer_norm gain/bias must have shape ({d},), got {gain.shape} and {bias.shape}")
    data, mean, rstd = kernels.layer_norm_fwd(x.data, gain.data, bias.data, float(eps))

    def backward(g):
        gx, ggain, gbias = kernels.layer_norm_bwd(x.data, gain.data, mean, rstd, g)
        _add_grad(x, gx)
        _add_grad(gain, ggain)
        _add_grad(bias, gbias)

    return _make(data, (x, gain, bias), backward)


def cross_entropy(logits, labels):
    """Mean of -log softmax(logits)[label] over the batch."""
    if logits.data.ndim != 2:
        raise ValueError(f"cross_entropy needs (n,K) logits, got shape {logits.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
        raise ValueError(
            f"labels must be a length-{logits.shape[0]} sequence, got shape {labels.shape}")
    k = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise IndexError(f"label out of range for {k} classes")
    loss, probs = kernels.nll_fwd(logits.data, labels)

    def backward(g):
        _add_grad(logits, kernels.nll_bwd(probs, labels, float(g.reshape(-1)[0])))

    return _make(np.asarray(loss), (logits,), backward)


# -- structural ops -----------------------------------------------------

def concat_rows(parts):
    parts = list(parts)
    if not parts:
        raise ValueError("concat_rows needs at least one tensor")
    data = np.concatenate([p.data for p in parts], axis=0)
    splits = np.cumsum([p.data.shape[0] for p in parts])[:-1]

    def backward(g):
        for p, gp in zip(parts, np.split(g, splits, axis=0)):
            _add_grad(p, gp)

    return _make(data, tuple(parts), backward)


def concat_cols(parts):
    parts = list(parts)
    if not parts:
        raise ValueError("concat_cols needs at least one tensor")
    data = np.concatenate([p.data for p in parts], axis=1)
    splits = np.cumsum([p.data.shape[1] for p in parts])[:-1]

    def backward(g):
        for p, gp in zip(parts, np.split(g, splits, axis=1)):
            _add_grad(p, np.ascontiguousarray(gp))

    return _make(data, tuple(parts), backward)


def slice_rows(a, start, stop):
    data = np.ascontiguousarray(a.data[start:stop])

    def backward(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        _add_grad(a, full)

    return _make(data, (a,), backward)


def slice_cols(a, start, stop):
    data = np.ascontiguousarray(a.data[:, start:stop])

    def backward(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        _add_grad(a, full)

    return _make(data, (a,), backward)


def logdet_psd(a):
    """log det of a small symmetric positive-definite matrix."""
    sign, val = np.linalg.slogdet(a.data)
    if sign <= 0:
        raise ValueError("logdet_psd needs a positive-definite matrix")
    inv = np.linalg.inv(a.data)

    def backward(g):
        _add_grad(a, float(g.reshape(-1)[0]) * 0.5 * (inv + inv.T))

    return _make(np.asarray(val), (a,), backward)
