"""Toy-scale Vision-Transformer trunk with a Bayesian classifier head.

Patchify -> bias-free linear projection -> class token + positional
embeddings -> pre-norm encoder blocks -> final layer norm; the class-token
feature feeds the variational head. The trunk is deterministic (point
parameters), so all epistemic uncertainty lives in the head.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bayes.classifier import BayesianClassifier, elbo_loss, init_classifier, predict_mc
from .bayes.variational import PriorSpec
from .core import (
    Adam,
    Rng,
    Tensor,
    add,
    add_bias,
    concat_cols,
    concat_rows,
    gelu,
    layer_norm,
    matmul,
    no_grad,
    reshape,
    scale,
    slice_cols,
    slice_rows,
    softmax_lastdim,
    transpose,
)
from .errors import ConfigError


@dataclass
class VitConfig:
    image_size: tuple            # (H, W, C)
    patch_size: int = 4
    embed_dim: int = 64
    heads: int = 4
    depth: int = 2
    mlp_ratio: float = 2.0
    head_hidden: tuple = ()      # hidden dims of the Bayesian head
    head_activations: tuple = ()
    class_count: int = 2

    def __post_init__(self):
        h, w, c = self.image_size
        if h % self.patch_size or w % self.patch_size:
            raise ConfigError(
                f"image {h}x{w} not divisible by patch size {self.patch_size}")
        if self.embed_dim % self.heads:
            raise ConfigError(
                f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")

    @property
    def num_patches(self):
        h, w, _ = self.image_size
        return (h // self.patch_size) * (w // self.patch_size)

    @property
    def patch_values(self):
        _, _, c = self.image_size
        return self.patch_size * self.patch_size * c


def patchify(image, patch_size):
    """Split (H, W, C) into (N, p*p*C) rows in raster order."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError(f"patchify needs (H, W, C), got shape {image.shape}")
    h, w, c = image.shape
    p = patch_size
    if h % p or w % p:
        raise ValueError(f"image {h}x{w} not divisible by patch size {p}")
    grid = image.reshape(h // p, p, w // p, p, c)
    return np.ascontiguousarray(grid.transpose(0, 2, 1, 3, 4).reshape(-1, p * p * c))


def unpatchify(patches, image_shape, patch_size):
    h, w, c = image_shape
    p = patch_size
    grid = patches.reshape(h // p, w // p, p, p, c)
    return np.ascontiguousarray(grid.transpose(0, 2, 1, 3, 4).reshape(h, w, c))


@dataclass
class EncoderBlock:
    # no key bias: a per-key constant shifts every row's scores uniformly
    # and cancels in the row softmax, so the parameter would be dead weight
    wq: Tensor
    bq: Tensor
    wk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor
    ln1_gain: Tensor
    ln1_bias: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    def parameters(self):
        return [self.wq, self.bq, self.wk, self.wv, self.bv,
                self.wo, self.bo, self.ln1_gain, self.ln1_bias,
                self.ln2_gain, self.ln2_bias, self.w1, self.b1, self.w2, self.b2]


@dataclass
class VitModel:
    config: VitConfig
    projection: Tensor           # bias-free patch embedding
    positional: Tensor           # (N+1, d), row 0 is the class slot
    class_token: Tensor          # (d,)
    blocks: list
    final_gain: Tensor
    final_bias: Tensor
    head: BayesianClassifier

    def parameters(self):
        params = [self.projection, self.positional, self.class_token]
        for b in self.blocks:
            params.extend(b.parameters())
        params += [self.final_gain, self.final_bias]
        return params + self.head.parameters()

    def trunk_parameters(self):
        params = [self.projection, self.positional, self.class_token]
        for b in self.blocks:
            params.extend(b.parameters())
        return params + [self.final_gain, self.final_bias]


def init_vit(config, prior=None, posterior_kind="mean_field", seed=0, rank=8):
    prior = prior or PriorSpec()
    rng = Rng(seed)
    d = config.embed_dim
    pv = config.patch_values
    n_tok = config.num_patches + 1

    def normal(r, shape, std):
        return Tensor(std * r.normal(shape), requires_grad=True)

    projection = normal(rng.child(0), (pv, d), 1.0 / math.sqrt(pv))
    positional = normal(rng.child(1), (n_tok, d), 0.02)
    class_token = normal(rng.child(2), (d,), 0.02)
    blocks = []
    hidden = int(round(config.mlp_ratio * d))
    for i in range(config.depth):
        r = rng.child(3, i)
        std = 1.0 / math.sqrt(d)
        blocks.append(EncoderBlock(
            wq=normal(r.child(0), (d, d), std), bq=_zeros(d),
            wk=normal(r.child(1), (d, d), std),
            wv=normal(r.child(2), (d, d), std), bv=_zeros(d),
            wo=normal(r.child(3), (d, d), std), bo=_zeros(d),
            ln1_gain=_ones(d), ln1_bias=_zeros(d),
            ln2_gain=_ones(d), ln2_bias=_zeros(d),
            w1=normal(r.child(4), (d, hidden), std), b1=_zeros(hidden),
            w2=normal(r.child(5), (hidden, d), 1.0 / math.sqrt(hidden)), b2=_zeros(d),
        ))
    head = init_classifier([d, *config.head_hidden, config.class_count],
                           list(config.head_activations), prior,
                           posterior_kind=posterior_kind, rank=rank,
                           rng=rng.child(9))
    return VitModel(config, projection, positional, class_token, blocks,
                    _ones(d), _zeros(d), head)


def _zeros(n):
    return Tensor(np.zeros(n), requires_grad=True)


def _ones(n):
    return Tensor(np.ones(n), requires_grad=True)


def embed(model, patches):
    """Class token plus bias-free projections, with positional embeddings."""
    pv = model.config.patch_values
    if patches.shape[1] != pv:
        raise ValueError(f"patch width {patches.shape[1]} != projection rows {pv}")
    x = patches if isinstance(patches, Tensor) else Tensor(patches)
    projected = matmul(x, model.projection)
    seq = concat_rows([reshape(model.class_token, (1, model.config.embed_dim)), projected])
    return add(seq, model.positional)


def encoder_block(x, block, heads, collect_attention=None):
    """Pre-norm residual block: x + MHSA(LN(x)), then + MLP(LN(.))."""
    d = x.shape[1]
    dh = d // heads
    h = layer_norm(x, block.ln1_gain, block.ln1_bias)
    q = add_bias(matmul(h, block.wq), block.bq)
    k = matmul(h, block.wk)
    v = add_bias(matmul(h, block.wv), block.bv)
    outs = []
    for i in range(heads):
        qh = slice_cols(q, i * dh, (i + 1) * dh)
        kh = slice_cols(k, i * dh, (i + 1) * dh)
        vh = slice_cols(v, i * dh, (i + 1) * dh)
        scores = scale(matmul(qh, transpose(kh)), 1.0 / math.sqrt(dh))
        attn = softmax_lastdim(scores)
        if collect_attention is not None:
            collect_attention.append(attn.data.copy())
        outs.append(matmul(attn, vh))
    merged = add_bias(matmul(concat_cols(outs), block.wo), block.bo)
    x = add(x, merged)
    h2 = layer_norm(x, block.ln2_gain, block.ln2_bias)
    m = add_bias(matmul(gelu(add_bias(matmul(h2, block.w1), block.b1)), block.w2), block.b2)
    return add(x, m)


def trunk_feature(model, image, collect_attention=None):
    """Class-token feature after all blocks and the final layer norm, (1, d)."""
    patches = patchify(image, model.config.patch_size)
    x = embed(model, patches)
    for block in model.blocks:
        x = encoder_block(x, block, model.config.heads, collect_attention)
    x = layer_norm(x, model.final_gain, model.final_bias)
    return slice_rows(x, 0, 1)


def forward_features(model, image, rng, m=32, lam=1.0):
    """Deterministic trunk, stochastic head: one predictive distribution."""
    with no_grad():
        feature = trunk_feature(model, image).data
    return predict_mc(model.head, feature, m, lam, rng)[0]


def predict_images(model, images, rng, m=32, lam=1.0):
    """Batch of predictive distributions, sharing head weight draws."""
    with no_grad():
        feats = np.vstack([trunk_feature(model, img).data for img in images])
    return predict_mc(model.head, feats, m, lam, rng)


def vit_elbo_loss(model, images, labels, m_train, kl_weight, rng, lambda_train=1.0):
    """Negated ELBO through trunk and head; gradients reach both."""
    feats = concat_rows([trunk_feature(model, img) for img in images])
    from .core import cross_entropy

    nll_sum = None
    for m in range(m_train):
        logits = model.head.forward_logits(feats, rng.child(m), lam=lambda_train)
        term = cross_entropy(logits, labels)
        nll_sum = term if nll_sum is None else add(nll_sum, term)
    nll = scale(nll_sum, 1.0 / m_train)
    kl = model.head.kl()
    total = add(nll, scale(kl, kl_weight))
    from .bayes.classifier import ElboBreakdown

    return ElboBreakdown(nll=nll.item(), kl=kl.item(), kl_weight=float(kl_weight),
                         total=total.item(), loss=total)


def train_vit(model, dataset, config, rng):
    """SVI training of head plus point-estimate trunk, shuffled minibatches."""
    from .bayes.classifier import TrainingTrace, ElboBreakdown

    n = len(dataset)
    if n == 0:
        raise ValueError("train_vit needs a non-empty labeled dataset")
    opt = Adam(model.parameters(), lr=config.lr)
    trace = TrainingTrace()
    batch = max(1, min(config.batch_size, n))
    num_batches = -(-n // batch)
    from .bayes.classifier import _kl_weight

    kl_weight = _kl_weight(config.kl_weight_rule, n, num_batches)
    for epoch in range(config.epochs):
        order = rng.child(epoch).permutation(n)
        erng = rng.child(epoch, 1)
        sums = np.zeros(3)
        for bi in range(num_batches):
            idx = order[bi * batch:(bi + 1) * batch]
            breakdown = vit_elbo_loss(model, dataset.features[idx], dataset.labels[idx],
                                      config.m_train, kl_weight, erng.child(bi),
                                      lambda_train=config.lambda_train)
            breakdown.loss.backward()
            opt.step()
            sums += (breakdown.nll, breakdown.kl, breakdown.total)
        mean = sums / num_batches
        trace.epochs.append(ElboBreakdown(nll=mean[0], kl=mean[1], kl_weight=kl_weight,
                                          total=mean[2]))
    return trace
