"""Bayesian feed-forward classifiers trained by stochastic variational inference.

The training objective is the negated evidence lower bound: Monte-Carlo
expected negative log-likelihood plus a weighted KL from the variational
posterior to the prior. Prediction averages softmax outputs over weight
draws, optionally scaling the posterior spread by lambda at sampling time.
"""

from dataclasses import dataclass, field

import numpy as np

from ..core import Adam, Tensor, activation, add, add_bias, cross_entropy, matmul, no_grad, scale
from ..errors import ConfigError
from .variational import PriorSpec, VariationalLayer, make_layer

VALID_ACTIVATIONS = ("relu", "gelu")


@dataclass
class BayesianClassifier:
    layers: list
    activations: list           # hidden-layer kinds; output layer emits raw logits
    prior: PriorSpec
    class_count: int
    posterior_kind: str = "mean_field"
    rank: int = 8

    def parameters(self):
        params = []
        for layer in self.layers:
            params.extend(layer.parameters())
        return params

    def forward_logits(self, x, rng, lam=1.0):
        """One stochastic forward pass; x is a (n, d) Tensor."""
        z = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            w, b = layer.sample(rng.child(i), lam)
            z = add_bias(matmul(z, w), b)
            if i < last:
                z = activation(z, self.activations[i])
        return z

    def kl(self):
        total = None
        for i, layer in enumerate(self.layers):
            term = layer.kl(self.prior.sigma_for(i))
            total = term if total is None else add(total, term)
        return total


@dataclass
class PredictiveDistribution:
    """Per-sample Monte-Carlo class probabilities and their mean."""

    samples: np.ndarray     # (M, K)
    mean: np.ndarray        # (K,)
    draws: int
    lambda_used: float

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] != self.draws:
            raise ValueError("samples must be (draws, K)")
        row_sums = self.samples.sum(axis=1)
        if np.any(self.samples < -1e-12) or np.any(np.abs(row_sums - 1.0) > 1e-9):
            raise ValueError("sample rows must be probability vectors")
        if np.abs(self.mean - self.samples.mean(axis=0)).max() > 1e-12:
            raise ValueError("mean must equal the column average of samples")


@dataclass
class ElboBreakdown:
    """Loss components for one objective evaluation."""

    nll: float
    kl: float
    kl_weight: float
    total: float
    loss: Tensor = None     # differentiable total, kept out of repr/compare

    def __eq__(self, other):
        return (self.nll, self.kl, self.kl_weight, self.total) == (
            other.nll, other.kl, other.kl_weight, other.total)


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    m_train: int = 2
    lr: float = 1e-2
    # per_sample: KL/N against a mean-batch likelihood (the ELBO divided by
    # N, so the prior fades as labels accumulate); per_batch: KL/num_batches
    # (matches sum-batch conventions); none: pure MC cross-entropy.
    kl_weight_rule: str = "per_sample"
    lambda_train: float = 1.0


@dataclass
class TrainingTrace:
    epochs: list = field(default_factory=list)   # per-epoch mean ElboBreakdown

    def final_total(self):
        return self.epochs[-1].total if self.epochs else float("nan")


def init_classifier(layer_dims, activations, prior, posterior_kind="mean_field",
                    seed=0, rank=8, rng=None):
    """Build a classifier from a dims chain like [d, h1, ..., K]."""
    dims = list(layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ConfigError(f"layer_dims must chain >= 2 positive dims, got {dims}")
    acts = list(activations)
    if len(acts) != len(dims) - 2:
        raise ConfigError(
            f"need {len(dims) - 2} hidden activations for dims {dims}, got {len(acts)}")
    for a in acts:
        if a not in VALID_ACTIVATIONS:
            raise ConfigError(f"unknown activation {a!r}")
    if prior.kind == "per_layer" and len(prior.layer_sigmas) != len(dims) - 1:
        raise ConfigError(
            f"per_layer prior needs {len(dims) - 1} sigmas, got {len(prior.layer_sigmas)}")
    from ..core.rng import Rng

    root = rng if rng is not None else Rng(seed)
    layers = [
        make_layer(dims[i], dims[i + 1], prior.sigma_for(i), root.child(i),
                   posterior_kind=posterior_kind, rank=rank)
        for i in range(len(dims) - 1)
    ]
    return BayesianClassifier(layers, acts, prior, dims[-1],
                              posterior_kind=posterior_kind, rank=rank)


def elbo_loss(model, features, labels, m_train, kl_weight, rng, lambda_train=1.0):
    """Negated ELBO over a batch: MC cross-entropy plus weighted KL."""
    if m_train < 1:
        raise ValueError(f"m_train must be >= 1, got {m_train}")
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("elbo_loss needs a non-empty (n, d) batch")
    x = Tensor(features)
    nll_sum = None
    for m in range(m_train):
        logits = model.forward_logits(x, rng.child(m), lam=lambda_train)
        term = cross_entropy(logits, labels)
        nll_sum = term if nll_sum is None else add(nll_sum, term)
    nll = scale(nll_sum, 1.0 / m_train)
    kl = model.kl()
    total = add(nll, scale(kl, kl_weight))
    return ElboBreakdown(nll=nll.item(), kl=kl.item(), kl_weight=float(kl_weight),
                         total=total.item(), loss=total)


def _kl_weight(rule, n, num_batches):
    if rule == "per_sample":
        return 1.0 / n
    if rule == "per_batch":
        return 1.0 / num_batches
    if rule == "none":
        return 0.0
    raise ConfigError(f"unknown kl_weight_rule {rule!r}")


def train(model, dataset, config, rng):
    """SVI training over shuffled minibatches; returns a per-epoch trace."""
    n = len(dataset)
    if n == 0:
        raise ValueError("train needs a non-empty labeled dataset")
    feats = dataset.flat_features()
    labels = dataset.labels
    opt = Adam(model.parameters(), lr=config.lr)
    trace = TrainingTrace()
    batch = max(1, min(config.batch_size, n))
    num_batches = -(-n // batch)
    kl_weight = _kl_weight(config.kl_weight_rule, n, num_batches)
    for epoch in range(config.epochs):
        order = rng.child(epoch).permutation(n)
        erng = rng.child(epoch, 1)
        sums = np.zeros(3)
        for bi in range(num_batches):
            idx = order[bi * batch:(bi + 1) * batch]
            breakdown = elbo_loss(model, feats[idx], labels[idx], config.m_train,
                                  kl_weight, erng.child(bi),
                                  lambda_train=config.lambda_train)
            breakdown.loss.backward()
            opt.step()
            sums += (breakdown.nll, breakdown.kl, breakdown.total)
        mean = sums / num_batches
        trace.epochs.append(ElboBreakdown(nll=mean[0], kl=mean[1], kl_weight=kl_weight,
                                          total=mean[2]))
    return trace


def predict_mc(model, features, m, lam, rng):
    """Monte-Carlo predictive distributions, one per input row."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        features = features.reshape(features.shape[0], -1)
    with no_grad():
        draws = np.stack([
            _softmax(model.forward_logits(Tensor(features), rng.child(i), lam=lam).data)
            for i in range(m)
        ])
    means = draws.mean(axis=0)
    return [
        PredictiveDistribution(samples=np.ascontiguousarray(draws[:, i, :]),
                               mean=means[i], draws=m, lambda_used=float(lam))
        for i in range(features.shape[0])
    ]


def _softmax(logits):
    from .. import kernels

    return kernels.softmax_fwd(logits)


def empirical_bayes_update(model, labeled=None, steps=20, lr=0.05):
    """Gradient ascent on the ELBO w.r.t. per-layer prior sigmas.

    The likelihood term does not involve the prior, so the ELBO's sigma
    gradient reduces to the (data-free) negative KL gradient; `labeled` is
    accepted for interface symmetry with `train`. Sigmas are clamped to
    [1e-3, 10].
    """
    prior = model.prior
    if prior.kind != "per_layer" or not prior.learn_layer_sigmas:
        raise ConfigError("empirical_bayes_update needs a learnable per_layer prior")
    sigmas = list(prior.layer_sigmas)
    for li, layer in enumerate(model.layers):
        s_total, p_count = layer.posterior_summary()
        sp = sigmas[li]
        for _ in range(steps):
            grad = p_count / sp - s_total / sp ** 3   # dKL/d sigma_p
            sp = min(10.0, max(1e-3, sp - lr * grad))
        sigmas[li] = sp
    new_prior = PriorSpec(kind="per_layer", sigma=prior.sigma, layer_sigmas=sigmas,
                          learn_layer_sigmas=True)
    model.prior = new_prior
    return new_prior
