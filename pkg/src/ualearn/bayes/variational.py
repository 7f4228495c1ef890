"""Gaussian variational weight layers and their priors.

Each layer keeps per-weight posterior means and unconstrained scales
(sigma = softplus(rho), so sigma > 0 always). The base family is
mean-field; an optional low-rank factor enriches the posterior to
diagonal-plus-low-rank covariance while staying reparameterizable.

Priors are zero-mean Gaussians, either one shared sigma or one per layer
(optionally learned by empirical Bayes).
"""

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..core import (
    Tensor,
    add,
    add_scalar,
    exp,
    log,
    logdet_psd,
    matmul,
    mul,
    mul_cols,
    reshape,
    scale,
    softplus,
    square,
    transpose,
    tsum,
)
from ..errors import ConfigError

MAX_LOW_RANK = 16


@dataclass
class PriorSpec:
    """Zero-mean Gaussian prior configuration."""

    kind: str = "isotropic"            # isotropic | per_layer
    sigma: float = 1.0
    layer_sigmas: list = None
    learn_layer_sigmas: bool = False

    def __post_init__(self):
        if self.kind not in ("isotropic", "per_layer"):
            raise ConfigError(f"unknown prior kind {self.kind!r}")
        if self.sigma <= 0:
            raise ConfigError("prior sigma must be > 0")
        if self.kind == "per_layer":
            if not self.layer_sigmas:
                raise ConfigError("per_layer prior needs layer_sigmas")
            self.layer_sigmas = [float(s) for s in self.layer_sigmas]
            if any(s <= 0 for s in self.layer_sigmas):
                raise ConfigError("all layer sigmas must be > 0")
        elif self.learn_layer_sigmas:
            raise ConfigError("learn_layer_sigmas requires a per_layer prior")

    def sigma_for(self, layer_index):
        if self.kind == "isotropic":
            return self.sigma
        if layer_index >= len(self.layer_sigmas):
            raise ConfigError(
                f"per_layer prior has {len(self.layer_sigmas)} sigmas, "
                f"layer {layer_index} requested")
        return self.layer_sigmas[layer_index]


def _rho_for_sigma(sigma):
    # softplus^-1, stable for small targets
    return math.log(math.expm1(sigma)) if sigma > 1e-10 else math.log(sigma)


@dataclass
class VariationalLayer:
    """One affine transform with Gaussian posteriors over W and b."""

    w_mu: Tensor
    w_rho: Tensor
    b_mu: Tensor
    b_rho: Tensor
    fan_in: int
    fan_out: int
    w_factor: Tensor = None   # (fan_in*fan_out, r); None in mean-field mode
    b_factor: Tensor = None   # (fan_out, r)

    @property
    def low_rank(self):
        return self.w_factor is not None

    def parameters(self):
        params = [self.w_mu, self.w_rho, self.b_mu, self.b_rho]
        if self.low_rank:
            params += [self.w_factor, self.b_factor]
        return params

    def param_count(self):
        return self.fan_in * self.fan_out + self.fan_out

    def sample(self, rng, lam=1.0):
        """Reparameterized draw: w = mu + (lam*sigma)*eps [+ factor @ eps'].

        Differentiable w.r.t. mu, rho, and the factor; lam scales only the
        posterior standard deviation, never the mean.
        """
        if lam <= 0:
            raise ValueError(f"lambda must be > 0, got {lam}")
        eps_w = Tensor(rng.child(0).normal((self.fan_in, self.fan_out)))
        eps_b = Tensor(rng.child(1).normal((self.fan_out,)))
        sig_w = softplus(self.w_rho)
        sig_b = softplus(self.b_rho)
        if lam != 1.0:
            sig_w = scale(sig_w, lam)
            sig_b = scale(sig_b, lam)
        w = add(self.w_mu, mul(sig_w, eps_w))
        b = add(self.b_mu, mul(sig_b, eps_b))
        if self.low_rank:
            eps_rw = Tensor(rng.child(2).normal((self.w_factor.shape[1], 1)))
            eps_rb = Tensor(rng.child(3).normal((self.b_factor.shape[1], 1)))
            w = add(w, reshape(matmul(self.w_factor, eps_rw), (self.fan_in, self.fan_out)))
            b = add(b, reshape(matmul(self.b_factor, eps_rb), (self.fan_out,)))
        return w, b

    def _block_kl(self, mu, rho, factor, prior_sigma):
        sigma = softplus(rho)
        if factor is None:
            # sum_i [ log(sp/s_i) + (s_i^2 + mu_i^2) / (2 sp^2) - 1/2 ]
            elem = add(scale(log(sigma), -1.0),
                       scale(add(square(sigma), square(mu)), 0.5 / prior_sigma ** 2))
            return tsum(add_scalar(elem, math.log(prior_sigma) - 0.5))
        # diag-plus-low-rank: exact KL via the determinant lemma on
        # Sigma = D + F F^T, with logdet(Sigma) = logdet(D) + logdet(I + F^T D^-1 F)
        p = mu.size
        r = factor.shape[1]
        tr_term = add(add(tsum(square(sigma)), tsum(square(factor))), tsum(square(mu)))
        inv_var = exp(scale(reshape(log(sigma), (p, 1)), -2.0))  # 1/sigma_i^2
        a = add(Tensor(np.eye(r)), matmul(transpose(factor), mul_cols(factor, inv_var)))
        logdet = add(scale(tsum(log(sigma)), 2.0), logdet_psd(a))
        half = add(scale(tr_term, 1.0 / prior_sigma ** 2), scale(logdet, -1.0))
        const = p * (2.0 * math.log(prior_sigma) - 1.0)
        return scale(add_scalar(half, const), 0.5)

    def kl(self, prior_sigma):
        """KL(q || N(0, prior_sigma^2 I)) over this layer's W and b."""
        kl_w = self._block_kl(self.w_mu, self.w_rho, self.w_factor, prior_sigma)
        kl_b = self._block_kl(self.b_mu, self.b_rho, self.b_factor, prior_sigma)
        return add(kl_w, kl_b)

    def posterior_summary(self):
        """(sum over params of sigma_i^2 + mu_i^2, param count)."""
        total = 0.0
        for mu, rho, factor in ((self.w_mu, self.w_rho, self.w_factor),
                                (self.b_mu, self.b_rho, self.b_factor)):
            sig = kernels.softplus_fwd(rho.data)
            total += float((sig * sig).sum() + (mu.data * mu.data).sum())
            if factor is not None:
                total += float((factor.data * factor.data).sum())
        return total, self.param_count()


def make_layer(fan_in, fan_out, prior_sigma, rng, posterior_kind="mean_field", rank=8):
    """Initialize a layer: mu ~ N(0, 1/fan_in), sigma = 0.05 * prior sigma."""
    if posterior_kind not in ("mean_field", "low_rank"):
        raise ConfigError(f"unknown posterior kind {posterior_kind!r}")
    rho0 = _rho_for_sigma(0.05 * prior_sigma)
    std = 1.0 / math.sqrt(fan_in)
    w_mu = Tensor(std * rng.child(0).normal((fan_in, fan_out)), requires_grad=True)
    b_mu = Tensor(std * rng.child(1).normal((fan_out,)), requires_grad=True)
    w_rho = Tensor(np.full((fan_in, fan_out), rho0), requires_grad=True)
    b_rho = Tensor(np.full((fan_out,), rho0), requires_grad=True)
    layer = VariationalLayer(w_mu, w_rho, b_mu, b_rho, fan_in, fan_out)
    if posterior_kind == "low_rank":
        r_w = min(rank, MAX_LOW_RANK, fan_in * fan_out)
        r_b = min(rank, MAX_LOW_RANK, fan_out)
        # zero factors: starts exactly mean-field
        layer.w_factor = Tensor(np.zeros((fan_in * fan_out, r_w)), requires_grad=True)
        layer.b_factor = Tensor(np.zeros((fan_out, r_b)), requires_grad=True)
    return layer


def sample_weights(layer, rng, lam=1.0):
    """Spec-level alias for a reparameterized (W, b) draw."""
    return layer.sample(rng, lam)


def kl_to_prior(layer, prior, layer_index=0):
    """Closed-form KL of one layer against its prior as a scalar Tensor."""
    return layer.kl(prior.sigma_for(layer_index))
