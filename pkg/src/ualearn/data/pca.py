"""Principal component analysis via SVD, for feature reduction."""

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDataError


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray        # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing
    total_variance: float = 0.0   # over all d directions, not just the kept k


def pca_fit(x, variance_threshold=0.95):
    """Fit the smallest model whose cumulative variance ratio meets the threshold."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"pca_fit needs an (n>=2, d) matrix, got shape {x.shape}")
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError(f"variance_threshold must be in (0,1], got {variance_threshold}")
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variances = (s * s) / (x.shape[0] - 1)
    total = variances.sum()
    if total <= 1e-300:
        raise DegenerateDataError("pca_fit: zero-variance data")
    ratios = np.cumsum(variances) / total
    k = int(np.searchsorted(ratios, variance_threshold - 1e-12) + 1)
    k = min(k, len(variances))
    components = vt[:k].copy()
    # deterministic sign: largest-magnitude entry of each component is positive
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return PcaModel(mean, components, variances[:k].copy(), float(total))


def pca_transform(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"pca_transform: feature dim {x.shape} does not match model dim "
            f"{model.mean.shape[0]}")
    return (x - model.mean) @ model.components.T


def pca_inverse(model, z):
    z = np.asarray(z, dtype=np.float64)
    return z @ model.components + model.mean


def explained_variance_ratio(model):
    if model.total_variance <= 0:
        return model.explained_variance.copy()
    return model.explained_variance / model.total_variance
