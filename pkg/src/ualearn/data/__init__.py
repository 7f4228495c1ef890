"""Dataset generation, ingestion, reduction, and splitting."""

from .container import load_dataset, save_dataset
from .datasets import (
    Dataset,
    SplitSpec,
    bytes_to_image,
    gen_toy1,
    gen_toy2,
    gen_two_moons,
    load_csv,
    save_csv,
    split,
)
from .pca import PcaModel, explained_variance_ratio, pca_fit, pca_inverse, pca_transform

__all__ = [
    "Dataset", "PcaModel", "SplitSpec", "bytes_to_image",
    "explained_variance_ratio", "gen_toy1", "gen_toy2", "gen_two_moons",
    "load_csv", "load_dataset", "pca_fit", "pca_inverse", "pca_transform",
    "save_csv", "save_dataset", "split",
]
