"""Datasets: toy generators, tabular/byte ingestion, and pool/test splits.

Every generator is a pure function of its parameters and seed. Sample ids
are stable strings so that pool bookkeeping survives serialization.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..core.rng import Rng
from ..errors import ConfigError, ParseError, UalearnError


@dataclass
class Dataset:
    """Immutable labeled dataset.

    features is (n, d) for tabular data or (n, H, W, C) for images, always
    float64. labels are dense class indices in [0, class_count).
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    sample_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.shape[0] != self.features.shape[0]:
            raise ValueError("labels must align with feature rows")
        if not self.sample_ids:
            self.sample_ids = [f"s{i:06d}" for i in range(len(self.labels))]
        self.sample_ids = [str(s) for s in self.sample_ids]
        if len(self.sample_ids) != len(self.labels):
            raise ValueError("sample_ids must align with feature rows")
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise ValueError("sample_ids must be unique")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        self._index = {sid: i for i, sid in enumerate(self.sample_ids)}

    def __len__(self):
        return len(self.labels)

    @property
    def feature_shape(self):
        return self.features.shape[1:]

    def flat_features(self):
        """Features as (n, d), flattening image dims row-major."""
        return self.features.reshape(len(self), -1)

    def row_index(self, sample_id):
        return self._index[sample_id]

    def label_of(self, sample_id):
        return int(self.labels[self._index[sample_id]])

    def rows_for(self, sample_ids):
        idx = np.array([self._index[s] for s in sample_ids], dtype=np.int64)
        return self.features[idx], self.labels[idx]

    def subset(self, sample_ids):
        idx = [self._index[s] for s in sample_ids]
        return Dataset(self.features[idx], self.labels[idx], self.class_count,
                       [self.sample_ids[i] for i in idx])


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    seed: int
    stratified: bool = False


def _gaussian_pair(n_per_class, seed, center, std, prefix):
    rng = Rng(seed)
    lo = center * -1.0
    hi = center * 1.0
    x0 = lo + std * rng.child(0).normal((n_per_class, 2))
    x1 = hi + std * rng.child(1).normal((n_per_class, 2))
    features = np.vstack([x0, x1])
    labels = np.concatenate([np.zeros(n_per_class, np.int64), np.ones(n_per_class, np.int64)])
    ids = [f"{prefix}{i:06d}" for i in range(2 * n_per_class)]
    return Dataset(features, labels, 2, ids)


def gen_toy1(n_per_class, seed):
    """Two well-separated isotropic Gaussian blobs at (-5,-5) and (5,5).

    Per-axis standard deviation is sqrt(5), wide but far short of the
    10*sqrt(2) gap between the means, so the classes barely overlap.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    return _gaussian_pair(n_per_class, seed, np.array([5.0, 5.0]), math.sqrt(5.0), "toy1-")


def gen_toy2(n_per_class, seed):
    """Same generator as toy1 with means at +-(2,2): deliberate overlap."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    return _gaussian_pair(n_per_class, seed, np.array([2.0, 2.0]), math.sqrt(5.0), "toy2-")


def gen_two_moons(n, noise_std, seed):
    """Interleaved half-circles with Gaussian jitter."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    n0 = n // 2 + (n % 2)
    n1 = n - n0
    t0 = np.linspace(0.0, math.pi, n0)
    t1 = np.linspace(0.0, math.pi, max(n1, 1))[:n1]
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    features = np.vstack([upper, lower])
    if noise_std > 0:
        features = features + noise_std * Rng(seed).normal(features.shape)
    labels = np.concatenate([np.zeros(n0, np.int64), np.ones(n1, np.int64)])
    ids = [f"moon-{i:06d}" for i in range(n)]
    return Dataset(features, labels, 2, ids)


def load_csv(path, label_column, delimiter=","):
    """Numeric CSV with a header row; labels re-indexed densely 0..K-1.

    Label values keep first-occurrence order, so {a, a, b} becomes [0, 0, 1].
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ConfigError(f"label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        width = len(header)
        rows, raw_labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"line {lineno}: expected {width} fields, got {len(row)}")
            feats = []
            for j, value in enumerate(row):
                if j == label_idx:
                    continue
                try:
                    feats.append(float(value))
                except ValueError:
                    raise ParseError(
                        f"line {lineno}: non-numeric feature {value!r} in column "
                        f"{header[j]!r}") from None
            rows.append(feats)
            raw_labels.append(row[label_idx].strip())
    if not rows:
        raise ParseError(f"{path}: no data rows")
    seen = {}
    labels = []
    for value in raw_labels:
        if value not in seen:
            seen[value] = len(seen)
        labels.append(seen[value])
    ids = [f"row-{i:06d}" for i in range(len(rows))]
    return Dataset(np.array(rows), np.array(labels), len(seen), ids)


def save_csv(dataset, path, label_column="label", delimiter=","):
    feats = dataset.flat_features()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow([f"f{j}" for j in range(feats.shape[1])] + [label_column])
        for row, label in zip(feats, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def bytes_to_image(data, width=64, channels=1):
    """Pack raw bytes into an (H, width, channels) image scaled to [0, 1].

    Bytes fill rows left to right (channel-interleaved for RGB); the final
    partial row is zero-padded. H = ceil(len / (width * channels)).
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    buf = bytes(data)
    if not buf:
        raise UalearnError("bytes_to_image: empty input")
    per_row = width * channels
    height = -(-len(buf) // per_row)
    arr = np.zeros(height * per_row, dtype=np.float64)
    arr[: len(buf)] = np.frombuffer(buf, dtype=np.uint8)
    return (arr / 255.0).reshape(height, width, channels)


def split(dataset, spec):
    """Disjoint, covering, seed-deterministic (pool, test) partition."""
    n = len(dataset)
    if not 0.0 < spec.test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in (0,1), got {spec.test_fraction}")
    rng = Rng(spec.seed)
    if spec.stratified:
        test_idx = []
        for c in range(dataset.class_count):
            members = np.flatnonzero(dataset.labels == c)
            take = int(round(spec.test_fraction * len(members)))
            order = rng.child(c).permutation(len(members))
            test_idx.extend(members[order[:take]])
        test_mask = np.zeros(n, dtype=bool)
        test_mask[test_idx] = True
        if not test_mask.any() or test_mask.all():
            raise ConfigError("impossible stratification: empty pool or test side")
    else:
        n_test = int(round(spec.test_fraction * n))
        if n_test < 1 or n_test > n - 1:
            raise ConfigError(
                f"test_fraction {spec.test_fraction} leaves an empty side for n={n}")
        order = rng.permutation(n)
        test_mask = np.zeros(n, dtype=bool)
        test_mask[order[:n_test]] = True
    test_ids = [dataset.sample_ids[i] for i in range(n) if test_mask[i]]
    pool_ids = [dataset.sample_ids[i] for i in range(n) if not test_mask[i]]
    return dataset.subset(pool_ids), dataset.subset(test_ids)
