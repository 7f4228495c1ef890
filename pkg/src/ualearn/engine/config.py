"""Experiment configuration: strict schema, YAML round trip, resolution.

The config file is the source of record: `resolve` materializes every
default so the written-back form fully determines a run. Unknown keys are
rejected with the offending key named.
"""

import hashlib
from dataclasses import asdict, dataclass, field

import yaml

from ..errors import ConfigError

SCHEMA_VERSION = 1

ACQUISITION_METHODS = ("least_confidence", "margin", "entropy",
                       "predictive_entropy", "predictive_variance", "random")


@dataclass
class DatasetSpec:
    kind: str = "toy2"               # toy1 | toy2 | two_moons | csv | uald
    n_per_class: int = 1000
    n: int = 1000
    noise_std: float = 0.1
    path: str = ""
    label_column: str = "label"
    test_fraction: float = 0.25
    stratified: bool = True


@dataclass
class PriorSpecConfig:
    kind: str = "isotropic"
    sigma: float = 1.0
    layer_sigmas: list = None
    learn_layer_sigmas: bool = False


@dataclass
class VitSpec:
    patch_size: int = 4
    embed_dim: int = 32
    heads: int = 4
    depth: int = 2
    mlp_ratio: float = 2.0
    head_hidden: list = field(default_factory=list)
    head_activations: list = field(default_factory=list)


@dataclass
class ModelSpec:
    kind: str = "mlp"                # mlp | vit
    hidden: list = field(default_factory=lambda: [16])
    activations: list = field(default_factory=lambda: ["relu"])
    posterior: str = "mean_field"
    rank: int = 8
    prior: PriorSpecConfig = field(default_factory=PriorSpecConfig)
    vit: VitSpec = field(default_factory=VitSpec)


@dataclass
class TrainSpec:
    epochs: int = 30
    batch_size: int = 32
    m_train: int = 2
    lr: float = 0.01
    kl_weight_rule: str = "per_sample"
    lambda_train: float = 1.0


@dataclass
class ExperimentConfig:
    schema: int = SCHEMA_VERSION
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    train: TrainSpec = field(default_factory=TrainSpec)
    acquisition: str = "entropy"
    cycles: int = 5
    per_cycle_pool: int = 400
    budget: int = 40
    tau_conf: float = 0.9
    lambda_predict: float = 0.3
    m_predict: int = 32
    seeds: list = field(default_factory=lambda: [0])
    oracle: str = "simulated"        # simulated | human
    warm_start: bool = False
    initial_labeled_per_class: int = 2

    def validate(self):
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {self.schema}")
        if self.dataset.kind not in ("toy1", "toy2", "two_moons", "csv", "uald"):
            raise ConfigError(f"unknown dataset kind {self.dataset.kind!r}")
        if self.model.kind not in ("mlp", "vit"):
            raise ConfigError(f"unknown model kind {self.model.kind!r}")
        if self.acquisition not in ACQUISITION_METHODS:
            raise ConfigError(f"unknown acquisition method {self.acquisition!r}")
        if self.cycles < 1:
            raise ConfigError("cycles must be >= 1")
        if self.budget < 0 or self.budget > self.per_cycle_pool:
            raise ConfigError("budget must lie in [0, per_cycle_pool]")
        if not 0.0 < self.tau_conf < 1.0:
            raise ConfigError("tau_conf must be in (0,1)")
        if self.lambda_predict <= 0:
            raise ConfigError("lambda must be > 0")
        if self.m_predict < 1:
            raise ConfigError("m_predict must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.oracle not in ("simulated", "human"):
            raise ConfigError(f"unknown oracle {self.oracle!r}")
        if self.initial_labeled_per_class < 1:
            raise ConfigError("initial_labeled_per_class must be >= 1")
        if len(self.model.activations) != len(self.model.hidden):
            raise ConfigError("model.activations must match model.hidden length")
        return self


def _fill(cls, data, path):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    fields = {f: t for f, t in cls.__dataclass_fields__.items()}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config key {path}.{sorted(unknown)[0]}")
    kwargs = {}
    for name, value in data.items():
        sub = {"dataset": DatasetSpec, "model": ModelSpec, "train": TrainSpec,
               "prior": PriorSpecConfig, "vit": VitSpec}.get(name)
        kwargs[name] = _fill(sub, value, f"{path}.{name}") if sub else value
    return cls(**kwargs)


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    data = {k: v for k, v in data.items() if k != "provenance"}
    cfg = _fill(ExperimentConfig, data, "config")
    return cfg.validate()


def config_to_dict(cfg):
    return asdict(cfg)


def load_config(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return config_from_dict(data or {})


def dump_config(cfg, path, extra=None):
    """Write the fully-resolved config; `extra` lands under `provenance`."""
    data = config_to_dict(cfg)
    if extra:
        data["provenance"] = extra
    with open(path, "w") as fh:
        yaml.safe_dump(data, fh, sort_keys=True)


def config_hash(cfg):
    blob = yaml.safe_dump(config_to_dict(cfg), sort_keys=True).encode("utf-8")
    return git_blob_sha1(blob)


def git_blob_sha1(data):
    """Content hash the way git hashes a blob object."""
    return hashlib.sha1(b"blob %d\x00" % len(data) + data).hexdigest()
