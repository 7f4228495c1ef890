"""The cyclic active-learning protocol.

One cycle: draw a pool slice, score it with Monte-Carlo predictions, count
not-confident samples against tau, select the query batch, obtain labels
from the oracle (blocking), fold them into the labeled set, retrain from
scratch, and evaluate. A failed oracle aborts the cycle with the caller's
state untouched; the whole run is a pure function of (config, seeds) under
the simulated oracle.
"""

import hashlib
import time
from dataclasses import dataclass

import numpy as np

from ..acquisition import UncertaintyScore, count_not_confident, score_distribution, select_queries
from ..bayes import PriorSpec, TrainConfig, init_classifier, predict_mc, train
from ..core.rng import Rng
from ..data import Dataset, SplitSpec, gen_toy1, gen_toy2, gen_two_moons, load_csv, load_dataset, split
from ..errors import ConfigError, OracleError
from ..vit import VitConfig, VitModel, init_vit, predict_images, train_vit
from .metrics import evaluate_distributions
from .oracle import SimulatedOracle
from .pool import PoolState
from .reports import CycleReport, aggregate_reports


def derive_seed(seed, tag):
    """Stable, well-separated integer sub-seed for (seed, purpose)."""
    digest = hashlib.sha256(f"{seed}/{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2 ** 62)


def build_dataset(spec, seed):
    if spec.kind == "toy1":
        return gen_toy1(spec.n_per_class, derive_seed(seed, "data"))
    if spec.kind == "toy2":
        return gen_toy2(spec.n_per_class, derive_seed(seed, "data"))
    if spec.kind == "two_moons":
        return gen_two_moons(spec.n, spec.noise_std, derive_seed(seed, "data"))
    if spec.kind == "csv":
        return load_csv(spec.path, spec.label_column)
    if spec.kind == "uald":
        return load_dataset(spec.path)
    raise ConfigError(f"unknown dataset kind {spec.kind!r}")


def build_model(model_spec, dataset, class_count, init_seed):
    prior = PriorSpec(kind=model_spec.prior.kind, sigma=model_spec.prior.sigma,
                      layer_sigmas=model_spec.prior.layer_sigmas,
                      learn_layer_sigmas=model_spec.prior.learn_layer_sigmas)
    if model_spec.kind == "mlp":
        in_dim = int(np.prod(dataset.feature_shape))
        dims = [in_dim, *model_spec.hidden, class_count]
        return init_classifier(dims, list(model_spec.activations), prior,
                               posterior_kind=model_spec.posterior,
                               seed=init_seed, rank=model_spec.rank)
    if model_spec.kind == "vit":
        if len(dataset.feature_shape) != 3:
            raise ConfigError("vit model needs (H, W, C) image features")
        v = model_spec.vit
        cfg = VitConfig(image_size=tuple(dataset.feature_shape),
                        patch_size=v.patch_size, embed_dim=v.embed_dim,
                        heads=v.heads, depth=v.depth, mlp_ratio=v.mlp_ratio,
                        head_hidden=tuple(v.head_hidden),
                        head_activations=tuple(v.head_activations),
                        class_count=class_count)
        return init_vit(cfg, prior=prior, posterior_kind=model_spec.posterior,
                        seed=init_seed, rank=model_spec.rank)
    raise ConfigError(f"unknown model kind {model_spec.kind!r}")


def predict_any(model, features, m, lam, rng):
    if isinstance(model, VitModel):
        return predict_images(model, features, rng, m=m, lam=lam)
    return predict_mc(model, features.reshape(features.shape[0], -1), m, lam, rng)


def train_any(model, labeled_ds, train_spec, rng):
    cfg = TrainConfig(epochs=train_spec.epochs, batch_size=train_spec.batch_size,
                      m_train=train_spec.m_train, lr=train_spec.lr,
                      kl_weight_rule=train_spec.kl_weight_rule,
                      lambda_train=train_spec.lambda_train)
    if isinstance(model, VitModel):
        return train_vit(model, labeled_ds, cfg, rng)
    return train(model, labeled_ds, cfg, rng)


def evaluate(model, test_ds, m, lam, rng, ece_bins=15):
    """Metrics record for a model on a test set."""
    if len(test_ds) == 0:
        raise ValueError("evaluate needs a non-empty test set")
    dists = predict_any(model, test_ds.features, m, lam, rng)
    return evaluate_distributions(dists, test_ds.labels, test_ds.class_count,
                                  ece_bins=ece_bins)


def labeled_subset(pool_ds, state):
    """Training set from the pool features plus oracle-provided labels."""
    ids = list(state.labeled_ids)
    features, _ = pool_ds.rows_for(ids)
    labels = [state.labels[sid] for sid in ids]
    return Dataset(features, labels, pool_ds.class_count, ids)


@dataclass
class SeedRun:
    """One seed's live experiment: data, pool state, and current model."""

    config: object
    seed: int
    pool_ds: Dataset
    test_ds: Dataset
    state: PoolState
    model: object


def prepare_seed_run(config, seed):
    """Fresh split, stratified 2-per-class labeled seed set, initial training."""
    full = build_dataset(config.dataset, seed)
    pool_ds, test_ds = split(full, SplitSpec(config.dataset.test_fraction,
                                             derive_seed(seed, "split"),
                                             config.dataset.stratified))
    rng = Rng(derive_seed(seed, "seedset"))
    per_class = config.initial_labeled_per_class
    seed_ids = []
    for c in range(pool_ds.class_count):
        members = [sid for sid, y in zip(pool_ds.sample_ids, pool_ds.labels) if y == c]
        order = rng.child(c).permutation(len(members))
        seed_ids.extend(members[i] for i in order[:per_class])
    seed_ids.sort()
    labels = {sid: pool_ds.label_of(sid) for sid in seed_ids}
    state = PoolState.initial(pool_ds, seed_ids, labels)
    model = build_model(config.model, pool_ds, pool_ds.class_count,
                        derive_seed(seed, "init/0"))
    train_any(model, labeled_subset(pool_ds, state), config.train,
              Rng(derive_seed(seed, "train/0")))
    return SeedRun(config, seed, pool_ds, test_ds, state, model)


def run_cycle(run, oracle, observer=None):
    """One query/label/retrain/evaluate cycle; returns the CycleReport.

    Mutates `run.state` and `run.model` only after the oracle has answered
    every query, so an oracle failure leaves the run untouched.
    """
    config, state = run.config, run.state
    if not state.unlabeled_ids:
        raise ValueError("run_cycle needs a non-empty unlabeled pool")
    cycle = state.cycle_index
    seed = run.seed
    started = time.monotonic()
    _phase(observer, "scoring", cycle)

    # 1. seed-deterministic pool slice, kept in stable pool order
    slice_rng = Rng(derive_seed(seed, f"slice/{cycle}"))
    unlabeled = list(state.unlabeled_ids)
    if len(unlabeled) > config.per_cycle_pool:
        idx = np.sort(slice_rng.permutation(len(unlabeled))[:config.per_cycle_pool])
        slice_ids = [unlabeled[i] for i in idx]
    else:
        slice_ids = unlabeled

    # 2-3. score with MC predictions; count not-confident at tau
    feats, _ = run.pool_ds.rows_for(slice_ids)
    dists = predict_any(run.model, feats, config.m_predict, config.lambda_predict,
                        Rng(derive_seed(seed, f"score/{cycle}")))
    not_confident = count_not_confident(dists, config.tau_conf)

    # 4. rank and select the query batch
    if config.acquisition == "random":
        values = Rng(derive_seed(seed, f"random-acq/{cycle}")).uniform(len(slice_ids))
        scores = [UncertaintyScore(sid, "random", float(v))
                  for sid, v in zip(slice_ids, values)]
    else:
        scores = [UncertaintyScore(sid, config.acquisition,
                                   score_distribution(d, config.acquisition))
                  for sid, d in zip(slice_ids, dists)]
    batch = select_queries(scores, config.budget, cycle_index=cycle)

    # 5. blocking labeling; nothing is committed if the oracle fails
    pending = state.copy()
    pending.pending_ids = list(batch.sample_ids)
    chosen = set(batch.sample_ids)
    pending.unlabeled_ids = [sid for sid in pending.unlabeled_ids if sid not in chosen]
    pending.validate()
    _phase(observer, "awaiting_labels", cycle)
    tasks = [{"sample_id": sid, "score": val, "method": config.acquisition,
              "cycle_index": cycle}
             for sid, val in zip(batch.sample_ids, batch.scores)]
    oracle.begin_cycle(tasks)
    new_labels = {}
    for sid in batch.sample_ids:
        label = int(oracle.label(sid))
        if not 0 <= label < run.pool_ds.class_count:
            raise OracleError(f"label {label} out of range for {sid}")
        new_labels[sid] = label
    oracle.end_cycle()

    # 6. commit: queried ids become labeled
    new_state = pending
    new_state.labeled_ids = sorted(new_state.labeled_ids + list(batch.sample_ids))
    new_state.pending_ids = []
    new_state.labels.update(new_labels)
    new_state.cycle_index = cycle + 1
    new_state.validate()

    # 7. retrain on all labeled data (fresh init unless warm-starting)
    _phase(observer, "retraining", cycle)
    if config.warm_start:
        model = run.model
    else:
        model = build_model(config.model, run.pool_ds, run.pool_ds.class_count,
                            derive_seed(seed, f"init/{cycle + 1}"))
    train_any(model, labeled_subset(run.pool_ds, new_state), config.train,
              Rng(derive_seed(seed, f"train/{cycle + 1}")))

    # 8. evaluate on the held-out test set
    metrics = evaluate(model, run.test_ds, config.m_predict, config.lambda_predict,
                       Rng(derive_seed(seed, f"eval/{cycle}")))
    report = CycleReport(
        cycle_index=cycle, seed=seed, not_confident_count=not_confident,
        accuracy=metrics["accuracy"], precision=metrics["precision"],
        recall=metrics["recall"], f1=metrics["f1"], ece=metrics["ece"],
        queried_ids=list(batch.sample_ids),
        labeled_count=len(new_state.labeled_ids),
        pool_size=len(run.pool_ds),
        wall_time_seconds=time.monotonic() - started,
    )
    run.state = new_state
    run.model = model
    if observer is not None:
        observer.on_report(report)
    return report


def run_seed(run, oracle, observer=None, checkpoint_cb=None):
    """All remaining cycles for one seed run."""
    reports = []
    while run.state.cycle_index < run.config.cycles:
        if checkpoint_cb is not None:
            checkpoint_cb(run)
        reports.append(run_cycle(run, oracle, observer))
    _phase(observer, "done", run.state.cycle_index)
    return reports


def run_experiment(config, oracle_factory=None, observer=None, checkpoint_cb=None):
    """Full protocol over all seeds; returns (reports, aggregate rows)."""
    if oracle_factory is None:
        oracle_factory = SimulatedOracle
    all_reports = []
    for seed in config.seeds:
        run = prepare_seed_run(config, seed)
        oracle = oracle_factory(run.pool_ds)
        all_reports.extend(run_seed(run, oracle, observer, checkpoint_cb))
    return all_reports, aggregate_reports(all_reports)


def _phase(observer, phase, cycle):
    if observer is not None:
        observer.on_phase(phase, cycle)
