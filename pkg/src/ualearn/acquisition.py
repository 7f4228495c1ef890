"""Uncertainty scoring, query selection, and confidence counting.

All scores share one convention: higher value means more uncertain. The
probability-space margin is therefore exposed as 1 - (p1 - p2) so that a
uniform distribution scores 1 and a one-hot scores 0, matching the other
methods' direction.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

METHODS = ("least_confidence", "margin", "entropy",
           "predictive_entropy", "predictive_variance")


@dataclass(frozen=True)
class UncertaintyScore:
    sample_id: str
    method: str
    value: float


@dataclass(frozen=True)
class QueryBatch:
    cycle_index: int
    sample_ids: tuple
    scores: tuple
    budget: int

    def __post_init__(self):
        if len(self.sample_ids) > self.budget:
            raise ValueError("query batch exceeds budget")
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise ValueError("query ids must be unique")
        if any(self.scores[i] < self.scores[i + 1]
               for i in range(len(self.scores) - 1)):
            raise ValueError("scores must be non-increasing")


def _check_normalized(probs, where):
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1:
        raise ValueError(f"{where} needs a 1-D probability vector")
    if abs(probs.sum() - 1.0) > 1e-6 or np.any(probs < -1e-12):
        raise ValueError(f"{where} needs normalized probabilities, got sum {probs.sum()}")
    return probs


def least_confidence(probs):
    """1 minus the winning probability."""
    probs = _check_normalized(probs, "least_confidence")
    return float(1.0 - probs.max())


def margin(probs):
    """1 - (p1 - p2) over the two largest entries; 1 = maximally uncertain."""
    probs = _check_normalized(probs, "margin")
    if probs.shape[0] < 2:
        raise ValueError("margin needs at least two classes")
    top = np.sort(probs)[-2:]
    return float(1.0 - (top[1] - top[0]))


def entropy(probs):
    """Shannon entropy in nats, with 0 log 0 = 0."""
    probs = np.asarray(probs, dtype=np.float64)
    mask = probs > 0
    return float(-(probs[mask] * np.log(probs[mask])).sum())


def predictive_entropy(dist):
    """Entropy of the Monte-Carlo mean distribution (total uncertainty)."""
    return entropy(dist.mean)


def predictive_variance(dist):
    """Per-class variance of the draws, averaged over classes."""
    if dist.draws < 2:
        raise ValueError("predictive_variance needs at least 2 draws")
    second = (dist.samples * dist.samples).mean(axis=0)
    var = second - dist.mean * dist.mean
    return float(var.mean())


def score_distribution(dist, method):
    if method == "predictive_entropy":
        return predictive_entropy(dist)
    if method == "predictive_variance":
        return predictive_variance(dist)
    if method == "least_confidence":
        return least_confidence(dist.mean)
    if method == "margin":
        return margin(dist.mean)
    if method == "entropy":
        return entropy(dist.mean)
    raise ValueError(f"unknown acquisition method {method!r}")


def select_queries(scores, budget, cycle_index=0):
    """Top-budget scores; ties break toward the lexically smaller sample id."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    ranked = sorted(scores, key=lambda s: (-s.value, s.sample_id))
    chosen = ranked[:budget]
    return QueryBatch(cycle_index=cycle_index,
                      sample_ids=tuple(s.sample_id for s in chosen),
                      scores=tuple(s.value for s in chosen),
                      budget=budget)


def count_not_confident(dists, tau_conf):
    """How many samples have max mean probability below tau."""
    if not 0.0 < tau_conf < 1.0:
        raise ValueError(f"tau_conf must be in (0,1), got {tau_conf}")
    return int(sum(1 for d in dists if d.mean.max() < tau_conf))


def export_scores_csv(scores, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "method", "value"])
        for s in scores:
            writer.writerow([s.sample_id, s.method, repr(float(s.value))])


def read_scores_csv(path):
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(UncertaintyScore(row["sample_id"], row["method"],
                                        float(row["value"])))
    return out
