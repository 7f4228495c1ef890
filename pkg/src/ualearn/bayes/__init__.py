"""Variational Bayesian classifiers."""

from .classifier import (
    BayesianClassifier,
    ElboBreakdown,
    PredictiveDistribution,
    TrainConfig,
    TrainingTrace,
    elbo_loss,
    empirical_bayes_update,
    init_classifier,
    predict_mc,
    train,
)
from .variational import (
    MAX_LOW_RANK,
    PriorSpec,
    VariationalLayer,
    kl_to_prior,
    make_layer,
    sample_weights,
)

__all__ = [
    "BayesianClassifier", "ElboBreakdown", "MAX_LOW_RANK",
    "PredictiveDistribution", "PriorSpec", "TrainConfig", "TrainingTrace",
    "VariationalLayer", "elbo_loss", "empirical_bayes_update",
    "init_classifier", "kl_to_prior", "make_layer", "predict_mc",
    "sample_weights", "train",
]
