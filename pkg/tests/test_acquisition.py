"""Acquisition function and query-selection tests."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ualearn.acquisition import (
    QueryBatch,
    UncertaintyScore,
    count_not_confident,
    entropy,
    export_scores_csv,
    least_confidence,
    margin,
    predictive_entropy,
    predictive_variance,
    read_scores_csv,
    select_queries,
)
from ualearn.bayes import PredictiveDistribution


def dist_from(samples, lam=1.0):
    samples = np.asarray(samples, dtype=np.float64)
    return PredictiveDistribution(samples=samples, mean=samples.mean(axis=0),
                                  draws=samples.shape[0], lambda_used=lam)


class TestLeastConfidence:
    def test_one_hot(self):
        assert least_confidence([1.0, 0.0, 0.0]) == 0.0

    def test_uniform(self):
        assert abs(least_confidence([0.25] * 4) - 0.75) < 1e-15

    def test_hand_value(self):
        assert abs(least_confidence([0.6, 0.3, 0.1]) - 0.4) < 1e-15

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            least_confidence([0.5, 0.1])


class TestMargin:
    def test_uniform_is_maximal(self):
        assert abs(margin([0.25] * 4) - 1.0) < 1e-15

    def test_one_hot_is_zero(self):
        assert margin([0.0, 1.0]) == 0.0

    def test_hand_value(self):
        assert abs(margin([0.5, 0.3, 0.2]) - 0.8) < 1e-15

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            margin([1.0])


class TestEntropy:
    def test_one_hot(self):
        assert entropy([0.0, 1.0, 0.0]) == 0.0

    def test_uniform(self):
        assert abs(entropy([0.25] * 4) - math.log(4)) < 1e-12

    def test_ranking_matches_high_precision_oracle(self):
        rng = np.random.default_rng(0)
        vs = rng.dirichlet(np.ones(5), size=50)
        ours = [entropy(v) for v in vs]
        with mpmath.workdps(50):
            oracle = [float(-sum(mpmath.mpf(p) * mpmath.log(mpmath.mpf(p))
                                 for p in v if p > 0)) for v in vs]
        assert np.argsort(ours).tolist() == np.argsort(oracle).tolist()


class TestPredictive:
    def test_entropy_deterministic_model(self):
        d = dist_from([[1.0, 0.0]] * 4)
        assert predictive_entropy(d) == 0.0

    def test_entropy_uniform_mean(self):
        d = dist_from([[0.25] * 4] * 3)
        assert abs(predictive_entropy(d) - math.log(4)) < 1e-12

    def test_entropy_two_draw_disagreement(self):
        d = dist_from([[1.0, 0.0], [0.0, 1.0]])
        assert abs(predictive_entropy(d) - math.log(2)) < 1e-12

    def test_variance_identical_rows(self):
        d = dist_from([[0.7, 0.3]] * 5)
        assert predictive_variance(d) == 0.0

    def test_variance_analytic(self):
        d = dist_from([[1.0, 0.0], [0.0, 1.0]])
        assert abs(predictive_variance(d) - 0.25) < 1e-15

    def test_variance_against_two_pass_oracle(self):
        rng = np.random.default_rng(1)
        raw = rng.dirichlet(np.ones(3), size=16)
        d = dist_from(raw)
        mean = raw.mean(axis=0)
        oracle = float(np.mean([np.mean((raw[:, k] - mean[k]) ** 2)
                                for k in range(3)]))
        assert abs(predictive_variance(d) - oracle) < 1e-12

    def test_variance_needs_two_draws(self):
        with pytest.raises(ValueError):
            predictive_variance(dist_from([[1.0, 0.0]]))


class TestSelectQueries:
    def scores(self, values):
        return [UncertaintyScore(f"id{i:03d}", "entropy", v)
                for i, v in enumerate(values)]

    def test_zero_budget(self):
        batch = select_queries(self.scores([0.5, 0.9]), budget=0)
        assert batch.sample_ids == ()

    def test_budget_covers_pool(self):
        batch = select_queries(self.scores([0.2, 0.9, 0.5]), budget=10)
        assert batch.sample_ids == ("id001", "id002", "id000")
        assert batch.scores == (0.9, 0.5, 0.2)

    def test_ties_break_to_lowest_id(self):
        batch = select_queries(self.scores([0.5, 0.5, 0.5]), budget=2)
        assert batch.sample_ids == ("id000", "id001")

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.integers(0, 10))
    def test_monotone_transform_invariance(self, values, budget):
        base = select_queries(self.scores(values), budget)
        squashed = select_queries(
            self.scores([math.tanh(3 * v) for v in values]), budget)
        assert base.sample_ids == squashed.sample_ids

    def test_invalid_batch_rejected(self):
        with pytest.raises(ValueError):
            QueryBatch(0, ("a", "b"), (0.1, 0.9), budget=2)
        with pytest.raises(ValueError):
            QueryBatch(0, ("a", "a"), (0.9, 0.9), budget=2)


class TestCountNotConfident:
    def test_one_hot_means(self):
        dists = [dist_from([[1.0, 0.0]] * 2) for _ in range(5)]
        assert count_not_confident(dists, 0.9) == 0

    def test_uniform_means(self):
        dists = [dist_from([[0.25] * 4] * 2) for _ in range(7)]
        assert count_not_confident(dists, 0.3) == 7

    def test_mixed_batch_against_scan_oracle(self):
        rng = np.random.default_rng(2)
        dists = [dist_from(rng.dirichlet(np.ones(3), size=4)) for _ in range(50)]
        tau = 0.6
        oracle = sum(1 for d in dists if max(d.mean) < tau)
        assert count_not_confident(dists, tau) == oracle

    def test_monotone_in_tau(self):
        rng = np.random.default_rng(3)
        dists = [dist_from(rng.dirichlet(np.ones(4), size=4)) for _ in range(40)]
        counts = [count_not_confident(dists, t) for t in (0.3, 0.6, 0.9)]
        assert counts == sorted(counts)

    def test_tau_bounds(self):
        with pytest.raises(ValueError):
            count_not_confident([], 1.0)


class TestCrossMethodProperties:
    def test_one_hot_strictly_least_uncertain(self):
        rng = np.random.default_rng(4)
        one_hot = np.eye(4)[0]
        for _ in range(100):
            p = rng.dirichlet(np.ones(4))
            if p.max() > 1 - 1e-9:
                continue
            for fn in (least_confidence, margin, entropy):
                assert fn(one_hot) < fn(p)

    def test_binary_methods_agree_on_ordering(self):
        rng = np.random.default_rng(5)
        probs = rng.dirichlet(np.ones(2), size=1000)
        orders = []
        for fn in (least_confidence, margin, entropy):
            vals = [fn(p) for p in probs]
            orders.append(np.argsort(vals, kind="stable").tolist())
        assert orders[0] == orders[1] == orders[2]


class TestScoresCsv:
    def test_round_trip(self, tmp_path):
        scores = [UncertaintyScore("a", "entropy", 0.125),
                  UncertaintyScore("b", "margin", 0.5)]
        path = tmp_path / "scores.csv"
        export_scores_csv(scores, path)
        assert read_scores_csv(path) == scores
