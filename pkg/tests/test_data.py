"""Dataset generators, ingestion, PCA, and split tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ualearn.data import (
    Dataset,
    SplitSpec,
    bytes_to_image,
    explained_variance_ratio,
    gen_toy1,
    gen_toy2,
    gen_two_moons,
    load_csv,
    load_dataset,
    pca_fit,
    pca_inverse,
    pca_transform,
    save_csv,
    save_dataset,
    split,
)
from ualearn.errors import ConfigError, DegenerateDataError, ParseError, UalearnError


def nearest_mean_accuracy(ds, mean0, mean1):
    """Brute-force nearest-true-mean classifier."""
    d0 = np.linalg.norm(ds.features - mean0, axis=1)
    d1 = np.linalg.norm(ds.features - mean1, axis=1)
    pred = (d1 < d0).astype(int)
    return float((pred == ds.labels).mean())


class TestToyGenerators:
    def test_toy1_class_means(self):
        ds = gen_toy1(2000, seed=0)
        m1 = ds.features[ds.labels == 1].mean(axis=0)
        assert np.all(np.abs(m1 - 5.0) < 0.2)
        m0 = ds.features[ds.labels == 0].mean(axis=0)
        assert np.all(np.abs(m0 + 5.0) < 0.2)

    def test_toy1_per_axis_std(self):
        ds = gen_toy1(2000, seed=1)
        target = math.sqrt(5.0)
        for c in (0, 1):
            stds = ds.features[ds.labels == c].std(axis=0, ddof=1)
            assert np.all(stds > target * 0.95) and np.all(stds < target * 1.05)

    def test_toy1_minimal(self):
        ds = gen_toy1(1, seed=5)
        assert len(ds) == 2
        assert sorted(ds.labels.tolist()) == [0, 1]

    def test_toy2_overlaps_more_than_toy1(self):
        t1 = gen_toy1(5000, seed=2)
        t2 = gen_toy2(5000, seed=2)
        acc1 = nearest_mean_accuracy(t1, np.array([-5.0, -5.0]), np.array([5.0, 5.0]))
        acc2 = nearest_mean_accuracy(t2, np.array([-2.0, -2.0]), np.array([2.0, 2.0]))
        assert acc2 < acc1
        assert acc1 > 0.99

    def test_toy2_balanced_and_deterministic(self):
        a = gen_toy2(100, seed=9)
        b = gen_toy2(100, seed=9)
        assert (a.labels == 0).sum() == (a.labels == 1).sum() == 100
        np.testing.assert_array_equal(a.features, b.features)
        assert a.sample_ids == b.sample_ids


class TestTwoMoons:
    def test_zero_noise_points_on_unit_half_circles(self):
        ds = gen_two_moons(200, noise_std=0.0, seed=0)
        upper = ds.features[ds.labels == 0]
        lower = ds.features[ds.labels == 1]
        r_up = np.linalg.norm(upper - np.array([0.0, 0.0]), axis=1)
        r_lo = np.linalg.norm(lower - np.array([1.0, 0.5]), axis=1)
        assert np.all(np.abs(r_up - 1.0) < 1e-9)
        assert np.all(np.abs(r_lo - 1.0) < 1e-9)

    def test_balanced_for_even_n(self):
        ds = gen_two_moons(400, noise_std=0.1, seed=3)
        assert (ds.labels == 0).sum() == 200

    def test_one_nn_oracle_accuracy(self):
        ds = gen_two_moons(400, noise_std=0.1, seed=7)
        x, y = ds.features, ds.labels
        dist = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
        np.fill_diagonal(dist, np.inf)
        pred = y[np.argmin(dist, axis=1)]
        assert (pred == y).mean() > 0.95


class TestCsv:
    def test_dense_label_reindexing(self, tmp_path):
        p = tmp_path / "tiny.csv"
        p.write_text("f0,f1,label\n1.0,2.0,a\n3.0,4.0,a\n5.0,6.0,b\n")
        ds = load_csv(p, label_column="label")
        assert ds.labels.tolist() == [0, 0, 1]
        assert ds.class_count == 2
        np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4], [5, 6]])

    def test_missing_label_column(self, tmp_path):
        p = tmp_path / "tiny.csv"
        p.write_text("f0,f1,label\n1,2,a\n")
        with pytest.raises(ConfigError):
            load_csv(p, label_column="target")

    def test_ragged_row_reports_line_number(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("f0,f1,label\n1,2,a\n1,b\n")
        with pytest.raises(ParseError, match="line 3"):
            load_csv(p, label_column="label")

    def test_non_numeric_feature(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("f0,f1,label\n1,x,a\n")
        with pytest.raises(ParseError, match="line 2"):
            load_csv(p, label_column="label")

    def test_round_trip(self, tmp_path):
        ds = gen_toy1(10, seed=4)
        p = tmp_path / "out.csv"
        save_csv(ds, p)
        back = load_csv(p, label_column="label")
        np.testing.assert_allclose(back.features, ds.features, atol=0)
        np.testing.assert_array_equal(back.labels, ds.labels)


class TestBytesToImage:
    def test_exact_fill(self):
        img = bytes_to_image(bytes(range(256)), width=16, channels=1)
        assert img.shape == (16, 16, 1)
        assert img[0, 1, 0] == 1.0 / 255.0

    def test_padding(self):
        img = bytes_to_image(bytes([255] * 10), width=4, channels=1)
        assert img.shape == (3, 4, 1)
        assert img[2, 2, 0] == 0.0 and img[2, 3, 0] == 0.0
        assert img[2, 1, 0] == 1.0

    def test_scaling_endpoints(self):
        img = bytes_to_image(bytes([0, 255]), width=2, channels=1)
        assert img[0, 0, 0] == 0.0
        assert img[0, 1, 0] == 1.0

    def test_empty_input(self):
        with pytest.raises(UalearnError):
            bytes_to_image(b"", width=4)

    @settings(max_examples=50, deadline=None)
    @given(st.binary(min_size=1, max_size=64), st.integers(1, 8))
    def test_prefix_recovers_input(self, raw, width):
        img = bytes_to_image(raw, width=width, channels=1)
        flat = np.round(img.reshape(-1) * 255).astype(np.uint8)
        assert bytes(flat[: len(raw)]) == raw


class TestPca:
    def test_rank_one_line(self):
        t = np.linspace(-3, 3, 40)
        x = np.column_stack([t, 2 * t])
        model = pca_fit(x, variance_threshold=0.95)
        assert model.components.shape[0] == 1
        assert abs(explained_variance_ratio(model)[0] - 1.0) < 1e-9

    def test_full_threshold_keeps_full_rank(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(30, 2))
        model = pca_fit(x, variance_threshold=1.0)
        assert model.components.shape[0] == 2

    def test_reconstruction_and_eigen_spectrum(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(50, 5)) @ np.diag([3.0, 2.0, 1.5, 1.0, 0.5])
        model = pca_fit(x, variance_threshold=1.0)
        z = pca_transform(model, x)
        np.testing.assert_allclose(pca_inverse(model, z), x, atol=1e-9)
        # independent oracle: eigendecomposition of the sample covariance
        cov = np.cov(x, rowvar=False, ddof=1)
        eig = np.sort(np.linalg.eigvalsh(cov))[::-1]
        np.testing.assert_allclose(model.explained_variance, eig, atol=1e-9)

    def test_orthonormal_components(self):
        rng = np.random.default_rng(2)
        model = pca_fit(rng.normal(size=(40, 6)), variance_threshold=0.9)
        gram = model.components @ model.components.T
        np.testing.assert_allclose(gram, np.eye(model.components.shape[0]), atol=1e-8)

    def test_transform_of_mean_is_zero(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(20, 4))
        model = pca_fit(x, variance_threshold=1.0)
        z = pca_transform(model, x.mean(axis=0, keepdims=True))
        np.testing.assert_allclose(z, 0.0, atol=1e-10)

    def test_distance_preservation_at_full_rank(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(15, 4))
        model = pca_fit(x, variance_threshold=1.0)
        z = pca_transform(model, x)
        dx = np.linalg.norm(x[:, None] - x[None, :], axis=2)
        dz = np.linalg.norm(z[:, None] - z[None, :], axis=2)
        np.testing.assert_allclose(dx, dz, atol=1e-9)

    def test_projection_matches_direct_oracle(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(25, 3))
        model = pca_fit(x, variance_threshold=0.99)
        z = pca_transform(model, x)
        oracle = (x - x.mean(axis=0)) @ model.components.T
        np.testing.assert_allclose(z, oracle, atol=1e-10)

    def test_zero_variance_data(self):
        with pytest.raises(DegenerateDataError):
            pca_fit(np.ones((10, 3)), variance_threshold=0.5)

    def test_dimension_mismatch(self):
        model = pca_fit(np.random.default_rng(6).normal(size=(10, 3)), 1.0)
        with pytest.raises(ValueError):
            pca_transform(model, np.zeros((2, 4)))


class TestSplit:
    def test_ninety_ten(self):
        ds = gen_toy1(50, seed=0)  # 100 samples
        pool, test = split(ds, SplitSpec(test_fraction=0.1, seed=1))
        assert len(pool) == 90 and len(test) == 10

    def test_seed_determinism(self):
        ds = gen_toy1(30, seed=0)
        a = split(ds, SplitSpec(0.25, seed=7))
        b = split(ds, SplitSpec(0.25, seed=7))
        assert a[0].sample_ids == b[0].sample_ids
        assert a[1].sample_ids == b[1].sample_ids

    def test_stratified_class_ratio(self):
        ds = gen_toy1(50, seed=0)
        pool, test = split(ds, SplitSpec(0.2, seed=3, stratified=True))
        for c in (0, 1):
            assert abs(int((test.labels == c).sum()) - 10) <= 1

    def test_partition_by_ids(self):
        ds = gen_two_moons(101, 0.05, seed=2)
        pool, test = split(ds, SplitSpec(0.3, seed=5))
        pool_ids, test_ids = set(pool.sample_ids), set(test.sample_ids)
        assert pool_ids.isdisjoint(test_ids)
        assert pool_ids | test_ids == set(ds.sample_ids)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(4, 60), st.floats(0.05, 0.95), st.integers(0, 1000), st.booleans())
    def test_partition_property(self, n_half, frac, seed, stratified):
        ds = gen_toy2(n_half, seed=0)
        try:
            pool, test = split(ds, SplitSpec(frac, seed=seed, stratified=stratified))
        except ConfigError:
            return  # degenerate sides are a documented error, not a bug
        assert len(pool) + len(test) == len(ds)
        assert set(pool.sample_ids).isdisjoint(test.sample_ids)

    def test_impossible_fraction(self):
        ds = gen_toy1(2, seed=0)
        with pytest.raises(ConfigError):
            split(ds, SplitSpec(0.01, seed=0))


class TestContainer:
    def test_round_trip_tabular(self, tmp_path):
        ds = gen_toy2(17, seed=11)
        path = tmp_path / "ds.uald"
        save_dataset(ds, path)
        back = load_dataset(path)
        np.testing.assert_array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.labels, ds.labels)
        assert back.sample_ids == ds.sample_ids
        assert back.class_count == ds.class_count

    def test_round_trip_images(self, tmp_path):
        imgs = np.stack([bytes_to_image(bytes([i] * 48), width=4, channels=3)
                         for i in range(6)])
        ds = Dataset(imgs, [0, 1, 0, 1, 0, 1], 2)
        path = tmp_path / "img.uald"
        save_dataset(ds, path)
        back = load_dataset(path)
        assert back.features.shape == (6, 4, 4, 3)
        np.testing.assert_array_equal(back.features, ds.features)

    def test_truncation_detected(self, tmp_path):
        ds = gen_toy1(5, seed=0)
        path = tmp_path / "ds.uald"
        save_dataset(ds, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 7])
        from ualearn.errors import IntegrityError
        with pytest.raises(IntegrityError):
            load_dataset(path)
