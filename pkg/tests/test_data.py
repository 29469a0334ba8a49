import numpy as np
import pytest

from histloss import Dataset, load_csv, make_synthetic, split, standardize


class TestLoadCsv:
    def test_small_numeric_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,3\n4,5,6\n7,8,9\n")
        ds = load_csv(path)
        assert ds.n == 3 and ds.d == 2
        assert np.array_equal(ds.targets, [3.0, 6.0, 9.0])

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,y\n1,2,3\n4,5,6\n")
        ds = load_csv(path, has_header=True)
        assert ds.n == 2

    def test_target_column_index(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,3\n4,5,6\n")
        ds = load_csv(path, target_column=0)
        assert np.array_equal(ds.targets, [1.0, 4.0])
        assert np.array_equal(ds.features, [[2.0, 3.0], [5.0, 6.0]])

    def test_non_numeric_cell_cites_position(self, tmp_path):
        path = tmp_path / "d.csv"
        rows = ["1,2,3"] * 5 + ["1,2,oops"] + ["4,5,6"]
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(ValueError, match=r"row 5, column 2"):
            load_csv(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,3\n4,5\n")
        with pytest.raises(ValueError, match="ragged row 1"):
            load_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="no data rows"):
            load_csv(path)


class TestSplit:
    def test_exact_test_count(self):
        ds = make_synthetic("linear", 10, 2, 0.0, seed=0)
        ds = split(ds, 0.2, seed=0)
        assert len(ds.test_idx) == 2
        assert len(ds.train_idx) == 8

    def test_disjoint_and_covering(self):
        ds = split(make_synthetic("linear", 97, 2, 0.0, seed=0), 0.3, seed=1)
        joined = np.sort(np.concatenate([ds.train_idx, ds.test_idx]))
        assert np.array_equal(joined, np.arange(97))

    def test_same_seed_identical(self):
        ds = make_synthetic("linear", 100, 2, 0.0, seed=0)
        a = split(ds, 0.2, seed=7)
        b = split(ds, 0.2, seed=7)
        assert np.array_equal(a.train_idx, b.train_idx)
        assert np.array_equal(a.test_idx, b.test_idx)

    def test_different_seeds_differ(self):
        ds = make_synthetic("linear", 10_000, 2, 0.0, seed=0)
        a = split(ds, 0.2, seed=1)
        b = split(ds, 0.2, seed=2)
        assert not np.array_equal(a.test_idx, b.test_idx)


class TestStandardize:
    def test_train_statistics_are_zero_mean_unit_variance(self):
        ds = split(make_synthetic("linear", 500, 4, 0.1, seed=1), 0.2, seed=0)
        out = standardize(ds)
        train = out.features[out.train_idx]
        assert np.abs(train.mean(axis=0)).max() < 1e-10
        assert np.abs(train.std(axis=0) - 1.0).max() < 1e-10

    def test_constant_feature_dropped_with_warning(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, 1, (50, 3))
        x[:, 1] = 7.0
        ds = split(Dataset(features=x, targets=x[:, 0]), 0.2, seed=0)
        with pytest.warns(UserWarning, match="zero-variance"):
            out = standardize(ds)
        assert out.d == 2
        assert out.meta["dropped_features"] == [1]

    def test_all_constant_features_error(self):
        x = np.full((20, 2), 3.0)
        ds = split(Dataset(features=x, targets=np.arange(20.0)), 0.0, seed=0)
        with pytest.raises(ValueError, match="zero variance"):
            standardize(ds)

    def test_heldout_row_transformed_with_train_stats(self):
        x = np.array([[0.0], [2.0], [4.0], [10.0]])
        ds = Dataset(features=x, targets=np.zeros(4),
                     train_idx=np.array([0, 1, 2]), test_idx=np.array([3]))
        out = standardize(ds)
        mu, sigma = 2.0, np.sqrt(8.0 / 3.0)
        assert out.features[3, 0] == pytest.approx((10.0 - mu) / sigma, rel=1e-14)
        assert out.target_min == 0.0 and out.target_max == 0.0

    def test_idempotent_on_standardized_data(self):
        ds = split(make_synthetic("linear", 300, 3, 0.1, seed=3), 0.2, seed=0)
        once = standardize(ds)
        twice = standardize(once)
        assert np.abs(twice.feature_means).max() < 1e-10
        assert np.abs(twice.feature_stds - 1.0).max() < 1e-10
        assert np.allclose(twice.features, once.features, atol=1e-10)

    def test_target_range_from_train_split_only(self):
        x = np.arange(10.0)[:, None]
        y = np.arange(10.0)
        ds = Dataset(features=x, targets=y,
                     train_idx=np.arange(8), test_idx=np.array([8, 9]))
        out = standardize(ds)
        assert out.target_min == 0.0
        assert out.target_max == 7.0


class TestMakeSynthetic:
    def test_linear_noiseless_matches_recorded_beta(self):
        ds = make_synthetic("linear", 200, 3, 0.0, seed=4)
        assert np.array_equal(ds.targets, ds.features @ ds.meta["beta"])

    def test_sine_targets_in_expected_range(self):
        noise = 0.05
        ds = make_synthetic("sine", 1000, 1, noise, seed=5)
        lo, hi = -1.0 - 3.0 * noise, 1.0 + 3.0 * noise
        inside = (ds.targets >= lo) & (ds.targets <= hi)
        assert inside.mean() > 0.995

    def test_bimodal_noise_is_plus_minus_c(self):
        ds = make_synthetic("bimodal-noise", 500, 2, 0.3, seed=6)
        resid = ds.targets - ds.features @ ds.meta["beta"]
        assert np.allclose(np.abs(resid), 0.3, atol=1e-12)
        signs = np.sign(resid)
        assert abs(signs.mean()) < 0.2

    def test_bitwise_reproducible(self):
        a = make_synthetic("sine", 100, 2, 0.1, seed=7)
        b = make_synthetic("sine", 100, 2, 0.1, seed=7)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.targets, b.targets)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="synthetic kind"):
            make_synthetic("mystery", 10, 1, 0.0, seed=0)


class TestDatasetValidation:
    def test_nan_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            Dataset(features=np.array([[1.0], [float("nan")]]), targets=np.zeros(2))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="targets shape"):
            Dataset(features=np.zeros((3, 2)), targets=np.zeros(4))

    def test_split_required_for_train_arrays(self):
        ds = Dataset(features=np.zeros((3, 2)), targets=np.zeros(3))
        with pytest.raises(ValueError, match="split"):
            ds.train_arrays()
