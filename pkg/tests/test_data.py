"""Data handling: toy generator, CSV ingestion, splits, standardization, grid search."""

import subprocess
import sys

import numpy as np
import pytest

from mpbnn import data
from mpbnn import network as net
from mpbnn import training as tr
from mpbnn.moments import DIAG, FULL


class TestToyGenerate:
    def test_generator_zero_point(self):
        assert data.toy_true_fn(0.0) == 0.0
        assert data.toy_noise_std(0.0) == 0.0

    def test_inputs_stay_in_sampling_interval(self):
        ds = data.toy_generate(100, seed=0)
        assert ds.features.shape == (100, 1)
        assert np.all(ds.features >= -0.5) and np.all(ds.features <= 0.5)

    def test_deterministic_per_seed(self):
        a = data.toy_generate(50, seed=3)
        b = data.toy_generate(50, seed=3)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_sample_mean_at_fixed_input(self):
        """Mean of y at x = 0.3 is sin(0.6)cos(2.1) = -0.2850575..., by direct MC."""
        x = 0.3
        true_mean = np.sin(0.6) * np.cos(2.1)
        assert true_mean == pytest.approx(-0.2850575, abs=1e-6)
        rng = np.random.default_rng(12)
        n = 10**5
        draws = data.toy_true_fn(x) + rng.standard_normal(n) * data.toy_noise_std(x)
        se = data.toy_noise_std(x) / np.sqrt(n)
        assert abs(draws.mean() - true_mean) <= 3 * se

    def test_invalid_count_rejected(self):
        with pytest.raises(ValueError):
            data.toy_generate(0)


class TestLoadCsv:
    def write(self, tmp_path, text, name="d.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_plain_numeric_file(self, tmp_path):
        ds = data.load_csv(self.write(tmp_path, "1,2,3\n4,5,6\n7,8,9\n"))
        assert ds.n == 3 and ds.q == 2
        np.testing.assert_array_equal(ds.labels, [3.0, 6.0, 9.0])

    def test_header_auto_detected(self, tmp_path):
        ds = data.load_csv(self.write(tmp_path, "a,b,y\n1,2,3\n4,5,6\n"))
        assert ds.n == 2 and ds.q == 2

    def test_non_numeric_cell_cites_row(self, tmp_path):
        path = self.write(tmp_path, "1,2,3\n4,abc,6\n")
        with pytest.raises(ValueError, match="row 2"):
            data.load_csv(path)

    def test_ragged_row_cites_row(self, tmp_path):
        path = self.write(tmp_path, "1,2,3\n4,5\n")
        with pytest.raises(ValueError, match="row 2"):
            data.load_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            data.load_csv(self.write(tmp_path, ""))

    def test_label_column_selection_and_drops(self, tmp_path):
        ds = data.load_csv(
            self.write(tmp_path, "1,2,3,4\n5,6,7,8\n"), label_col=1, drop_cols=(3,)
        )
        np.testing.assert_array_equal(ds.labels, [2.0, 6.0])
        np.testing.assert_array_equal(ds.features, [[1.0, 3.0], [5.0, 7.0]])


class TestMakeSplits:
    def test_partition_sizes_at_n_100(self):
        ds = data.toy_generate(100, seed=0)
        splits = data.make_splits(ds, repeats=20, seed=1)
        assert len(splits) == 20
        s = splits[0]
        assert len(s.test_idx) == 10
        assert len(s.val_idx) == 18
        assert len(s.train_idx) == 72
        assert len(s.train_val_idx) == 90

    def test_same_seed_identical_splits(self):
        ds = data.toy_generate(60, seed=0)
        a = data.make_splits(ds, repeats=3, seed=5)
        b = data.make_splits(ds, repeats=3, seed=5)
        for sa, sb in zip(a, b):
            np.testing.assert_array_equal(sa.test_idx, sb.test_idx)
            np.testing.assert_array_equal(sa.train_idx, sb.train_idx)

    def test_partitions_are_disjoint_and_cover_nothing_twice(self):
        ds = data.toy_generate(100, seed=0)
        for s in data.make_splits(ds, repeats=5, seed=2):
            merged = np.concatenate([s.train_idx, s.val_idx, s.test_idx])
            assert len(np.unique(merged)) == len(merged)
            assert not np.intersect1d(s.test_idx, s.train_val_idx).size

    def test_degenerate_sizes_rejected(self):
        ds = data.toy_generate(3, seed=0)
        with pytest.raises(ValueError):
            data.make_splits(ds, repeats=1, seed=0)

    def test_reproducible_across_process_restarts(self):
        """The same seed yields the same first split in a fresh interpreter."""
        code = (
            "from mpbnn import data; import numpy as np;"
            "ds = data.toy_generate(50, seed=9);"
            "s = data.make_splits(ds, repeats=2, seed=4)[0];"
            "print(','.join(map(str, s.test_idx)))"
        )
        outs = {
            subprocess.run(
                [sys.executable, "-c", code], capture_output=True, text=True, check=True
            ).stdout.strip()
            for _ in range(2)
        }
        assert len(outs) == 1
        ds = data.toy_generate(50, seed=9)
        here = ",".join(map(str, data.make_splits(ds, repeats=2, seed=4)[0].test_idx))
        assert outs == {here}


class TestStandardizer:
    def test_train_columns_standardize_to_unit_moments(self):
        rng = np.random.default_rng(0)
        feats = rng.uniform(-3, 9, size=(200, 4)) * np.array([1.0, 10.0, 0.1, 5.0])
        labels = rng.uniform(0, 100, 200)
        std = data.Standardizer.fit(feats, labels)
        z = std.transform_features(feats)
        assert np.all(np.abs(z.mean(axis=0)) < 1e-10)
        assert np.all(np.abs(z.std(axis=0) - 1.0) < 1e-10)

    def test_constant_column_gets_unit_scale(self):
        feats = np.column_stack([np.full(50, 7.0), np.arange(50.0)])
        std = data.Standardizer.fit(feats, np.arange(50.0))
        assert std.feature_std[0] == 1.0
        z = std.transform_features(feats)
        assert np.all(z[:, 0] == 0.0)

    def test_label_roundtrip(self):
        rng = np.random.default_rng(1)
        labels = rng.uniform(-50, 50, 300)
        std = data.Standardizer.fit(rng.standard_normal((300, 2)), labels)
        back = std.destandardize_labels(std.transform_labels(labels))
        np.testing.assert_allclose(back, labels, atol=1e-12)


class TestGridSearch:
    def tiny_tc(self, epochs=3):
        return tr.TrainConfig(0.05, epochs, 64, 0)

    def test_single_rate_short_circuits_without_training(self, monkeypatch):
        calls = []
        monkeypatch.setattr(data.training, "train",
                            lambda *a, **k: (_ for _ in ()).throw(AssertionError))
        ds = data.toy_generate(50, seed=0)
        rate = data.grid_search_dropout(
            ds, net.ARCH_MP_GELU, FULL, net.HEAD_HETEROSCEDASTIC, self.tiny_tc(),
            rates=(0.07,),
        )
        assert rate == 0.07

    def test_search_runs_rates_times_splits_trainings(self, monkeypatch):
        counter = {"n": 0}
        real_train = data.training.train

        def counting_train(*args, **kwargs):
            counter["n"] += 1
            return real_train(*args, **kwargs)

        monkeypatch.setattr(data.training, "train", counting_train)
        ds = data.toy_generate(50, seed=0)
        data.grid_search_dropout(
            ds, net.ARCH_MP_GELU, DIAG, net.HEAD_HETEROSCEDASTIC, self.tiny_tc(),
            repeats=3,
        )
        assert counter["n"] == 4 * 3

    def test_low_noise_dataset_prefers_small_rates(self):
        """Strong dropout destroys a clean linear signal, so the search
        lands on one of the two smallest rates."""
        rng = np.random.default_rng(7)
        x = rng.standard_normal((160, 2))
        y = x @ np.array([2.0, -1.0]) + 0.3 * rng.standard_normal(160)
        ds = data.Dataset(x, y, "clean")
        rate = data.grid_search_dropout(
            ds, net.ARCH_MP_GELU, DIAG, net.HEAD_HETEROSCEDASTIC,
            tr.TrainConfig(0.01, 300, 160, 0), repeats=3, width=10,
        )
        assert rate in (0.005, 0.01)

    def test_tie_breaks_toward_smaller_rate(self, monkeypatch):
        monkeypatch.setattr(data, "_grid_point", lambda args: 1.0)
        ds = data.toy_generate(50, seed=0)
        rate = data.grid_search_dropout(
            ds, net.ARCH_MP_GELU, DIAG, net.HEAD_HETEROSCEDASTIC, self.tiny_tc(),
            repeats=2,
        )
        assert rate == 0.005

    def test_empty_search_space_rejected(self):
        ds = data.toy_generate(50, seed=0)
        with pytest.raises(ValueError):
            data.grid_search_dropout(
                ds, net.ARCH_MP_GELU, DIAG, net.HEAD_HETEROSCEDASTIC, self.tiny_tc(),
                rates=(),
            )
