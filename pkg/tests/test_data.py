import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mrlsr.data import (SplitPlan, Standardizer, TrainingSet, derive_seed, friedman_function,
                        friedman_synthetic, kfold, kfold_indices, load_csv, make_rng, rmse, save_csv,
                        scaled_rmse, split, standard_normal)
from mrlsr.exceptions import InputError


class TestTrainingSet:
    def test_shapes_and_copy(self):
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        ts = TrainingSet(X, [5.0, 6.0])
        X[0, 0] = 99.0
        assert ts.inputs[0, 0] == 1.0
        assert len(ts) == 2 and ts.n_features == 2

    def test_read_only(self):
        ts = TrainingSet([[1.0]], [2.0])
        with pytest.raises(ValueError):
            ts.targets[0] = 0.0

    def test_one_dimensional_inputs_become_columns(self):
        assert TrainingSet([1.0, 2.0, 3.0], [0.0, 0.0, 0.0]).inputs.shape == (3, 1)

    @pytest.mark.parametrize("X,y", [([[1.0], [2.0]], [1.0]), ([[1.0, float("nan")]], [1.0]), ([[1.0]], [float("inf")])])
    def test_rejects_bad(self, X, y):
        with pytest.raises(InputError):
            TrainingSet(X, y)

    def test_without(self):
        ts = TrainingSet([[0.0], [1.0], [2.0]], [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(ts.without(1).targets, [0.0, 2.0])


class TestCsv:
    def test_basic(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2,3\n4,5,6\n")
        ts = load_csv(p)
        np.testing.assert_array_equal(ts.inputs, [[1, 2], [4, 5]])
        np.testing.assert_array_equal(ts.targets, [3, 6])

    def test_header_and_target_column(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("y,a,b\n3,1,2\n6,4,5\n")
        ts = load_csv(p, has_header=True, target_column=0)
        np.testing.assert_array_equal(ts.inputs, [[1, 2], [4, 5]])
        np.testing.assert_array_equal(ts.targets, [3, 6])

    def test_empty(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(InputError):
            load_csv(p)

    def test_ragged_names_row(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("1,2,3\n4,5\n")
        with pytest.raises(InputError, match="row 2"):
            load_csv(p)

    def test_non_numeric_names_cell(self, tmp_path):
        p = tmp_path / "n.csv"
        p.write_text("1,2,3\n4,x,6\n")
        with pytest.raises(InputError, match="row 2.*column 2"):
            load_csv(p)

    def test_single_column(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("1\n2\n")
        with pytest.raises(InputError):
            load_csv(p)

    @given(arrays(float, (5, 3), elements=st.floats(allow_nan=False, allow_infinity=False)))
    def test_roundtrip_bit_exact(self, tmp_path_factory, A):
        p = tmp_path_factory.mktemp("rt") / "x.csv"
        ts = TrainingSet(A[:, :2], A[:, 2])
        save_csv(ts, p)
        back = load_csv(p)
        assert back.inputs.tobytes() == ts.inputs.tobytes()
        assert back.targets.tobytes() == ts.targets.tobytes()


class TestFriedman:
    def test_center_point(self):
        assert friedman_function(np.full((1, 10), 0.5))[0] == pytest.approx(10 * math.sin(math.pi / 4) + 7.5, rel=1e-15)
        assert friedman_function(np.full((1, 10), 0.5))[0] == pytest.approx(14.571067811865476, rel=1e-15)

    def test_zero_first_features(self):
        x = np.zeros((1, 10))
        x[0, 3], x[0, 4] = 0.3, 0.8
        assert friedman_function(x)[0] == pytest.approx(5 + 10 * 0.3 + 5 * 0.8, rel=1e-15)

    def test_noise_free_matches_closed_form(self):
        ts = friedman_synthetic(200, noise_sd=0.0, seed=4)
        assert ts.inputs.shape == (200, 10)
        assert np.all((ts.inputs >= 0) & (ts.inputs < 1))
        assert np.array_equal(ts.targets, friedman_function(ts.inputs))

    def test_deterministic(self):
        a, b = friedman_synthetic(50, seed=9), friedman_synthetic(50, seed=9)
        assert a.inputs.tobytes() == b.inputs.tobytes() and a.targets.tobytes() == b.targets.tobytes()
        assert not np.array_equal(a.targets, friedman_synthetic(50, seed=10).targets)

    def test_noise_level(self):
        ts = friedman_synthetic(20000, noise_sd=2.0, seed=1)
        resid = ts.targets - friedman_function(ts.inputs)
        assert abs(resid.mean()) < 0.05 and abs(resid.std() - 2.0) < 0.05

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            friedman_synthetic(0)


class TestRng:
    def test_box_muller_moments(self):
        z = standard_normal(make_rng(3), 100_000)
        assert abs(z.mean()) < 0.02 and abs(z.std() - 1) < 0.02

    def test_derive_seed_stable(self):
        assert derive_seed(7, 1) == derive_seed(7, 1)
        assert derive_seed(7, 1) != derive_seed(7, 2) != derive_seed(8, 1)


class TestSplit:
    def test_four_equal(self):
        ts = friedman_synthetic(100)
        assert [len(p) for p in split(ts, SplitPlan.equal(4, seed=1))] == [25] * 4

    def test_seventy_thirty(self):
        assert [len(p) for p in split(friedman_synthetic(10), SplitPlan((0.7, 0.3)))] == [7, 3]

    def test_uneven(self):
        sizes = [len(p) for p in SplitPlan.equal(4, seed=0).partitions(103)]
        assert sum(sizes) == 103 and max(sizes) - min(sizes) <= 1

    def test_bad_fractions(self):
        with pytest.raises(InputError):
            SplitPlan((0.5, 0.4)).partitions(10)

    @given(st.integers(1, 300), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
    def test_disjoint_exhaustive_deterministic(self, n, parts, seed):
        plan = SplitPlan.equal(parts, seed)
        p1, p2 = plan.partitions(n), plan.partitions(n)
        assert all(np.array_equal(a, b) for a, b in zip(p1, p2))
        allidx = np.concatenate(p1)
        assert np.array_equal(np.sort(allidx), np.arange(n))
        sizes = [len(p) for p in p1]
        assert max(sizes) - min(sizes) <= 1


class TestKfold:
    def test_leave_one_out(self):
        folds = kfold_indices(5, 5)
        assert all(len(va) == 1 for _, va in folds)

    def test_two_folds(self):
        assert [len(va) for _, va in kfold_indices(4, 2)] == [2, 2]

    def test_too_many(self):
        with pytest.raises(InputError):
            kfold_indices(3, 4)

    def test_deterministic_sets(self):
        ts = friedman_synthetic(30)
        a, b = kfold(ts, 3, seed=5), kfold(ts, 3, seed=5)
        assert all(np.array_equal(x[1].targets, y[1].targets) for x, y in zip(a, b))

    @given(st.integers(2, 200), st.integers(2, 12), st.integers(0, 2 ** 32 - 1))
    def test_cover(self, n, k, seed):
        if k > n:
            return
        folds = kfold_indices(n, k, seed)
        vals = np.concatenate([va for _, va in folds])
        assert np.array_equal(np.sort(vals), np.arange(n))
        for tr, va in folds:
            assert not set(tr) & set(va) and len(tr) + len(va) == n


class TestStandardizer:
    def test_train_statistics(self):
        tr = TrainingSet([[0.0, 5.0], [2.0, 5.0]], [1.0, 2.0])
        st_ = Standardizer().fit(tr)
        out = st_.transform(TrainingSet([[1.0, 5.0]], [3.0]))
        np.testing.assert_array_equal(out.inputs, [[0.0, 0.0]])
        np.testing.assert_array_equal(out.targets, [3.0])


class TestMetrics:
    def test_perfect(self):
        assert scaled_rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_hand_value(self):
        assert scaled_rmse([1.0, 2.0], [1.0, 1.0]) == pytest.approx(0.5 * math.sqrt(0.5), rel=1e-15)

    @pytest.mark.parametrize("y", [[-1.0, -2.0], [0.0, 0.0]])
    def test_nonpositive_max(self, y):
        with pytest.raises(InputError):
            scaled_rmse(y, [0.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            scaled_rmse([1.0], [1.0, 2.0])

    def test_rmse(self):
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5))
