import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tuberegress.dataset import Dataset
from tuberegress.errors import DegenerateColumn, SchemaMismatch, UnknownColumn
from tuberegress.preprocess import (
    ScalerKind,
    default_partition,
    fit_preprocessor,
    inverse_transform,
    partition_from_groups,
    restrict_partition,
    transform,
)

S, M, R = ScalerKind.STANDARD, ScalerKind.MINMAX, ScalerKind.ROBUST


def col(values, name="c"):
    v = np.asarray(values, dtype=float)
    return Dataset((name,), v[:, None], np.zeros(v.size))


class TestFit:
    def test_standard_population_std(self):
        s = fit_preprocessor(col([1, 2, 3]), {"c": S}).scalers[0]
        assert s.center == 2.0
        assert s.scale == pytest.approx(np.sqrt(2 / 3), rel=1e-15)

    def test_minmax(self):
        s = fit_preprocessor(col([2, 4, 6]), {"c": M}).scalers[0]
        assert (s.center, s.center + s.scale) == (2.0, 6.0)

    def test_robust_interpolated_quartiles(self):
        s = fit_preprocessor(col([1, 2, 3, 4, 100]), {"c": R}).scalers[0]
        assert (s.center, s.scale) == (3.0, 2.0)

    def test_unknown_column(self):
        with pytest.raises(UnknownColumn):
            fit_preprocessor(col([1, 2]), {"zz": S})

    def test_unmapped_passes_through(self):
        ds = Dataset(("a", "b"), np.array([[1.0, 10.0], [3.0, 30.0]]), np.zeros(2))
        fp = fit_preprocessor(ds, {"a": S})
        assert fp.scalers[1] is None
        np.testing.assert_array_equal(transform(fp, ds).X[:, 1], [10.0, 30.0])

    def test_fitted_on(self):
        assert fit_preprocessor(col([1, 2, 3, 4]), {"c": S}).fitted_on == 4

    def test_has_no_refit(self):
        fp = fit_preprocessor(col([1, 2, 3]), {"c": S})
        assert not hasattr(fp, "fit")
        with pytest.raises(AttributeError):
            fp.scalers = ()


class TestTransform:
    def test_standard_value(self):
        fp = fit_preprocessor(col([1, 2, 3]), {"c": S})
        assert transform(fp, col([3])).X[0, 0] == pytest.approx(1.224744871391589, rel=1e-12)

    def test_minmax_values(self):
        fp = fit_preprocessor(col([2, 4, 6]), {"c": M})
        np.testing.assert_array_equal(transform(fp, col([2, 4, 6])).X[:, 0], [0, 0.5, 1])

    def test_robust_outlier(self):
        fp = fit_preprocessor(col([1, 2, 3, 4, 100]), {"c": R})
        assert transform(fp, col([100])).X[0, 0] == 48.5

    @pytest.mark.parametrize("kind", list(ScalerKind))
    def test_degenerate_to_zero(self, kind):
        fp = fit_preprocessor(col([7, 7, 7]), {"c": kind})
        np.testing.assert_array_equal(transform(fp, col([1, 7, 9])).X[:, 0], 0.0)

    def test_schema_mismatch(self):
        fp = fit_preprocessor(col([1, 2, 3]), {"c": S})
        with pytest.raises(SchemaMismatch):
            transform(fp, col([1, 2], name="d"))

    @given(arrays(np.float64, st.tuples(st.integers(2, 40), st.just(3)),
                  elements=st.floats(-1e4, 1e4, allow_nan=False)))
    def test_on_fitting_data(self, X):
        ds = Dataset(("s", "m", "r"), X, np.zeros(X.shape[0]))
        fp = fit_preprocessor(ds, {"s": S, "m": M, "r": R})
        Z = transform(fp, ds).X
        scale = 1e-9 * max(1.0, np.abs(X).max())
        if not fp.scalers[0].degenerate and fp.scalers[0].scale > scale:
            assert abs(Z[:, 0].mean()) < 1e-9 * max(1, np.abs(Z[:, 0]).max())
            assert Z[:, 0].std() == pytest.approx(1.0, abs=1e-9)
        assert np.all(Z[:, 1] >= 0) and np.all(Z[:, 1] <= 1)
        assert abs(np.median(Z[:, 2])) <= 1e-9 * max(1, np.abs(Z[:, 2]).max())


class TestInverse:
    def test_minmax_midpoint(self):
        fp = fit_preprocessor(col([2, 6]), {"c": M})
        assert inverse_transform(fp, col([0.5])).X[0, 0] == 4.0

    def test_degenerate_raises(self):
        fp = fit_preprocessor(col([5, 5]), {"c": S})
        with pytest.raises(DegenerateColumn):
            inverse_transform(fp, col([0.0]))

    @given(arrays(np.float64, st.tuples(st.integers(2, 30), st.just(3)),
                  elements=st.floats(-1e5, 1e5, allow_nan=False)),
           arrays(np.float64, st.tuples(st.integers(1, 10), st.just(3)),
                  elements=st.floats(-1e5, 1e5, allow_nan=False)))
    def test_round_trip(self, Xfit, Xnew):
        names = ("s", "m", "r")
        fp = fit_preprocessor(Dataset(names, Xfit, np.zeros(len(Xfit))), {"s": S, "m": M, "r": R})
        if any(s.degenerate for s in fp.scalers):
            return
        spread = np.array([s.scale for s in fp.scalers])
        if np.any(spread < 1e-6 * np.abs(Xfit).max(axis=0)):
            return  # scale too small relative to magnitude for a 1e-9 round trip
        ds = Dataset(names, Xnew, np.zeros(len(Xnew)))
        back = inverse_transform(fp, transform(fp, ds)).X
        np.testing.assert_allclose(back, Xnew, rtol=1e-9, atol=1e-9 * np.abs(Xfit).max())


class TestLeakage:
    @given(st.integers(0, 2**32 - 1))
    def test_statistics_ignore_other_data(self, seed):
        rng = np.random.default_rng(seed)
        names = ("a", "b", "c")
        train = Dataset(names, rng.normal(size=(30, 3)), np.zeros(30))
        part = {"a": S, "b": M, "c": R}
        fp1 = fit_preprocessor(train, part)
        Ztrain = transform(fp1, train).X
        transform(fp1, Dataset(names, rng.normal(size=(10, 3)) * 1e6, np.zeros(10)))
        fp2 = fit_preprocessor(train, part)
        assert fp1 == fp2
        assert np.array_equal(Ztrain, transform(fp2, train).X)

    def test_validation_perturbation_does_not_touch_training_rows(self, rng):
        names = ("a",)
        train = Dataset(names, rng.normal(size=(20, 1)), np.zeros(20))
        fp = fit_preprocessor(train, {"a": R})
        before = transform(fp, train).X.copy()
        for _ in range(3):
            transform(fp, Dataset(names, rng.normal(size=(5, 1)) * 100, np.zeros(5)))
        assert np.array_equal(before, transform(fp, train).X)


class TestPartitions:
    @pytest.mark.parametrize("name,kind", [("AveOccup", R), ("MedInc", S), ("Coastal_Proximity", M)])
    def test_default_lookup(self, name, kind):
        assert default_partition()[name] is kind

    def test_default_covers_all_engineered(self):
        from tuberegress.features import ENGINEERED_FEATURES

        assert set(default_partition()) == set(ENGINEERED_FEATURES)

    def test_groups(self):
        p = partition_from_groups({"robust": ["MedInc"], "minmax": ["x"]})
        assert p == {"MedInc": R, "x": M}

    def test_groups_reject_double_assignment(self):
        with pytest.raises(ValueError):
            partition_from_groups({"robust": ["a"], "standard": ["a"]})

    def test_groups_reject_unknown_kind(self):
        with pytest.raises(ValueError):
            partition_from_groups({"log": ["a"]})

    def test_restrict(self):
        assert restrict_partition(default_partition(), ["MedInc", "zz"]) == {"MedInc": S}
