import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tuberegress.dataset import Dataset
from tuberegress.errors import KTooLarge
from tuberegress.importance import (
    ImportanceReport,
    ensemble_scores,
    minmax_normalize,
    mutual_information,
    mutual_information_columns,
    top_k,
)


class TestMutualInformation:
    def test_independent(self):
        rng = np.random.default_rng(0)
        assert mutual_information(rng.normal(size=5000), rng.normal(size=5000)) < 0.05

    def test_gaussian_closed_form(self):
        rng = np.random.default_rng(1)
        rho = 0.9
        z = rng.multivariate_normal([0, 0], [[1, rho], [rho, 1]], size=5000)
        expect = -0.5 * np.log(1 - rho**2)
        assert expect == pytest.approx(0.830, abs=1e-3)
        assert mutual_information(z[:, 0], z[:, 1]) == pytest.approx(expect, abs=0.05)

    def test_identity(self):
        x = np.random.default_rng(2).normal(size=1000)
        assert mutual_information(x, x) > 1.0

    def test_discrete_column_is_finite(self):
        rng = np.random.default_rng(3)
        x = rng.integers(0, 5, 500).astype(float)
        v = mutual_information(x, x + rng.normal(size=500) * 0.1)
        assert np.isfinite(v) and v > 0.5

    def test_nonnegative_and_seeded(self, rng):
        x, y = rng.normal(size=50), rng.normal(size=50)
        a = mutual_information(x, y, seed=5)
        assert a >= 0 and a == mutual_information(x, y, seed=5)

    def test_invariant_to_rescaling(self, rng):
        x, y = rng.normal(size=300), rng.normal(size=300)
        y = y + x
        assert mutual_information(1000 * x, y) == pytest.approx(mutual_information(x, y), abs=1e-3)

    def test_columns_match_single(self, rng):
        X, y = rng.normal(size=(200, 3)), rng.normal(size=200)
        cols = mutual_information_columns(X, y, seed=9)
        assert cols.shape == (3,)
        assert np.all(cols >= 0)

    def test_needs_more_rows_than_k(self):
        with pytest.raises(ValueError):
            mutual_information([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], k=3)


def report(mi, pe, rf, names=None):
    names = names or tuple(f"f{i}" for i in range(len(mi)))
    return ImportanceReport(tuple(names), np.asarray(mi, float), np.asarray(pe, float), np.asarray(rf, float))


class TestReport:
    def test_minmax(self):
        np.testing.assert_array_equal(minmax_normalize([2, 4, 6]), [0, 0.5, 1])
        np.testing.assert_array_equal(minmax_normalize([3, 3]), [0, 0])

    def test_weighted_sum(self):
        r = report([0, 1, 0.5], [1, 0, 0.5], [0, 0, 1])
        np.testing.assert_allclose(r.ensemble, [0.3, 0.4, 0.2 + 0.15 + 0.3])
        assert r.rank.tolist() == [3, 2, 1]

    def test_ties_follow_column_order(self):
        r = report([1, 1, 0], [1, 1, 0], [1, 1, 0])
        assert r.order.tolist() == [0, 1, 2]

    @given(st.lists(st.tuples(st.floats(0, 5), st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=20))
    def test_bounds_and_permutation(self, rows):
        mi, pe, rf = map(np.array, zip(*rows))
        r = report(mi, pe, rf)
        assert np.all(r.ensemble >= 0) and np.all(r.ensemble <= 1 + 1e-12)
        assert sorted(r.rank.tolist()) == list(range(1, len(rows) + 1))
        for v in (r.mi_norm, r.pearson_norm, r.rf_norm):
            if v.max() > 0:
                assert v.max() == 1.0 and v.min() == 0.0

    @given(st.lists(st.floats(0, 10), min_size=2, max_size=15, unique=True),
           st.sampled_from([np.sqrt, np.log1p, np.exp, lambda v: v**3]))
    def test_monotone_transform_keeps_order(self, mi, f):
        mi = np.array(mi)
        zeros = np.zeros_like(mi)
        a = ImportanceReport(tuple(map(str, range(len(mi)))), mi, zeros, zeros, (1.0, 0.0, 0.0))
        b = ImportanceReport(a.features, f(mi), zeros, zeros, (1.0, 0.0, 0.0))
        if len(np.unique(minmax_normalize(mi))) < len(mi) or len(np.unique(minmax_normalize(f(mi)))) < len(mi):
            return  # distinct values collapsed by rounding
        assert np.array_equal(a.order, b.order)
        full_a, full_b = report(mi, zeros, zeros), report(f(mi), zeros, zeros)
        assert np.array_equal(np.argsort(-full_a.mi_norm, kind="stable"), np.argsort(-full_b.mi_norm, kind="stable"))

    def test_round_trip(self):
        r = report([0.1, 0.5, 0.2], [0.3, 0.1, 0.9], [0.2, 0.2, 0.6], names=("a", "b", "c"))
        r2 = ImportanceReport.from_dict(r.to_dict())
        assert top_k(r2, 3) == top_k(r, 3)
        np.testing.assert_allclose(sorted(r2.ensemble), sorted(r.ensemble))

    def test_csv_header(self):
        text = report([0.1, 0.5], [0.3, 0.1], [0.2, 0.8]).to_csv()
        lines = text.splitlines()
        assert lines[0] == "feature,mi,pearson,rf,ensemble,rank"
        assert len(lines) == 3 and lines[1].endswith(",1")


class TestEnsemble:
    def make(self, n=300, seed=0):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, 3))
        y = 2 * X[:, 0] + 0.5 * rng.normal(size=n)
        return X, y

    def test_target_copy_ranks_first_with_score_one(self):
        X, y = self.make()
        ds = Dataset(("copy", "a", "b", "c"), np.column_stack([y, X]), y)
        r = ensemble_scores(ds, forest_size=10)
        assert top_k(r, 1) == ["copy"]
        assert r.ensemble[0] == pytest.approx(1.0)

    def test_duplicates_score_equally(self):
        X, y = self.make()
        ds = Dataset(("a", "b", "a2", "c"), np.column_stack([X[:, 0], X[:, 1], X[:, 0], X[:, 2]]), y)
        r = ensemble_scores(ds, forest_size=10)
        assert r.ensemble[0] == r.ensemble[2]
        assert top_k(r, 2) == ["a", "a2"]

    def test_negative_correlation_counts(self):
        X, y = self.make()
        ds = Dataset(("neg", "b"), np.column_stack([-X[:, 0], X[:, 1]]), y)
        r = ensemble_scores(ds, forest_size=10)
        assert r.pearson_abs[0] > 0.9
        assert top_k(r, 1) == ["neg"]

    def test_weights_must_sum_to_one(self):
        X, y = self.make(50)
        with pytest.raises(ValueError):
            ensemble_scores(Dataset(("a", "b", "c"), X, y), weights=(0.5, 0.5, 0.5))

    def test_deterministic(self):
        X, y = self.make(100)
        ds = Dataset(("a", "b", "c"), X, y)
        a, b = ensemble_scores(ds, forest_size=5, seed=3), ensemble_scores(ds, forest_size=5, seed=3, n_jobs=3)
        assert np.array_equal(a.ensemble, b.ensemble)

    def test_top_k_bounds(self):
        r = report([0.1, 0.5], [0.3, 0.1], [0.2, 0.8], names=("a", "b"))
        assert top_k(r, 2) == [r.features[i] for i in r.order]
        with pytest.raises(KTooLarge):
            top_k(r, 3)
        with pytest.raises(KTooLarge):
            top_k(r, 0)


def test_fixture_ranks_income_per_room_high(fixture_ds):
    from tuberegress.features import derive_features

    r = ensemble_scores(derive_features(fixture_ds), forest_size=10)
    assert len(top_k(r, 12)) == 12
