import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tuberegress.baselines import knn_fit, knn_predict, ols_fit, ridge_fit
from tuberegress.errors import KTooLarge, SingularSystem


class TestLinear:
    def test_exact_recovery(self):
        x = np.arange(10.0)[:, None]
        m = ols_fit(x, 2 * x[:, 0] + 1)
        assert m.coef[0] == pytest.approx(2, abs=1e-9) and m.intercept == pytest.approx(1, abs=1e-9)

    def test_ridge_zero_is_ols(self, rng):
        X, y = rng.normal(size=(30, 4)), rng.normal(size=30)
        a, b = ols_fit(X, y), ridge_fit(X, y, 0.0)
        np.testing.assert_allclose(a.coef, b.coef, atol=1e-9)
        assert a.intercept == pytest.approx(b.intercept, abs=1e-9)

    def test_ridge_matches_normal_equations(self, rng):
        X, y = rng.normal(size=(25, 3)), rng.normal(size=25)
        Xc, yc = X - X.mean(0), y - y.mean()
        w = np.linalg.solve(Xc.T @ Xc + 2.5 * np.eye(3), Xc.T @ yc)
        np.testing.assert_allclose(ridge_fit(X, y, 2.5).coef, w, atol=1e-10)

    def test_singular(self):
        X = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
        with pytest.raises(SingularSystem):
            ols_fit(X, np.arange(5.0))
        with pytest.raises(SingularSystem):
            ols_fit(np.ones((2, 3)), np.ones(2))

    def test_negative_lambda(self):
        with pytest.raises(ValueError):
            ridge_fit(np.ones((3, 1)), np.ones(3), -1)

    @given(st.integers(0, 2**32 - 1))
    def test_residuals_orthogonal(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 100))
        X, y = rng.normal(size=(n, 3)), rng.normal(size=n)
        r = y - ols_fit(X, y).predict(X)
        assert abs(r.sum()) < 1e-6 * n
        assert np.all(np.abs(X.T @ r) < 1e-6 * n)

    def test_norm_monotone_in_lambda(self, rng):
        X, y = rng.normal(size=(40, 5)), rng.normal(size=40)
        norms = [np.linalg.norm(ridge_fit(X, y, lam).coef) for lam in (0, 0.01, 0.1, 1, 10, 100, 1e4)]
        assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))


class TestKnn:
    def test_k1_returns_training_target(self, rng):
        X, y = rng.normal(size=(20, 2)), rng.normal(size=20)
        np.testing.assert_array_equal(knn_predict(knn_fit(X, y, 1), X), y)

    def test_k_equals_n_is_global_mean(self, rng):
        X, y = rng.normal(size=(9, 2)), rng.normal(size=9)
        assert np.allclose(knn_predict(knn_fit(X, y, 9), rng.normal(size=(4, 2))), y.mean())

    def test_too_large(self):
        with pytest.raises(KTooLarge):
            knn_fit(np.ones((3, 1)), np.ones(3), 4)
        with pytest.raises(KTooLarge):
            knn_fit(np.ones((3, 1)), np.ones(3), 0)

    def test_ties_prefer_lower_index(self):
        X = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        y = np.array([10.0, 20.0, 30.0, 40.0])
        # all four rows at distance 1 from the origin
        assert knn_predict(knn_fit(X, y, 1), [[0.0]])[0] == 10.0
        assert knn_predict(knn_fit(X, y, 3), [[0.0]])[0] == 20.0

    @given(st.integers(0, 2**32 - 1), st.integers(1, 8))
    def test_matches_sorted_oracle(self, seed, k):
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 4, size=(15, 2)).astype(float)  # many distance ties
        y = rng.normal(size=15)
        Q = rng.integers(0, 4, size=(6, 2)).astype(float)
        got = knn_predict(knn_fit(X, y, k), Q, chunk=4)
        for i, q in enumerate(Q):
            d = ((X - q) ** 2).sum(1)
            idx = sorted(range(15), key=lambda j: (d[j], j))[:k]
            assert got[i] == pytest.approx(y[idx].mean(), rel=1e-12, abs=1e-12)
