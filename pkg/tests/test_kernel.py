import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tuberegress.errors import DimensionMismatch, ZeroVariance
from tuberegress.kernel import KernelCache, KernelSpec, cache_get_row, kernel_eval, kernel_matrix, resolve, resolve_gamma

vec = st.integers(1, 5).flatmap(
    lambda d: st.tuples(*[arrays(np.float64, d, elements=st.floats(-10, 10, allow_nan=False))] * 2))


class TestKernelSpec:
    def test_rejects_bad_values(self):
        for kw in ({"kind": "sigmoid"}, {"degree": 0}, {"gamma": -1.0}, {"gamma": "median"}):
            with pytest.raises(ValueError):
                KernelSpec(**kw)

    def test_unresolved_gamma_refused(self):
        with pytest.raises(ValueError):
            kernel_eval(KernelSpec("rbf", "scale"), [0.0], [1.0])


class TestEval:
    def test_rbf_self_is_one(self):
        assert kernel_eval(KernelSpec("rbf", 3.0), [1.0, -2.0], [1.0, -2.0]) == 1.0

    def test_rbf_hand_value(self):
        assert kernel_eval(KernelSpec("rbf", 0.5), [0, 0], [1, 1]) == pytest.approx(np.exp(-1), rel=1e-15)

    def test_linear(self):
        assert kernel_eval(KernelSpec("linear", 1.0), [1, 2], [3, 4]) == 11.0

    def test_poly(self):
        assert kernel_eval(KernelSpec("poly", 1.0, coef0=1.0, degree=2), [1, 0], [1, 5]) == 4.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            kernel_eval(KernelSpec("linear", 1.0), [1, 2], [1, 2, 3])
        with pytest.raises(DimensionMismatch):
            kernel_matrix(KernelSpec("linear", 1.0), np.ones((2, 2)), np.ones((2, 3)))

    @given(vec, st.sampled_from(["rbf", "linear", "poly"]), st.floats(0.01, 2))
    def test_symmetry(self, xs, kind, g):
        x, x2 = xs
        spec = KernelSpec(kind, g, coef0=0.5, degree=2)
        assert kernel_eval(spec, x, x2) == kernel_eval(spec, x2, x)

    @given(vec, st.floats(0.01, 2))
    def test_rbf_in_unit_interval(self, xs, g):
        v = kernel_eval(KernelSpec("rbf", g), *xs)
        assert 0 <= v <= 1

    @given(st.floats(0.01, 5), st.floats(0, 3), st.floats(0.01, 3))
    def test_rbf_strictly_decreasing_in_distance(self, g, r, dr):
        spec = KernelSpec("rbf", g)
        near = kernel_eval(spec, [0.0], [r])
        far = kernel_eval(spec, [0.0], [r + dr])
        if near > 0:
            assert far < near or far == 0.0

    @pytest.mark.parametrize("kind", ["rbf", "linear"])
    def test_psd_random_20x20(self, kind):
        rng = np.random.default_rng(0)
        for trial in range(25):
            X = rng.normal(size=(20, int(rng.integers(1, 6)))) * rng.uniform(0.1, 5)
            K = kernel_matrix(KernelSpec(kind, float(rng.uniform(0.01, 2))), X)
            assert np.array_equal(K, K.T)
            assert np.linalg.eigvalsh(K).min() >= -1e-8

    def test_matrix_matches_pairwise(self, rng):
        A, B = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
        spec = KernelSpec("poly", 0.3, coef0=1.0, degree=3)
        K = kernel_matrix(spec, A, B)
        for i in range(4):
            for j in range(5):
                assert K[i, j] == kernel_eval(spec, A[i], B[j])


class TestGamma:
    def test_scale(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        X = X * np.sqrt(2)  # pooled population variance 0.5
        assert X.var() == pytest.approx(0.5)
        assert resolve_gamma(KernelSpec("rbf", "scale"), X) == pytest.approx(1.0)

    def test_auto(self):
        assert resolve_gamma(KernelSpec("rbf", "auto"), np.ones((3, 4))) == 0.25

    def test_fixed(self):
        assert resolve_gamma(KernelSpec("rbf", 0.1), np.ones((3, 4))) == 0.1

    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            resolve_gamma(KernelSpec("rbf", "scale"), np.ones((3, 2)))

    def test_resolve_copies(self):
        spec = resolve(KernelSpec("rbf", "auto"), np.zeros((2, 5)))
        assert spec.gamma == 0.2 and spec.resolved


class TestCache:
    def setup_method(self):
        self.X = np.random.default_rng(1).normal(size=(6, 2))
        self.spec = KernelSpec("rbf", 0.7)

    def test_hit_on_repeat(self):
        c = KernelCache(self.X, self.spec)
        a = cache_get_row(c, 0)
        b = cache_get_row(c, 0)
        assert (c.misses, c.hits) == (1, 1)
        assert np.array_equal(a, b)

    def test_lru_eviction_with_one_slot(self):
        c = KernelCache(self.X, self.spec, capacity_bytes=8 * 6)
        assert c.n_slots == 1
        for i in (0, 1, 0):
            cache_get_row(c, i)
        assert (c.misses, c.hits) == (3, 0)

    def test_lru_keeps_recent(self):
        c = KernelCache(self.X, self.spec, capacity_bytes=2 * 8 * 6)
        for i in (0, 1, 0, 2, 0, 1):
            cache_get_row(c, i)
        # 0 miss, 1 miss, 0 hit, 2 miss (evicts 1), 0 hit, 1 miss
        assert (c.misses, c.hits) == (4, 2)

    def test_rows_equal_recomputation(self):
        c = KernelCache(self.X, self.spec, capacity_bytes=3 * 8 * 6)
        K = kernel_matrix(self.spec, self.X)
        order = np.random.default_rng(2).integers(0, 6, size=40)
        for i in order:
            assert np.array_equal(cache_get_row(c, int(i)), K[i])
            assert c.resident_bytes <= c.capacity_bytes

    def test_index_check(self):
        with pytest.raises(IndexError):
            cache_get_row(KernelCache(self.X, self.spec), 6)
