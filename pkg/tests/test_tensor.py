import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misinfonet import tensor as T
from misinfonet.tensor import DimensionError, NumericError


def matmul_oracle(a, b):
    # deliberately naive triple loop, independent of np.matmul
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += float(a[i, t]) * float(b[t, j])
            out[i, j] = s
    return out


class TestMatmul:
    def test_matches_triple_loop_oracle(self):
        rng = T.seeded_rng(7)
        for _ in range(5):
            a = rng.normal(size=(4, 6))
            b = rng.normal(size=(6, 3))
            got = T.matmul(a, b)
            want = matmul_oracle(a, b)
            assert np.max(np.abs(got - want)) < 1e-12

    def test_identity(self):
        rng = T.seeded_rng(0)
        a = rng.normal(size=(5, 5))
        assert np.allclose(T.matmul(a, np.eye(5)), a)

    def test_shape_mismatch_names_both_shapes(self):
        a = np.zeros((2, 3))
        b = np.zeros((4, 5))
        with pytest.raises(DimensionError) as ei:
            T.matmul(a, b)
        msg = str(ei.value)
        assert "(2, 3)" in msg and "(4, 5)" in msg

    def test_rejects_non_2d(self):
        with pytest.raises(DimensionError):
            T.matmul(np.zeros(3), np.zeros((3, 2)))

    def test_associativity(self):
        rng = T.seeded_rng(11)
        a = rng.normal(size=(3, 4))
        b = rng.normal(size=(4, 5))
        c = rng.normal(size=(5, 2))
        left = T.matmul(T.matmul(a, b), c)
        right = T.matmul(a, T.matmul(b, c))
        assert np.max(np.abs(left - right)) < 1e-10


class TestActivations:
    def test_sigmoid_known_values(self):
        x = np.array([0.0, 2.0, -2.0])
        got = T.activation(x, "sigmoid")
        want = 1.0 / (1.0 + np.exp(-x))
        assert np.allclose(got, want, atol=1e-15)
        assert got[0] == 0.5

    def test_sigmoid_extreme_no_overflow(self):
        x = np.array([-1e4, -750.0, 750.0, 1e4])
        # gradual underflow to 0 is fine; overflow or nan is not
        with np.errstate(over="raise", invalid="raise"):
            y = T.sigmoid(x)
        assert np.all(np.isfinite(y))
        assert y[0] == 0.0 and y[-1] == 1.0

    def test_tanh_and_relu(self):
        x = np.array([-3.0, 0.0, 3.0])
        assert np.allclose(T.activation(x, "tanh"), np.tanh(x))
        assert np.array_equal(T.activation(x, "relu"), [0.0, 0.0, 3.0])
        assert np.array_equal(T.activation(x, "linear"), x)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            T.activation(np.zeros(2), "gelu")


class TestSoftmax:
    def test_constant_rows_are_uniform(self):
        y = T.softmax(np.full((2, 3), 9.0))
        assert np.allclose(y, 1.0 / 3.0, atol=1e-15)

    def test_shift_invariance(self):
        rng = T.seeded_rng(3)
        x = rng.normal(size=(4, 7))
        assert np.max(np.abs(T.softmax(x) - T.softmax(x + 123.0))) <= 1e-12

    def test_two_class_log_ratio(self):
        y = T.softmax(np.array([0.0, np.log(2.0)]))
        assert np.allclose(y, [1.0 / 3.0, 2.0 / 3.0], atol=1e-15)

    def test_rows_sum_to_one(self):
        rng = T.seeded_rng(5)
        x = rng.normal(size=(10, 6)) * 50
        s = T.softmax(x).sum(axis=-1)
        assert np.max(np.abs(s - 1.0)) < 1e-9

    def test_empty_last_axis_rejected(self):
        with pytest.raises(DimensionError):
            T.softmax(np.zeros((3, 0)))

    @given(st.lists(st.floats(-30, 30), min_size=1, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_property_distribution(self, vals):
        y = T.softmax(np.array(vals))
        assert np.all(y > 0)
        assert abs(float(y.sum()) - 1.0) < 1e-9
        # order preserved
        assert int(np.argmax(y)) == int(np.argmax(vals))


class TestConcatReshape:
    def test_concat_last(self):
        got = T.concat_last(np.array([1.0, 2.0]), np.array([3.0]))
        assert np.array_equal(got, [1.0, 2.0, 3.0])

    def test_concat_2d(self):
        a = np.ones((1, 256))
        b = np.zeros((1, 256))
        assert T.concat_last(a, b).shape == (1, 512)

    def test_concat_leading_mismatch(self):
        with pytest.raises(DimensionError):
            T.concat_last(np.zeros((2, 3)), np.zeros((3, 3)))

    def test_reshape_roundtrip(self):
        rng = T.seeded_rng(1)
        x = rng.normal(size=(8192,))
        y = T.reshape(x, (1, 8192))
        assert y.shape == (1, 8192)
        assert np.array_equal(T.reshape(y, (8192,)), x)

    def test_reshape_count_mismatch(self):
        with pytest.raises(DimensionError):
            T.reshape(np.zeros(4), (3, 2))


class TestGlorot:
    def test_within_bound(self):
        rng = T.seeded_rng(0)
        w = T.glorot_init(rng, (50, 80))
        limit = np.sqrt(6.0 / (50 + 80))
        assert np.all(np.abs(w) <= limit)

    def test_deterministic_per_seed(self):
        a = T.glorot_init(T.seeded_rng(42), (20, 20))
        b = T.glorot_init(T.seeded_rng(42), (20, 20))
        assert np.array_equal(a, b)
        c = T.glorot_init(T.seeded_rng(43), (20, 20))
        assert not np.array_equal(a, c)

    def test_mean_near_zero(self):
        w = T.glorot_init(T.seeded_rng(9), (100, 100))
        limit = np.sqrt(6.0 / 200)
        assert abs(float(w.mean())) < 0.02 * limit * 10  # loose MC bound

    def test_dtype(self):
        w = T.glorot_init(T.seeded_rng(0), (4, 4), dtype=np.float32)
        assert w.dtype == np.float32


class TestFiniteDiff:
    def test_sum_of_squares(self):
        f = lambda x: float(np.sum(x * x))
        g = T.finite_diff_grad(f, np.array([1.0, 2.0]))
        assert np.allclose(g, [2.0, 4.0], atol=1e-6)

    def test_constant_function(self):
        g = T.finite_diff_grad(lambda x: 3.5, np.array([1.0, -1.0]))
        assert np.array_equal(g, [0.0, 0.0])

    def test_matches_sigmoid_derivative(self):
        x = np.array([0.3, -1.2, 2.0])
        f = lambda v: float(np.sum(T.sigmoid(v)))
        g = T.finite_diff_grad(f, x, eps=1e-6)
        s = T.sigmoid(x)
        analytic = s * (1 - s)
        assert np.max(np.abs(g - analytic)) < 1e-7

    def test_rel_error_helper(self):
        assert T.rel_error(np.array([1.0]), np.array([1.0])) == 0.0
        assert T.rel_error(np.array([1.0]), np.array([2.0])) == pytest.approx(0.5)


def test_seeded_rng_reproducible():
    a = T.seeded_rng(123).normal(size=5)
    b = T.seeded_rng(123).normal(size=5)
    assert np.array_equal(a, b)
