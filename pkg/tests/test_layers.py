import numpy as np
import pytest
from conftest import fd_inplace, max_rel_err

from misinfonet import layers as L
from misinfonet import tensor as T
from misinfonet.layers import (
    BiLstmParams,
    Conv1dParams,
    DenseSoftmax,
    Dropout,
    DropoutSpec,
    Flatten,
    LstmParams,
    LstmState,
    MaxPool1d,
    PoolSpec,
    RecurrentLayer,
    bilstm_forward,
    conv1d_forward,
    dense_forward,
    dropout,
    flatten,
    layer_backward,
    lstm_forward,
    lstm_step,
    maxpool1d,
)
from misinfonet.tensor import DimensionError, seeded_rng


def zero_lstm(input_dim, hidden):
    return LstmParams(
        np.zeros((input_dim, 4 * hidden)),
        np.zeros((hidden, 4 * hidden)),
        np.zeros(4 * hidden),
    )


def zero_state(hidden):
    return LstmState(np.zeros(hidden), np.zeros(hidden))


class TestLstmStep:
    def test_zero_everything(self):
        p = zero_lstm(3, 4)
        st = lstm_step(p, np.zeros(3), zero_state(4))
        assert np.array_equal(st.h, np.zeros(4))
        assert np.array_equal(st.c, np.zeros(4))

    def test_zero_params_unit_cell_state(self):
        # gates all sigmoid(0)=0.5, candidate tanh(0)=0:
        # c = 0.5 * 1 = 0.5, h = 0.5 * tanh(0.5)
        p = zero_lstm(3, 4)
        st = lstm_step(p, np.ones(3), LstmState(np.zeros(4), np.ones(4)))
        assert np.allclose(st.c, 0.5, atol=1e-15)
        assert np.allclose(st.h, 0.5 * np.tanh(0.5), atol=1e-15)
        assert st.h[0] == pytest.approx(0.2310585786300049, abs=1e-12)

    def test_input_dim_check(self):
        p = zero_lstm(3, 4)
        with pytest.raises(DimensionError):
            lstm_step(p, np.zeros(5), zero_state(4))

    def test_state_dim_check(self):
        p = zero_lstm(3, 4)
        with pytest.raises(DimensionError):
            lstm_step(p, np.zeros(3), zero_state(2))

    def test_gate_views_alias_packed_arrays(self):
        p = LstmParams.init(seeded_rng(0), 3, 4)
        p.W_i[:] = 7.0
        assert np.all(p.Wx[:, :4] == 7.0)
        p.b_f[:] = 2.5
        assert np.all(p.b[4:8] == 2.5)
        assert p.W_c.shape == (3, 4) and p.U_o.shape == (4, 4)

    def test_forget_gate_bias_initialized_open(self):
        p = LstmParams.init(seeded_rng(1), 3, 4)
        assert np.array_equal(p.b_f, np.ones(4))
        assert np.array_equal(p.b_i, np.zeros(4))
        assert np.array_equal(p.b_c, np.zeros(4))
        assert np.array_equal(p.b_o, np.zeros(4))


class TestLstmForward:
    def test_t1_equals_single_step(self):
        p = LstmParams.init(seeded_rng(2), 3, 4)
        x = seeded_rng(3).normal(size=(1, 3))
        out = lstm_forward(p, x)
        st = lstm_step(p, x[0], zero_state(4))
        assert np.max(np.abs(out - st.h)) <= 1e-13

    def test_composition_of_steps(self):
        p = LstmParams.init(seeded_rng(4), 3, 4)
        seq = seeded_rng(5).normal(size=(5, 3))
        ys = lstm_forward(p, seq, return_sequences=True)
        st = zero_state(4)
        for t in range(5):
            st = lstm_step(p, seq[t], st)
            assert np.max(np.abs(ys[t] - st.h)) <= 1e-13
        final = lstm_forward(p, seq, return_sequences=False)
        assert np.array_equal(final, ys[-1])

    def test_zero_params_zero_output(self):
        p = zero_lstm(2, 3)
        seq = seeded_rng(0).normal(size=(4, 2))
        assert np.array_equal(lstm_forward(p, seq), np.zeros(3))

    def test_empty_sequence_rejected(self):
        p = zero_lstm(2, 3)
        with pytest.raises(DimensionError):
            lstm_forward(p, np.zeros((0, 2)))

    def test_feature_dim_mismatch(self):
        p = zero_lstm(2, 3)
        with pytest.raises(DimensionError):
            lstm_forward(p, np.zeros((4, 5)))


class TestBiLstm:
    def make(self, seed=6, d=3, h=4):
        rng = seeded_rng(seed)
        return BiLstmParams(LstmParams.init(rng, d, h), LstmParams.init(rng, d, h))

    def test_width_doubles(self):
        p = self.make()
        seq = seeded_rng(7).normal(size=(5, 3))
        assert bilstm_forward(p, seq).shape == (8,)
        assert bilstm_forward(p, seq, return_sequences=True).shape == (5, 8)

    def test_decomposes_into_two_directions(self):
        p = self.make()
        seq = seeded_rng(8).normal(size=(5, 3))
        got = bilstm_forward(p, seq, return_sequences=True)
        fw = lstm_forward(p.forward, seq, return_sequences=True)
        bw = lstm_forward(p.backward, seq[::-1].copy(), return_sequences=True)[::-1]
        assert np.array_equal(got, np.concatenate([fw, bw], axis=-1))

    def test_palindrome_symmetry_with_shared_params(self):
        one = LstmParams.init(seeded_rng(9), 3, 4)
        p = BiLstmParams(one, one)
        a, b = seeded_rng(10).normal(size=(2, 3))
        seq = np.stack([a, b, a])  # equal to its own reversal
        ys = bilstm_forward(p, seq, return_sequences=True)
        H = 4
        for t in range(3):
            assert np.max(np.abs(ys[t, H:] - ys[2 - t, :H])) <= 1e-13
        final = bilstm_forward(p, seq)
        assert np.max(np.abs(final[:H] - final[H:])) <= 1e-13


class TestConv1d:
    def test_brute_force_oracle(self):
        rng = seeded_rng(11)
        k, C, F = 3, 1, 2
        p = Conv1dParams(rng.normal(size=(k, C, F)), rng.normal(size=F))
        x = rng.normal(size=(6, C))
        y = conv1d_forward(p, x)
        assert y.shape == (4, F)
        for pos in range(4):
            for f in range(F):
                s = p.bias[f]
                for j in range(k):
                    for c in range(C):
                        s += x[pos + j, c] * p.kernel[j, c, f]
                assert y[pos, f] == pytest.approx(max(s, 0.0), abs=1e-12)

    def test_zero_kernel_gives_relu_bias(self):
        p = Conv1dParams(np.zeros((2, 1, 3)), np.array([-1.0, 0.0, 2.0]))
        y = conv1d_forward(p, np.ones((5, 1)))
        assert np.array_equal(y, np.tile([0.0, 0.0, 2.0], (4, 1)))

    def test_output_length(self):
        rng = seeded_rng(12)
        p = Conv1dParams.init(rng, 128, 1, 64)
        y = conv1d_forward(p, rng.normal(size=(256, 1)))
        assert y.shape == (129, 64)

    def test_too_short_input_names_both_lengths(self):
        p = Conv1dParams.init(seeded_rng(0), 4, 1, 2)
        with pytest.raises(DimensionError) as ei:
            conv1d_forward(p, np.zeros((3, 1)))
        assert "3" in str(ei.value) and "4" in str(ei.value)

    def test_channel_mismatch(self):
        p = Conv1dParams.init(seeded_rng(0), 2, 3, 2)
        with pytest.raises(DimensionError):
            conv1d_forward(p, np.zeros((5, 1)))

    def test_enumerated_output_lengths(self):
        for n in range(1, 25):
            x = np.ones((1, n, 1))
            for k in range(1, n + 1):
                p = Conv1dParams(np.ones((k, 1, 1)), np.zeros(1))
                y, _ = p.forward(x)
                assert y.shape == (1, n - k + 1, 1)


class TestMaxPoolLayer:
    def test_documented_example(self):
        y = maxpool1d(PoolSpec(2, 2), np.array([[1.0], [3.0], [2.0], [5.0]]))
        assert np.array_equal(y, [[3.0], [5.0]])

    def test_default_halving(self):
        x = seeded_rng(13).normal(size=(129, 64))
        assert maxpool1d(PoolSpec(), x).shape == (64, 64)

    def test_enumerated_output_lengths(self):
        rng = seeded_rng(14)
        for n in list(range(1, 17)) + [64]:
            x = rng.normal(size=(1, n, 1))
            for f in range(1, n + 1):
                for s in range(1, n + 1):
                    y, _ = MaxPool1d(PoolSpec(f, s)).forward(x)
                    assert y.shape[1] == (n - f) // s + 1

    def test_too_short_input(self):
        with pytest.raises(DimensionError):
            maxpool1d(PoolSpec(4, 1), np.zeros((3, 1)))

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            MaxPool1d(PoolSpec(0, 1))


class TestDense:
    def test_rows_sum_to_one(self):
        rng = seeded_rng(15)
        p = DenseSoftmax.init(rng, 6, 4)
        y = dense_forward(p, rng.normal(size=6))
        assert y.shape == (4,)
        assert float(y.sum()) == pytest.approx(1.0, abs=1e-12)

    def test_zero_weights_uniform(self):
        p = DenseSoftmax(np.zeros((5, 10)), np.zeros(10))
        y = dense_forward(p, seeded_rng(16).normal(size=5))
        assert np.allclose(y, 0.1, atol=1e-15)

    def test_width_mismatch(self):
        p = DenseSoftmax.init(seeded_rng(0), 6, 4)
        with pytest.raises(DimensionError):
            dense_forward(p, np.zeros(7))


class TestDropout:
    def test_eval_mode_is_identity(self):
        x = seeded_rng(17).normal(size=(4, 5))
        y = dropout(DropoutSpec(0.5, mode="eval"), None, x)
        assert np.array_equal(y, x)

    def test_rate_zero_is_identity_even_in_train(self):
        x = seeded_rng(18).normal(size=(4, 5))
        y = dropout(DropoutSpec(0.0, mode="train"), seeded_rng(0), x)
        assert np.array_equal(y, x)

    def test_surviving_values_scaled(self):
        x = np.ones((100, 100))
        y = dropout(DropoutSpec(0.25, mode="train"), seeded_rng(19), x)
        vals = np.unique(y)
        assert set(np.round(vals, 12)) <= {0.0, round(1.0 / 0.75, 12)}

    def test_monte_carlo_mean_preserved(self):
        x = np.ones(200_000)
        y = dropout(DropoutSpec(0.2, mode="train"), seeded_rng(20), x)
        assert abs(float(y.mean()) - 1.0) < 0.02

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            Dropout(1.0)
        with pytest.raises(ValueError):
            Dropout(-0.1)

    def test_backward_reuses_mask(self):
        x = np.ones((3, 4))
        layer = Dropout(0.5)
        y, mask = layer.forward(x, train=True, rng=seeded_rng(21))
        dy = np.ones_like(y)
        dx, _ = layer.backward(dy, mask)
        assert np.array_equal(dx, mask)


class TestFlatten:
    def test_shapes(self):
        assert flatten(np.zeros((64, 64))).shape == (4096,)
        assert flatten(np.arange(5.0)).shape == (5,)

    def test_values_row_major(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(flatten(x), [1.0, 2.0, 3.0, 4.0])

    def test_layer_roundtrip(self):
        lay = Flatten()
        x = seeded_rng(22).normal(size=(2, 3, 4))
        y, cache = lay.forward(x)
        assert y.shape == (2, 12)
        dx, _ = lay.backward(y, cache)
        assert np.array_equal(dx, x)


# ---- gradient checks ---------------------------------------------------------

def check_gradients(layer, X, seed, tol=1e-4):
    """Finite differences vs analytic backward for sum(Y * R) loss."""
    rng = np.random.default_rng(seed)
    Y, cache = layer.forward(X)
    R = rng.normal(size=Y.shape)

    def loss():
        out, _ = layer.forward(X)
        return float(np.sum(out * R))

    dX, grads = layer_backward(layer, cache, R)
    fd_x = fd_inplace(loss, X)
    assert max_rel_err(dX, fd_x) < tol, f"input grad off: {max_rel_err(dX, fd_x)}"
    for name, arr in layer.params().items():
        fd_g = fd_inplace(loss, arr)
        err = max_rel_err(grads[name], fd_g)
        assert err < tol, f"{name} grad off: {err}"


class TestGradients:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("cell", ["LSTM", "BiLSTM"])
    @pytest.mark.parametrize("rs", [False, True])
    def test_recurrent(self, seed, cell, rs):
        rng = seeded_rng(seed)
        layer = RecurrentLayer(cell, 3, 4, rs, rng)
        X = rng.normal(size=(2, 5, 3))
        check_gradients(layer, X, seed)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_conv(self, seed):
        rng = seeded_rng(seed + 30)
        layer = Conv1dParams.init(rng, 3, 2, 4)
        X = rng.normal(size=(2, 7, 2))
        check_gradients(layer, X, seed)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_maxpool(self, seed):
        rng = seeded_rng(seed + 40)
        layer = MaxPool1d(PoolSpec(2, 2))
        # distinct values keep the max selection stable under perturbation
        X = rng.permutation(2 * 8 * 3).astype(np.float64).reshape(2, 8, 3)
        check_gradients(layer, X, seed)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_dense(self, seed):
        rng = seeded_rng(seed + 50)
        layer = DenseSoftmax.init(rng, 6, 4)
        X = rng.normal(size=(3, 6))
        check_gradients(layer, X, seed)

    def test_dropout_off_passthrough(self):
        layer = Dropout(0.4)
        x = seeded_rng(23).normal(size=(2, 5))
        y, cache = layer.forward(x, train=False)
        dy = seeded_rng(24).normal(size=(2, 5))
        dx, _ = layer.backward(dy, cache)
        assert np.array_equal(dx, dy)

    def test_zero_upstream_zero_grads(self):
        rng = seeded_rng(25)
        layer = Conv1dParams.init(rng, 3, 2, 4)
        X = rng.normal(size=(2, 7, 2))
        Y, cache = layer.forward(X)
        dX, grads = layer.backward(np.zeros_like(Y), cache)
        assert not dX.any()
        assert not grads["kernel"].any() and not grads["bias"].any()
