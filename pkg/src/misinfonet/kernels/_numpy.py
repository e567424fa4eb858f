"""Pure-numpy kernel implementations. Reference semantics for the numba twins."""

import numpy as np

from ..tensor import sigmoid


def lstm_cell_forward(z, c_prev):
    """One LSTM cell step from packed gate preactivations.

    z: (B, 4H) preactivations in gate order i, f, g, o.
    Returns (h, c, gates) with gates holding the activated values, same packing.
    """
    B, four_h = z.shape
    H = four_h // 4
    gates = np.empty_like(z)
    gates[:, :H] = sigmoid(z[:, :H])
    gates[:, H:2 * H] = sigmoid(z[:, H:2 * H])
    gates[:, 2 * H:3 * H] = np.tanh(z[:, 2 * H:3 * H])
    gates[:, 3 * H:] = sigmoid(z[:, 3 * H:])
    i = gates[:, :H]
    f = gates[:, H:2 * H]
    g = gates[:, 2 * H:3 * H]
    o = gates[:, 3 * H:]
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, gates


def lstm_cell_backward(dh, dc, gates, c_prev, c):
    """Backward through one cell step. Returns (dz, dc_prev)."""
    B, four_h = gates.shape
    H = four_h // 4
    i = gates[:, :H]
    f = gates[:, H:2 * H]
    g = gates[:, 2 * H:3 * H]
    o = gates[:, 3 * H:]
    tc = np.tanh(c)
    dct = dc + dh * o * (1.0 - tc * tc)
    dz = np.empty_like(gates)
    dz[:, :H] = dct * g * i * (1.0 - i)
    dz[:, H:2 * H] = dct * c_prev * f * (1.0 - f)
    dz[:, 2 * H:3 * H] = dct * i * (1.0 - g * g)
    dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
    dc_prev = dct * f
    return dz, dc_prev


def maxpool_forward(x, f, s):
    """Per-channel max over sliding windows.

    x: (B, L, C). Returns (y, idx) where y is (B, L2, C) with
    L2 = floor((L - f)/s) + 1 and idx stores the winning source position
    along L (first maximum wins ties).
    """
    B, L, C = x.shape
    L2 = (L - f) // s + 1
    s0, s1, s2 = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x, shape=(B, L2, f, C), strides=(s0, s1 * s, s1, s2), writeable=False)
    y = windows.max(axis=2)
    local = windows.argmax(axis=2)
    idx = local + (np.arange(L2, dtype=np.int64) * s)[None, :, None]
    return y, idx.astype(np.int64)


def maxpool_backward(dy, idx, L):
    """Scatter dy back to the argmax positions. Returns dx of length L."""
    B, L2, C = dy.shape
    dx = np.zeros((B, L, C), dtype=dy.dtype)
    lin = (np.arange(B, dtype=np.int64)[:, None, None] * L + idx) * C \
        + np.arange(C, dtype=np.int64)[None, None, :]
    np.add.at(dx.ravel(), lin.ravel(), dy.ravel())
    return dx


def add_bias_relu(x, b):
    """relu(x + b) broadcasting b over the last axis."""
    return np.maximum(x + b, 0)


def relu_backward(dy, y):
    """Gradient through relu given its output y."""
    return dy * (y > 0)
