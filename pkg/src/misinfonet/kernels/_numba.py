"""Numba kernel implementations. Same contracts as kernels._numpy."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _sig(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def lstm_cell_forward(z, c_prev):
    B, four_h = z.shape
    H = four_h // 4
    gates = np.empty_like(z)
    h = np.empty_like(c_prev)
    c = np.empty_like(c_prev)
    for b in range(B):
        for j in range(H):
            i = _sig(z[b, j])
            f = _sig(z[b, H + j])
            g = math.tanh(z[b, 2 * H + j])
            o = _sig(z[b, 3 * H + j])
            gates[b, j] = i
            gates[b, H + j] = f
            gates[b, 2 * H + j] = g
            gates[b, 3 * H + j] = o
            cj = f * c_prev[b, j] + i * g
            c[b, j] = cj
            h[b, j] = o * math.tanh(cj)
    return h, c, gates


@njit(cache=True)
def lstm_cell_backward(dh, dc, gates, c_prev, c):
    B, four_h = gates.shape
    H = four_h // 4
    dz = np.empty_like(gates)
    dc_prev = np.empty_like(dc)
    for b in range(B):
        for j in range(H):
            i = gates[b, j]
            f = gates[b, H + j]
            g = gates[b, 2 * H + j]
            o = gates[b, 3 * H + j]
            tc = math.tanh(c[b, j])
            dct = dc[b, j] + dh[b, j] * o * (1.0 - tc * tc)
            dz[b, j] = dct * g * i * (1.0 - i)
            dz[b, H + j] = dct * c_prev[b, j] * f * (1.0 - f)
            dz[b, 2 * H + j] = dct * i * (1.0 - g * g)
            dz[b, 3 * H + j] = dh[b, j] * tc * o * (1.0 - o)
            dc_prev[b, j] = dct * f
    return dz, dc_prev


@njit(cache=True)
def maxpool_forward(x, f, s):
    B, L, C = x.shape
    L2 = (L - f) // s + 1
    y = np.empty((B, L2, C), dtype=x.dtype)
    idx = np.empty((B, L2, C), dtype=np.int64)
    for b in range(B):
        for j in range(L2):
            start = j * s
            for ch in range(C):
                best = x[b, start, ch]
                pos = start
                for t in range(start + 1, start + f):
                    v = x[b, t, ch]
                    if v > best:
                        best = v
                        pos = t
                y[b, j, ch] = best
                idx[b, j, ch] = pos
    return y, idx


@njit(cache=True)
def maxpool_backward(dy, idx, L):
    B, L2, C = dy.shape
    dx = np.zeros((B, L, C), dtype=dy.dtype)
    for b in range(B):
        for j in range(L2):
            for ch in range(C):
                dx[b, idx[b, j, ch], ch] += dy[b, j, ch]
    return dx


@njit(cache=True)
def add_bias_relu(x, b):
    B, L, F = x.shape
    y = np.empty_like(x)
    for n in range(B):
        for t in range(L):
            for f in range(F):
                v = x[n, t, f] + b[f]
                y[n, t, f] = v if v > 0.0 else 0.0
    return y


@njit(cache=True)
def relu_backward(dy, y):
    B, L, F = dy.shape
    out = np.empty_like(dy)
    for n in range(B):
        for t in range(L):
            for f in range(F):
                out[n, t, f] = dy[n, t, f] if y[n, t, f] > 0.0 else 0.0
    return out
