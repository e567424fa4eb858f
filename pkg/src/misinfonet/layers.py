"""Neural layers: LSTM/BiLSTM, 1-D convolution, max pooling, dense softmax, dropout.

Every layer exposes a batched forward returning (output, cache) and a backward
taking (upstream_grad, cache) and returning (input_grad, param_grads). Backward
rules are hand-derived; finite differences arbitrate correctness in the tests.
Single-sample wrappers matching the public op signatures live at the bottom.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .tensor import DimensionError, glorot_init, softmax

GATE_ORDER = "ifgo"  # packing order of gate blocks inside the 4H axis


class LstmParams:
    """One direction's LSTM weights, packed along the gate axis.

    Wx: (input_dim, 4H), Wh: (H, 4H), b: (4H,) with gate blocks ordered
    i, f, g, o (g is the cell candidate). The per-gate names are exposed
    as views into the packed arrays, so either addressing mutates the
    same memory.
    """

    def __init__(self, Wx, Wh, b):
        H = Wh.shape[0]
        if Wx.ndim != 2 or Wh.shape != (H, 4 * H) or Wx.shape[1] != 4 * H or b.shape != (4 * H,):
            raise DimensionError(
                f"lstm params: inconsistent shapes Wx{Wx.shape} Wh{Wh.shape} b{b.shape}")
        self.Wx = Wx
        self.Wh = Wh
        self.b = b
        self.hidden = H
        self.input_dim = Wx.shape[0]

    @classmethod
    def init(cls, rng, input_dim, hidden, dtype=np.float64):
        wx = np.concatenate(
            [glorot_init(rng, (input_dim, hidden), dtype) for _ in range(4)], axis=1)
        wh = np.concatenate(
            [glorot_init(rng, (hidden, hidden), dtype) for _ in range(4)], axis=1)
        b = np.zeros(4 * hidden, dtype=dtype)
        b[hidden:2 * hidden] = 1.0  # forget-gate bias starts open
        return cls(wx, wh, b)

    def _block(self, arr, gate):
        H = self.hidden
        j = GATE_ORDER.index(gate)
        return arr[..., j * H:(j + 1) * H]

    # classic per-gate views (W_c/U_c/b_c address the candidate block)
    W_i = property(lambda self: self._block(self.Wx, "i"))
    W_f = property(lambda self: self._block(self.Wx, "f"))
    W_c = property(lambda self: self._block(self.Wx, "g"))
    W_o = property(lambda self: self._block(self.Wx, "o"))
    U_i = property(lambda self: self._block(self.Wh, "i"))
    U_f = property(lambda self: self._block(self.Wh, "f"))
    U_c = property(lambda self: self._block(self.Wh, "g"))
    U_o = property(lambda self: self._block(self.Wh, "o"))
    b_i = property(lambda self: self._block(self.b, "i"))
    b_f = property(lambda self: self._block(self.b, "f"))
    b_c = property(lambda self: self._block(self.b, "g"))
    b_o = property(lambda self: self._block(self.b, "o"))


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray


@dataclass
class BiLstmParams:
    forward: LstmParams
    backward: LstmParams


def lstm_step(p, x_t, prev):
    """One cell update: gates from x_t and prev.h, then c and h."""
    x_t = np.asarray(x_t)
    if x_t.shape != (p.input_dim,):
        raise DimensionError(f"lstm_step: input shape {x_t.shape}, expected ({p.input_dim},)")
    if prev.h.shape != (p.hidden,) or prev.c.shape != (p.hidden,):
        raise DimensionError(
            f"lstm_step: state shapes {prev.h.shape}/{prev.c.shape}, expected ({p.hidden},)")
    z = x_t[None, :] @ p.Wx + prev.h[None, :] @ p.Wh + p.b
    h, c, _ = kernels.lstm_cell_forward(z, prev.c[None, :])
    return LstmState(h[0], c[0])


def _lstm_run(p, X, collect=False):
    """Run the cell over X (B, T, D) from zero state.

    Returns (Hs, steps) with Hs (B, T, H); steps holds per-step
    (h_prev, c_prev, gates, c) when collect is set.
    """
    B, T, D = X.shape
    H = p.hidden
    Zx = (X.reshape(B * T, D) @ p.Wx).reshape(B, T, 4 * H)
    h = np.zeros((B, H), dtype=X.dtype)
    c = np.zeros((B, H), dtype=X.dtype)
    Hs = np.empty((B, T, H), dtype=X.dtype)
    steps = [] if collect else None
    for t in range(T):
        z = Zx[:, t] + h @ p.Wh + p.b
        h_prev, c_prev = h, c
        h, c, gates = kernels.lstm_cell_forward(z, c_prev)
        Hs[:, t] = h
        if collect:
            steps.append((h_prev, c_prev, gates, c))
    return Hs, steps


def _lstm_backward(p, X, steps, dHs, dh_final):
    """BPTT over one direction. dHs covers per-step grads (may be None);
    dh_final lands on the last step only."""
    B, T, D = X.shape
    H = p.hidden
    dZ = np.empty((B, T, 4 * H), dtype=X.dtype)
    dh = np.zeros((B, H), dtype=X.dtype)
    dc = np.zeros((B, H), dtype=X.dtype)
    for t in reversed(range(T)):
        if dHs is not None:
            dh = dh + dHs[:, t]
        if dh_final is not None and t == T - 1:
            dh = dh + dh_final
        h_prev, c_prev, gates, c = steps[t]
        dz, dc = kernels.lstm_cell_backward(dh, dc, gates, c_prev, c)
        dZ[:, t] = dz
        dh = dz @ p.Wh.T
    dZf = dZ.reshape(B * T, 4 * H)
    dX = (dZf @ p.Wx.T).reshape(B, T, D)
    grads = {
        "Wx": X.reshape(B * T, D).T @ dZf,
        "Wh": np.stack([s[0] for s in steps], axis=1).reshape(B * T, H).T @ dZf,
        "b": dZf.sum(axis=0),
    }
    return dX, grads


def lstm_forward(p, seq, return_sequences=False):
    seq = np.asarray(seq)
    if seq.ndim != 2 or seq.shape[0] == 0:
        raise DimensionError(f"lstm_forward: need a (T, {p.input_dim}) sequence with T >= 1, "
                             f"got shape {seq.shape}")
    if seq.shape[1] != p.input_dim:
        raise DimensionError(
            f"lstm_forward: feature dim {seq.shape[1]}, expected {p.input_dim}")
    Hs, _ = _lstm_run(p, seq[None], collect=False)
    return Hs[0] if return_sequences else Hs[0, -1]


def bilstm_forward(p, seq, return_sequences=False):
    """Forward pass over seq and its reversal, hidden states concatenated."""
    fw = lstm_forward(p.forward, seq, return_sequences)
    bw = lstm_forward(p.backward, np.ascontiguousarray(np.asarray(seq)[::-1]),
                      return_sequences)
    if return_sequences:
        bw = bw[::-1]
    return np.concatenate([fw, bw], axis=-1)


class RecurrentLayer:
    """LSTM or BiLSTM over (B, T, D) batches, zero initial state."""

    def __init__(self, cell_type, input_dim, units, return_sequences, rng, dtype=np.float64):
        if cell_type not in ("LSTM", "BiLSTM"):
            raise ValueError(f"unknown cell type {cell_type!r}")
        self.cell_type = cell_type
        self.return_sequences = return_sequences
        self.units = units
        self.fw = LstmParams.init(rng, input_dim, units, dtype)
        self.bw = LstmParams.init(rng, input_dim, units, dtype) if cell_type == "BiLSTM" else None
        self.width = 2 * units if self.bw is not None else units

    def params(self):
        if self.bw is None:
            return {"Wx": self.fw.Wx, "Wh": self.fw.Wh, "b": self.fw.b}
        return {"fw.Wx": self.fw.Wx, "fw.Wh": self.fw.Wh, "fw.b": self.fw.b,
                "bw.Wx": self.bw.Wx, "bw.Wh": self.bw.Wh, "bw.b": self.bw.b}

    def forward(self, X, train=False, rng=None):
        B, T, D = X.shape
        Hf, steps_f = _lstm_run(self.fw, X, collect=True)
        if self.bw is None:
            Y = Hf if self.return_sequences else Hf[:, -1]
            return Y, (X, steps_f, None, None)
        Xr = np.ascontiguousarray(X[:, ::-1])
        Hb, steps_b = _lstm_run(self.bw, Xr, collect=True)
        if self.return_sequences:
            Y = np.concatenate([Hf, Hb[:, ::-1]], axis=-1)
        else:
            Y = np.concatenate([Hf[:, -1], Hb[:, -1]], axis=-1)
        return Y, (X, steps_f, Xr, steps_b)

    def backward(self, dY, cache):
        X, steps_f, Xr, steps_b = cache
        H = self.units
        if self.bw is None:
            if self.return_sequences:
                dX, g = _lstm_backward(self.fw, X, steps_f, dY, None)
            else:
                dX, g = _lstm_backward(self.fw, X, steps_f, None, dY)
            return dX, g
        if self.return_sequences:
            dHf = np.ascontiguousarray(dY[..., :H])
            dHb = np.ascontiguousarray(dY[:, ::-1, H:])
            dXf, gf = _lstm_backward(self.fw, X, steps_f, dHf, None)
            dXb, gb = _lstm_backward(self.bw, Xr, steps_b, dHb, None)
        else:
            dXf, gf = _lstm_backward(self.fw, X, steps_f, None, dY[:, :H])
            dXb, gb = _lstm_backward(self.bw, Xr, steps_b, None, dY[:, H:])
        dX = dXf + dXb[:, ::-1]
        grads = {f"fw.{k}": v for k, v in gf.items()}
        grads.update({f"bw.{k}": v for k, v in gb.items()})
        return dX, grads


class Conv1dParams:
    """Valid 1-D convolution, stride 1, activation applied to W.x_window + b.

    kernel: (k, C_in, F); bias: (F,).
    """

    def __init__(self, kernel, bias, activation="relu"):
        if kernel.ndim != 3 or bias.shape != (kernel.shape[2],):
            raise DimensionError(f"conv1d: kernel {kernel.shape} / bias {bias.shape}")
        if activation not in ("relu", "linear"):
            raise ValueError(f"conv1d: unsupported activation {activation!r}")
        self.kernel = kernel
        self.bias = bias
        self.activation = activation

    @property
    def k(self):
        return self.kernel.shape[0]

    @property
    def F(self):
        return self.kernel.shape[2]

    @classmethod
    def init(cls, rng, k, c_in, filters, dtype=np.float64, activation="relu"):
        return cls(glorot_init(rng, (k, c_in, filters), dtype),
                   np.zeros(filters, dtype=dtype), activation)

    def params(self):
        return {"kernel": self.kernel, "bias": self.bias}

    def forward(self, x, train=False, rng=None):
        B, L, C = x.shape
        k, F = self.k, self.F
        if C != self.kernel.shape[1]:
            raise DimensionError(f"conv1d: {C} input channels, kernel expects "
                                 f"{self.kernel.shape[1]}")
        if L < k:
            raise DimensionError(f"conv1d: input length {L} shorter than kernel size {k}")
        L2 = L - k + 1
        s0, s1, s2 = x.strides
        windows = np.lib.stride_tricks.as_strided(
            x, shape=(B, L2, k, C), strides=(s0, s1, s1, s2), writeable=False)
        cols = np.ascontiguousarray(windows).reshape(B * L2, k * C)
        pre = (cols @ self.kernel.reshape(k * C, F)).reshape(B, L2, F)
        if self.activation == "relu":
            y = kernels.add_bias_relu(pre, self.bias)
        else:
            y = pre + self.bias
        return y, (x.shape, cols, y)

    def backward(self, dY, cache):
        (B, L, C), cols, y = cache
        k, F = self.k, self.F
        L2 = L - k + 1
        if self.activation == "relu":
            dpre = kernels.relu_backward(np.ascontiguousarray(dY), y)
        else:
            dpre = dY
        dpf = dpre.reshape(B * L2, F)
        dW = (cols.T @ dpf).reshape(k, C, F)
        db = dpf.sum(axis=0)
        dcols = (dpf @ self.kernel.reshape(k * C, F).T).reshape(B, L2, k, C)
        dx = np.zeros((B, L, C), dtype=dY.dtype)
        for j in range(k):
            dx[:, j:j + L2, :] += dcols[:, :, j, :]
        return dx, {"kernel": dW, "bias": db}


@dataclass
class PoolSpec:
    f: int = 2
    s: int = 2


class MaxPool1d:
    """Per-channel max pooling; output length floor((L - f)/s) + 1."""

    def __init__(self, spec):
        if spec.f < 1 or spec.s < 1:
            raise ValueError(f"maxpool: window {spec.f} / stride {spec.s} must be >= 1")
        self.spec = spec

    def params(self):
        return {}

    def forward(self, x, train=False, rng=None):
        B, L, C = x.shape
        if L < self.spec.f:
            raise DimensionError(f"maxpool: input length {L} shorter than window {self.spec.f}")
        y, idx = kernels.maxpool_forward(np.ascontiguousarray(x), self.spec.f, self.spec.s)
        return y, (L, idx)

    def backward(self, dY, cache):
        L, idx = cache
        dx = kernels.maxpool_backward(np.ascontiguousarray(dY), idx, L)
        return dx, {}


class DenseSoftmax:
    """Affine map followed by softmax; probabilities come back in float64."""

    def __init__(self, W, b):
        if W.ndim != 2 or b.shape != (W.shape[1],):
            raise DimensionError(f"dense: W {W.shape} / b {b.shape}")
        self.W = W
        self.b = b

    @classmethod
    def init(cls, rng, in_dim, out_dim, dtype=np.float64):
        return cls(glorot_init(rng, (in_dim, out_dim), dtype), np.zeros(out_dim, dtype=dtype))

    def params(self):
        return {"W": self.W, "b": self.b}

    def forward(self, x, train=False, rng=None):
        if x.shape[1] != self.W.shape[0]:
            raise DimensionError(f"dense: input width {x.shape[1]}, expected {self.W.shape[0]}")
        probs = softmax(x @ self.W + self.b)
        return probs, (x, probs)

    def backward(self, dP, cache):
        x, probs = cache
        # softmax Jacobian: dz = p * (dp - sum(p * dp))
        inner = (probs * dP).sum(axis=1, keepdims=True)
        dz = (probs * (dP - inner)).astype(x.dtype)
        dW = x.T @ dz
        db = dz.sum(axis=0)
        dx = dz @ self.W.T
        return dx, {"W": dW, "b": db}


@dataclass
class DropoutSpec:
    rate: float
    mode: str = "train"


class Dropout:
    """Inverted dropout; identity in eval mode or at rate 0."""

    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate {rate} outside [0, 1)")
        self.rate = rate

    def params(self):
        return {}

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            return x, None
        keep = 1.0 - self.rate
        mask = (rng.random(x.shape) < keep).astype(x.dtype) / x.dtype.type(keep)
        return x * mask, mask

    def backward(self, dY, cache):
        if cache is None:
            return dY, {}
        return dY * cache, {}


class Flatten:
    def params(self):
        return {}

    def forward(self, x, train=False, rng=None):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dY, cache):
        return dY.reshape(cache), {}


# ---- single-sample wrappers -------------------------------------------------

def conv1d_forward(p, x):
    x = np.asarray(x)
    if x.ndim != 2:
        raise DimensionError(f"conv1d_forward: need (L, C_in), got shape {x.shape}")
    y, _ = p.forward(x[None])
    return y[0]


def maxpool1d(spec, x):
    x = np.asarray(x)
    if x.ndim != 2:
        raise DimensionError(f"maxpool1d: need (L, C), got shape {x.shape}")
    y, _ = MaxPool1d(spec).forward(x[None])
    return y[0]


def dense_forward(p, x):
    x = np.asarray(x)
    if x.ndim != 1:
        raise DimensionError(f"dense_forward: need a vector, got shape {x.shape}")
    y, _ = p.forward(x[None])
    return y[0]


def dropout(spec, rng, x):
    x = np.asarray(x)
    layer = Dropout(spec.rate)
    y, _ = layer.forward(x, train=(spec.mode == "train"), rng=rng)
    return y


def flatten(x):
    return np.asarray(x).reshape(-1)


def layer_backward(layer, cached_forward, upstream_grad):
    """Generic backward dispatch: (input_grad, param_grads)."""
    return layer.backward(upstream_grad, cached_forward)
