"""Dual-branch recurrent-convolutional ensemble model.

Two input branches (1024-d and 768-d sentence embeddings) each run a stack of
recurrent layers, a 1-D convolution, max pooling, and a flatten; their outputs
are concatenated and fed through a third branch of the same shape, then a
dense softmax head. A declarative config covers the whole ablation space.
"""

import dataclasses
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .data import (ConsistencyError, MagicError, TrailingDataError,
                   TruncationError, VersionError)
from .layers import (Conv1dParams, DenseSoftmax, Dropout, MaxPool1d, PoolSpec,
                     RecurrentLayer)
from .tensor import DimensionError, seeded_rng

MODEL_MAGIC = b"MRBW"
MODEL_VERSION = 1

CELL_TYPES = ("LSTM", "BiLSTM")


class ConfigError(ValueError):
    """Model configuration violates an invariant."""


@dataclass
class BranchConfig:
    cell_type: str = "BiLSTM"
    depth: int = 1
    units_per_direction: int = 128
    conv_filters: int = 64
    conv_kernel: int = 128
    pool: PoolSpec = field(default_factory=PoolSpec)
    dropout_rate: float = 0.2

    @property
    def recurrent_width(self):
        return 2 * self.units_per_direction if self.cell_type == "BiLSTM" \
            else self.units_per_direction

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["pool"] = {"f": self.pool.f, "s": self.pool.s}
        return d

    @classmethod
    def from_dict(cls, d, where="branch"):
        d = dict(d)
        pool = d.pop("pool", None)
        known = {f.name for f in dataclasses.fields(cls)} - {"pool"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
        cfg = cls(**d)
        if pool is not None:
            cfg.pool = PoolSpec(f=int(pool.get("f", 2)), s=int(pool.get("s", 2)))
        return cfg


def _default_bart():
    return BranchConfig(depth=2)


@dataclass
class ModelConfig:
    bart_branch: BranchConfig = field(default_factory=_default_bart)
    roberta_branch: BranchConfig = field(default_factory=BranchConfig)
    ensemble_branch: BranchConfig = field(default_factory=BranchConfig)
    bart_dim: int = 1024
    roberta_dim: int = 768
    n_classes: int = 10
    sequence_axis: str = "features"  # how embedding vectors become sequences

    def to_dict(self):
        return {
            "bart_branch": self.bart_branch.to_dict(),
            "roberta_branch": self.roberta_branch.to_dict(),
            "ensemble_branch": self.ensemble_branch.to_dict(),
            "bart_dim": self.bart_dim,
            "roberta_dim": self.roberta_dim,
            "n_classes": self.n_classes,
            "sequence_axis": self.sequence_axis,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kwargs = {}
        for name in ("bart_branch", "roberta_branch", "ensemble_branch"):
            if name in d:
                kwargs[name] = BranchConfig.from_dict(d.pop(name), where=name)
        known = {"bart_dim", "roberta_dim", "n_classes", "sequence_axis"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"model config: unknown fields {sorted(unknown)}")
        kwargs.update(d)
        return cls(**kwargs)


def validate_config(cfg, require_pool_fit=False):
    """Collect every violated invariant; empty list means valid.

    With require_pool_fit the pooled length must come out >= 1, which is what
    building weights needs. Without it, configs whose pool window outruns the
    conv output still pass, so their shape arithmetic stays traceable.
    """
    problems = []
    for name in ("bart_branch", "roberta_branch", "ensemble_branch"):
        b = getattr(cfg, name)
        if b.cell_type not in CELL_TYPES:
            problems.append(f"{name}: cell_type {b.cell_type!r} not in {CELL_TYPES}")
            continue
        if not 1 <= b.depth <= 3:
            problems.append(f"{name}: depth {b.depth} outside [1, 3]")
        if b.units_per_direction < 1:
            problems.append(f"{name}: units_per_direction {b.units_per_direction} < 1")
        if b.conv_filters < 1:
            problems.append(f"{name}: conv_filters {b.conv_filters} < 1")
        if b.pool.f < 1 or b.pool.s < 1:
            problems.append(f"{name}: pool window {b.pool.f} / stride {b.pool.s} must be >= 1")
        if not 0.0 <= b.dropout_rate < 1.0:
            problems.append(f"{name}: dropout_rate {b.dropout_rate} outside [0, 1)")
        width = b.recurrent_width
        if b.conv_kernel < 1:
            problems.append(f"{name}: conv_kernel {b.conv_kernel} < 1")
        elif b.conv_kernel > width:
            problems.append(f"{name}: conv kernel {b.conv_kernel} wider than recurrent "
                            f"output width {width}")
        elif require_pool_fit:
            conv_len = width - b.conv_kernel + 1
            if conv_len < b.pool.f:
                problems.append(f"{name}: pool window {b.pool.f} exceeds conv output "
                                f"length {conv_len}")
    if cfg.n_classes < 2:
        problems.append(f"n_classes {cfg.n_classes} < 2")
    if cfg.bart_dim < 1 or cfg.roberta_dim < 1:
        problems.append(f"input dims must be positive, got {cfg.bart_dim}/{cfg.roberta_dim}")
    if cfg.sequence_axis not in ("features", "steps"):
        problems.append(f"sequence_axis {cfg.sequence_axis!r} not in ('features', 'steps')")
    return problems


def _check_config(cfg, require_pool_fit=False):
    problems = validate_config(cfg, require_pool_fit)
    if problems:
        raise ConfigError("; ".join(problems))


def branch_output_width(b):
    conv_len = b.recurrent_width - b.conv_kernel + 1
    pooled = (conv_len - b.pool.f) // b.pool.s + 1
    return pooled * b.conv_filters


class _Branch:
    """Recurrent stack + conv + pool + flatten over one input vector space."""

    def __init__(self, name, bcfg, input_dim, rng, dtype, as_steps=False):
        self.name = name
        self.cfg = bcfg
        self.as_steps = as_steps
        self.input_dim = input_dim
        width = bcfg.recurrent_width
        self.drop = Dropout(bcfg.dropout_rate)
        self.rnns = []
        in_dim = 1 if as_steps else input_dim
        for d in range(bcfg.depth):
            rs = d < bcfg.depth - 1
            self.rnns.append(RecurrentLayer(bcfg.cell_type, in_dim if d == 0 else width,
                                            bcfg.units_per_direction, rs, rng, dtype))
        self.conv = Conv1dParams.init(rng, bcfg.conv_kernel, 1, bcfg.conv_filters, dtype)
        self.pool = MaxPool1d(bcfg.pool)

    def named_params(self):
        out = []
        for i, rnn in enumerate(self.rnns, start=1):
            for k, v in rnn.params().items():
                out.append((f"{self.name}.rnn{i}.{k}", v))
        for k, v in self.conv.params().items():
            out.append((f"{self.name}.conv.{k}", v))
        return out

    def forward(self, x2d, train=False, rng=None):
        seq = x2d[:, :, None] if self.as_steps else x2d[:, None, :]
        rnn_caches = []
        h = seq
        for rnn in self.rnns:
            h, dcache = self.drop.forward(h, train, rng)
            h, rcache = rnn.forward(h)
            rnn_caches.append((dcache, rcache))
        h3 = h[:, :, None]  # (B, width) -> (B, width, 1)
        y, ccache = self.conv.forward(h3)
        yp, pcache = self.pool.forward(y)
        flat = yp.reshape(yp.shape[0], -1)
        return flat, (rnn_caches, ccache, pcache, yp.shape)

    def backward(self, dflat, cache):
        rnn_caches, ccache, pcache, pooled_shape = cache
        grads = {}
        dyp = dflat.reshape(pooled_shape)
        dy, _ = self.pool.backward(dyp, pcache)
        dh3, cgrads = self.conv.backward(dy, ccache)
        for k, v in cgrads.items():
            grads[f"{self.name}.conv.{k}"] = v
        dh = dh3[:, :, 0]
        for i in reversed(range(len(self.rnns))):
            dcache, rcache = rnn_caches[i]
            dh, rgrads = self.rnns[i].backward(dh, rcache)
            for k, v in rgrads.items():
                grads[f"{self.name}.rnn{i + 1}.{k}"] = v
            dh, _ = self.drop.backward(dh, dcache)
        dx2d = dh[:, :, 0] if self.as_steps else dh[:, 0, :]
        return dx2d, grads


class Model:
    """Built weights plus the config that produced them."""

    def __init__(self, cfg, rng, dtype=np.float32):
        _check_config(cfg, require_pool_fit=True)
        self.config = cfg
        self.dtype = np.dtype(dtype)
        as_steps = cfg.sequence_axis == "steps"
        self.bart = _Branch("bart", cfg.bart_branch, cfg.bart_dim, rng, dtype, as_steps)
        self.roberta = _Branch("roberta", cfg.roberta_branch, cfg.roberta_dim, rng, dtype,
                               as_steps)
        concat_width = branch_output_width(cfg.bart_branch) \
            + branch_output_width(cfg.roberta_branch)
        # the ensemble consumes the concatenated vector as a length-1 sequence
        self.ensemble = _Branch("ensemble", cfg.ensemble_branch, concat_width, rng, dtype,
                                as_steps=False)
        ens_width = branch_output_width(cfg.ensemble_branch)
        self.dense = DenseSoftmax.init(rng, ens_width, cfg.n_classes, dtype)

    def weights(self):
        """Ordered (name, array) pairs for every parameter tensor."""
        out = []
        out.extend(self.bart.named_params())
        out.extend(self.roberta.named_params())
        out.extend(self.ensemble.named_params())
        for k, v in self.dense.params().items():
            out.append((f"dense.{k}", v))
        return out

    def num_params(self):
        return sum(int(v.size) for _, v in self.weights())

    def _check_inputs(self, xb, xr):
        if xb.ndim != 2 or xb.shape[1] != self.config.bart_dim:
            raise DimensionError(f"bart input {xb.shape}, expected "
                                 f"(batch, {self.config.bart_dim})")
        if xr.ndim != 2 or xr.shape[1] != self.config.roberta_dim:
            raise DimensionError(f"roberta input {xr.shape}, expected "
                                 f"(batch, {self.config.roberta_dim})")
        if xb.shape[0] != xr.shape[0]:
            raise DimensionError(f"batch sizes disagree: {xb.shape[0]} vs {xr.shape[0]}")

    def forward_batch(self, xb, xr, train=False, rng=None):
        self._check_inputs(xb, xr)
        if train and rng is None:
            raise ValueError("train-mode forward needs an rng for dropout")
        xb = np.ascontiguousarray(xb, dtype=self.dtype)
        xr = np.ascontiguousarray(xr, dtype=self.dtype)
        bflat, bcache = self.bart.forward(xb, train, rng)
        rflat, rcache = self.roberta.forward(xr, train, rng)
        cat = np.concatenate([bflat, rflat], axis=1)
        eflat, ecache = self.ensemble.forward(cat, train, rng)
        probs, dcache = self.dense.forward(eflat)
        return probs, (bcache, rcache, ecache, dcache, bflat.shape[1])

    def backward_batch(self, dprobs, cache):
        bcache, rcache, ecache, dcache, bwidth = cache
        grads = {}
        deflat, dgrads = self.dense.backward(dprobs, dcache)
        for k, v in dgrads.items():
            grads[f"dense.{k}"] = v
        dcat, egrads = self.ensemble.backward(deflat, ecache)
        grads.update(egrads)
        _, bgrads = self.bart.backward(dcat[:, :bwidth], bcache)
        grads.update(bgrads)
        _, rgrads = self.roberta.backward(dcat[:, bwidth:], rcache)
        grads.update(rgrads)
        return grads

    def predict_batch(self, xb, xr, batch_size=256):
        out = np.empty(xb.shape[0], dtype=np.int64)
        for lo in range(0, xb.shape[0], batch_size):
            hi = min(lo + batch_size, xb.shape[0])
            probs, _ = self.forward_batch(xb[lo:hi], xr[lo:hi])
            out[lo:hi] = np.argmax(probs, axis=1)
        return out


def build_model(cfg, rng, dtype=np.float32):
    return Model(cfg, rng, dtype)


def shape_trace(cfg):
    """Per-sample output shape of every stage, in report order."""
    _check_config(cfg)
    as_steps = cfg.sequence_axis == "steps"
    rows = []

    def branch_rows(name, b, input_dim, steps_mode):
        width = b.recurrent_width
        T = input_dim if steps_mode else 1
        rows.append((f"{name}.input", (T, 1) if steps_mode else (1, input_dim)))
        for d in range(1, b.depth + 1):
            shape = (T, width) if d < b.depth else (width,)
            rows.append((f"{name}.rnn{d}", shape))
        conv_len = width - b.conv_kernel + 1
        pooled = (conv_len - b.pool.f) // b.pool.s + 1
        rows.append((f"{name}.reshape", (width, 1)))
        rows.append((f"{name}.conv", (conv_len, b.conv_filters)))
        rows.append((f"{name}.pool", (pooled, b.conv_filters)))
        rows.append((f"{name}.flatten", (pooled * b.conv_filters,)))

    branch_rows("roberta", cfg.roberta_branch, cfg.roberta_dim, as_steps)
    branch_rows("bart", cfg.bart_branch, cfg.bart_dim, as_steps)
    cat = branch_output_width(cfg.bart_branch) + branch_output_width(cfg.roberta_branch)
    rows.append(("concat", (cat,)))
    e = cfg.ensemble_branch
    rows.append(("ensemble.reshape_in", (1, cat)))
    width = e.recurrent_width
    for d in range(1, e.depth + 1):
        shape = (1, width) if d < e.depth else (width,)
        rows.append((f"ensemble.rnn{d}", shape))
    conv_len = width - e.conv_kernel + 1
    pooled = (conv_len - e.pool.f) // e.pool.s + 1
    rows.append(("ensemble.reshape", (width, 1)))
    rows.append(("ensemble.conv", (conv_len, e.conv_filters)))
    rows.append(("ensemble.pool", (pooled, e.conv_filters)))
    rows.append(("ensemble.flatten", (pooled * e.conv_filters,)))
    rows.append(("dense", (cfg.n_classes,)))
    return rows


def forward(model, bart_vec, roberta_vec, mode="eval", rng=None):
    """Single-sample class probabilities. Eval mode is deterministic."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode {mode!r} not in ('train', 'eval')")
    bart_vec = np.asarray(bart_vec)
    roberta_vec = np.asarray(roberta_vec)
    if bart_vec.ndim != 1 or roberta_vec.ndim != 1:
        raise DimensionError(f"forward: need vectors, got {bart_vec.shape} and "
                             f"{roberta_vec.shape}")
    probs, _ = model.forward_batch(bart_vec[None], roberta_vec[None],
                                   train=(mode == "train"), rng=rng)
    return probs[0]


def predict(model, bart_vec, roberta_vec):
    """Argmax class of the eval-mode forward; ties break to the lowest index."""
    return int(np.argmax(forward(model, bart_vec, roberta_vec)))


def save_model(model, path):
    """MRBW container: magic, version, config JSON, then named f32 tensors."""
    cfg_blob = json.dumps(model.config.to_dict(), sort_keys=True).encode("utf-8")
    tensors = model.weights()
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_VERSION))
        fh.write(struct.pack("<I", len(cfg_blob)))
        fh.write(cfg_blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors:
            nb = name.encode("utf-8")
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_model(path):
    """Rebuild a float32 model from an MRBW file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = 0

    def need(k, what):
        nonlocal pos
        if pos + k > len(blob):
            raise TruncationError(f"{path}: truncated reading {what} at byte {pos}")
        out = blob[pos:pos + k]
        pos += k
        return out

    if need(4, "magic") != MODEL_MAGIC:
        raise MagicError(f"{path}: bad magic {blob[:4]!r}, expected {MODEL_MAGIC!r}")
    version = struct.unpack("<I", need(4, "version"))[0]
    if version != MODEL_VERSION:
        raise VersionError(f"{path}: format version {version}, expected {MODEL_VERSION}")
    cfg_len = struct.unpack("<I", need(4, "config length"))[0]
    try:
        cfg = ModelConfig.from_dict(json.loads(need(cfg_len, "config").decode("utf-8")))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ConsistencyError(f"{path}: unreadable config blob ({e})") from None
    count = struct.unpack("<I", need(4, "tensor count"))[0]
    model = Model(cfg, seeded_rng(0), np.float32)
    expected = dict(model.weights())
    if count != len(expected):
        raise ConsistencyError(f"{path}: {count} tensors, config implies {len(expected)}")
    seen = set()
    for _ in range(count):
        nlen = struct.unpack("<I", need(4, "name length"))[0]
        name = need(nlen, "tensor name").decode("utf-8")
        rank = struct.unpack("<I", need(4, "rank"))[0]
        dims = struct.unpack(f"<{rank}I", need(4 * rank, "dims"))
        if name not in expected or name in seen:
            raise ConsistencyError(f"{path}: unexpected tensor {name!r}")
        arr = expected[name]
        if tuple(dims) != arr.shape:
            raise ConsistencyError(f"{path}: tensor {name!r} has dims {dims}, "
                                   f"config implies {arr.shape}")
        payload = need(4 * int(np.prod(dims, dtype=np.int64)), f"payload of {name!r}")
        arr[...] = np.frombuffer(payload, dtype="<f4").reshape(dims)
        seen.add(name)
    if pos != len(blob):
        raise TrailingDataError(f"{path}: {len(blob) - pos} trailing bytes")
    return model
