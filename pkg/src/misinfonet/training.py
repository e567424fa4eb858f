"""Training protocol: loss, optimizer, splits, early stopping, rounds, ablations.

The protocol trains with mini-batches for at most max_epochs epochs, watches
mean validation loss with a fixed patience, restores the best-epoch weights,
and repeats over several independently seeded rounds, reporting mean and
sample standard deviation per metric.
"""

import dataclasses
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .data import EmbeddingDataset
from .metrics import MetricsReport, confusion, metrics_from_confusion
from .model import BranchConfig, ModelConfig, build_model
from .tensor import NumericError, seeded_rng

LOSS_CLIP = 1e-12


@dataclass
class TrainConfig:
    max_epochs: int = 10
    patience: int = 5
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    rounds: int = 10

    def __post_init__(self):
        if self.patience > self.max_epochs:
            raise ValueError(f"patience {self.patience} > max_epochs {self.max_epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size {self.batch_size} < 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer {self.optimizer!r} not in ('adam', 'sgd')")


@dataclass
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def cross_entropy(probs, y):
    """Negative log probability of the true class, clipped at 1e-12."""
    probs = np.asarray(probs)
    y = int(y)
    if not 0 <= y < probs.shape[-1]:
        raise ValueError(f"class index {y} out of range for {probs.shape[-1]} classes")
    return float(-np.log(max(float(probs[y]), LOSS_CLIP)))


def batch_cross_entropy(probs, ys):
    """Mean clipped cross-entropy of a (B, n) probability batch."""
    p = np.clip(probs[np.arange(len(ys)), ys], LOSS_CLIP, None)
    return float(-np.log(p).mean())


class AdamState:
    """Bias-corrected Adam over a fixed list of parameter arrays."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads, lr):
        if len(params) != len(self.m):
            raise ValueError(f"{len(params)} params, state built for {len(self.m)}")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError(f"param shape {p.shape} vs grad shape {g.shape}")
            g = g.astype(p.dtype, copy=False)
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= (lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(p.dtype)


def adam_step(state, params, grads, lr):
    """Apply one Adam update in place; returns (params, state) for convenience."""
    state.step(params, grads, lr)
    return params, state


class SgdState:
    def __init__(self, params):
        pass

    def step(self, params, grads, lr):
        for p, g in zip(params, grads):
            p -= (lr * g).astype(p.dtype)


def _apportion(n, ratios):
    """Largest-remainder split of n items: each part within 1 of ratio*n."""
    raw = [r * n for r in ratios]
    parts = [int(x) for x in raw]
    rem = n - sum(parts)
    order = sorted(range(len(ratios)), key=lambda i: (parts[i] - raw[i], i))
    for i in order[:rem]:
        parts[i] += 1
    return parts


def stratified_split(labels, ratios=(0.64, 0.16, 0.20), rng=None):
    """Per-class shuffle then proportional slicing into train/val/test."""
    if rng is None:
        rng = seeded_rng(0)
    if abs(sum(ratios) - 1.0) > 1e-9 or len(ratios) != 3:
        raise ValueError(f"ratios must be 3 values summing to 1, got {ratios}")
    labels = np.asarray(labels)
    buckets = ([], [], [])
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < 3:
            raise ValueError(f"class {c} has {len(idx)} samples; need at least 3")
        idx = rng.permutation(idx)
        n_tr, n_va, _ = _apportion(len(idx), ratios)
        buckets[0].append(idx[:n_tr])
        buckets[1].append(idx[n_tr:n_tr + n_va])
        buckets[2].append(idx[n_tr + n_va:])
    return SplitIndices(train=np.concatenate(buckets[0]),
                        val=np.concatenate(buckets[1]),
                        test=np.concatenate(buckets[2]))


class EarlyStopping:
    """Patience on strict validation-loss improvement."""

    def __init__(self, patience):
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch, val_loss):
        """Record one epoch; True means stop now."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


def _eval_loss(model, xb, xr, ys, batch_size):
    total = 0.0
    for lo in range(0, len(ys), batch_size):
        hi = min(lo + batch_size, len(ys))
        probs, _ = model.forward_batch(xb[lo:hi], xr[lo:hi])
        p = np.clip(probs[np.arange(hi - lo), ys[lo:hi]], LOSS_CLIP, None)
        total += float(-np.log(p).sum())
    return total / len(ys)


def evaluate_model(model, data, indices, batch_size=256):
    """(mean loss, MetricsReport) on the given record indices."""
    xb = data.bart[indices]
    xr = data.roberta[indices]
    ys = data.labels[indices]
    loss = _eval_loss(model, xb, xr, ys, batch_size)
    preds = model.predict_batch(xb, xr, batch_size)
    cm = confusion(ys, preds, len(data.class_names))
    return loss, metrics_from_confusion(cm)


def train(cfg, model_cfg, data, split, dtype=np.float32, log=None):
    """Run the training protocol on one split.

    Returns (model, history); history rows are dicts with epoch, train_loss,
    val_loss, seconds. The returned model carries the weights of the epoch
    with the lowest validation loss.
    """
    if len(split.train) == 0 or len(split.val) == 0:
        raise ValueError(f"empty split: train {len(split.train)}, val {len(split.val)}")
    rng = seeded_rng(cfg.seed)
    model = build_model(model_cfg, rng, dtype)
    params = [arr for _, arr in model.weights()]
    opt = AdamState(params) if cfg.optimizer == "adam" else SgdState(params)
    names = [n for n, _ in model.weights()]

    xb = np.ascontiguousarray(data.bart[split.train], dtype=dtype)
    xr = np.ascontiguousarray(data.roberta[split.train], dtype=dtype)
    ys = data.labels[split.train]
    vb = np.ascontiguousarray(data.bart[split.val], dtype=dtype)
    vr = np.ascontiguousarray(data.roberta[split.val], dtype=dtype)
    vy = data.labels[split.val]

    stopper = EarlyStopping(cfg.patience)
    best_weights = None
    history = []
    n = len(ys)
    for epoch in range(1, cfg.max_epochs + 1):
        t0 = time.perf_counter()
        perm = rng.permutation(n)
        loss_sum = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = perm[lo:lo + cfg.batch_size]
            bb, rr, yy = xb[idx], xr[idx], ys[idx]
            probs, cache = model.forward_batch(bb, rr, train=True, rng=rng)
            p_true = np.clip(probs[np.arange(len(yy)), yy], LOSS_CLIP, None)
            batch_loss = float(-np.log(p_true).mean())
            if not np.isfinite(batch_loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            loss_sum += batch_loss * len(yy)
            dprobs = np.zeros_like(probs)
            dprobs[np.arange(len(yy)), yy] = -1.0 / (len(yy) * p_true)
            grads = model.backward_batch(dprobs, cache)
            opt.step(params, [grads[k] for k in names], cfg.learning_rate)
        val_loss = _eval_loss(model, vb, vr, vy, cfg.batch_size)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")
        row = {"epoch": epoch, "train_loss": loss_sum / n, "val_loss": val_loss,
               "seconds": time.perf_counter() - t0}
        history.append(row)
        if log is not None:
            log(f"epoch {epoch}: train_loss {row['train_loss']:.4f} "
                f"val_loss {val_loss:.4f} ({row['seconds']:.1f}s)")
        improved = val_loss < stopper.best_loss
        stop = stopper.update(epoch, val_loss)
        if improved:
            best_weights = [arr.copy() for arr in params]
        if stop:
            break
    if best_weights is not None:
        for arr, best in zip(params, best_weights):
            arr[...] = best
    return model, history


def history_to_csv(history):
    buf = io.StringIO()
    buf.write("epoch,train_loss,val_loss,seconds\n")
    for row in history:
        buf.write(f"{row['epoch']},{row['train_loss']:.6f},{row['val_loss']:.6f},"
                  f"{row['seconds']:.3f}\n")
    return buf.getvalue()


METRIC_NAMES = ("accuracy", "precision_micro", "precision_macro",
                "recall_micro", "recall_macro")


@dataclass
class RoundsReport:
    rounds: int
    per_round: list                      # one metrics dict per round
    means: dict = field(default_factory=dict)
    stds: dict = field(default_factory=dict)
    train_seconds_mean: float = 0.0
    train_seconds_std: float = 0.0
    prep_seconds: float = 0.0

    def __post_init__(self):
        if not self.means:
            for name in METRIC_NAMES + ("train_seconds",):
                vals = np.array([r[name] for r in self.per_round], dtype=np.float64)
                mean = float(vals.mean())
                std = float(vals.std(ddof=1)) if self.rounds > 1 else 0.0
                if name == "train_seconds":
                    self.train_seconds_mean, self.train_seconds_std = mean, std
                else:
                    self.means[name] = mean
                    self.stds[name] = std


def run_rounds(cfg, model_cfg, data, prep_seconds=0.0, dtype=np.float32, log=None):
    """Repeat split/train/test cfg.rounds times with derived seeds."""
    if cfg.rounds < 1:
        raise ValueError(f"rounds {cfg.rounds} < 1")
    per_round = []
    for r in range(cfg.rounds):
        seed_r = cfg.seed + r
        rng = seeded_rng(seed_r)
        split = stratified_split(data.labels, rng=rng)
        cfg_r = dataclasses.replace(cfg, seed=seed_r)
        t0 = time.perf_counter()
        model, history = train(cfg_r, model_cfg, data, split, dtype=dtype)
        seconds = time.perf_counter() - t0
        _, rep = evaluate_model(model, data, split.test, cfg.batch_size)
        row = {name: getattr(rep, name) for name in METRIC_NAMES}
        row["train_seconds"] = seconds
        row["epochs"] = len(history)
        per_round.append(row)
        if log is not None:
            log(f"round {r + 1}/{cfg.rounds}: accuracy {row['accuracy']:.4f} "
                f"({seconds:.1f}s, {row['epochs']} epochs)")
    return RoundsReport(rounds=cfg.rounds, per_round=per_round,
                        prep_seconds=prep_seconds)


def ablation_grid():
    """All 162 configs: units-major, then branch depths, cell type innermost."""
    out = []
    for units in (32, 64, 128):
        for bart_d in (1, 2, 3):
            for rob_d in (1, 2, 3):
                for ens_d in (1, 2, 3):
                    for cell in ("LSTM", "BiLSTM"):
                        width = 2 * units if cell == "BiLSTM" else units
                        kernel = width // 2
                        mk = lambda depth: BranchConfig(
                            cell_type=cell, depth=depth, units_per_direction=units,
                            conv_kernel=kernel)
                        out.append(ModelConfig(bart_branch=mk(bart_d),
                                               roberta_branch=mk(rob_d),
                                               ensemble_branch=mk(ens_d)))
    return out


def smoke_grid():
    """Six quick configs: both cell types at the depth-combo extremes, 32 units."""
    out = []
    for bart_d, rob_d, ens_d in ((1, 1, 1), (2, 1, 1), (3, 3, 3)):
        for cell in ("LSTM", "BiLSTM"):
            width = 64 if cell == "BiLSTM" else 32
            kernel = width // 2
            mk = lambda depth: BranchConfig(cell_type=cell, depth=depth,
                                            units_per_direction=32, conv_kernel=kernel)
            out.append(ModelConfig(bart_branch=mk(bart_d), roberta_branch=mk(rob_d),
                                   ensemble_branch=mk(ens_d)))
    return out


def run_ablation(configs, data, train_cfg, dtype=np.float32, log=None):
    """Train/evaluate every config; returns one result row per config."""
    rows = []
    for i, mc in enumerate(configs):
        mc = dataclasses.replace(mc, bart_dim=data.bart.shape[1],
                                 roberta_dim=data.roberta.shape[1],
                                 n_classes=len(data.class_names))
        report = run_rounds(train_cfg, mc, data, dtype=dtype)
        row = {
            "units": mc.bart_branch.units_per_direction,
            "cell": mc.bart_branch.cell_type,
            "bart_depth": mc.bart_branch.depth,
            "roberta_depth": mc.roberta_branch.depth,
            "ensemble_depth": mc.ensemble_branch.depth,
            "accuracy_mean": report.means["accuracy"],
            "accuracy_std": report.stds["accuracy"],
            "train_seconds": report.train_seconds_mean,
        }
        rows.append(row)
        if log is not None:
            log(f"[{i + 1}/{len(configs)}] {row['cell']} u{row['units']} "
                f"d{row['bart_depth']}/{row['roberta_depth']}/{row['ensemble_depth']}: "
                f"accuracy {row['accuracy_mean']:.4f}")
    return rows
