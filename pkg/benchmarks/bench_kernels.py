"""Compare the numba kernel backend against the pure-numpy fallback.

Runs each hot kernel at default-model shapes, then times a full training
step (forward, backward, optimizer update) under both backends. The
backends share BLAS for matrix products, so the gap shown here is the
pointwise/pooling work only.

Usage: python3 benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import time

import numpy as np

import misinfonet.kernels as kernels
from misinfonet.kernels import _numpy as knp

try:
    from misinfonet.kernels import _numba as knb
except ImportError:
    knb = None

KERNEL_NAMES = ("lstm_cell_forward", "lstm_cell_backward", "maxpool_forward",
                "maxpool_backward", "add_bias_relu", "relu_backward")


def best_ms(fn, min_time=0.2):
    """Median time per call in ms, auto-calibrated repeat count."""
    fn()  # warmup (numba compiles here)
    number, elapsed = 1, 0.0
    while True:
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        elapsed = time.perf_counter() - t0
        if elapsed >= min_time or number >= 1 << 16:
            break
        number *= 2
    runs = []
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        runs.append((time.perf_counter() - t0) / number)
    return float(np.median(runs)) * 1e3


def micro_cases(rng):
    """(name, args-builder) pairs at shapes the default model actually uses."""
    B, H = 64, 128
    z = rng.standard_normal((B, 4 * H)).astype(np.float32)
    c_prev = rng.standard_normal((B, H)).astype(np.float32)
    _, c, gates = knp.lstm_cell_forward(z, c_prev)
    dh = rng.standard_normal((B, H)).astype(np.float32)
    dc = rng.standard_normal((B, H)).astype(np.float32)

    x = rng.standard_normal((B, 129, 64)).astype(np.float32)
    y, idx = knp.maxpool_forward(x, 2, 2)
    dy = rng.standard_normal(y.shape).astype(np.float32)
    bias = rng.standard_normal(64).astype(np.float32)
    relu_y = knp.add_bias_relu(x, bias)

    return [
        ("lstm_cell_forward", lambda m: m.lstm_cell_forward(z, c_prev)),
        ("lstm_cell_backward", lambda m: m.lstm_cell_backward(dh, dc, gates, c_prev, c)),
        ("maxpool_forward", lambda m: m.maxpool_forward(x, 2, 2)),
        ("maxpool_backward", lambda m: m.maxpool_backward(dy, idx, x.shape[1])),
        ("add_bias_relu", lambda m: m.add_bias_relu(x, bias)),
        ("relu_backward", lambda m: m.relu_backward(dy[:, :64, :], relu_y[:, :64, :])),
    ]


def bench_micro():
    rng = np.random.default_rng(0)
    cases = micro_cases(rng)
    print(f"{'kernel':<22} {'numpy ms':>10} {'numba ms':>10} {'speedup':>9}")
    for name, call in cases:
        t_np = best_ms(lambda: call(knp))
        if knb is None:
            print(f"{name:<22} {t_np:>10.4f} {'n/a':>10} {'n/a':>9}")
            continue
        t_nb = best_ms(lambda: call(knb))
        print(f"{name:<22} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.2f}x")


def use_backend(mod):
    for name in KERNEL_NAMES:
        setattr(kernels, name, getattr(mod, name))


def bench_train_step(steps):
    from misinfonet.model import ModelConfig, build_model
    from misinfonet.tensor import seeded_rng
    from misinfonet.training import AdamState

    def one_backend(mod, label):
        use_backend(mod)
        rng = seeded_rng(0)
        model = build_model(ModelConfig(), rng, np.float32)
        params = [arr for _, arr in model.weights()]
        names = [n for n, _ in model.weights()]
        opt = AdamState(params)
        B = 64
        xb = rng.standard_normal((B, 1024)).astype(np.float32)
        xr = rng.standard_normal((B, 768)).astype(np.float32)
        ys = rng.integers(0, 10, size=B)

        def step():
            probs, cache = model.forward_batch(xb, xr, train=True, rng=rng)
            dprobs = np.zeros_like(probs)
            p = np.clip(probs[np.arange(B), ys], 1e-12, None)
            dprobs[np.arange(B), ys] = -1.0 / (B * p)
            grads = model.backward_batch(dprobs, cache)
            opt.step(params, [grads[k] for k in names], 1e-3)

        step()  # warmup / jit
        times = []
        for _ in range(steps):
            t0 = time.perf_counter()
            step()
            times.append(time.perf_counter() - t0)
        med = float(np.median(times)) * 1e3
        print(f"  {label:<8} {med:>10.1f} ms/step (batch {B})")
        return med

    print("\nfull training step, default architecture:")
    t_np = one_backend(knp, "numpy")
    if knb is not None:
        t_nb = one_backend(knb, "numba")
        print(f"  step speedup: {t_np / t_nb:.2f}x")
    use_backend(knp if kernels.BACKEND == "numpy" else knb)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=5,
                    help="timed training steps per backend (default 5)")
    args = ap.parse_args()

    print(f"active backend at import: {kernels.BACKEND}")
    if knb is None:
        print("numba backend unavailable; timing the numpy fallback only")
    bench_micro()
    bench_train_step(args.steps)


if __name__ == "__main__":
    main()
