"""Dense tensor primitives shared by every layer.

Tensors are plain numpy arrays in row-major order. Gradient-check paths use
float64; training storage may use float32. All functions are pure.
"""

import numpy as np


class DimensionError(ValueError):
    """Shapes incompatible with the requested operation."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value."""


def seeded_rng(seed):
    """Deterministic generator; identical seed gives an identical stream everywhere."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def matmul(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return a @ b


def sigmoid(x):
    # Split by sign so exp never overflows.
    x = np.asarray(x)
    out = np.empty_like(x, dtype=x.dtype if x.dtype.kind == "f" else np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


_ACTIVATIONS = {
    "sigmoid": sigmoid,
    "tanh": np.tanh,
    "relu": lambda x: np.maximum(x, 0),
    "linear": lambda x: np.asarray(x),
}


def activation(x, kind):
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation kind {kind!r}") from None
    return fn(np.asarray(x))


def softmax(x):
    """Softmax over the last axis, stabilized by max subtraction."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 1:
        raise DimensionError(f"softmax: last axis is empty in shape {x.shape}")
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def concat_last(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != b.ndim or a.shape[:-1] != b.shape[:-1]:
        raise DimensionError(f"concat_last: incompatible shapes {a.shape} and {b.shape}")
    return np.concatenate([a, b], axis=-1)


def reshape(x, new_shape):
    x = np.asarray(x)
    new_shape = tuple(int(d) for d in new_shape)
    if int(np.prod(new_shape, dtype=np.int64)) != x.size:
        raise DimensionError(f"reshape: cannot view {x.shape} as {new_shape}")
    return x.reshape(new_shape)


def glorot_init(rng, shape, dtype=np.float64):
    """Uniform init in +-sqrt(6/(fan_in+fan_out)); fans taken from the first two axes."""
    shape = tuple(int(d) for d in shape)
    if len(shape) >= 2:
        fan_in, fan_out = shape[0], shape[1]
    else:
        fan_in = fan_out = shape[0]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def finite_diff_grad(f, x, eps=1e-4):
    """Central-difference gradient of scalar f at x, elementwise.

    Perturbs in float64 regardless of x's dtype; f must be pure.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = float(f(x))
        flat[i] = orig - eps
        fm = float(f(x))
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"finite_diff_grad: non-finite objective at element {i}")
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad


def rel_error(a, b, floor=1e-8):
    """Max elementwise relative error, floored to dodge division by ~0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
