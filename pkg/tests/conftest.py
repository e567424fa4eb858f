"""Shared gradient-check helpers for the test suite."""

import numpy as np


def fd_inplace(loss_fn, arr, eps=1e-4):
    """Central-difference gradient of loss_fn w.r.t. arr, perturbing it in place.

    arr must be float64; loss_fn takes no arguments and reads arr.
    """
    assert arr.dtype == np.float64
    g = np.zeros_like(arr)
    flat = arr.ravel()
    gf = g.ravel()
    assert flat.base is not None, "need a view into the parameter array"
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = loss_fn()
        flat[i] = orig - eps
        fm = loss_fn()
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * eps)
    return g


def max_rel_err(a, b, floor=1e-6):
    """Max elementwise |a-b| / max(|a|, |b|, floor)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
