"""Hot pointwise/pooling kernels with two interchangeable backends.

The numba backend is used when importable; set MISINFONET_NO_NUMBA=1 to force
the pure-numpy fallback. Matrix products are not here on purpose: they go
through BLAS in both modes. BACKEND names the backend actually loaded.
"""

import os

from . import _numpy

_want_numba = os.environ.get("MISINFONET_NO_NUMBA", "") not in ("1", "true", "yes")

if _want_numba:
    try:
        from . import _numba as _impl
        BACKEND = "numba"
    except ImportError:
        _impl = _numpy
        BACKEND = "numpy"
else:
    _impl = _numpy
    BACKEND = "numpy"

lstm_cell_forward = _impl.lstm_cell_forward
lstm_cell_backward = _impl.lstm_cell_backward
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward
add_bias_relu = _impl.add_bias_relu
relu_backward = _impl.relu_backward

__all__ = [
    "BACKEND",
    "lstm_cell_forward",
    "lstm_cell_backward",
    "maxpool_forward",
    "maxpool_backward",
    "add_bias_relu",
    "relu_backward",
]
