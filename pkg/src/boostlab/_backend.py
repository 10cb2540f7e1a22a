"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``BOOSTLAB_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("BOOSTLAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def ksum(x):
    return float(_impl.ksum(_f64(x)))


def capped_sum(x, c):
    return float(_impl.capped_sum(_f64(x), float(c)))


def kl_sum(a, b):
    return float(_impl.kl_sum(_f64(a), _f64(b)))


def re_sum(p, q):
    return float(_impl.re_sum(_f64(p), _f64(q)))


def implicit_eval(loss, caps, n_events, base, decay, idx):
    return _impl.implicit_eval(
        np.ascontiguousarray(loss, dtype=np.uint8),
        _f64(caps),
        int(n_events),
        float(base),
        float(decay),
        np.ascontiguousarray(idx, dtype=np.int64),
    )


def available_backends():
    """Map of backend name -> kernel module, for tests and benchmarks."""
    found = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
