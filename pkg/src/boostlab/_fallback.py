"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np


def ksum(x):
    return math.fsum(x)


def capped_sum(x, c):
    return math.fsum(np.minimum(1.0, c * np.asarray(x)))


def kl_sum(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    terms = b - a
    pos = a > 0
    terms[pos] += a[pos] * np.log(a[pos] / b[pos])
    return math.fsum(terms)


def re_sum(p, q):
    p = np.asarray(p)
    q = np.asarray(q)
    pos = p > 0
    return math.fsum(p[pos] * np.log(p[pos] / q[pos]))


def implicit_eval(loss, caps, n_events, base, decay, idx):
    idx = np.asarray(idx, dtype=np.int64)
    out = np.full(idx.shape[0], base, dtype=np.float64)
    for s in range(n_events):
        out[loss[s, idx] != 0] *= decay
        c = caps[s]
        if c > 0.0:
            np.minimum(1.0, c * out, out=out)
    return out
