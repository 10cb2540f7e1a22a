# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Mirrors boostlab._fallback function for function."""

import numpy as np

from libc.math cimport log, fabs


cdef inline void _neumaier(double x, double* s, double* comp) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        comp[0] += (s[0] - t) + x
    else:
        comp[0] += (x - t) + s[0]
    s[0] = t


def ksum(const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0, comp = 0.0
    with nogil:
        for i in range(n):
            _neumaier(x[i], &s, &comp)
    return s + comp


def capped_sum(const double[::1] x, double c):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double s = 0.0, comp = 0.0, v
    with nogil:
        for i in range(n):
            v = c * x[i]
            if v > 1.0:
                v = 1.0
            _neumaier(v, &s, &comp)
    return s + comp


def kl_sum(const double[::1] a, const double[::1] b):
    # caller guarantees b[i] > 0 wherever a[i] > 0
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double s = 0.0, comp = 0.0, v
    with nogil:
        for i in range(n):
            v = b[i] - a[i]
            if a[i] > 0.0:
                v += a[i] * log(a[i] / b[i])
            _neumaier(v, &s, &comp)
    return s + comp


def re_sum(const double[::1] p, const double[::1] q):
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double s = 0.0, comp = 0.0
    with nogil:
        for i in range(n):
            if p[i] > 0.0:
                _neumaier(p[i] * log(p[i] / q[i]), &s, &comp)
    return s + comp


def implicit_eval(const unsigned char[:, ::1] loss, const double[::1] caps,
                  Py_ssize_t n_events, double base, double decay,
                  const long long[::1] idx):
    cdef Py_ssize_t s, k, n = idx.shape[0]
    cdef double c
    out_arr = np.full(n, base, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for s in range(n_events):
            c = caps[s]
            for k in range(n):
                if loss[s, idx[k]]:
                    out[k] *= decay
                if c > 0.0:
                    if c * out[k] < 1.0:
                        out[k] = c * out[k]
                    else:
                        out[k] = 1.0
    return out_arr
