# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled linear recursion kernel.

Runs out[:, m+1] = step @ out[:, m] + noise_map @ shocks[m] for m = 0..n-1.
Both the exact one-step sampler and the Euler scheme reduce to this form.
"""

import numpy as np


def ar1_recursion(double[:, ::1] step, double[:, ::1] noise_map,
                  double[::1] z0, double[:, ::1] shocks):
    """State recursion; shocks has one row per step, returns (d, n+1)."""
    cdef Py_ssize_t d = step.shape[0]
    cdef Py_ssize_t q = noise_map.shape[1]
    cdef Py_ssize_t n = shocks.shape[0]
    if step.shape[1] != d or noise_map.shape[0] != d or z0.shape[0] != d \
            or shocks.shape[1] != q:
        raise ValueError("inconsistent kernel operand shapes")

    out_arr = np.empty((d, n + 1))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t m, i, j
    cdef double acc

    for i in range(d):
        out[i, 0] = z0[i]
    for m in range(n):
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += step[i, j] * out[j, m]
            for j in range(q):
                acc += noise_map[i, j] * shocks[m, j]
            out[i, m + 1] = acc
    return out_arr
