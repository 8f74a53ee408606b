# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Taylor kernels; signature-compatible with ``_kernels_py``."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def mul(double[::1] a, double[::1] b, int[::1] ia, int[::1] ib,
        int[::1] iout, Py_ssize_t n_out):
    out_arr = np.zeros(n_out)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, m = ia.shape[0]
    with nogil:
        for k in range(m):
            out[iout[k]] += a[ia[k]] * b[ib[k]]
    return out_arr


def div(double[::1] a, double[::1] b, int[::1] ic, int[::1] ib,
        long[::1] out_ptr):
    cdef Py_ssize_t n = a.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] c = out_arr
    cdef double b0 = b[0]
    cdef double acc
    cdef Py_ssize_t k, t, lo, hi
    with nogil:
        c[0] = a[0] / b0
        for k in range(1, n):
            lo = out_ptr[k]
            hi = out_ptr[k + 1]
            acc = 0.0
            for t in range(lo, hi):
                acc += b[ib[t]] * c[ic[t]]
            c[k] = (a[k] - acc) / b0
    return out_arr
