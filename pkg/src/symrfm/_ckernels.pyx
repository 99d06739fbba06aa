# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel assembly for one-hot pair inputs (see ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

ctypedef cnp.intp_t idx_t


cdef void _gram(const double[:, ::1] M, const idx_t[::1] ra, const idx_t[::1] rb,
                const idx_t[::1] ca, const idx_t[::1] cb, double[:, ::1] out,
                double[::1] row) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t d = M.shape[1]
    cdef idx_t ai, bi
    for i in range(ra.shape[0]):
        ai = ra[i]
        bi = rb[i]
        for k in range(d):
            row[k] = M[ai, k] + M[bi, k]
        for j in range(ca.shape[0]):
            out[i, j] = row[ca[j]] + row[cb[j]]


def pair_gram(const double[:, ::1] M, const idx_t[::1] ra, const idx_t[::1] rb,
              const idx_t[::1] ca, const idx_t[::1] cb):
    out = np.empty((ra.shape[0], ca.shape[0]))
    row = np.empty(M.shape[1])
    cdef double[:, ::1] o = out
    cdef double[::1] r = row
    with nogil:
        _gram(M, ra, rb, ca, cb, o, r)
    return out


def pair_sqnorm(const double[:, ::1] M, const idx_t[::1] a, const idx_t[::1] b):
    out = np.empty(a.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        o[i] = M[a[i], a[i]] + M[b[i], b[i]] + M[a[i], b[i]] + M[b[i], a[i]]
    return out


def pair_gaussian(const double[:, ::1] M, const idx_t[::1] ra, const idx_t[::1] rb,
                  const idx_t[::1] ca, const idx_t[::1] cb, double bandwidth):
    out = np.empty((ra.shape[0], ca.shape[0]))
    row = np.empty(M.shape[1])
    qr_arr = pair_sqnorm(M, ra, rb)
    qc_arr = pair_sqnorm(M, ca, cb)
    cdef double[:, ::1] o = out
    cdef double[::1] r = row
    cdef const double[::1] qr = qr_arr
    cdef const double[::1] qc = qc_arr
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t d = M.shape[1]
    cdef idx_t ai, bi
    cdef double qi
    with nogil:
        for i in range(ra.shape[0]):
            ai = ra[i]
            bi = rb[i]
            qi = qr[i]
            for k in range(d):
                r[k] = M[ai, k] + M[bi, k]
            for j in range(ca.shape[0]):
                # same association order as the numpy path
                o[i, j] = exp((((r[ca[j]] + r[cb[j]]) * 2.0 - qi) - qc[j]) / bandwidth)
    return out


def pair_quadratic(const double[:, ::1] M, const idx_t[::1] ra, const idx_t[::1] rb,
                   const idx_t[::1] ca, const idx_t[::1] cb):
    out = pair_gram(M, ra, rb, ca, cb)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(o.shape[0]):
            for j in range(o.shape[1]):
                o[i, j] = o[i, j] * o[i, j]
    return out
