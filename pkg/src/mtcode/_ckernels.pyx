# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernels. Semantics mirror mtcode._fallback exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


def gf2_syndrome_table(cols, int nbits):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] c = np.ascontiguousarray(cols, dtype=np.uint64)
    cdef int64_t size = (<int64_t>1) << nbits
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.zeros(size, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef uint64_t[::1] cv = c
    cdef int64_t i, half
    cdef uint64_t cb
    cdef int b
    with nogil:
        for b in range(nbits):
            half = (<int64_t>1) << b
            cb = cv[b]
            for i in range(half):
                o[half + i] = o[i] ^ cb
    return out


def segment_max(keys, values, int64_t nkeys):
    cdef int64_t[::1] k = np.ascontiguousarray(keys, dtype=np.int64)
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    out = np.full(nkeys, -1.0)
    cdef double[::1] o = out
    cdef int64_t i, n = k.shape[0]
    with nogil:
        for i in range(n):
            if v[i] > o[k[i]]:
                o[k[i]] = v[i]
    return out


def segment_argmax(keys, values, ranks, int64_t nkeys):
    cdef int64_t[::1] k = np.ascontiguousarray(keys, dtype=np.int64)
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef int64_t[::1] r = np.ascontiguousarray(ranks, dtype=np.int64)
    out = np.full(nkeys, -1, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int64_t i, w, g, n = k.shape[0]
    with nogil:
        for i in range(n):
            g = k[i]
            w = o[g]
            if w < 0 or v[i] > v[w] or (v[i] == v[w] and r[i] < r[w]):
                o[g] = i
    return out


def segment_argmin_masked(keys, ranks, mask, int64_t nkeys):
    cdef int64_t[::1] k = np.ascontiguousarray(keys, dtype=np.int64)
    cdef int64_t[::1] r = np.ascontiguousarray(ranks, dtype=np.int64)
    cdef cnp.uint8_t[::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    out = np.full(nkeys, -1, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int64_t i, w, g, n = k.shape[0]
    with nogil:
        for i in range(n):
            if not m[i]:
                continue
            g = k[i]
            w = o[g]
            if w < 0 or r[i] < r[w]:
                o[g] = i
    return out


def gf2_rref(rows, int ncols, int npivot):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] work = np.array(rows, dtype=np.uint64).copy()
    cdef uint64_t[::1] w = work
    cdef int nrows = work.shape[0]
    cdef int r = 0, col, i, hit
    cdef uint64_t bit, tmp
    pivots = []
    for col in range(npivot):
        if r == nrows:
            break
        bit = (<uint64_t>1) << (ncols - 1 - col)
        hit = -1
        for i in range(r, nrows):
            if w[i] & bit:
                hit = i
                break
        if hit < 0:
            continue
        tmp = w[r]
        w[r] = w[hit]
        w[hit] = tmp
        for i in range(nrows):
            if i != r and (w[i] & bit):
                w[i] ^= w[r]
        pivots.append(col)
        r += 1
    return work, pivots
