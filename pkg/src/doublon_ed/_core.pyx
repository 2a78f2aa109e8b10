# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: lexicographic ranking and ladder-operator terms.

Same API as _core_py. Target ranks are computed incrementally: moving
particles between sites i and j only changes the rank contributions of
positions in [min(i, j), max(i, j)], so one term costs O(|i - j|) instead
of O(M).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32


cdef inline i64 _rank_one(const i32* occ, const i64* binom, Py_ssize_t M, Py_ssize_t ncols) nogil:
    cdef i64 rank = 0
    cdef i64 rem = 0
    cdef Py_ssize_t p
    for p in range(M - 1, -1, -1):
        rem += occ[p]
        rank += binom[(M - 1 - p) * ncols + rem] - binom[(M - 1 - p) * ncols + rem - occ[p]]
    return rank


def rank_many(occs_in, binom_in):
    cdef cnp.ndarray[i32, ndim=2, mode="c"] occs = np.ascontiguousarray(np.atleast_2d(occs_in), dtype=np.int32)
    cdef cnp.ndarray[i64, ndim=2, mode="c"] binom = np.ascontiguousarray(binom_in, dtype=np.int64)
    cdef Py_ssize_t n = occs.shape[0], M = occs.shape[1], ncols = binom.shape[1]
    cdef cnp.ndarray[i64, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t k
    with nogil:
        for k in range(n):
            out[k] = _rank_one(&occs[k, 0], &binom[0, 0], M, ncols)
    return out


cdef inline i64 _moved_rank(const i32* occ, const i64* binom, Py_ssize_t M, Py_ssize_t ncols,
                            i64 base_rank, Py_ssize_t i, Py_ssize_t j, int amount) nogil:
    """Rank of occ after occ[i] += amount, occ[j] -= amount (base_rank = rank of occ)."""
    cdef Py_ssize_t lo = i if i < j else j
    cdef Py_ssize_t hi = j if i < j else i
    cdef Py_ssize_t p
    cdef i64 delta = 0, rem = 0
    cdef i64 n_old, r_old, n_new, r_new
    for p in range(M - 1, hi, -1):
        rem += occ[p]
    for p in range(hi, lo - 1, -1):
        rem += occ[p]
        n_old = occ[p]
        r_old = rem
        n_new = n_old
        r_new = r_old
        if p == i:
            n_new += amount
        if p == j:
            n_new -= amount
        if i < j:
            if i < p:  # p <= hi == j always here
                r_new -= amount
        else:
            if j < p:
                r_new += amount
        delta += (binom[(M - 1 - p) * ncols + r_new] - binom[(M - 1 - p) * ncols + r_new - n_new]) \
               - (binom[(M - 1 - p) * ncols + r_old] - binom[(M - 1 - p) * ncols + r_old - n_old])
    return base_rank + delta


def hop_terms(occs_in, binom_in, Py_ssize_t i, Py_ssize_t j):
    cdef cnp.ndarray[i32, ndim=2, mode="c"] occs = np.ascontiguousarray(occs_in, dtype=np.int32)
    cdef cnp.ndarray[i64, ndim=2, mode="c"] binom = np.ascontiguousarray(binom_in, dtype=np.int64)
    cdef Py_ssize_t n = occs.shape[0], M = occs.shape[1], ncols = binom.shape[1]
    cdef cnp.ndarray[i64, ndim=1] src = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[i64, ndim=1] dst = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coeff = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t k, m = 0
    cdef i32 nj, ni
    with nogil:
        for k in range(n):
            nj = occs[k, j]
            if nj > 0:
                ni = occs[k, i]
                src[m] = k
                dst[m] = _moved_rank(&occs[k, 0], &binom[0, 0], M, ncols, k, i, j, 1)
                coeff[m] = ((ni + 1.0) * nj) ** 0.5
                m += 1
    return src[:m].copy(), dst[:m].copy(), coeff[:m].copy()


def pair_terms(occs_in, binom_in, Py_ssize_t i, Py_ssize_t j):
    cdef cnp.ndarray[i32, ndim=2, mode="c"] occs = np.ascontiguousarray(occs_in, dtype=np.int32)
    cdef cnp.ndarray[i64, ndim=2, mode="c"] binom = np.ascontiguousarray(binom_in, dtype=np.int64)
    cdef Py_ssize_t n = occs.shape[0], M = occs.shape[1], ncols = binom.shape[1]
    cdef cnp.ndarray[i64, ndim=1] src = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[i64, ndim=1] dst = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coeff = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t k, m = 0
    cdef double ni, nj
    with nogil:
        for k in range(n):
            if occs[k, j] > 1:
                ni = occs[k, i]
                nj = occs[k, j]
                src[m] = k
                dst[m] = _moved_rank(&occs[k, 0], &binom[0, 0], M, ncols, k, i, j, 2)
                coeff[m] = ((ni + 1.0) * (ni + 2.0) * nj * (nj - 1.0)) ** 0.5
                m += 1
    return src[:m].copy(), dst[:m].copy(), coeff[:m].copy()
