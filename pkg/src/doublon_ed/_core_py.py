"""Pure-numpy implementations of the hot kernels.

Used automatically when the compiled extension is unavailable. Both
backends implement the same module-level API:

    rank_many(occs, binom)        -> int64 ranks of occupation rows
    hop_terms(occs, binom, i, j)  -> terms of a_i^dag a_j over the basis
    pair_terms(occs, binom, i, j) -> terms of a_i^dag a_i^dag a_j a_j

The rank of an occupation vector is its ordinal in the ascending
lexicographic enumeration of all vectors with the same site count M and
total N. With binom[K, R] = C(K + R, K) the rank is

    sum_i binom[M-1-i, R_i] - binom[M-1-i, R_i - n_i]

where R_i is the number of particles at positions >= i.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def rank_many(occs: np.ndarray, binom: np.ndarray) -> np.ndarray:
    occs = np.atleast_2d(occs)
    n, M = occs.shape
    remaining = np.cumsum(occs[:, ::-1], axis=1)[:, ::-1]
    K = np.arange(M - 1, -1, -1)
    hi = binom[K, remaining]
    lo = binom[K, remaining - occs]
    return (hi - lo).sum(axis=1)


def hop_terms(occs: np.ndarray, binom: np.ndarray, i: int, j: int):
    """All matrix elements of a_i^dag a_j: (source rows, target rows, coefficients)."""
    nj = occs[:, j]
    src = np.nonzero(nj > 0)[0]
    if src.size == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, np.zeros(0)
    new = occs[src].copy()
    new[:, i] += 1
    new[:, j] -= 1
    coeff = np.sqrt((occs[src, i] + 1.0) * occs[src, j])
    return src.astype(np.int64), rank_many(new, binom), coeff


def pair_terms(occs: np.ndarray, binom: np.ndarray, i: int, j: int):
    """All matrix elements of a_i^dag a_i^dag a_j a_j."""
    nj = occs[:, j]
    src = np.nonzero(nj > 1)[0]
    if src.size == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, np.zeros(0)
    new = occs[src].copy()
    new[:, i] += 2
    new[:, j] -= 2
    ni = occs[src, i].astype(float)
    njf = occs[src, j].astype(float)
    coeff = np.sqrt((ni + 1.0) * (ni + 2.0) * njf * (njf - 1.0))
    return src.astype(np.int64), rank_many(new, binom), coeff
