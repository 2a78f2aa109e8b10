"""Fixed-N bosonic Fock basis on M sites.

The model conserves total particle number, so every computation runs in
one fixed-N block. States are occupation vectors ordered ascending
lexicographically, e.g. for M=3, N=2:

    (0,0,2) < (0,1,1) < (0,2,0) < (1,0,1) < (1,1,0) < (2,0,0)

This ordering is stable across runs and is reproduced exactly by the
combinadic rank formula in the kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import kernels
from .errors import CapacityError, ConfigError

DEFAULT_BASIS_CAP = 500_000


def basis_dimension(M: int, N: int) -> int:
    return comb(M + N - 1, N)


def enumerate_occupations(M: int, N: int) -> np.ndarray:
    """All occupation vectors with sum N in ascending lexicographic order."""
    occ = [0] * (M - 1) + [N]
    rows = [list(occ)]
    while True:
        tail = occ[M - 1]
        if tail > 0:
            occ[M - 1] = 0
            occ[M - 2] += 1
            occ[M - 1] = tail - 1
        else:
            i = M - 2
            while i >= 0 and occ[i] == 0:
                i -= 1
            if i <= 0:
                break
            v = occ[i]
            occ[i] = 0
            occ[i - 1] += 1
            occ[M - 1] = v - 1
        rows.append(list(occ))
    return np.asarray(rows, dtype=np.int32)


def _binom_table(M: int, N: int) -> np.ndarray:
    """binom[K, R] = C(K + R, K) for 0 <= K < M, 0 <= R <= N."""
    table = np.empty((M, N + 1), dtype=np.int64)
    for K in range(M):
        for R in range(N + 1):
            table[K, R] = comb(K + R, K)
    return table


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Immutable enumerated basis with bidirectional state <-> index maps."""

    M: int
    N: int
    occs: np.ndarray = field(repr=False)
    binom: np.ndarray = field(repr=False)
    index_map: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.occs.shape[0]

    def state(self, k: int) -> np.ndarray:
        return self.occs[k]

    def index_of(self, occ) -> int:
        key = tuple(int(v) for v in occ)
        if key not in self.index_map:
            raise KeyError(f"state {key} not in (M={self.M}, N={self.N}) basis")
        return self.index_map[key]

    def rank(self, occ) -> int:
        """Combinadic rank; identical to index_of for valid states."""
        return int(kernels.impl.rank_many(np.asarray(occ, dtype=np.int32).reshape(1, -1), self.binom)[0])

    def m_values(self) -> np.ndarray:
        """Eigenvalues of a^dag a^dag a a per site: n(n-1)."""
        occ = self.occs.astype(np.float64)
        return occ * (occ - 1.0)


def enumerate_basis(M: int, N: int, cap: int = DEFAULT_BASIS_CAP) -> FockBasis:
    if M < 1 or N < 1:
        raise ConfigError(f"need M >= 1 sites and N >= 1 particles, got M={M}, N={N}")
    dim = basis_dimension(M, N)
    if dim > cap:
        raise CapacityError(f"basis dimension {dim} exceeds cap {cap} for M={M}, N={N}")
    occs = enumerate_occupations(M, N)
    index_map = {tuple(int(v) for v in row): k for k, row in enumerate(occs)}
    return FockBasis(M, N, occs, _binom_table(M, N), index_map)


def apply_hop(state, i: int, j: int):
    """Apply a_i^dag a_j to an occupation vector.

    Returns (coefficient, new_state) or None when site j is empty.
    """
    state = np.asarray(state)
    M = state.shape[0]
    if i == j:
        raise ConfigError("hop requires distinct sites")
    if not (0 <= i < M and 0 <= j < M):
        raise ConfigError(f"site out of range for M={M}")
    if state[j] == 0:
        return None
    new = state.copy()
    new[i] += 1
    new[j] -= 1
    return float(np.sqrt((state[i] + 1.0) * state[j])), new


def apply_pair_hop(state, i: int, j: int):
    """Apply a_i^dag a_i^dag a_j a_j; None when site j holds fewer than two bosons."""
    state = np.asarray(state)
    M = state.shape[0]
    if i == j:
        raise ConfigError("pair hop requires distinct sites")
    if not (0 <= i < M and 0 <= j < M):
        raise ConfigError(f"site out of range for M={M}")
    if state[j] < 2:
        return None
    new = state.copy()
    new[i] += 2
    new[j] -= 2
    coeff = np.sqrt((state[i] + 1.0) * (state[i] + 2.0) * state[j] * (state[j] - 1.0))
    return float(coeff), new


def number_operators(state):
    """Per-site single and double occupation eigenvalues (n, n(n-1))."""
    n = np.asarray(state, dtype=np.float64)
    return n, n * (n - 1.0)
