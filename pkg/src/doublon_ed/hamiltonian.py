"""Sparse assembly of the non-Hermitian lattice Hamiltonian.

Terms, in the fixed-N Fock basis:

* reciprocal x-hopping  -J (a+_{x+1,y} a_{x,y} + h.c.) on every x-bond,
* onsite interaction    -U n(n-1) on every site,
* pair hopping          -(P/2)(a+_o a+_o a_e a_e + h.c.) inside unit cells,
* one-way y-hopping     -i t a+_dst a_src, +y on odd columns, -y on even
  columns, with no reverse term (the only non-Hermitian ingredient),
* edge potential        -(V/2) n(n-1) on columns 1 and L_x (or -(V/2) n
  with v_mode="single"),
* bond disorder         same operator content with the realization's
  amplitudes; the disordered pair term enters as -Ptilde (no 1/2) unless
  pair_disorder_half is set.

A twisted boundary multiplies each boundary-crossing hop by exp(i*phi) in
its directed sense (exp(-i*phi) for hops moving in the negative direction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .basis import FockBasis
from .errors import ConfigError
from .model import OPEN, TWISTED, DisorderRealization, LatticeSpec, ModelParams

SparseComplexMatrix = sp.csr_matrix


class _Accumulator:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rows, cols, vals):
        if len(rows):
            self.rows.append(np.asarray(rows))
            self.cols.append(np.asarray(cols))
            self.vals.append(np.asarray(vals, dtype=np.complex128))

    def to_csr(self, dim) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((dim, dim), dtype=np.complex128)
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
        mat.sum_duplicates()
        mat.eliminate_zeros()
        return mat


def _check_dims(params: ModelParams, lattice: LatticeSpec, basis: FockBasis):
    if basis.M != lattice.n_sites:
        raise ConfigError(f"basis has M={basis.M} sites, lattice has {lattice.n_sites}")
    if basis.N != params.N:
        raise ConfigError(f"basis sector N={basis.N} differs from params.N={params.N}")


def _diagonal(params: ModelParams, lattice: LatticeSpec, basis: FockBasis) -> np.ndarray:
    occ = basis.occs.astype(np.float64)
    m = occ * (occ - 1.0)
    diag = -params.U * m.sum(axis=1)
    if params.V != 0.0:
        edge_cols = np.zeros(lattice.n_sites, dtype=bool)
        for y in range(1, lattice.L_y + 1):
            edge_cols[lattice.site(1, y)] = True
            edge_cols[lattice.site(lattice.L_x, y)] = True
        weight = m[:, edge_cols] if params.v_mode == "pair" else occ[:, edge_cols]
        diag = diag - 0.5 * params.V * weight.sum(axis=1)
    return diag


def _assemble_buckets(params, lattice, basis, disorder, pair_disorder_half):
    """Returns (static, y_up_crossing, y_down_crossing) accumulators.

    The two crossing buckets hold the y-boundary hops with their twist
    phase left out, so H(phi) = static + e^{i phi} up + e^{-i phi} down.
    """
    _check_dims(params, lattice, basis)
    if disorder is not None and not isinstance(disorder, DisorderRealization):
        raise ConfigError("disorder must be a DisorderRealization or None")
    impl, occs, binom = kernels.impl, basis.occs, basis.binom
    dim = basis.dim
    static = _Accumulator()
    cross_up, cross_down = _Accumulator(), _Accumulator()

    diag = _diagonal(params, lattice, basis)
    k = np.arange(dim, dtype=np.int64)
    static.add(k, k, diag)

    phase_x = np.exp(1j * lattice.twist_x) if lattice.bc_x == TWISTED else 1.0

    for s_lo, s_hi, col, crosses in lattice.x_bonds:
        amp = params.J + (disorder.j_amp(int(col), int(lattice.coords(int(s_lo))[1])) if disorder else 0.0)
        if amp == 0.0:
            continue
        ph = phase_x if crosses else 1.0
        src, dst, coeff = impl.hop_terms(occs, binom, int(s_hi), int(s_lo))
        static.add(dst, src, -amp * ph * coeff)
        src, dst, coeff = impl.hop_terms(occs, binom, int(s_lo), int(s_hi))
        static.add(dst, src, -amp * np.conjugate(ph) * coeff)

    for s_odd, s_even, odd_col, y in lattice.pair_bonds:
        amp = 0.5 * params.P
        if disorder is not None:
            ptilde = disorder.p_amp(int(odd_col), int(y))
            amp += 0.5 * ptilde if pair_disorder_half else ptilde
        if amp == 0.0:
            continue
        for i, j in ((int(s_odd), int(s_even)), (int(s_even), int(s_odd))):
            src, dst, coeff = impl.pair_terms(occs, binom, i, j)
            static.add(dst, src, -amp * coeff)

    for src_site, dst_site, row, crosses, direction in lattice.y_bonds:
        x = lattice.coords(int(src_site))[0]
        amp = params.t + (disorder.t_amp(int(row), int(x)) if disorder else 0.0)
        if amp == 0.0:
            continue
        src, dst, coeff = impl.hop_terms(occs, binom, int(dst_site), int(src_site))
        vals = -1j * amp * coeff
        if crosses and lattice.bc_y == TWISTED:
            (cross_up if direction > 0 else cross_down).add(dst, src, vals)
        else:
            static.add(dst, src, vals)

    return static.to_csr(dim), cross_up.to_csr(dim), cross_down.to_csr(dim)


def assemble(params: ModelParams, lattice: LatticeSpec, basis: FockBasis,
             disorder: DisorderRealization | None = None, *,
             pair_disorder_half: bool = False) -> sp.csr_matrix:
    """Assemble the full sparse Hamiltonian for the given boundary spec."""
    static, up, down = _assemble_buckets(params, lattice, basis, disorder, pair_disorder_half)
    if lattice.bc_y == TWISTED:
        phi = lattice.twist_y
        out = (static + np.exp(1j * phi) * up + np.exp(-1j * phi) * down).tocsr()
        out.eliminate_zeros()
        return out
    return static


@dataclass(frozen=True, eq=False)
class TwistFamily:
    """Hamiltonians H(phi) sharing one assembly, for twist sweeps along y."""

    static: sp.csr_matrix
    up: sp.csr_matrix
    down: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    def at(self, phi: float) -> sp.csr_matrix:
        out = (self.static + np.exp(1j * phi) * self.up + np.exp(-1j * phi) * self.down).tocsr()
        return out


def assemble_twist_family(params: ModelParams, lattice: LatticeSpec, basis: FockBasis,
                          disorder: DisorderRealization | None = None, *,
                          pair_disorder_half: bool = False) -> TwistFamily:
    """Build H(phi) with the y boundary twisted and phi left symbolic."""
    if lattice.bc_y != TWISTED:
        lattice = lattice.with_boundary(bc_y=TWISTED, twist_y=0.0)
    static, up, down = _assemble_buckets(params, lattice, basis, disorder, pair_disorder_half)
    return TwistFamily(static, up, down)


def hermiticity_defect(H: sp.spmatrix) -> float:
    """Largest entrywise magnitude of H - H^dagger."""
    diff = (H - H.conjugate().T).tocoo()
    return float(np.abs(diff.data).max()) if diff.nnz else 0.0


def dump_matrix(H: sp.spmatrix, path):
    """Coordinate-format text dump: 'row col re im' per line, 0-based."""
    coo = H.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")
