"""Exact diagonalization of a non-Hermitian extended Bose-Hubbard lattice.

Fixed-particle-number spectra, bound-pair (doublon) bands, corner skin
modes, twisted-boundary winding numbers, and the strong-interaction
effective theory, at desk scale.
"""

from .basis import FockBasis, apply_hop, apply_pair_hop, enumerate_basis, number_operators
from .effective import (EdgeSolution, EffectiveModel, analytic_edge, build_H_1D, build_H_eff,
                        compare_spectra, derive_eff_numerically)
from .hamiltonian import assemble, assemble_twist_family, dump_matrix, hermiticity_defect
from .kernels import BACKEND
from .model import (DisorderRealization, LatticeSpec, ModelParams, build_lattice,
                    sample_disorder)
from .observables import (ScalingResult, StateRecord, Thresholds, classify, corner_weight,
                          density_m, density_n, doublon_weight, ipr)
from .solvers import EigenSolution, eig_dense, eig_targeted
from .topology import GapWindow, WindingResult, enclosure_check, gap_window, winding_number

__version__ = "0.1.0"
