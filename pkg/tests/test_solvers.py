import numpy as np
import pytest
import scipy.sparse as sp

from doublon_ed import ModelParams, assemble, build_lattice, enumerate_basis
from doublon_ed.errors import CapacityError, SolverError
from doublon_ed.solvers import eig_dense, eig_targeted


@pytest.fixture(scope="module")
def small_model():
    lat = build_lattice(4, 4, "open", "open")
    fb = enumerate_basis(16, 2)
    H = assemble(ModelParams(J=1, t=2, P=4, U=8, N=2), lat, fb)
    return H


def test_diagonal_matrix_exact():
    H = sp.diags(np.array([3.0, -1.0, 2.0], dtype=complex)).tocsr()
    sol = eig_dense(H)
    assert np.allclose(sol.eigenvalues, [-1.0, 2.0, 3.0])


def test_two_level_hopping_block():
    H = sp.csr_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]], dtype=complex))
    sol = eig_dense(H)
    assert np.allclose(sol.eigenvalues, [-1.0, 1.0])


def test_hermitian_limit_real_spectrum():
    lat = build_lattice(4, 4, "open", "open")
    fb = enumerate_basis(16, 2)
    H = assemble(ModelParams(J=1, t=0, P=4, U=8, N=2), lat, fb)
    sol = eig_dense(H)
    assert np.abs(sol.eigenvalues.imag).max() < 1e-10


def test_residual_certificates(small_model):
    sol = eig_dense(small_model)
    fro = np.sqrt((np.abs(small_model.data) ** 2).sum())
    assert sol.residuals.max() <= 1e-8 * fro
    ordering = np.lexsort((sol.eigenvalues.imag, sol.eigenvalues.real))
    assert np.array_equal(ordering, np.arange(sol.n))


def test_unit_norm_and_phase_convention(small_model):
    sol = eig_dense(small_model)
    norms = np.linalg.norm(sol.right_vectors, axis=0)
    assert np.allclose(norms, 1.0)
    lead = np.abs(sol.right_vectors).argmax(axis=0)
    pivots = sol.right_vectors[lead, np.arange(sol.n)]
    assert np.abs(pivots.imag).max() < 1e-12
    assert pivots.real.min() > 0


def test_dense_cap(small_model):
    with pytest.raises(CapacityError):
        eig_dense(small_model, cap=10)


def test_targeted_matches_dense(small_model):
    dense = eig_dense(small_model)
    sigma = complex(dense.eigenvalues[17]) + 1e-4
    targ = eig_targeted(small_model, sigma, k=3)
    for i in range(3):
        j = np.argmin(np.abs(dense.eigenvalues - targ.eigenvalues[i]))
        assert abs(dense.eigenvalues[j] - targ.eigenvalues[i]) < 1e-6
        overlap = abs(np.vdot(dense.right_vectors[:, j], targ.right_vectors[:, i]))
        assert 1.0 - overlap < 1e-4


def test_targeted_in_gap_manifold():
    lat = build_lattice(5, 4, "open", "open")
    fb = enumerate_basis(20, 2)
    H = assemble(ModelParams(J=1, t=2, P=4, U=8, N=2), lat, fb)
    dense = eig_dense(H)
    targ = eig_targeted(H, -16.2 + 0.0j, k=8)
    for E in targ.eigenvalues:
        assert np.abs(dense.eigenvalues - E).min() < 1e-6


def test_targeted_k_validation(small_model):
    with pytest.raises(SolverError):
        eig_targeted(small_model, 0.0, k=small_model.shape[0] + 1)
    with pytest.raises(SolverError):
        eig_targeted(small_model, 0.0, k=0)


def test_targeted_k_near_dimension_falls_back_to_dense():
    H = sp.diags(np.arange(6, dtype=complex)).tocsr()
    sol = eig_targeted(H, 2.1, k=5)
    assert sol.eigenvalues[0] == pytest.approx(2.0)
    assert len(sol.eigenvalues) == 5


def test_targeted_retries_singular_shift():
    # sigma exactly on an eigenvalue of a diagonal matrix makes (H - sigma I) singular
    H = sp.diags(np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], dtype=complex)).tocsr()
    sol = eig_targeted(H, 3.0, k=2)
    assert np.abs(sol.eigenvalues - 3.0).min() < 1e-8


def test_conjugate_pairing_in_real_matrix_limit():
    lat = build_lattice(4, 4, "open", "twisted", twist_y=np.pi)
    fb = enumerate_basis(16, 2)
    H = assemble(ModelParams(J=1, t=0, P=4, U=8, N=2), lat, fb)
    sol = eig_dense(H)
    evs = sol.eigenvalues
    paired = np.sort_complex(np.conj(evs))
    assert np.allclose(np.sort_complex(evs), paired, atol=1e-9)
