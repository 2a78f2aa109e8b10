import numpy as np
import pytest

from doublon_ed import (ModelParams, analytic_edge, assemble, build_H_1D, build_H_eff,
                        build_lattice, compare_spectra, derive_eff_numerically, eig_dense,
                        enumerate_basis)
from doublon_ed.effective import EffectiveModel, edge_vector
from doublon_ed.errors import ConfigError


def test_coupling_formulas():
    eff = EffectiveModel.from_params(ModelParams(J=1, t=2, P=4, U=8, N=2))
    assert eff.j_eff == pytest.approx(0.125)
    assert eff.t_eff == pytest.approx(0.5)
    assert eff.u_eff_bulk == pytest.approx(16.25)
    assert eff.u_eff_edge == pytest.approx(16.125)


def test_zero_interaction_rejected():
    with pytest.raises(ConfigError):
        build_H_eff(ModelParams(J=1, U=0, N=2), build_lattice(4, 4, "open", "open"))
    with pytest.raises(ConfigError):
        build_H_1D(ModelParams(J=1, U=0, N=2), 11)


def test_quasiparticle_matrix_elements():
    p = ModelParams(J=1, t=2, P=4, U=8, N=2)
    lat = build_lattice(5, 4, "open", "open")
    H = build_H_eff(p, lat).toarray()
    bulk = lat.site(3, 2)
    assert H[bulk, bulk] == pytest.approx(-16.25)
    edge = lat.site(1, 2)
    assert H[edge, edge] == pytest.approx(-16.125)
    intracell = (lat.site(1, 1), lat.site(2, 1))
    assert H[intracell] == pytest.approx(-4.125)
    intercell = (lat.site(3, 1), lat.site(2, 1))
    assert H[intercell] == pytest.approx(-0.125)
    up = (lat.site(3, 2), lat.site(3, 1))        # odd column, +y, one way
    assert H[up] == pytest.approx(+0.5)
    assert H[up[1], up[0]] == 0.0
    down = (lat.site(2, 1), lat.site(2, 2))      # even column, -y
    assert H[down] == pytest.approx(+0.5)
    assert H[down[1], down[0]] == 0.0


@pytest.mark.parametrize("dims,bcs", [
    ((5, 4), ("open", "open")),
    ((4, 4), ("periodic", "periodic")),
    ((5, 4), ("open", "periodic")),
    ((4, 3), ("periodic", "open")),
])
def test_projection_identity(dims, bcs):
    # numerical second-order projection reproduces the closed-form model exactly
    p = ModelParams(J=1.0, t=2.0, P=4.0, U=8.0, N=2)
    lat = build_lattice(*dims, *bcs)
    fb = enumerate_basis(lat.n_sites, 2)
    num = derive_eff_numerically(p, lat, fb)
    ana = build_H_eff(p, lat).toarray()
    assert np.abs(num - ana).max() < 1e-12


def test_projection_identity_random_couplings():
    rng = np.random.default_rng(7)
    lat = build_lattice(4, 3, "open", "open")
    fb = enumerate_basis(12, 2)
    for _ in range(4):
        J, t, P = rng.normal(size=3)
        U = 5.0 * max(abs(J), abs(t), abs(P)) + 1.0
        p = ModelParams(J=J, t=t, P=P, U=U, N=2)
        num = derive_eff_numerically(p, lat, fb)
        ana = build_H_eff(p, lat).toarray()
        assert np.abs(num - ana).max() < 1e-12


def test_projection_intracell_and_directed_elements():
    p = ModelParams(J=1.0, t=2.0, P=4.0, U=8.0, N=2)
    lat = build_lattice(4, 3, "open", "open")
    fb = enumerate_basis(12, 2)
    num = derive_eff_numerically(p, lat, fb)
    assert num[lat.site(1, 1), lat.site(2, 1)] == pytest.approx(-4.125)
    assert num[lat.site(1, 2), lat.site(1, 1)] == pytest.approx(+0.5)   # odd column up
    assert num[lat.site(1, 1), lat.site(1, 2)] == pytest.approx(0.0)    # no reverse
    bulk = lat.site(2, 2)
    assert num[bulk, bulk] == pytest.approx(-16.25)


def test_chain_matrix_example():
    H = build_H_1D(ModelParams(J=1, P=4, U=8, N=2), 3)
    assert np.allclose(np.diag(H), [-16.125, -16.25, -16.125])
    assert H[0, 1] == pytest.approx(-4.125)
    assert H[1, 2] == pytest.approx(-0.125)
    assert np.allclose(H, H.T)


def test_chain_real_spectrum():
    H = build_H_1D(ModelParams(J=1, P=-1, U=6, N=2), 21)
    evals = np.linalg.eigvals(H)
    assert np.abs(evals.imag).max() == 0.0


class TestAnalyticEdge:
    def test_strong_pairing_matches_chain_ed(self):
        p = ModelParams(J=1, P=4, U=8, N=2)
        sol = analytic_edge(p, 41)
        evals, evecs = np.linalg.eigh(build_H_1D(p, 41))
        edge_w = (np.abs(evecs[-4:, :]) ** 2).sum(axis=0)
        localized = evals[edge_w > 0.5]
        assert np.abs(localized - sol.eps_plus).min() < 1e-8
        assert not sol.exists_minus
        assert sol.zeta2_plus > 1 and sol.zeta2_minus < 1

    def test_both_branches_inside_existence_window(self):
        p = ModelParams(J=1, P=-0.2, U=6, N=2)
        sol = analytic_edge(p, 41)
        assert sol.exists_minus
        evals, evecs = np.linalg.eigh(build_H_1D(p, 41))
        edge_w = (np.abs(evecs[-4:, :]) ** 2).sum(axis=0)
        localized = np.sort(evals[edge_w > 0.5])
        assert localized.size == 2
        assert abs(localized[0] - sol.eps_plus) < 1e-8
        assert abs(localized[1] - sol.eps_minus) < 1e-8

    def test_minus_branch_absent_below_window(self):
        sol = analytic_edge(ModelParams(J=1, P=-1, U=6, N=2), 41)
        assert not sol.exists_minus
        assert sol.zeta2_minus < 1  # delocalized trial solution

    def test_decay_factor_against_eigenvector(self):
        p = ModelParams(J=1, P=4, U=8, N=2)
        sol = analytic_edge(p, 41)
        beta = sol.beta
        # ratio of successive same-sublattice amplitudes ~ |zeta|^2
        ratio = np.abs(beta[40] / beta[38])
        assert ratio == pytest.approx(sol.zeta2_plus, rel=1e-6)

    def test_bulk_recursion_residual(self):
        for P, U in ((4.0, 8.0), (-1.0, 6.0)):
            p = ModelParams(J=1, P=P, U=U, N=2)
            sol = analytic_edge(p, 41)
            H = build_H_1D(p, 41)
            res = H @ sol.beta - sol.eps_plus * sol.beta
            assert np.abs(res).max() < 1e-10

    def test_left_edge_weight_absent(self):
        for P, U in ((4.0, 8.0), (-1.0, 6.0)):
            evals, evecs = np.linalg.eigh(build_H_1D(ModelParams(J=1, P=P, U=U, N=2), 41))
            left_w = (np.abs(evecs[:2, :]) ** 2).sum(axis=0)
            assert left_w.max() < 0.5

    def test_degenerate_denominator_rejected(self):
        with pytest.raises(ConfigError):
            analytic_edge(ModelParams(J=1, P=-0.125, U=8, N=2))  # P = -J^2/U

    def test_p_zero_marginal(self):
        sol = analytic_edge(ModelParams(J=1, P=0, U=8, N=2))
        assert sol.zeta2_plus == pytest.approx(1.0)
        assert sol.zeta2_minus == pytest.approx(1.0)


def test_compare_spectra_truncation_limit():
    # with J = t = 0 the perturbation series truncates; agreement is exact
    p = ModelParams(J=0, t=0, P=3, U=8, N=2)
    lat = build_lattice(4, 3, "periodic", "open")
    fb = enumerate_basis(12, 2)
    full = eig_dense(assemble(p, lat, fb))
    eff = eig_dense(build_H_eff(p, lat))
    report = compare_spectra(full, fb, eff)
    assert report.n_full == report.n_eff == 12
    assert report.max_abs < 1e-12
