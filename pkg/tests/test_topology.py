import numpy as np
import pytest
import scipy.sparse as sp

from doublon_ed import (ModelParams, assemble, build_lattice, enumerate_basis, eig_dense,
                        gap_window)
from doublon_ed.errors import NoGapError, WindingError
from doublon_ed.hamiltonian import assemble_twist_family
from doublon_ed.topology import (GapWindow, _TwistDeterminant, enclosure_check, logdet_arg,
                                 winding_from_family)


@pytest.fixture(scope="module")
def family54():
    p = ModelParams(J=1, t=2, P=4, U=8, N=2)
    fb = enumerate_basis(20, 2)
    return assemble_twist_family(p, build_lattice(5, 4, "open", "twisted"), fb)


def test_logdet_matches_numpy_slogdet():
    rng = np.random.default_rng(0)
    for _ in range(5):
        A = sp.random(40, 40, density=0.2, random_state=rng, dtype=complex,
                      data_rvs=lambda n: rng.normal(size=n) + 1j * rng.normal(size=n)).tocsc()
        A = A + sp.identity(40) * 3.0
        log_abs, arg = logdet_arg(A)
        sign, ref_log = np.linalg.slogdet(A.toarray())
        assert log_abs == pytest.approx(ref_log, rel=1e-10)
        assert np.angle(np.exp(1j * (arg - np.angle(sign)))) == pytest.approx(0.0, abs=1e-8)


def test_lemma_agrees_with_direct_logdet(family54):
    E = -16.0 + 0.1j
    td = _TwistDeterminant(family54, E)
    eye = sp.identity(family54.dim, format="csr")
    base = logdet_arg(family54.at(0.0) - E * eye)[1]
    for phi in np.linspace(0.3, 6.0, 7):
        direct = logdet_arg(family54.at(phi) - E * eye)[1]
        diff = np.angle(np.exp(1j * (direct - base - td.arg_at(phi))))
        assert abs(diff) < 1e-8


def test_winding_in_gap_and_outside(family54):
    r = winding_from_family(family54, -16.0 + 0.0j)
    assert r.W == 2
    assert r.max_step_phase < np.pi / 2
    assert abs(r.total_phase - 2 * np.pi * r.W) < 0.01
    assert winding_from_family(family54, 200.0 + 0.0j).W == 0


def test_winding_grid_refinement_invariance(family54):
    a = winding_from_family(family54, -16.0 + 0.0j, n_phi=64)
    b = winding_from_family(family54, -16.0 + 0.0j, n_phi=128)
    assert a.W == b.W


def test_winding_orientation_reversal(family54):
    fwd = winding_from_family(family54, -16.0 + 0.0j)
    rev = winding_from_family(family54, -16.0 + 0.0j, orientation=-1)
    assert rev.W == -fwd.W


def test_winding_constant_on_component(family54):
    # three interior probes of the same in-gap component agree
    ws = {winding_from_family(family54, E).W
          for E in (-16.3 + 0.0j, -16.0 + 0.1j, -15.9 - 0.1j)}
    assert ws == {2}


def test_winding_rejects_reference_on_spectrum(family54):
    lat = build_lattice(5, 4, "open", "twisted")
    fb = enumerate_basis(20, 2)
    H0 = assemble(ModelParams(J=1, t=2, P=4, U=8, N=2),
                  build_lattice(5, 4, "open", "twisted", twist_y=0.0), fb)
    E_on = eig_dense(H0).eigenvalues[0]
    with pytest.raises(WindingError):
        winding_from_family(family54, complex(E_on))


def test_enclosure_check_maps_errors_to_false(family54):
    lat = build_lattice(5, 4, "open", "twisted", twist_y=0.0)
    fb = enumerate_basis(20, 2)
    E_on = eig_dense(assemble(ModelParams(J=1, t=2, P=4, U=8, N=2), lat, fb)).eigenvalues[0]
    flags = enclosure_check([-16.0 + 0.0j, 200.0 + 0.0j, complex(E_on)], family54)
    assert flags == [True, False, False]


class TestGapWindow:
    def setup_method(self):
        self.lat = build_lattice(6, 6, "periodic", "periodic")
        self.fb = enumerate_basis(36, 2)

    def test_gap_present_at_strong_pairing(self):
        gap = gap_window(ModelParams(J=1, t=2, P=4, U=8, N=2), self.lat, basis=self.fb)
        assert gap.re_lo < -16.0 < gap.re_hi
        assert gap.width > 4.0
        assert gap.contains(-16.1 + 0.3j)
        assert not gap.contains(-20.5 + 0.0j)

    def test_no_gap_when_pairing_vanishes(self):
        with pytest.raises(NoGapError):
            gap_window(ModelParams(J=1, t=2, P=0, U=8, N=2), self.lat, basis=self.fb)

    def test_no_doublons_when_interaction_vanishes(self):
        with pytest.raises(NoGapError):
            gap_window(ModelParams(J=1, t=2, P=4, U=0, N=2), self.lat, basis=self.fb)

    def test_two_site_analytic_limit(self):
        # J = t = 0, P > 0: doublon pair per cell splits by +-P; gap of width
        # 2P - pad around -2U (two-site analytic diagonalization)
        lat = build_lattice(2, 2, "open", "open")
        fb = enumerate_basis(4, 2)
        P, U = 3.0, 8.0
        sol = eig_dense(assemble(ModelParams(J=0, t=0, P=P, U=U, N=2), lat, fb))
        doublon_like = np.sort(sol.eigenvalues.real)[:4]
        assert np.allclose(sorted(doublon_like), [-2 * U - P, -2 * U - P, -2 * U + P, -2 * U + P])
