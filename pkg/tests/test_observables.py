import numpy as np
import pytest

from doublon_ed import (ModelParams, Thresholds, assemble, build_lattice, classify,
                        corner_weight, density_m, density_n, doublon_weight, enumerate_basis,
                        eig_dense, ipr)
from doublon_ed.errors import ConfigError
from doublon_ed.observables import grid_to_csv, fit_scaling
from doublon_ed.topology import GapWindow


@pytest.fixture(scope="module")
def lattice44():
    return build_lattice(4, 4, "open", "open")


@pytest.fixture(scope="module")
def basis44():
    return enumerate_basis(16, 2)


def unit_vector(dim, k):
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v


def test_density_of_pure_doublon(lattice44, basis44):
    occ = np.zeros(16, dtype=int)
    occ[lattice44.site(2, 3)] = 2
    k = basis44.index_of(tuple(occ))
    psi = unit_vector(basis44.dim, k)
    n = density_n(psi, basis44, lattice44)
    m = density_m(psi, basis44, lattice44)
    assert n[1, 2] == pytest.approx(2.0) and n.sum() == pytest.approx(2.0)
    assert m[1, 2] == pytest.approx(2.0) and m.sum() == pytest.approx(2.0)


def test_density_of_doublon_superposition(lattice44, basis44):
    occ_a = np.zeros(16, dtype=int)
    occ_a[0] = 2
    occ_b = np.zeros(16, dtype=int)
    occ_b[5] = 2
    psi = np.zeros(basis44.dim, dtype=complex)
    psi[basis44.index_of(tuple(occ_a))] = 1 / np.sqrt(2)
    psi[basis44.index_of(tuple(occ_b))] = 1j / np.sqrt(2)
    n = density_n(psi, basis44, lattice44)
    assert n[0, 0] == pytest.approx(1.0) and n[1, 1] == pytest.approx(1.0)


def test_density_conservation_on_eigenvectors(lattice44, basis44):
    H = assemble(ModelParams(J=1, t=2, P=4, U=8, N=2), lattice44, basis44)
    sol = eig_dense(H)
    for k in (0, 7, 100):
        assert density_n(sol.right_vectors[:, k], basis44, lattice44).sum() == pytest.approx(2.0)


def test_density_phase_invariance(lattice44, basis44):
    rng = np.random.default_rng(1)
    psi = rng.normal(size=basis44.dim) + 1j * rng.normal(size=basis44.dim)
    psi /= np.linalg.norm(psi)
    a = density_n(psi, basis44, lattice44)
    b = density_n(psi * np.exp(0.77j), basis44, lattice44)
    assert np.allclose(a, b)


def test_doublon_weight_extremes(lattice44, basis44):
    occ = np.zeros(16, dtype=int)
    occ[3] = 2
    assert doublon_weight(unit_vector(basis44.dim, basis44.index_of(tuple(occ))),
                          basis44) == pytest.approx(1.0)
    occ = np.zeros(16, dtype=int)
    occ[0] = occ[9] = 1
    assert doublon_weight(unit_vector(basis44.dim, basis44.index_of(tuple(occ))),
                          basis44) == pytest.approx(0.0)
    with pytest.raises(ConfigError):
        doublon_weight(np.zeros(enumerate_basis(4, 3).dim), enumerate_basis(4, 3))


def reference_corner_weight(grid, xi=1.0):
    # direct evaluation of the definition, written independently
    L_x, L_y = grid.shape
    corners = [(1, 1), (L_x, 1), (1, L_y), (L_x, L_y)]
    total = 0.0
    for x in range(1, L_x + 1):
        for y in range(1, L_y + 1):
            for cx, cy in corners:
                d = np.hypot(x - cx, y - cy)
                total += abs(grid[x - 1, y - 1]) ** 2 * np.exp(-d / xi)
    return 0.5 * total


def test_corner_weight_single_corner_doublon():
    lat = build_lattice(8, 8, "open", "open")
    grid = np.zeros((8, 8))
    grid[0, 0] = 2.0
    w = corner_weight(grid, lat)
    assert w == pytest.approx(reference_corner_weight(grid))
    assert w == pytest.approx(2.0, abs=1e-2)


def test_corner_weight_uniform_grid():
    lat = build_lattice(8, 8, "open", "open")
    grid = np.full((8, 8), 2.0 / 64.0)
    w = corner_weight(grid, lat)
    assert w == pytest.approx(reference_corner_weight(grid))
    assert w < 0.01


def test_corner_weight_zero_grid_and_bad_xi():
    lat = build_lattice(5, 5, "open", "open")
    assert corner_weight(np.zeros((5, 5)), lat) == 0.0
    with pytest.raises(ConfigError):
        corner_weight(np.zeros((5, 5)), lat, xi=0.0)


def test_ipr_limits():
    grid = np.zeros((4, 4))
    grid[2, 1] = 2.0
    assert ipr(grid, 2) == pytest.approx(1.0)
    uniform = np.full((4, 4), 2.0 / 16.0)
    assert ipr(uniform, 2) == pytest.approx(1.0 / 16.0)


def test_classification_rules(lattice44, basis44):
    H = assemble(ModelParams(J=1, t=2, P=4, U=8, N=2), lattice44, basis44)
    sol = eig_dense(H)
    gap = GapWindow(-19.4, -13.3, -1.0, 1.0)
    records = classify(sol, basis44, lattice44, gap)
    labels = {r.label for r in records}
    assert "scattering" in labels and "doublon_bulk" in labels
    for r in records:
        if r.label == "scattering":
            assert r.doublon_weight < 0.5
        if r.label.startswith("in_gap"):
            assert gap.re_lo <= r.energy.real <= gap.re_hi
    # no gap window -> nothing labeled in-gap
    records_no_gap = classify(sol, basis44, lattice44, None)
    assert all(not r.label.startswith("in_gap") for r in records_no_gap)
    # determinism under identical inputs
    again = classify(sol, basis44, lattice44, gap)
    assert [r.label for r in again] == [r.label for r in records]


def test_fit_scaling_perfect_line():
    fit = fit_scaling([4, 6, 8, 10], [4, 6, 8, 10])
    assert fit.slope == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)


def test_grid_csv_format(tmp_path):
    grid = np.array([[1.0, 2.5], [0.25, 1e-13]])
    path = tmp_path / "g.csv"
    grid_to_csv(grid, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,value"
    assert lines[1] == "1,1,1"
    assert lines[2] == "1,2,2.5"
    assert lines[3] == "2,1,0.25"
    assert lines[4] == "2,2,1e-13"
