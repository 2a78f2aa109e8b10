"""Per-state diagnostics: densities, doublon character, corner weight, IPR.

Density grids are (L_x, L_y) float arrays indexed grid[x-1, y-1]. All
expectation values are right-right, taken with unit-norm right eigenvectors,
so they are invariant under a global phase of the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import FockBasis
from .errors import ConfigError
from .model import LatticeSpec
from .solvers import EigenSolution


@dataclass(frozen=True)
class Thresholds:
    """Classification knobs.

    theta_d separates scattering from doublon states by bound-pair weight;
    theta_w separates corner-localized in-gap states from edge-localized
    ones by corner-skin weight; xi is the corner-weight decay length.
    """

    theta_d: float = 0.5
    theta_w: float = 0.25
    xi: float = 1.0


@dataclass(eq=False)
class StateRecord:
    index: int
    energy: complex
    residual: float
    doublon_weight: float | None
    corner_weight: float
    ipr: float
    label: str


@dataclass(eq=False)
class ScalingResult:
    L_y_values: list
    counts: list
    slope: float
    intercept: float
    r_squared: float


def _site_probabilities(psi: np.ndarray, basis: FockBasis, values: np.ndarray) -> np.ndarray:
    p = np.abs(np.asarray(psi).ravel()) ** 2
    if p.size != basis.dim:
        raise ConfigError(f"vector length {p.size} does not match basis dim {basis.dim}")
    return values.T @ p


def _to_grid(site_values: np.ndarray, lattice: LatticeSpec) -> np.ndarray:
    return site_values.reshape(lattice.L_y, lattice.L_x).T


def density_n(psi, basis: FockBasis, lattice: LatticeSpec) -> np.ndarray:
    """Single-occupation density <n_{x,y}> as an (L_x, L_y) grid."""
    return _to_grid(_site_probabilities(psi, basis, basis.occs.astype(np.float64)), lattice)


def density_m(psi, basis: FockBasis, lattice: LatticeSpec) -> np.ndarray:
    """Double-occupation density <m_{x,y}> with m = a+ a+ a a."""
    return _to_grid(_site_probabilities(psi, basis, basis.m_values()), lattice)


def doublon_weight(psi, basis: FockBasis) -> float:
    """Total bound-pair weight, sum(<m>)/2 in [0, 1]. Two-particle sector only."""
    if basis.N != 2:
        raise ConfigError(f"doublon weight is defined for N=2, basis has N={basis.N}")
    return float(_site_probabilities(psi, basis, basis.m_values()).sum() / 2.0)


def _corner_kernel(lattice: LatticeSpec, xi: float, metric: str) -> np.ndarray:
    xs = np.arange(1, lattice.L_x + 1)[:, None]
    ys = np.arange(1, lattice.L_y + 1)[None, :]
    total = np.zeros((lattice.L_x, lattice.L_y))
    for cx, cy in ((1, 1), (lattice.L_x, 1), (1, lattice.L_y), (lattice.L_x, lattice.L_y)):
        if metric == "euclidean":
            d = np.sqrt((xs - cx) ** 2 + (ys - cy) ** 2)
        elif metric == "manhattan":
            d = np.abs(xs - cx) + np.abs(ys - cy)
        else:
            raise ConfigError(f"unknown corner metric {metric!r}")
        total += np.exp(-d / xi)
    return total


def corner_weight(grid: np.ndarray, lattice: LatticeSpec, xi: float = 1.0,
                  metric: str = "euclidean") -> float:
    """Corner-skin weight: (1/2) sum_r |n_r|^2 sum_corners exp(-|r - r_c|/xi).

    Distances are Euclidean in lattice units by default (the printed
    definition does not fix a metric; manhattan is available as a flag).
    """
    if xi <= 0:
        raise ConfigError("corner weight decay length xi must be positive")
    return float(0.5 * (np.abs(grid) ** 2 * _corner_kernel(lattice, xi, metric)).sum())


def ipr(grid: np.ndarray, n_particles: int) -> float:
    """Inverse participation ratio of the normalized density."""
    p = np.abs(grid) / n_particles
    return float((p ** 2).sum())


SCATTERING = "scattering"
DOUBLON_BULK = "doublon_bulk"
IN_GAP_EDGE = "in_gap_edge"
IN_GAP_CORNER = "in_gap_corner"


def classify(solution: EigenSolution, basis: FockBasis, lattice: LatticeSpec,
             gap, thresholds: Thresholds = Thresholds()) -> list[StateRecord]:
    """Label every state of an N=2 solution.

    Below theta_d bound-pair weight a state is scattering. Doublon states
    whose Re(E) falls inside the gap window are in-gap: corner-localized
    when the corner weight reaches theta_w, edge-localized otherwise.
    gap=None (no gap window available) yields no in-gap labels.
    """
    P2 = np.abs(solution.right_vectors) ** 2
    n_sites = basis.occs.astype(np.float64).T @ P2
    m_sites = basis.m_values().T @ P2
    kern = _corner_kernel(lattice, thresholds.xi, "euclidean").T.reshape(-1)
    records = []
    for m in range(solution.n):
        E = complex(solution.eigenvalues[m])
        dw = float(m_sites[:, m].sum() / 2.0) if basis.N == 2 else None
        w = float(0.5 * (n_sites[:, m] ** 2 * kern).sum())
        p = n_sites[:, m] / basis.N
        state_ipr = float((p ** 2).sum())
        if dw is not None and dw < thresholds.theta_d:
            label = SCATTERING
        elif gap is not None and gap.contains(E):
            label = IN_GAP_CORNER if w >= thresholds.theta_w else IN_GAP_EDGE
        else:
            label = DOUBLON_BULK
        records.append(StateRecord(m, E, float(solution.residuals[m]), dw, w, state_ipr, label))
    return records


def patch_fraction(grid: np.ndarray, lattice: LatticeSpec, size: int = 3,
                   corner: str = "top_right") -> float:
    """Fraction of the grid total inside a size x size corner patch."""
    total = grid.sum()
    if total == 0:
        return 0.0
    if corner != "top_right":
        raise ConfigError("only the top_right patch is used here")
    return float(grid[lattice.L_x - size:, lattice.L_y - size:].sum() / total)


def count_corner_modes(records: list[StateRecord]) -> int:
    return sum(1 for r in records if r.label == IN_GAP_CORNER)


def fit_scaling(L_y_values, counts) -> ScalingResult:
    """Least-squares line through (L_y, N_c) with an R^2 quality figure."""
    x = np.asarray(L_y_values, dtype=float)
    y = np.asarray(counts, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(((y - fit) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ScalingResult(list(L_y_values), [int(c) for c in counts], float(slope),
                         float(intercept), float(r2))


def grid_to_csv(grid: np.ndarray, path):
    """CSV dump with header x,y,value; x-major row order, 1-based coordinates."""
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for x in range(grid.shape[0]):
            for y in range(grid.shape[1]):
                fh.write(f"{x + 1},{y + 1},{grid[x, y]:.12g}\n")
