"""Lattice geometry, physical parameters, and disorder realizations.

Conventions used throughout the package:

* sites are addressed by 1-based coordinates (x, y) with 1 <= x <= L_x and
  1 <= y <= L_y; the 0-based linear site index is (y-1)*L_x + (x-1)
  (row-major, fixed),
* unit cells pair columns (2k-1, 2k); pair-hopping bonds live inside a cell,
* one-way hops along y point in +y on odd columns and -y on even columns,
* a twisted boundary multiplies every boundary-crossing hop by exp(+i*phi)
  when the hop moves in the positive direction of that axis and by
  exp(-i*phi) when it moves in the negative direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

OPEN = "open"
PERIODIC = "periodic"
TWISTED = "twisted"
_BC_KINDS = (OPEN, PERIODIC, TWISTED)


@dataclass(frozen=True)
class ModelParams:
    """Physical couplings for one Hamiltonian instance.

    J : reciprocal single-boson hopping along x
    t : unidirectional single-boson hopping along y
    P : two-boson pair hopping inside a unit cell
    U : onsite interaction (attractive convention, U > 0 binds pairs)
    V : compensating potential applied to the left/right edge columns
    N : number of bosons in the symmetry sector
    v_mode : "pair" applies V as -(V/2) n(n-1) on edge sites (shifts a
        doublon by exactly -V); "single" applies -(V/2) n instead.
    """

    J: float = 1.0
    t: float = 0.0
    P: float = 0.0
    U: float = 0.0
    V: float = 0.0
    N: int = 2
    v_mode: str = "pair"

    def __post_init__(self):
        for name in ("J", "t", "P", "U", "V"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"coupling {name} must be finite")
        if self.N < 1:
            raise ConfigError("particle number N must be >= 1")
        if self.v_mode not in ("pair", "single"):
            raise ConfigError(f"unknown v_mode {self.v_mode!r}")


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Validated lattice geometry plus precomputed bond tables.

    Bond tables are integer arrays of 0-based site indices:

    x_bonds : (n, 4) columns [site_lo, site_hi, column_index, crosses]
        where site_lo is (x, y), site_hi is (x+1, y) (wrapping under
        periodic/twisted x) and column_index is the 1-based x of the bond.
    y_bonds : (n, 5) columns [src, dst, row_index, crosses, direction]
        where the directed hop creates at dst and annihilates at src;
        direction is +1 on odd columns and -1 on even columns.
    pair_bonds : (n, 4) columns [site_odd, site_even, odd_column, row]
    """

    L_x: int
    L_y: int
    bc_x: str
    bc_y: str
    twist_x: float = 0.0
    twist_y: float = 0.0
    x_bonds: np.ndarray = field(repr=False, default=None)
    y_bonds: np.ndarray = field(repr=False, default=None)
    pair_bonds: np.ndarray = field(repr=False, default=None)

    @property
    def n_sites(self) -> int:
        return self.L_x * self.L_y

    def site(self, x: int, y: int) -> int:
        """Linear index of the site at 1-based coordinates (x, y)."""
        if not (1 <= x <= self.L_x and 1 <= y <= self.L_y):
            raise ConfigError(f"site ({x}, {y}) outside {self.L_x} x {self.L_y} lattice")
        return (y - 1) * self.L_x + (x - 1)

    def coords(self, site: int) -> tuple[int, int]:
        y, x = divmod(site, self.L_x)
        return x + 1, y + 1

    def with_boundary(self, bc_x=None, bc_y=None, twist_x=None, twist_y=None) -> "LatticeSpec":
        """Same dimensions with different boundary conditions."""
        return build_lattice(
            self.L_x,
            self.L_y,
            self.bc_x if bc_x is None else bc_x,
            self.bc_y if bc_y is None else bc_y,
            twist_x=self.twist_x if twist_x is None else twist_x,
            twist_y=self.twist_y if twist_y is None else twist_y,
        )


def build_lattice(L_x: int, L_y: int, bc_x: str = OPEN, bc_y: str = OPEN,
                  *, twist_x: float = 0.0, twist_y: float = 0.0) -> LatticeSpec:
    """Validate geometry and tabulate bonds.

    Under periodic or twisted x the two-column unit cell must tile, so L_x
    has to be even; open x allows any parity.
    """
    if L_x < 2 or L_y < 2:
        raise ConfigError(f"lattice dimensions must be >= 2, got {L_x} x {L_y}")
    for name, bc in (("bc_x", bc_x), ("bc_y", bc_y)):
        if bc not in _BC_KINDS:
            raise ConfigError(f"{name} must be one of {_BC_KINDS}, got {bc!r}")
    if bc_x in (PERIODIC, TWISTED) and L_x % 2:
        raise ConfigError(f"L_x must be even under {bc_x} x-boundary, got L_x={L_x}")

    def idx(x, y):
        return (y - 1) * L_x + (x - 1)

    x_bonds = []
    n_xcols = L_x if bc_x != OPEN else L_x - 1
    for y in range(1, L_y + 1):
        for x in range(1, n_xcols + 1):
            xp = x % L_x + 1
            x_bonds.append((idx(x, y), idx(xp, y), x, int(xp < x)))

    y_bonds = []
    n_yrows = L_y if bc_y != OPEN else L_y - 1
    for y in range(1, n_yrows + 1):
        yp = y % L_y + 1
        crosses = int(yp < y)
        for x in range(1, L_x + 1):
            if x % 2 == 1:
                y_bonds.append((idx(x, y), idx(x, yp), y, crosses, +1))
            else:
                y_bonds.append((idx(x, yp), idx(x, y), y, crosses, -1))

    pair_bonds = []
    for y in range(1, L_y + 1):
        for xo in range(1, L_x, 2):
            pair_bonds.append((idx(xo, y), idx(xo + 1, y), xo, y))

    as_arr = lambda rows, w: (np.asarray(rows, dtype=np.int64).reshape(-1, w))
    return LatticeSpec(
        L_x, L_y, bc_x, bc_y, float(twist_x), float(twist_y),
        x_bonds=as_arr(x_bonds, 4), y_bonds=as_arr(y_bonds, 5), pair_bonds=as_arr(pair_bonds, 4),
    )


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    """Bond-disorder amplitudes, all drawn uniformly from [-W/2, W/2].

    The default ("literal") correlation structure shares one amplitude per
    column of x-bonds (Jtilde, indexed by the bond's x), one per intra-cell
    pair bond column (Ptilde, indexed by the odd column), and one per row of
    y-bonds (ttilde, indexed by the bond's y). With per_bond=True every bond
    gets an independent amplitude and the arrays gain a second axis over the
    transverse coordinate.

    Amplitudes are produced by numpy's Philox counter-based generator keyed
    with the given seed, drawing Jtilde, Ptilde, ttilde in that order, so a
    realization is reproducible from (shape, W, seed, per_bond) alone.
    """

    Jtilde: np.ndarray
    Ptilde: np.ndarray
    ttilde: np.ndarray
    W: float
    seed: int
    per_bond: bool = False

    def j_amp(self, col: int, y: int) -> float:
        return float(self.Jtilde[col - 1, y - 1] if self.per_bond else self.Jtilde[col - 1])

    def p_amp(self, odd_col: int, y: int) -> float:
        k = (odd_col + 1) // 2 - 1
        return float(self.Ptilde[k, y - 1] if self.per_bond else self.Ptilde[k])

    def t_amp(self, row: int, x: int) -> float:
        return float(self.ttilde[row - 1, x - 1] if self.per_bond else self.ttilde[row - 1])


def sample_disorder(lattice: LatticeSpec, W: float, seed: int,
                    *, per_bond: bool = False) -> DisorderRealization:
    """Draw one disorder realization for the given lattice."""
    if W < 0:
        raise ConfigError(f"disorder strength W must be >= 0, got {W}")
    n_xcols = lattice.L_x if lattice.bc_x != OPEN else lattice.L_x - 1
    n_pair = lattice.L_x // 2
    n_yrows = lattice.L_y if lattice.bc_y != OPEN else lattice.L_y - 1

    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    half = W / 2.0

    def draw(*shape):
        return rng.uniform(-half, half, size=shape)

    if per_bond:
        jt = draw(n_xcols, lattice.L_y)
        pt = draw(n_pair, lattice.L_y)
        tt = draw(n_yrows, lattice.L_x)
    else:
        jt, pt, tt = draw(n_xcols), draw(n_pair), draw(n_yrows)
    return DisorderRealization(jt, pt, tt, float(W), int(seed), per_bond)
