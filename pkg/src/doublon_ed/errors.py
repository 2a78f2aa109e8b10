"""Exception taxonomy shared by the library and the CLI exit codes."""


class DoublonError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(DoublonError):
    """Invalid configuration, lattice geometry, or parameter combination."""

    exit_code = 2


class SolverError(DoublonError):
    """Eigensolver failure (non-convergence, residual violation, singular shift)."""

    exit_code = 3


class CapacityError(DoublonError):
    """A requested problem size exceeds a configured cap."""

    exit_code = 4


class NoGapError(DoublonError):
    """The doublon bands are not separated; no gap window can be defined."""

    exit_code = 3


class WindingError(DoublonError):
    """Winding-number evaluation failed (reference energy on the spectrum, aliasing)."""

    exit_code = 3
