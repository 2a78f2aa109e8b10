"""Eigensolvers for the assembled non-Hermitian matrix.

Small problems get a full dense decomposition; large ones are attacked with
shift-invert Arnoldi around a complex target. Right eigenvectors only: the
observables are right-right expectation values throughout.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapacityError, SolverError

DENSE_TOL = 1e-8
TARGETED_TOL = 1e-6
DEFAULT_DENSE_CAP = 8000


def dense_cap() -> int:
    env = os.environ.get("DOUBLON_ED_DENSE_CAP")
    return int(env) if env else DEFAULT_DENSE_CAP


@dataclass(eq=False)
class EigenSolution:
    """Eigenvalues, unit-norm right eigenvectors (columns), and residuals."""

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    residuals: np.ndarray
    method: str

    @property
    def n(self) -> int:
        return self.eigenvalues.size


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Normalize columns and rotate the largest component to be real positive."""
    norms = np.linalg.norm(vectors, axis=0)
    vectors = vectors / norms
    lead = np.abs(vectors).argmax(axis=0)
    pivots = vectors[lead, np.arange(vectors.shape[1])]
    phases = pivots / np.abs(pivots)
    return vectors / phases


def _residuals(H, eigenvalues, vectors) -> np.ndarray:
    R = H @ vectors - vectors * eigenvalues[None, :]
    return np.linalg.norm(R, axis=0)


def _fro_norm(H) -> float:
    return float(np.sqrt((np.abs(H.data) ** 2).sum())) if sp.issparse(H) else float(np.linalg.norm(H))


def eig_dense(H, cap: int | None = None) -> EigenSolution:
    """Full decomposition, eigenpairs sorted by (Re, Im)."""
    dim = H.shape[0]
    cap = dense_cap() if cap is None else cap
    if dim > cap:
        raise CapacityError(f"dense solve at dim {dim} exceeds cap {cap}")
    dense = H.toarray() if sp.issparse(H) else np.asarray(H, dtype=np.complex128)
    try:
        vals, vecs = la.eig(dense, check_finite=False)
    except la.LinAlgError as exc:
        raise SolverError(f"dense eigendecomposition failed: {exc}") from exc
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], _fix_phase(vecs[:, order])
    res = _residuals(H, vals, vecs)
    tol = DENSE_TOL * max(_fro_norm(H), 1e-300)
    if res.max(initial=0.0) > tol:
        raise SolverError(f"dense residual {res.max():.3e} above {tol:.3e}")
    return EigenSolution(vals, vecs, res, "dense")


def eig_targeted(H, sigma: complex, k: int, max_retries: int = 3) -> EigenSolution:
    """k eigenpairs nearest the complex shift sigma, residual certified.

    A singular factorization of (H - sigma I) is retried with a documented
    jitter of 1e-8 * ||H||_F added to sigma, at most max_retries times.
    """
    dim = H.shape[0]
    if k < 1:
        raise SolverError("k must be >= 1")
    if k > dim:
        raise SolverError(f"requested k={k} eigenpairs from dimension {dim}")
    fro = _fro_norm(H)
    if k >= dim - 1:
        # ARPACK needs k < dim-1; fall back to the dense path and trim.
        sol = eig_dense(H)
        order = np.argsort(np.abs(sol.eigenvalues - sigma), kind="stable")[:k]
        return EigenSolution(sol.eigenvalues[order], sol.right_vectors[:, order],
                             sol.residuals[order], f"targeted({sigma}, {k})")
    v0 = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    shift = complex(sigma)
    last_exc = None
    for attempt in range(max_retries + 1):
        try:
            vals, vecs = spla.eigs(H.tocsc() if sp.issparse(H) else H, k=k, sigma=shift,
                                   v0=v0, maxiter=5000)
            break
        except (RuntimeError, spla.ArpackError, spla.ArpackNoConvergence) as exc:
            last_exc = exc
            shift += 1e-8 * fro * (1.0 + 1.0j)
    else:
        raise SolverError(f"shift-invert failed after retries: {last_exc}")
    order = np.argsort(np.abs(vals - sigma), kind="stable")
    vals, vecs = vals[order], _fix_phase(vecs[:, order])
    res = _residuals(H, vals, vecs)
    tol = TARGETED_TOL * max(fro, 1e-300)
    if res.max(initial=0.0) > tol:
        raise SolverError(f"targeted residual {res.max():.3e} above {tol:.3e}")
    return EigenSolution(vals, vecs, res, f"targeted({sigma}, {k})")
