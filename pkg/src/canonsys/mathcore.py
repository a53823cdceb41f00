"""Small dense matrix primitives: the symplectic unit, exp/log, structure predicates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidDimensionError, InvalidInputError, SingularMatrixError

DEFAULT_TOL = 1e-9

# eigenvector matrices worse than this are treated as defective for the log
_EIG_COND_LIMIT = 1e8
_SINGULAR_RTOL = 1e-14


def standard_J(n: int) -> np.ndarray:
    """Return the 2n x 2n matrix ``[[0, -I], [I, 0]]``."""
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"N must be a positive integer, got {n!r}")
    n = int(n)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def _as_square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def matrix_exp(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with Pade approximants."""
    return scipy.linalg.expm(_as_square(A))


def principal_log(lam):
    """Scalar principal logarithm with imaginary part in (-pi, pi].

    Values on the negative real axis (up to rounding in the imaginary part)
    are mapped to ``+i*pi``, so ``-1`` never lands on ``-i*pi``.
    """
    lam = np.asarray(lam, dtype=complex)
    out = np.log(lam)
    on_cut = (lam.real < 0) & (np.abs(lam.imag) <= 4 * np.finfo(float).eps * np.abs(lam))
    out = np.where(on_cut, np.log(np.abs(lam)) + 1j * np.pi, out)
    return out if out.ndim else complex(out)


def matrix_log(A) -> np.ndarray:
    """Principal matrix logarithm, always returned as a complex array.

    Diagonalizable input with a well conditioned eigenbasis goes through the
    eigendecomposition with branch-snapped scalar logs; anything else falls
    back to inverse scaling and squaring (``scipy.linalg.logm``).
    """
    A = _as_square(A)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= _SINGULAR_RTOL * max(sv[0], np.finfo(float).tiny):
        raise SingularMatrixError(
            f"matrix is numerically singular (smallest singular value {sv[-1]:.3e})"
        )
    w, V = np.linalg.eig(A)
    if np.linalg.cond(V) < _EIG_COND_LIMIT:
        L = (V * principal_log(w)) @ np.linalg.inv(V)
    else:
        L = scipy.linalg.logm(A.astype(complex))
    return np.asarray(L, dtype=complex)


@dataclass(frozen=True)
class StructureReport:
    is_symmetric: bool
    asymmetry: float
    is_psd: bool
    min_eigenvalue: float
    is_symplectic: bool
    symplectic_residual: float
    tolerance: float


def symplectic_residual(M) -> float:
    """Frobenius norm of ``M^T J M - J``; NaN for odd dimensions."""
    M = np.asarray(M)
    d = M.shape[0]
    if d % 2:
        return float("nan")
    J = standard_J(d // 2)
    return float(np.linalg.norm(M.T @ J @ M - J))


def structure_check(A, tol: float = DEFAULT_TOL) -> StructureReport:
    """Evaluate symmetry, positive semidefiniteness and symplecticity of ``A``.

    Symmetry is the plain transpose test; the PSD test uses the eigenvalues of
    the Hermitian part, which coincides with the symmetric part for real input.
    """
    if not tol > 0:
        raise InvalidInputError("tolerance must be positive")
    A = np.asarray(A)
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    herm = 0.5 * (A + A.conj().T)
    min_eig = float(np.min(np.linalg.eigvalsh(herm)))
    sres = symplectic_residual(A)
    return StructureReport(
        is_symmetric=asym <= tol,
        asymmetry=asym,
        is_psd=min_eig >= -tol,
        min_eigenvalue=min_eig,
        is_symplectic=bool(sres <= tol),
        symplectic_residual=sres,
        tolerance=tol,
    )
