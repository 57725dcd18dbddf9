"""Dense linear-algebra helpers used by the estimators.

The heavy lifting is delegated to LAPACK through numpy/scipy; this module
adds the checks, error types and conventions (column-major ``vec``,
symmetric square roots, descending eigenvalues) the rest of the package
relies on.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import linalg as sla

from .errors import DimensionMismatch, NoConvergence, NotPositiveDefinite, SingularMatrix

__all__ = [
    "cholesky",
    "cho_solve",
    "spd_inverse",
    "sym_eigen",
    "psd_sqrt",
    "spectral_radius",
    "companion",
    "lu_solve",
    "kron",
    "vec",
    "unvec",
]

SYM_RTOL = 1e-10
PIVOT_TOL = 1e-12


def _as_square(A, name="A"):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    return A


def _check_symmetric(A, rtol=SYM_RTOL):
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    if np.abs(A - A.T).max(initial=0.0) > rtol * scale:
        raise DimensionMismatch("matrix is not symmetric")


def cholesky(A, *, check_symmetric=True):
    """Lower-triangular ``L`` with ``A = L @ L.T``.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is not strictly positive (relative to the diagonal scale).
    """
    A = _as_square(A)
    if check_symmetric:
        _check_symmetric(A)
    if A.shape[0] == 0:
        return A.copy()
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    d = np.diag(L)
    if not np.all(d > PIVOT_TOL * np.sqrt(max(np.abs(np.diag(A)).max(), 1e-300))):
        raise NotPositiveDefinite("pivot below tolerance")
    return L


def cho_solve(L, b):
    """Solve ``(L L') x = b`` given the Cholesky factor ``L``."""
    y = sla.solve_triangular(L, b, lower=True, check_finite=False)
    return sla.solve_triangular(L.T, y, lower=False, check_finite=False)


def spd_inverse(A):
    L = cholesky(A)
    inv = cho_solve(L, np.eye(A.shape[0]))
    return 0.5 * (inv + inv.T)


def sym_eigen(A):
    """Eigen-decomposition of a symmetric matrix.

    Returns
    -------
    w : ndarray
        Eigenvalues in descending order.
    Q : ndarray
        Orthonormal eigenvectors, ``A = Q @ diag(w) @ Q.T``.
    """
    A = _as_square(A)
    _check_symmetric(A)
    try:
        w, Q = np.linalg.eigh(0.5 * (A + A.T))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from None
    return w[::-1].copy(), Q[:, ::-1].copy()


def psd_sqrt(A, inverse=False):
    """Symmetric square root ``Q diag(w^{±1/2}) Q'`` of a PSD matrix."""
    A = _as_square(A)
    w, Q = sym_eigen(A)
    scale = np.abs(w).max(initial=0.0)
    if w.size and w[-1] < -1e-10 * max(scale, 1.0):
        raise NotPositiveDefinite(f"negative eigenvalue {w[-1]:.3e}")
    if inverse:
        if w.size and w[-1] <= 1e-12 * scale:
            raise SingularMatrix("cannot invert a singular PSD matrix")
        d = 1.0 / np.sqrt(w)
    else:
        d = np.sqrt(np.clip(w, 0.0, None))
    S = (Q * d) @ Q.T
    return 0.5 * (S + S.T)


def spectral_radius(A):
    """Largest eigenvalue modulus of a square matrix."""
    A = _as_square(A)
    if A.shape[0] == 0:
        return 0.0
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from None
    return float(np.abs(ev).max())


def companion(Phi):
    """Companion matrix ``[Phi_1 .. Phi_p; I 0]`` of a stack of VAR matrices.

    ``Phi`` has shape ``(p, N, N)``.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    p, N, _ = Phi.shape
    C = np.zeros((N * p, N * p))
    if p == 0:
        return C
    C[:N, :] = np.concatenate(list(Phi), axis=1)
    C[N:, : N * (p - 1)] = np.eye(N * (p - 1))
    return C


def lu_solve(A, b):
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises
    ------
    SingularMatrix
        If a pivot magnitude is below 1e-12 (relative to ``max |A|``).
    """
    A = _as_square(A)
    with warnings.catch_warnings():
        # exact singularity is reported through SingularMatrix below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    scale = max(np.abs(A).max(initial=0.0), 1e-300)
    if np.abs(np.diag(lu)).min(initial=np.inf) <= PIVOT_TOL * scale:
        raise SingularMatrix("LU pivot below tolerance")
    return sla.lu_solve((lu, piv), b, check_finite=False)


def kron(A, B):
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def vec(A):
    """Stack the columns of ``A`` into a single column (column-major)."""
    return np.asarray(A).reshape(-1, order="F")


def unvec(v, rows, cols=None):
    cols = rows if cols is None else cols
    return np.asarray(v).reshape((rows, cols), order="F")
