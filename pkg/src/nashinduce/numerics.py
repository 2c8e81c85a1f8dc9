"""Dense linear-algebra kernels shared by the rest of the package.

Everything here operates on plain numpy arrays and is a pure function of its
inputs.  Matrices handed to these routines must be finite; constructors and
entry points reject NaN/Inf.
"""

from __future__ import annotations

import numpy as np

# Default tolerances.  Callers may override per call; nothing below hard-codes
# them inside the logic.
PSD_TOL = 1e-8
RANK_TOL = 1e-9
HURWITZ_MARGIN = 1e-9
LYAPUNOV_RESIDUAL_TOL = 1e-9


class DimensionError(ValueError):
    """Incompatible or invalid matrix dimensions."""


class NumericalFailureError(RuntimeError):
    """An iterative or direct solve failed to produce a usable result."""


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array, rejecting non-finite entries."""
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def require_square(M, name: str = "matrix") -> np.ndarray:
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def symmetrize(M, tol: float = PSD_TOL, name: str = "matrix") -> np.ndarray:
    """Return (M + M')/2, rejecting inputs asymmetric beyond tol (relative)."""
    A = require_square(M, name)
    scale = max(1.0, float(np.linalg.norm(A)))
    if np.linalg.norm(A - A.T) > tol * scale:
        raise ValueError(f"{name} is not symmetric within tolerance {tol}")
    return 0.5 * (A + A.T)


def eig(M) -> np.ndarray:
    """All eigenvalues (with multiplicity) of a square matrix."""
    A = require_square(M)
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericalFailureError(f"eigenvalue iteration failed: {exc}") from exc


def is_hurwitz(M, margin: float = HURWITZ_MARGIN) -> bool:
    """True iff every eigenvalue has real part < -margin."""
    return bool(np.max(eig(M).real) < -margin)


def is_psd(M, tol: float = PSD_TOL) -> bool:
    """True iff the symmetric matrix M has min eigenvalue >= -tol*max(1,||M||)."""
    A = symmetrize(M, tol)
    w = np.linalg.eigvalsh(A)
    return bool(w.min() >= -tol * max(1.0, float(np.linalg.norm(A))))


def is_pd(M, tol: float = PSD_TOL) -> bool:
    """Strict variant of is_psd: min eigenvalue > +tol*max(1,||M||)."""
    A = symmetrize(M, tol)
    w = np.linalg.eigvalsh(A)
    return bool(w.min() > tol * max(1.0, float(np.linalg.norm(A))))


def vec(M) -> np.ndarray:
    """Column-stacking vectorization (column 1 first)."""
    A = as_matrix(M)
    return A.flatten(order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.size != rows * cols:
        raise DimensionError(f"cannot reshape length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron(M, N) -> np.ndarray:
    return np.kron(as_matrix(M), as_matrix(N))


def kron_sum(N, M) -> np.ndarray:
    """Kronecker sum: (N (x) I_m) + (I_n (x) M) for N n x n, M m x m."""
    A = require_square(N, "N")
    B = require_square(M, "M")
    n, m = A.shape[0], B.shape[0]
    return np.kron(A, np.eye(m)) + np.kron(np.eye(n), B)


def solve_lyapunov(Acl, W, tol: float = LYAPUNOV_RESIDUAL_TOL) -> np.ndarray:
    """Solve P Acl + Acl' P = -W for symmetric W and Hurwitz Acl.

    Solved by Kronecker vectorization (dense n^2 x n^2 system); intended for
    the desk scales this package works at (n <= 32).
    """
    A = require_square(Acl, "Acl")
    Ws = symmetrize(W, name="W")
    if A.shape != Ws.shape:
        raise DimensionError("Acl and W must have the same shape")
    if not is_hurwitz(A):
        raise ValueError("Acl must be Hurwitz for a Lyapunov solve")
    n = A.shape[0]
    # vec(P Acl) = (Acl' (x) I) vec(P); vec(Acl' P) = (I (x) Acl') vec(P)
    K = kron_sum(A.T, A.T)
    try:
        p = np.linalg.solve(K, -vec(Ws))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"singular vectorized Lyapunov system: {exc}") from exc
    P = unvec(p, n, n)
    P = 0.5 * (P + P.T)
    resid = np.linalg.norm(P @ A + A.T @ P + Ws)
    if resid > tol * max(1.0, float(np.linalg.norm(Ws))):
        raise NumericalFailureError(f"Lyapunov residual {resid:.3e} above tolerance")
    return P


def nullspace(M, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical right nullspace of M.

    Returns an array with zero columns when M has full column rank.
    """
    A = as_matrix(M)
    u, s, vh = np.linalg.svd(A, full_matrices=True)
    if s.size == 0:
        return np.eye(A.shape[1])
    cutoff = tol * max(1.0, s[0])
    rank = int(np.sum(s > cutoff))
    return vh[rank:].T.conj()


def matrix_rank(M, tol: float = RANK_TOL) -> int:
    A = np.atleast_2d(np.asarray(M))
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def psd_project(M, floor: float = 0.0) -> np.ndarray:
    """Nearest (Frobenius) symmetric matrix with eigenvalues >= floor."""
    A = 0.5 * (as_matrix(M) + as_matrix(M).T)
    w, V = np.linalg.eigh(A)
    w = np.maximum(w, floor)
    return V @ np.diag(w) @ V.T


def psd_sqrt_factor(Q, tol: float = RANK_TOL) -> np.ndarray:
    """Rank-revealing factor C with C'C = Q for PSD Q; C has rank(Q) rows."""
    A = symmetrize(Q, name="Q")
    w, V = np.linalg.eigh(A)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    keep = w > tol * scale
    C = (np.sqrt(w[keep])[:, None] * V[:, keep].T)
    return C


# Packing of symmetric matrices into vectors that preserves the Frobenius
# inner product (off-diagonals scaled by sqrt(2)), so Euclidean projections in
# packed coordinates are Frobenius projections on matrices.

def sym_basis_indices(n: int):
    return [(k, l) for k in range(n) for l in range(k, n)]


def sym_pack(M) -> np.ndarray:
    A = symmetrize(M)
    n = A.shape[0]
    r2 = np.sqrt(2.0)
    return np.array([A[k, l] * (1.0 if k == l else r2) for k, l in sym_basis_indices(n)])


def sym_unpack(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    A = np.zeros((n, n))
    r2 = np.sqrt(2.0)
    for x, (k, l) in zip(v, sym_basis_indices(n)):
        if k == l:
            A[k, k] = x
        else:
            A[k, l] = A[l, k] = x / r2
    return A


def sym_dim(n: int) -> int:
    return n * (n + 1) // 2
