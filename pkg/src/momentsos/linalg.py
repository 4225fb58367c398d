"""Dense symmetric linear-algebra kernels.

Symmetric matrices are plain numpy arrays; callers are expected to build
them symmetrically.  The Cholesky routine is hand-rolled so that
definiteness failures report the offending pivot index and the
scale-relative tolerance is under our control; eigendecompositions are
delegated to LAPACK via numpy.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

#: a pivot below PIVOT_RTOL * max diagonal entry counts as not positive definite
PIVOT_RTOL = 1e-12


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky hit a non-positive pivot; `index` is the failing row."""

    def __init__(self, index: int, pivot: float = float("nan")):
        self.index = index
        self.pivot = pivot
        super().__init__(f"matrix not positive definite at pivot {index} ({pivot:g})")


def _as_sym(S) -> np.ndarray:
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    return S


def cholesky(S, rtol: float = PIVOT_RTOL) -> np.ndarray:
    """Lower-triangular L with S = L @ L.T.

    Raises NotPositiveDefiniteError with the pivot index when a diagonal
    pivot falls below rtol times the largest diagonal entry of S.
    """
    S = _as_sym(S)
    m = S.shape[0]
    if m == 0:
        return np.zeros((0, 0))
    diag_scale = float(np.max(np.diagonal(S)))
    threshold = rtol * max(diag_scale, 0.0)
    L = np.zeros_like(S, dtype=S.dtype if S.dtype.kind == "f" else float)
    Sf = S.astype(L.dtype, copy=False)
    for j in range(m):
        d = Sf[j, j] - L[j, :j] @ L[j, :j]
        if d <= threshold:
            raise NotPositiveDefiniteError(j, float(d))
        L[j, j] = np.sqrt(d)
        if j + 1 < m:
            L[j + 1 :, j] = (Sf[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def is_positive_definite(S, rtol: float = PIVOT_RTOL) -> bool:
    try:
        cholesky(S, rtol=rtol)
        return True
    except NotPositiveDefiniteError:
        return False


def sym_eig(S):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    S = _as_sym(S)
    w, V = np.linalg.eigh(S)
    return w, V


def gen_eig_min(A, B):
    """Smallest generalized eigenvalue of the pencil (A, B) with B > 0.

    Reduces to the standard symmetric problem L^-1 A L^-T where B = L L^T.
    Returns (lambda_min, w) with A w = lambda_min B w and w^T B w = 1.
    """
    A = _as_sym(A)
    B = _as_sym(B)
    if A.shape != B.shape:
        raise ValueError(f"pencil shapes differ: {A.shape} vs {B.shape}")
    L = cholesky(B)
    C = solve_triangular(L, A, lower=True)
    C = solve_triangular(L, C.T, lower=True).T
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    vec = solve_triangular(L.T, V[:, 0], lower=False)
    return float(w[0]), vec


def solve_from_cholesky(L: np.ndarray, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    y = solve_triangular(L, rhs, lower=True)
    return solve_triangular(L.T, y, lower=False)


def psd_solve(S, rhs) -> np.ndarray:
    """Solve S x = rhs for positive definite S via Cholesky."""
    S = _as_sym(S)
    rhs = np.asarray(rhs, dtype=float)
    L = cholesky(S)
    x = solve_from_cholesky(L, rhs)
    if __debug__:
        residual = np.linalg.norm(S @ x - rhs)
        scale = np.linalg.norm(rhs) + np.linalg.norm(S) * np.linalg.norm(x)
        assert residual <= 1e-8 * max(scale, 1e-300), "psd_solve residual too large"
    return x


def solve_refined(L: np.ndarray, S: np.ndarray, rhs, refine: int = 1) -> np.ndarray:
    """Cholesky solve with extended-precision residual refinement.

    Recovers full double accuracy on ill-conditioned but exactly-posed
    systems (condition numbers up to ~1e12); L is the precomputed factor.
    """
    rhs = np.asarray(rhs, dtype=float)
    x = solve_from_cholesky(L, rhs)
    Sx = S.astype(np.longdouble)
    bx = rhs.astype(np.longdouble)
    for _ in range(refine):
        r = (bx - Sx @ x.astype(np.longdouble)).astype(np.float64)
        x = x + solve_from_cholesky(L, r)
    return x


def psd_inverse(S, refine: int = 1) -> np.ndarray:
    """Inverse of a positive definite matrix.

    `refine` steps of iterative refinement with the residual accumulated in
    extended precision; this keeps coefficient-space identities (for example
    reciprocal Christoffel polynomials at degree 8+) accurate well past what
    a plain Cholesky inverse delivers, while inputs and outputs stay double.
    """
    S = _as_sym(S)
    L = cholesky(S)
    Linv = solve_triangular(L, np.eye(S.shape[0]), lower=True)
    Q = Linv.T @ Linv
    Q = 0.5 * (Q + Q.T)
    if refine > 0:
        Sx = S.astype(np.longdouble)
        eye = np.eye(S.shape[0], dtype=np.longdouble)
        for _ in range(refine):
            R = eye - Sx @ Q.astype(np.longdouble)
            Q = Q + (Q.astype(np.longdouble) @ R).astype(np.float64)
            Q = 0.5 * (Q + Q.T)
    return Q


def logdet_psd(S) -> float:
    """log det of a positive definite matrix via Cholesky."""
    L = cholesky(S)
    return float(2.0 * np.sum(np.log(np.diagonal(L))))


def min_eigenvalue(S) -> float:
    S = _as_sym(S)
    return float(np.linalg.eigvalsh(S)[0])
