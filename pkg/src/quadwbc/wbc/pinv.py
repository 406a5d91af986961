"""Pseudo-inverse primitives used by the task hierarchy."""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-6


def svd_pinv_rank(M: np.ndarray, tol: float = DEFAULT_TOL,
                  ) -> tuple[np.ndarray, int]:
    """Pseudo-inverse plus the numerical rank from the same decomposition."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return M.T.copy(), 0
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0])), 0
    keep = s > tol * s[0]
    inv = np.where(keep, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (Vt.T * inv) @ U.T, int(keep.sum())


def svd_pinv(M: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular value cutoff."""
    return svd_pinv_rank(M, tol)[0]


def dyn_pinv(J: np.ndarray, A: np.ndarray,
             diagnostics: dict | None = None) -> np.ndarray:
    """Inertia-weighted pseudo-inverse A^-1 J^T (J A^-1 J^T)^-1.

    Intended for full-row-rank J.  A rank-deficient product falls back to
    a damped inverse (damping 1e-6) and notes it in diagnostics.
    """
    J = np.asarray(J, dtype=float)
    A = np.asarray(A, dtype=float)
    AinvJT = np.linalg.solve(A, J.T)
    JAJt = J @ AinvJT
    damped = False
    try:
        # reject nearly singular systems that solve() would accept
        cond = np.linalg.cond(JAJt)
        if not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError
        out = AinvJT @ np.linalg.inv(JAJt)
    except np.linalg.LinAlgError:
        damped = True
        out = AinvJT @ np.linalg.inv(JAJt + 1e-6 * np.eye(JAJt.shape[0]))
    if diagnostics is not None:
        diagnostics["dyn_pinv_damped"] = damped
    return out


def inv_sqrt_spd(A: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix."""
    w, V = np.linalg.eigh(np.asarray(A, dtype=float))
    if w[0] <= 0.0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return (V / np.sqrt(w)) @ V.T


def weighted_pinv(J: np.ndarray, A_inv_sqrt: np.ndarray,
                  tol: float = DEFAULT_TOL) -> np.ndarray:
    """Rank-safe inertia-weighted pseudo-inverse.

    Equal to dyn_pinv on full-row-rank input, but degrades to the
    minimum-norm solution in the inertia metric when rows are dependent,
    which keeps null-space projectors exact.  Used inside the hierarchy.
    """
    return weighted_pinv_rank(J, A_inv_sqrt, tol)[0]


def weighted_pinv_rank(J: np.ndarray, A_inv_sqrt: np.ndarray,
                       tol: float = DEFAULT_TOL) -> tuple[np.ndarray, int]:
    P, rank = svd_pinv_rank(np.asarray(J, dtype=float) @ A_inv_sqrt, tol)
    return A_inv_sqrt @ P, rank
