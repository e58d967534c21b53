"""Small dense linear-algebra helpers used throughout the package."""

from __future__ import annotations

import numpy as np


def sym(m: np.ndarray) -> np.ndarray:
    """Symmetric part (P + P') / 2, used after every covariance update."""
    return 0.5 * (m + m.T)


def is_symmetric(m: np.ndarray, tol: float = 1e-10) -> bool:
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.all(np.abs(m - m.T) <= tol)


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(sym(m))[0])


def psd_sqrt(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Symmetric square root of a PSD matrix via eigendecomposition.

    Eigenvalues below -tol raise; tiny negatives from rounding are clipped
    to zero, so singular covariances are admissible.
    """
    vals, vecs = np.linalg.eigh(sym(m))
    if vals[0] < -tol * max(1.0, abs(float(vals[-1]))):
        raise ValueError(f"matrix is not PSD (min eigenvalue {vals[0]:.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def whiten_output(c: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Factor H of the information matrix: H'H = C'R^{-1}C with H = L^{-1}C,
    where R = LL' is the Cholesky factorization."""
    chol = np.linalg.cholesky(r)
    return np.linalg.solve(chol, c)


def block_diag(blocks) -> np.ndarray:
    """Dense block-diagonal assembly of 2-d arrays."""
    blocks = [np.atleast_2d(b) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r : r + b.shape[0], c : c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out
