"""Dense linear algebra helpers used across the package.

Matrices are plain numpy arrays and vectorization is always column-major,
so ``vec(A X B^T) = kron(B, A) vec(X)`` holds with ``numpy.kron``.  All
routines are pure functions of their inputs.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import NotPsdError

# Relative threshold for every numerical rank decision in the package.
RANK_RTOL = 1e-9


class SymEig(NamedTuple):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending."""

    values: np.ndarray
    vectors: np.ndarray


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major vectorization of a matrix."""
    return np.asarray(a).reshape(-1, order="F")


def mat(v: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`vec` for the given matrix shape."""
    return np.asarray(v).reshape(shape, order="F")


def sym(a: np.ndarray) -> np.ndarray:
    """Symmetric part of a square matrix."""
    return 0.5 * (a + a.T)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, column-major convention as in :func:`vec`."""
    return np.kron(a, b)


def orth_basis(a: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column span of ``a``.

    Columns with singular value below ``rtol * sigma_max`` are treated as
    numerically zero; the result has exactly rank(a) columns.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((a.shape[0], 0))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0))
    rank = int(np.sum(s > rtol * s[0]))
    return u[:, :rank]


def orth_complement(p: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the span of ``p``."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    n = p.shape[0]
    if p.shape[1] == 0:
        return np.eye(n)
    u, s, _ = np.linalg.svd(p, full_matrices=True)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return u[:, rank:]


def sym_eig(s: np.ndarray) -> SymEig:
    """Eigendecomposition of a symmetric matrix."""
    values, vectors = np.linalg.eigh(s)
    return SymEig(values, vectors)


def psd_split(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a symmetric matrix into its PSD parts: ``s = pos - neg`` with
    ``pos, neg >= 0`` and ``<pos, neg> = 0``."""
    values, vectors = sym_eig(s)
    pos = (vectors * np.maximum(values, 0.0)) @ vectors.T
    neg = (vectors * np.maximum(-values, 0.0)) @ vectors.T
    return sym(pos), sym(neg)


def factor_gram(h: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Factor a PSD matrix as ``h = a.T @ a``.

    Uses Cholesky when ``h`` is numerically positive definite, otherwise an
    eigenvalue factorization whose row count equals the numerical rank.
    Raises :class:`NotPsdError` when an eigenvalue is below
    ``-rtol * max(|eigenvalues|)``.
    """
    h = np.asarray(h, dtype=float)
    try:
        return np.linalg.cholesky(h).T
    except np.linalg.LinAlgError:
        pass
    values, vectors = sym_eig(h)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if values.size and values[0] < -rtol * max(scale, 1.0):
        raise NotPsdError(
            f"matrix has negative eigenvalue {values[0]:.3e} (scale {scale:.3e})"
        )
    keep = values > rtol * scale
    return (np.sqrt(values[keep])[:, None] * vectors[:, keep].T)


@lru_cache(maxsize=None)
def _svec_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the lower triangle in column-major order."""
    cols, rows = np.triu_indices(n)
    return rows, cols


def svec_dim(n: int) -> int:
    """Length of the symmetric vectorization of an n x n matrix."""
    return n * (n + 1) // 2


def svec(s: np.ndarray) -> np.ndarray:
    """Isometric vectorization of a symmetric matrix.

    Off-diagonal entries are scaled by sqrt(2) so that
    ``svec(a) @ svec(b) == <a, b>_F``.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    rows, cols = _svec_indices(n)
    out = s[..., rows, cols].copy()
    out[..., rows != cols] *= np.sqrt(2.0)
    return out


def smat(v: np.ndarray, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float)
    if n is None:
        n = int(round((np.sqrt(8 * v.shape[-1] + 1) - 1) / 2))
    rows, cols = _svec_indices(n)
    off = rows != cols
    vals = v.copy()
    vals[..., off] /= np.sqrt(2.0)
    out = np.zeros(v.shape[:-1] + (n, n))
    out[..., rows, cols] = vals
    out[..., cols, rows] = vals
    return out
