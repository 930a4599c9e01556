"""Adjacency spectral embedding and rotation alignment."""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, RankDeficiencyError


def _symmetric(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"adjacency must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("adjacency has non-finite entries")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12):
        raise InvalidInputError("adjacency must be symmetric")
    return A


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive (first one on ties)."""
    V = np.array(V, dtype=float, copy=True)
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def ase(A, m: int) -> np.ndarray:
    """Adjacency spectral embedding ``U_m diag(lambda_m)^{1/2}``.

    Uses the symmetric eigendecomposition and keeps only the ``m`` largest
    strictly positive eigenvalues.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Symmetric adjacency (or any symmetric matrix, e.g. a probability matrix).
    m : int
        Embedding dimension.

    Returns
    -------
    ndarray, shape (n, m)
        Row ``i`` is the latent position of node ``i``.
    """
    A = _symmetric(A)
    m = int(m)
    if m < 1:
        raise InvalidInputError("embedding dimension must be >= 1")
    vals, vecs = np.linalg.eigh(A)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    n_pos = int(np.sum(vals > 0))
    if n_pos < m:
        raise RankDeficiencyError(f"requested m={m} but A has only {n_pos} positive eigenvalues")
    U = fix_signs(vecs[:, :m])
    return U * np.sqrt(vals[:m])


def top_eigenvalues(A, k: int) -> np.ndarray:
    """The ``k`` largest eigenvalues of symmetric ``A``, decreasing."""
    vals = np.linalg.eigvalsh(_symmetric(A))
    return vals[::-1][:k]


def choose_dim_from_eigenvalues(eigenvalues, m_max: int) -> int:
    """Elbow rule: 1-based position of the largest consecutive gap among the
    top ``m_max`` positive eigenvalues (first position wins ties)."""
    if m_max < 2:
        raise InvalidInputError("m_max must be >= 2")
    vals = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    vals = vals[vals > 0][:m_max]
    if vals.size == 0:
        raise RankDeficiencyError("no positive eigenvalues")
    if vals.size == 1:
        return 1
    gaps = vals[:-1] - vals[1:]
    return int(np.argmax(gaps)) + 1


def choose_dim(A, m_max: int) -> int:
    """Pick an embedding dimension for ``A`` by the largest eigen-gap."""
    return choose_dim_from_eigenvalues(np.linalg.eigvalsh(_symmetric(A)), m_max)


def procrustes_align(B_hat, B_ref) -> np.ndarray:
    """Orthogonal ``Q`` minimising ``||B_hat Q - B_ref||_F`` (polar factor of ``B_hat^T B_ref``)."""
    B_hat = np.asarray(B_hat, dtype=float)
    B_ref = np.asarray(B_ref, dtype=float)
    if B_hat.shape != B_ref.shape or B_hat.ndim != 2:
        raise InvalidInputError(f"shape mismatch: {B_hat.shape} vs {B_ref.shape}")
    U, _, Vt = np.linalg.svd(B_hat.T @ B_ref)
    return U @ Vt


def two_to_infinity(M) -> float:
    """max row Euclidean norm."""
    M = np.asarray(M, dtype=float)
    return float(np.max(np.linalg.norm(M, axis=1)))
