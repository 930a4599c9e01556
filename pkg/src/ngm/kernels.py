"""Gaussian kernels on data space and embedding space.

Both kernels have the form ``k(p, q) = exp(-sigma**2 * ||p - q||**2)``; ``sigma``
is an *inverse* bandwidth. The derivative helpers follow one fixed orientation:
``grad2_k1`` differentiates with respect to the SECOND argument, and
``hess12_k1`` is the mixed partial d/dx_j d/dx'_l.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import DegenerateDataError, InvalidInputError

# above this many points the median is taken over a random subset of pairs
MEDIAN_EXACT_LIMIT = 5000
MEDIAN_PAIR_SAMPLES = 1_000_000


@dataclass(frozen=True)
class KernelConfig:
    """Inverse bandwidths of the data kernel (``sigma_x``) and embedding kernel (``sigma_b``)."""

    sigma_x: float
    sigma_b: float

    def __post_init__(self):
        for name in ("sigma_x", "sigma_b"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be positive and finite, got {v!r}")


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2:
        raise InvalidInputError(f"points must be a 1-d or 2-d array, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InvalidInputError("points contain non-finite coordinates")
    return P


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidInputError(f"sigma must be positive and finite, got {sigma!r}")
    return sigma


def median_heuristic(points, seed: int = 0) -> float:
    """Return ``1 / median`` of pairwise Euclidean distances over distinct pairs.

    Parameters
    ----------
    points : array_like, shape (n,) or (n, p)
    seed : int
        Only used when ``n > MEDIAN_EXACT_LIMIT``, where the median is estimated
        from ``MEDIAN_PAIR_SAMPLES`` uniformly drawn pairs.
    """
    P = _as_points(points)
    n = P.shape[0]
    if n < 2:
        raise InvalidInputError("median heuristic needs at least 2 points")
    if n <= MEDIAN_EXACT_LIMIT:
        dists = pdist(P)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=MEDIAN_PAIR_SAMPLES)
        j = rng.integers(0, n - 1, size=MEDIAN_PAIR_SAMPLES)
        j = j + (j >= i)  # uniform over j != i
        dists = np.linalg.norm(P[i] - P[j], axis=1)
    med = float(np.median(dists))
    if med <= 0:
        raise DegenerateDataError("median pairwise distance is zero; points are (mostly) identical")
    return 1.0 / med


def cross_gram(P, Q, sigma: float) -> np.ndarray:
    """Kernel matrix between two point sets, entry (a, b) = k(P[a], Q[b])."""
    sigma = _check_sigma(sigma)
    P, Q = _as_points(P), _as_points(Q)
    if P.shape[1] != Q.shape[1]:
        raise InvalidInputError("point sets have different dimensions")
    return np.exp(-(sigma**2) * cdist(P, Q, "sqeuclidean"))


def gram(points, sigma: float) -> np.ndarray:
    """Gram matrix ``exp(-sigma^2 ||p_i - p_j||^2)`` of one point set."""
    P = _as_points(points)
    G = cross_gram(P, P, sigma)
    # cdist leaves tiny round-off on the diagonal in some BLAS paths
    np.fill_diagonal(G, 1.0)
    return G


def _pair(x, x_prime, j_indices):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape != xp.shape or x.ndim != 1:
        raise InvalidInputError("x and x_prime must be vectors of equal length")
    d = x.shape[0]
    for j in j_indices:
        if not (0 <= int(j) < d) or int(j) != j:
            raise InvalidInputError(f"coordinate index {j} out of range for dimension {d}")
    return x, xp


def k1(x, x_prime, sigma: float) -> float:
    """Scalar Gaussian kernel value."""
    x, xp = _pair(x, x_prime, ())
    sigma = _check_sigma(sigma)
    return float(np.exp(-(sigma**2) * np.sum((x - xp) ** 2)))


def grad2_k1(x, x_prime, sigma: float, j: int) -> float:
    """d k(x, x') / d x'_j  =  2 sigma^2 (x_j - x'_j) k(x, x')."""
    x, xp = _pair(x, x_prime, (j,))
    sigma = _check_sigma(sigma)
    kv = np.exp(-(sigma**2) * np.sum((x - xp) ** 2))
    return float(2.0 * sigma**2 * (x[j] - xp[j]) * kv)


def hess12_k1(x, x_prime, sigma: float, j: int, l: int) -> float:
    """d^2 k(x, x') / (d x_j d x'_l)."""
    x, xp = _pair(x, x_prime, (j, l))
    sigma = _check_sigma(sigma)
    s2 = sigma**2
    kv = np.exp(-s2 * np.sum((x - xp) ** 2))
    return float((2.0 * s2 * (j == l) - 4.0 * s2 * s2 * (x[j] - xp[j]) * (x[l] - xp[l])) * kv)
