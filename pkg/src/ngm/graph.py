"""Node-wise signal-strength matrices and thresholded edge sets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .kernels import cross_gram
from .score import RepresenterModel, _features, _jacobians_from

FULL_AVERAGE_LIMIT = 1000
DEFAULT_SUBSAMPLE = 500


@dataclass(frozen=True)
class OmegaField:
    """Per-node d x d signal strengths.

    ``matrices`` is the symmetrized estimate; ``raw`` keeps the average of
    squared partials before symmetrization, for diagnostics.
    """

    matrices: np.ndarray
    raw: np.ndarray

    @property
    def n(self) -> int:
        return self.matrices.shape[0]

    @property
    def d(self) -> int:
        return self.matrices.shape[1]

    def offdiag_values(self) -> np.ndarray:
        """Upper-triangular entries, shape (n, d(d-1)/2)."""
        iu = np.triu_indices(self.d, k=1)
        return self.matrices[:, iu[0], iu[1]]


@dataclass(frozen=True)
class EdgeSetCollection:
    """Per-node sets of unordered pairs ``(j, l)`` with ``0 <= j < l < d``."""

    n: int
    d: int
    edges: tuple

    def __post_init__(self):
        if len(self.edges) != self.n:
            raise InvalidInputError(f"expected {self.n} edge sets, got {len(self.edges)}")
        canon = []
        for es in self.edges:
            cur = set()
            for j, l in es:
                j, l = int(j), int(l)
                if j == l:
                    raise InvalidInputError(f"self-loop ({j}, {l})")
                j, l = min(j, l), max(j, l)
                if j < 0 or l >= self.d:
                    raise InvalidInputError(f"pair ({j}, {l}) out of range for d={self.d}")
                cur.add((j, l))
            canon.append(frozenset(cur))
        object.__setattr__(self, "edges", tuple(canon))

    @classmethod
    def from_mask(cls, mask) -> "EdgeSetCollection":
        """From a boolean array (n, d(d-1)/2) in ``np.triu_indices(d, 1)`` order."""
        mask = np.asarray(mask, dtype=bool)
        P = mask.shape[1]
        d = int(round((1 + np.sqrt(1 + 8 * P)) / 2))
        iu = np.triu_indices(d, k=1)
        edges = [frozenset(zip(iu[0][row].tolist(), iu[1][row].tolist())) for row in mask]
        return cls(n=mask.shape[0], d=d, edges=tuple(edges))

    @classmethod
    def homogeneous(cls, n: int, d: int, pairs) -> "EdgeSetCollection":
        pairs = frozenset((min(j, l), max(j, l)) for j, l in pairs)
        return cls(n=n, d=d, edges=(pairs,) * n)

    def to_mask(self) -> np.ndarray:
        index = {p: k for k, p in enumerate(zip(*np.triu_indices(self.d, k=1)))}
        mask = np.zeros((self.n, self.d * (self.d - 1) // 2), dtype=bool)
        for i, es in enumerate(self.edges):
            for p in es:
                mask[i, index[p]] = True
        return mask


def field_from_jacobians(jacobians) -> OmegaField:
    """Average squared partials over evaluation points, then symmetrize.

    ``jacobians`` has shape (n_targets, n_eval, d, d).
    """
    J = np.asarray(jacobians, dtype=float)
    raw = np.mean(J ** 2, axis=1)
    sym = 0.5 * (raw + np.swapaxes(raw, 1, 2))
    return OmegaField(matrices=sym, raw=raw)


def _eval_indices(n: int, eval_subsample, seed) -> np.ndarray:
    if eval_subsample is None:
        eval_subsample = n if n <= FULL_AVERAGE_LIMIT else DEFAULT_SUBSAMPLE
    eval_subsample = int(eval_subsample)
    if eval_subsample < 1 or eval_subsample > n:
        raise InvalidInputError(f"eval_subsample must be in [1, {n}], got {eval_subsample}")
    if eval_subsample == n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=eval_subsample, replace=False))


def omega(model: RepresenterModel, target_embeddings, eval_subsample: int | None = None,
          seed: int = 0) -> OmegaField:
    """Signal-strength matrices at each target embedding.

    Entry (j, l) for target ``b`` is the mean over evaluation points ``x_k`` of
    ``(d s_l(x_k; b) / d x_j)^2``, symmetrized afterwards.

    Evaluation points are the model's (standardized) training points, or a
    seeded uniform subsample of them. By default all points are used when
    ``n <= 1000`` and 500 otherwise.
    """
    T = np.asarray(target_embeddings, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    if T.ndim != 2 or T.shape[1] != model.m:
        raise InvalidInputError(f"target embeddings must have {model.m} columns")
    idx = _eval_indices(model.n, eval_subsample, seed)
    Xe = model.train_x[idx]
    G1 = cross_gram(Xe, model.train_x, model.kernel.sigma_x)
    Y = _features(model)
    uniq, inverse = np.unique(T, axis=0, return_inverse=True)
    inverse = np.ravel(inverse)
    G2 = cross_gram(uniq, model.train_b, model.kernel.sigma_b)
    d = model.d
    raw = np.empty((uniq.shape[0], d, d))
    for t in range(uniq.shape[0]):
        D = _jacobians_from(model, Xe, (G1 * G2[t]) @ Y)
        raw[t] = np.mean(D ** 2, axis=0)
    raw = raw[inverse]
    sym = 0.5 * (raw + np.swapaxes(raw, 1, 2))
    return OmegaField(matrices=sym, raw=raw)


def threshold_edges(field: OmegaField, delta: float) -> EdgeSetCollection:
    """Keep pairs ``j < l`` with ``Omega[j, l] >= delta`` at each node."""
    delta = float(delta)
    if not delta >= 0:
        raise InvalidInputError(f"delta must be >= 0, got {delta}")
    return EdgeSetCollection.from_mask(field.offdiag_values() >= delta)
