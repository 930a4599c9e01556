"""Seeded simulation designs for network-linked heterogeneous graphical models.

Each generator is a pure function of ``(n, d, seed)`` and keyword options.
The master seed is split with ``np.random.SeedSequence`` into three
independent streams: network, supports, observations.

Variables and nodes are 0-based throughout: the ``k``-th butterfly pair is
``(2k, 2k + 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .embedding import fix_signs
from .errors import GeneratorError, InvalidInputError
from .graph import EdgeSetCollection

EXAMPLES = ("rdpg-gaussian", "butterfly", "permutation-laplace")


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    A: np.ndarray
    B_true: np.ndarray
    truth: EdgeSetCollection
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def validate_dataset(ds: Dataset) -> None:
    n, d = ds.X.shape
    if ds.A.shape != (n, n) or ds.B_true.shape[0] != n or ds.truth.n != n or ds.truth.d != d:
        raise GeneratorError("dataset components disagree on n or d")
    if not np.array_equal(ds.A, ds.A.T) or np.any(np.diag(ds.A) != 0):
        raise GeneratorError("adjacency must be symmetric with zero diagonal")
    if not np.all(np.isfinite(ds.X)):
        raise GeneratorError("non-finite observations")


def _streams(seed: int):
    ss = np.random.SeedSequence(int(seed))
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def sample_adjacency(P, seed=None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Independent Bernoulli(P[i, j]) edges for i < j, mirrored, zero diagonal."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InvalidInputError("probability matrix must be square")
    if np.any(~np.isfinite(P)) or np.any(P < 0) or np.any(P > 1):
        raise InvalidInputError("probabilities must lie in [0, 1]")
    if rng is None:
        rng = np.random.default_rng(seed)
    n = P.shape[0]
    upper = np.triu(rng.random((n, n)) < P, k=1)
    return (upper | upper.T).astype(np.int8)


def erdos_renyi(d: int, p: float, rng: np.random.Generator) -> np.ndarray:
    return sample_adjacency(np.full((d, d), p), rng=rng).astype(float)


def precision_from_support(S: np.ndarray) -> np.ndarray:
    """``b (0.3 S + (0.3 |lambda_min(S)| + 0.1) I)`` with ``b`` making the diagonal 1."""
    lam_min = float(np.linalg.eigvalsh(S)[0])
    shift = 0.3 * abs(lam_min) + 0.1
    theta = (0.3 * S + shift * np.eye(S.shape[0])) / shift
    np.fill_diagonal(theta, 1.0)
    if np.linalg.eigvalsh(theta)[0] <= 0:
        raise GeneratorError("precision matrix is not positive definite")
    return theta


def gen_example1(n: int, d: int, seed: int, *, m: int = 3, edge_prob: float = 0.01,
                 n_eigvecs: int = 5) -> Dataset:
    """RDPG network, Gaussian observations with network-driven means and one shared graph."""
    if n < 10 or d < 2:
        raise InvalidInputError("example 1 needs n >= 10 and d >= 2")
    net, supp, obs = _streams(seed)
    B = net.random((n, m))
    G = B @ B.T
    a = 1.0 / G.max()
    P = a * G
    np.fill_diagonal(P, 0.0)
    A = sample_adjacency(P, rng=net)

    vals, vecs = np.linalg.eigh(A.astype(float))
    lead = fix_signs(vecs[:, np.argsort(vals)[::-1][:n_eigvecs]])
    cols = supp.integers(0, lead.shape[1], size=d)
    mu = np.sqrt(n) * lead[:, cols]

    S = erdos_renyi(d, edge_prob, supp)
    theta = precision_from_support(S)
    L = np.linalg.cholesky(np.linalg.inv(theta))
    X = mu + obs.standard_normal((n, d)) @ L.T

    pairs = [(j, l) for j, l in combinations(range(d), 2) if theta[j, l] != 0]
    truth = EdgeSetCollection.homogeneous(n, d, pairs)
    meta = {"generator": "rdpg-gaussian", "n": n, "d": d, "seed": int(seed), "m": m,
            "edge_prob": edge_prob, "n_eigvecs": n_eigvecs, "mean_columns": cols.tolist()}
    ds = Dataset(X=X, A=A, B_true=np.sqrt(a) * B, truth=truth, meta=meta)
    ds.meta["precision"] = theta.tolist()
    validate_dataset(ds)
    return ds


def butterfly_supports(half: int, rng: np.random.Generator, n_intervals: int = 5):
    """Active pair indices per sub-interval: 60% active, consecutive intervals sharing 40%."""
    n_active = -(-6 * half // 10)
    n_keep = -(-4 * n_active // 10)
    supports = [np.sort(rng.choice(half, size=n_active, replace=False))]
    for _ in range(1, n_intervals):
        prev = supports[-1]
        inactive = np.setdiff1d(np.arange(half), prev)
        keep_count = max(n_keep, n_active - inactive.size)
        kept = rng.choice(prev, size=keep_count, replace=False)
        fresh = rng.choice(inactive, size=n_active - keep_count, replace=False)
        supports.append(np.sort(np.concatenate([kept, fresh])))
    return supports


def gen_example2(n: int, d: int, seed: int, *, n_intervals: int = 5,
                 p_range: tuple[float, float] = (0.5, 1.0)) -> Dataset:
    """Dynamic butterfly process over a time chain."""
    if d % 2 != 0:
        raise InvalidInputError(f"butterfly design needs even d, got {d}")
    if n < 10:
        raise InvalidInputError("example 2 needs n >= 10")
    net, supp, obs = _streams(seed)
    half = d // 2
    t = np.arange(n) / n
    interval = np.minimum((t * n_intervals).astype(int), n_intervals - 1)
    supports = butterfly_supports(half, supp, n_intervals)
    probs = np.zeros((n_intervals, half))
    for k, s in enumerate(supports):
        probs[k, s] = supp.uniform(p_range[0], p_range[1], size=s.size)
    p_node = probs[interval]  # (n, half)

    U = obs.standard_normal((n, half))
    Z = obs.standard_normal((n, half))
    coin = obs.random((n, half)) < p_node
    X = np.empty((n, d))
    X[:, 0::2] = U
    X[:, 1::2] = np.where(coin, U, Z)

    edges = [frozenset((2 * k, 2 * k + 1) for k in np.flatnonzero(row)) for row in p_node]
    truth = EdgeSetCollection(n=n, d=d, edges=tuple(edges))
    P = np.zeros((n, n))
    idx = np.arange(n - 1)
    P[idx, idx + 1] = P[idx + 1, idx] = 1.0
    A = sample_adjacency(P, rng=net)
    meta = {"generator": "butterfly", "n": n, "d": d, "seed": int(seed),
            "n_intervals": n_intervals, "p_range": list(p_range),
            "supports": [s.tolist() for s in supports], "probs": probs.tolist()}
    ds = Dataset(X=X, A=A, B_true=t[:, None], truth=truth, meta=meta)
    validate_dataset(ds)
    return ds


def _check_perm(p) -> np.ndarray:
    p = np.asarray(p)
    if p.ndim != 1 or not np.array_equal(np.sort(p), np.arange(p.size) + p.min()) or p.min() not in (0, 1):
        raise InvalidInputError(f"not a permutation: {p!r}")
    return p - p.min()


def kendall_tau(perm_a, perm_b, scaled: bool = False):
    """Number of item pairs ordered differently by the two sequences.

    Accepts 0-based or 1-based permutations. ``scaled`` divides by d(d-1)/2.
    """
    a, b = _check_perm(perm_a), _check_perm(perm_b)
    if a.size != b.size:
        raise InvalidInputError("permutations differ in length")
    pos_a, pos_b = np.argsort(a), np.argsort(b)
    i, j = np.triu_indices(a.size, k=1)
    disc = int(np.sum(np.sign(pos_a[i] - pos_a[j]) != np.sign(pos_b[i] - pos_b[j])))
    if scaled:
        return disc / (a.size * (a.size - 1) / 2)
    return disc


def kendall_matrix(perms: np.ndarray) -> np.ndarray:
    """Scaled Kendall-tau distances between all rows of ``perms`` (0-based)."""
    n, d = perms.shape
    pos = np.argsort(perms, axis=1)
    i, j = np.triu_indices(d, k=1)
    O = np.sign(pos[:, i] - pos[:, j]).astype(float)
    total = i.size
    return (total - O @ O.T) / (2.0 * total)


def permutation_walk(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    perms = np.empty((n, d), dtype=np.int64)
    perms[0] = rng.permutation(d)
    for i in range(1, n):
        p = perms[i - 1].copy()
        k = rng.integers(0, d - 1)
        p[k], p[k + 1] = p[k + 1], p[k]
        perms[i] = p
    return perms


def gen_example3(n: int, d: int, seed: int, *, similarity: bool = False) -> Dataset:
    """Permutation network with chain-Laplace observations.

    Edge probabilities are the scaled Kendall-tau distances between node
    permutations; ``similarity=True`` uses ``1 - distance`` instead.
    """
    if n < 2 or d < 2:
        raise InvalidInputError("example 3 needs n >= 2 and d >= 2")
    net, supp, obs = _streams(seed)
    perms = permutation_walk(n, d, supp)
    P = kendall_matrix(perms)
    if similarity:
        P = 1.0 - P
    np.fill_diagonal(P, 0.0)
    P = np.clip(P, 0.0, 1.0)
    A = sample_adjacency(P, rng=net)

    noise = obs.laplace(0.0, 1.0, size=(n, d))
    chain = np.cumsum(noise, axis=1)  # value at chain position k
    X = np.empty((n, d))
    np.put_along_axis(X, perms, chain, axis=1)

    edges = [frozenset(zip(p[:-1].tolist(), p[1:].tolist())) for p in perms]
    truth = EdgeSetCollection(n=n, d=d, edges=tuple(edges))
    meta = {"generator": "permutation-laplace", "n": n, "d": d, "seed": int(seed),
            "similarity": similarity}
    ds = Dataset(X=X, A=A, B_true=perms.astype(float), truth=truth, meta=meta)
    validate_dataset(ds)
    return ds


GENERATORS = {
    "rdpg-gaussian": gen_example1,
    "butterfly": gen_example2,
    "permutation-laplace": gen_example3,
}


def generate(example: str, n: int, d: int, seed: int, **options) -> Dataset:
    try:
        gen = GENERATORS[example]
    except KeyError:
        raise InvalidInputError(f"unknown example {example!r}; choose from {', '.join(EXAMPLES)}") from None
    return gen(n, d, seed, **options)
