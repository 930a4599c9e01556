"""Kernel score matching in the product-kernel vector-valued RKHS.

The fitted score is

    s(x; b)_l = sum_i k2(b, b_i) * [A[i, l] k1(x, x_i) - c * d k1(x, x_i)/d x_il],
    c = 1 / (lam * n),

where the coefficient matrix ``A`` (n x d) solves ``(M + n lam I) A = H / lam`` with
``M = G1 * G2`` (Hadamard product of the two Gram matrices). This is the
nd x nd system ``(F + n lam I) alpha = h / lam`` with ``F = M kron I_d`` and
``alpha = A.ravel()`` collapsed to one n x n solve with d right-hand sides.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, cg

from .errors import DegenerateDataError, InvalidInputError, SolverError
from .kernels import KernelConfig, cross_gram, gram, median_heuristic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitConfig:
    lam: float
    kernel: KernelConfig
    standardize: bool = True
    cg_threshold: int = 4000

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidInputError(f"lam must be positive and finite, got {self.lam!r}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RepresenterModel:
    """Fitted score estimator.

    ``train_x`` is stored on the standardized scale; use :meth:`transform` to map
    raw observations onto it before evaluating the score.
    """

    train_x: np.ndarray
    train_b: np.ndarray
    coeffs: np.ndarray
    lam: float
    kernel: KernelConfig
    center: np.ndarray = field(default=None)
    scale: np.ndarray = field(default=None)

    def __post_init__(self):
        d = np.shape(self.train_x)[1]
        center = np.zeros(d) if self.center is None else self.center
        scale = np.ones(d) if self.scale is None else self.scale
        for name, val in [("train_x", self.train_x), ("train_b", self.train_b),
                          ("coeffs", self.coeffs), ("center", center), ("scale", scale)]:
            object.__setattr__(self, name, _readonly(val))

    @property
    def n(self) -> int:
        return self.train_x.shape[0]

    @property
    def d(self) -> int:
        return self.train_x.shape[1]

    @property
    def m(self) -> int:
        return self.train_b.shape[1]

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.center) / self.scale


def standardize(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center columns and scale to unit (population) variance."""
    X = np.asarray(X, dtype=float)
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    if np.any(scale <= 0):
        bad = np.flatnonzero(scale <= 0).tolist()
        raise DegenerateDataError(f"constant columns cannot be standardized: {bad}")
    return (X - center) / scale, center, scale


def _check_xb(X, B) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    B = np.asarray(B, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if X.ndim != 2 or B.ndim != 2:
        raise InvalidInputError("X and B must be 2-d arrays")
    if X.shape[0] != B.shape[0]:
        raise InvalidInputError(f"row counts differ: X has {X.shape[0]}, B has {B.shape[0]}")
    if X.shape[0] < 1 or X.shape[1] < 1 or B.shape[1] < 1:
        raise InvalidInputError("empty data")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(B))):
        raise InvalidInputError("non-finite entries in X or B")
    return X, B


def median_kernel(X, B, *, standardize_x: bool = True, sigma_b: float | None = None,
                  seed: int = 0) -> KernelConfig:
    """Median-heuristic inverse bandwidths for both kernels.

    ``sigma_x`` is computed on the standardized data when ``standardize_x``;
    pass ``sigma_b`` explicitly when all embeddings coincide.
    """
    X, B = _check_xb(X, B)
    if standardize_x:
        X = standardize(X)[0]
    sx = median_heuristic(X, seed=seed)
    sb = median_heuristic(B, seed=seed) if sigma_b is None else float(sigma_b)
    return KernelConfig(sigma_x=sx, sigma_b=sb)


def assemble_system(X, B_hat, config: FitConfig) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed system matrices ``M`` (n x n) and right-hand side ``H`` (n x d).

    ``H[i, j] = (1/n) sum_i' G2[i, i'] * d k1(x_i, x_i') / d x_i'j``.
    """
    X, B = _check_xb(X, B_hat)
    n = X.shape[0]
    s2 = config.kernel.sigma_x ** 2
    M = gram(X, config.kernel.sigma_x) * gram(B, config.kernel.sigma_b)
    H = (2.0 * s2 / n) * (X * M.sum(axis=1)[:, None] - M @ X)
    return M, H


def _solve_spd(K: np.ndarray, R: np.ndarray, cg_threshold: int) -> np.ndarray:
    n = K.shape[0]
    if n <= cg_threshold:
        try:
            return linalg.cho_solve(linalg.cho_factor(K, lower=True), R)
        except linalg.LinAlgError as exc:
            cond = np.linalg.cond(K)
            raise SolverError(f"Cholesky factorization failed (condition number {cond:.3e})") from exc
    op = LinearOperator(K.shape, matvec=lambda v: K @ v, dtype=float)
    out = np.empty_like(R)
    for col in range(R.shape[1]):
        sol, info = cg(op, R[:, col], rtol=1e-10, atol=0.0, maxiter=10 * n)
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge on column {col} (info={info})")
        out[:, col] = sol
    return out


def fit(X, B_hat, config: FitConfig) -> RepresenterModel:
    """Fit the regularized score-matching estimator.

    Parameters
    ----------
    X : array_like, shape (n, d)
        Observations (raw scale; standardized internally if ``config.standardize``).
    B_hat : array_like, shape (n, m)
        Node embeddings paired row-wise with ``X``.
    config : FitConfig

    Returns
    -------
    RepresenterModel
    """
    X, B = _check_xb(X, B_hat)
    if config.standardize and X.shape[0] >= 2:
        Xs, center, scale = standardize(X)
    else:
        Xs, center, scale = X, np.zeros(X.shape[1]), np.ones(X.shape[1])
    n = Xs.shape[0]
    M, H = assemble_system(Xs, B, config)
    K = M + n * config.lam * np.eye(n)
    A = _solve_spd(K, H / config.lam, config.cg_threshold)
    return RepresenterModel(train_x=Xs, train_b=B, coeffs=A, lam=float(config.lam),
                            kernel=config.kernel, center=center, scale=scale)


def _features(model: RepresenterModel) -> np.ndarray:
    """Per-training-point columns [A | X | (X_j A_l) | (X_j X_l) | 1]."""
    X, A = model.train_x, model.coeffs
    n, d = X.shape
    XA = (X[:, :, None] * A[:, None, :]).reshape(n, d * d)
    XX = (X[:, :, None] * X[:, None, :]).reshape(n, d * d)
    return np.hstack([A, X, XA, XX, np.ones((n, 1))])


def _weights(model: RepresenterModel, X, B) -> np.ndarray:
    return (cross_gram(X, model.train_x, model.kernel.sigma_x)
            * cross_gram(B, model.train_b, model.kernel.sigma_b))


def _check_eval(model: RepresenterModel, X, B) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if X.shape[1] != model.d or B.shape[1] != model.m:
        raise InvalidInputError(
            f"expected x of length {model.d} and beta of length {model.m}, "
            f"got {X.shape[1]} and {B.shape[1]}")
    if X.shape[0] != B.shape[0]:
        raise InvalidInputError("x and beta batches have different lengths")
    return X, B


def _scores_from(model, X, W, WY=None) -> np.ndarray:
    d = model.d
    s2 = model.kernel.sigma_x ** 2
    c = 1.0 / (model.lam * model.n)
    if WY is None:
        WA, WX, W1 = W @ model.coeffs, W @ model.train_x, W.sum(axis=1)
    else:
        WA, WX, W1 = WY[:, :d], WY[:, d:2 * d], WY[:, -1]
    return WA - 2.0 * s2 * c * (X * W1[:, None] - WX)


def _jacobians_from(model, X, WY) -> np.ndarray:
    d = model.d
    s2 = model.kernel.sigma_x ** 2
    c = 1.0 / (model.lam * model.n)
    ne = X.shape[0]
    WA = WY[:, :d]
    WX = WY[:, d:2 * d]
    WXA = WY[:, 2 * d:2 * d + d * d].reshape(ne, d, d)
    WXX = WY[:, 2 * d + d * d:2 * d + 2 * d * d].reshape(ne, d, d)
    W1 = WY[:, -1]
    xj = X[:, :, None]
    xl = X[:, None, :]
    D = -2.0 * s2 * (xj * WA[:, None, :] - WXA)
    D += 4.0 * s2 * s2 * c * (xj * xl * W1[:, None, None] - xj * WX[:, None, :]
                              - xl * WX[:, :, None] + WXX)
    D -= 2.0 * s2 * c * W1[:, None, None] * np.eye(d)
    return D


def scores(model: RepresenterModel, X, B) -> np.ndarray:
    """Score at each pair ``(X[a], B[a])`` (standardized scale); shape (n_eval, d)."""
    X, B = _check_eval(model, X, B)
    return _scores_from(model, X, _weights(model, X, B))


def score_jacobians(model: RepresenterModel, X, B) -> np.ndarray:
    """``D[a, j, l] = d s_l / d x_j`` at each pair; shape (n_eval, d, d)."""
    X, B = _check_eval(model, X, B)
    W = _weights(model, X, B)
    return _jacobians_from(model, X, W @ _features(model))


def evaluate_score(model: RepresenterModel, x, beta) -> np.ndarray:
    """Fitted score ``s(x; beta)`` for one point, a length-d vector."""
    return scores(model, np.reshape(x, (1, -1)), np.reshape(beta, (1, -1)))[0]


def score_partials(model: RepresenterModel, x, beta) -> np.ndarray:
    """d x d matrix with entry (j, l) = d s_l(x; beta) / d x_j."""
    return score_jacobians(model, np.reshape(x, (1, -1)), np.reshape(beta, (1, -1)))[0]


def empirical_loss(model: RepresenterModel, X_eval, B_eval) -> float:
    """Mean of ``0.5 ||s||^2 + tr(grad s)`` over evaluation pairs (no penalty term).

    ``X_eval`` must already be on the model's standardized scale.
    """
    X, B = _check_eval(model, X_eval, B_eval)
    if X.shape[0] == 0:
        raise InvalidInputError("empty evaluation set")
    W = _weights(model, X, B)
    S = _scores_from(model, X, W)
    # trace only needs the diagonal of the jacobian
    s2 = model.kernel.sigma_x ** 2
    c = 1.0 / (model.lam * model.n)
    WA, WX, W1 = W @ model.coeffs, W @ model.train_x, W.sum(axis=1)
    WXA_diag = W @ (model.train_x * model.coeffs)
    WXX_diag = W @ (model.train_x ** 2)
    diag = -2.0 * s2 * (X * WA - WXA_diag)
    diag += 4.0 * s2 * s2 * c * (X * X * W1[:, None] - 2.0 * X * WX + WXX_diag)
    diag -= 2.0 * s2 * c * W1[:, None]
    return float(np.mean(0.5 * np.sum(S ** 2, axis=1) + diag.sum(axis=1)))


def rkhs_norm_sq(model: RepresenterModel) -> float:
    """Squared RKHS norm of the fitted score, in closed form."""
    X, A = model.train_x, model.coeffs
    n, d = X.shape
    sx = model.kernel.sigma_x
    cfg = FitConfig(lam=model.lam, kernel=model.kernel, standardize=False)
    M, H = assemble_system(X, model.train_b, cfg)
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2)
    offset_sq = np.sum(M * (2.0 * sx**2 * d - 4.0 * sx**4 * sq))
    c = 1.0 / (model.lam * n)
    return float(np.sum(A * (M @ A)) - (2.0 / model.lam) * np.sum(A * H) + c * c * offset_sq)


def objective(model: RepresenterModel) -> float:
    """Penalized empirical score-matching objective on the training pairs."""
    return (empirical_loss(model, model.train_x, model.train_b)
            + 0.5 * model.lam * rkhs_norm_sq(model))
