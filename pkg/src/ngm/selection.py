"""Cross-validation for the ridge penalty and the edge threshold."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InvalidInputError, SelectionError
from .graph import OmegaField
from .kernels import KernelConfig
from .score import FitConfig, empirical_loss, fit


@dataclass(frozen=True)
class CvPlan:
    fold_count: int
    labels: np.ndarray  # values in 1..fold_count
    seed: int

    def folds(self):
        """Yield ``(train_idx, test_idx)`` for each fold in label order."""
        for k in range(1, self.fold_count + 1):
            yield np.flatnonzero(self.labels != k), np.flatnonzero(self.labels == k)


def kfold_split(n: int, k: int = 5, seed: int = 0) -> CvPlan:
    """Seeded random partition of ``range(n)`` into ``k`` folds whose sizes differ by at most one."""
    n, k = int(n), int(k)
    if k < 2 or k > n:
        raise InvalidInputError(f"need 2 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % k + 1)
    labels.setflags(write=False)
    return CvPlan(fold_count=k, labels=labels, seed=seed)


@dataclass(frozen=True)
class LambdaSearch:
    best: float
    grid: np.ndarray
    mean_loss: np.ndarray
    fold_loss: np.ndarray  # (len(grid), fold_count)


@dataclass(frozen=True)
class DeltaSearch:
    best: float
    grid: np.ndarray
    scores: np.ndarray


def _argbest(values: np.ndarray, minimize: bool) -> int:
    # ties resolve toward the largest grid value (grids are ascending)
    v = values if minimize else -values
    rev = v[::-1]
    return len(v) - 1 - int(np.argmin(rev))


def cv_lambda(X, B_hat, kernel: KernelConfig, lambda_grid, plan: CvPlan,
              standardize: bool = True) -> LambdaSearch:
    """Pick ``lam`` minimizing the mean held-out score-matching loss.

    A grid of one value skips fitting entirely.
    """
    grid = np.unique(np.asarray(lambda_grid, dtype=float))
    if grid.size == 0 or np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise InvalidInputError("lambda grid must be nonempty, positive and finite")
    X = np.asarray(X, dtype=float)
    B = np.asarray(B_hat, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if grid.size == 1:
        return LambdaSearch(best=float(grid[0]), grid=grid, mean_loss=np.full(1, np.nan),
                            fold_loss=np.full((1, plan.fold_count), np.nan))
    folds = list(plan.folds())
    for train, _ in folds:
        if train.size < 2:
            raise InvalidInputError("a fold complement has fewer than 2 points")
    losses = np.empty((grid.size, plan.fold_count))
    for g, lam in enumerate(grid):
        cfg = FitConfig(lam=float(lam), kernel=kernel, standardize=standardize)
        for f, (train, test) in enumerate(folds):
            model = fit(X[train], B[train], cfg)
            losses[g, f] = empirical_loss(model, model.transform(X[test]), B[test])
    mean = losses.mean(axis=1)
    return LambdaSearch(best=float(grid[_argbest(mean, minimize=True)]), grid=grid,
                        mean_loss=mean, fold_loss=losses)


def cohen_kappa(a: np.ndarray, b: np.ndarray) -> float:
    """Chance-corrected agreement of two boolean masks (0 when agreement is pure chance)."""
    a, b = np.ravel(a), np.ravel(b)
    po = np.mean(a == b)
    pa, pb = a.mean(), b.mean()
    pe = pa * pb + (1.0 - pa) * (1.0 - pb)
    if pe >= 1.0:
        return 1.0 if po == 1.0 else 0.0
    return float((po - pe) / (1.0 - pe))


def stability_score(masks: list[np.ndarray]) -> float:
    """Mean pairwise Cohen's kappa between fold edge masks, or -1 if degenerate.

    Masks are pooled over nodes. Degenerate means every node in every fold has
    no edges, or every node in every fold has all edges.
    """
    stack = np.stack(masks)
    if not stack.any() or stack.all():
        return -1.0
    return float(np.mean([cohen_kappa(a, b) for a, b in combinations(masks, 2)]))


def cv_delta(omega_by_fold: list[OmegaField], delta_grid) -> DeltaSearch:
    """Pick the threshold whose edge sets agree most across fold refits."""
    if len(omega_by_fold) < 2:
        raise InvalidInputError("need at least two fold fields")
    shapes = {f.matrices.shape for f in omega_by_fold}
    if len(shapes) != 1:
        raise InvalidInputError(f"fold fields differ in shape: {sorted(shapes)}")
    grid = np.unique(np.asarray(delta_grid, dtype=float))
    if grid.size == 0 or np.any(grid < 0):
        raise InvalidInputError("delta grid must be nonempty and nonnegative")
    vals = [f.offdiag_values() for f in omega_by_fold]
    scores = np.array([stability_score([v >= delta for v in vals]) for delta in grid])
    if np.all(scores == -1.0):
        raise SelectionError("every delta in the grid gives all-empty or all-complete graphs; "
                             "widen the delta grid")
    return DeltaSearch(best=float(grid[_argbest(scores, minimize=False)]), grid=grid, scores=scores)


def default_delta_grid(fields: list[OmegaField], size: int = 40) -> np.ndarray:
    """Log-spaced thresholds spanning the positive off-diagonal signal strengths."""
    v = np.concatenate([f.offdiag_values().ravel() for f in fields])
    v = v[v > 0]
    if v.size == 0:
        raise SelectionError("all off-diagonal signal strengths are zero")
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        return np.array([lo])
    return np.geomspace(lo, hi, size)
