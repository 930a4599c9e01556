import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ngm.datagen import gen_example1
from ngm.errors import InvalidInputError, SelectionError
from ngm.graph import OmegaField, threshold_edges
from ngm.metrics import confusion, replication_report
from ngm.pipeline import RunConfig, embed_stage, fit_stage, graph_stage
from ngm.score import median_kernel
from ngm.selection import (cohen_kappa, cv_delta, cv_lambda, default_delta_grid, kfold_split,
                           stability_score)


def field(M):
    M = np.asarray(M, dtype=float)
    return OmegaField(matrices=M, raw=M)


class TestKfold:
    def test_exact_division(self):
        plan = kfold_split(10, 5, seed=0)
        assert sorted(np.bincount(plan.labels)[1:]) == [2] * 5

    def test_remainder(self):
        plan = kfold_split(11, 5, seed=0)
        assert sorted(np.bincount(plan.labels)[1:]) == [2, 2, 2, 2, 3]

    def test_reproducible(self):
        assert np.array_equal(kfold_split(37, 5, 9).labels, kfold_split(37, 5, 9).labels)

    @given(st.integers(2, 200), st.integers(2, 10), st.integers(0, 2**31))
    @settings(max_examples=60)
    def test_balance_and_labels(self, n, k, seed):
        if k > n:
            with pytest.raises(InvalidInputError):
                kfold_split(n, k, seed)
            return
        plan = kfold_split(n, k, seed)
        counts = np.bincount(plan.labels, minlength=k + 1)[1:]
        assert set(np.unique(plan.labels)) == set(range(1, k + 1))
        assert counts.max() - counts.min() <= 1
        seen = np.concatenate([test for _, test in plan.folds()])
        assert np.array_equal(np.sort(seen), np.arange(n))


@pytest.fixture(scope="module")
def gaussian_1d():
    X = np.random.default_rng(1).standard_normal((120, 1))
    B = np.zeros((120, 1))
    return X, B, median_kernel(X, B, sigma_b=1.0)


class TestCvLambda:
    def test_grid_of_one(self, gaussian_1d):
        X, B, k = gaussian_1d
        res = cv_lambda(X, B, k, [0.3], kfold_split(120, 5, 0))
        assert res.best == 0.3

    def test_duplicates_ignored(self, gaussian_1d):
        X, B, k = gaussian_1d
        plan = kfold_split(120, 5, 0)
        a = cv_lambda(X, B, k, [1e-3, 1e-2, 1e-1], plan)
        b = cv_lambda(X, B, k, [1e-2, 1e-3, 1e-2, 1e-1, 1e-3], plan)
        assert a.best == b.best
        np.testing.assert_array_equal(a.mean_loss, b.mean_loss)

    def test_order_invariant(self, gaussian_1d):
        X, B, k = gaussian_1d
        plan = kfold_split(120, 5, 0)
        grid = list(np.logspace(-3, 0, 4))
        assert cv_lambda(X, B, k, grid, plan).best == cv_lambda(X, B, k, grid[::-1], plan).best

    def test_ties_go_to_larger_lambda(self, gaussian_1d, monkeypatch):
        import ngm.selection as sel
        X, B, k = gaussian_1d
        monkeypatch.setattr(sel, "empirical_loss", lambda *a, **kw: 0.0)
        assert sel.cv_lambda(X, B, k, [0.1, 0.2, 0.05], kfold_split(120, 5, 0)).best == 0.2

    @pytest.mark.parametrize("grid", [[], [0.1, -1.0], [0.0], [np.inf]])
    def test_bad_grid(self, gaussian_1d, grid):
        X, B, k = gaussian_1d
        with pytest.raises(InvalidInputError):
            cv_lambda(X, B, k, grid, kfold_split(120, 5, 0))

    @pytest.mark.slow
    def test_interior_minimum_for_normal_data(self):
        interior = 0
        for s in range(50):
            X = np.random.default_rng(s).standard_normal((500, 1))
            B = np.zeros((500, 1))
            res = cv_lambda(X, B, median_kernel(X, B, sigma_b=1.0), np.logspace(-4, 0, 7),
                            kfold_split(500, 5, s))
            interior += 0 < int(np.argmin(res.mean_loss)) < 6
        assert interior >= 45


class TestKappa:
    def test_identical(self):
        a = np.array([1, 0, 1, 0, 0], dtype=bool)
        assert cohen_kappa(a, a) == 1.0

    def test_hand_value(self):
        a = np.array([1, 1, 0, 0], dtype=bool)
        b = np.array([1, 0, 0, 0], dtype=bool)
        # po = 3/4, pe = 1/2 * 1/4 + 1/2 * 3/4 = 1/2
        assert cohen_kappa(a, b) == pytest.approx(0.5)

    @given(st.integers(0, 2**31), st.integers(2, 40))
    @settings(max_examples=60)
    def test_range(self, seed, size):
        r = np.random.default_rng(seed)
        k = cohen_kappa(r.random(size) < 0.5, r.random(size) < 0.3)
        assert -1.0 <= k <= 1.0

    def test_degenerate_score(self):
        assert stability_score([np.zeros(4, bool), np.zeros(4, bool)]) == -1.0
        assert stability_score([np.ones(4, bool), np.ones(4, bool)]) == -1.0


class TestCvDelta:
    def test_identical_fields(self):
        M = np.zeros((3, 4, 4))
        M[:, 0, 1] = M[:, 1, 0] = 0.9
        M[:, 2, 3] = M[:, 3, 2] = 0.4
        M[1, 0, 2] = M[1, 2, 0] = 0.2
        grid = [0.1, 0.3, 0.5, 0.95]
        res = cv_delta([field(M), field(M)], grid)
        valid = res.scores != -1.0
        assert np.all(res.scores[valid] == 1.0)
        assert res.best == max(res.grid[valid])
        assert res.best == 0.5

    def test_disjoint_supports(self):
        a = np.zeros((2, 4, 4))
        b = np.zeros((2, 4, 4))
        a[:, 0, 1] = a[:, 1, 0] = 1.0
        b[:, 2, 3] = b[:, 3, 2] = 1.0
        res = cv_delta([field(a), field(b)], [0.1, 0.5, 1.0])
        assert np.all(res.scores <= 0.0)

    def test_scores_in_range(self, rng):
        fields = [field(rng.random((5, 4, 4))) for _ in range(3)]
        res = cv_delta(fields, default_delta_grid(fields, size=15))
        assert np.all((res.scores >= -1) & (res.scores <= 1))

    def test_all_degenerate_raises(self):
        M = np.ones((2, 3, 3))
        with pytest.raises(SelectionError):
            cv_delta([field(M), field(M)], [0.5, 2.0])

    def test_needs_two_fields(self):
        with pytest.raises(InvalidInputError):
            cv_delta([field(np.ones((1, 3, 3)))], [0.5])

    def test_default_grid_spans_values(self, rng):
        fields = [field(rng.random((4, 5, 5)) + 0.01) for _ in range(2)]
        grid = default_delta_grid(fields, size=20)
        vals = np.concatenate([f.offdiag_values().ravel() for f in fields])
        assert grid[0] == pytest.approx(vals.min()) and grid[-1] == pytest.approx(vals.max())
        assert np.all(np.diff(grid) > 0)

    @pytest.mark.slow
    def test_selected_delta_close_to_oracle_on_rdpg_gaussian(self):
        # first seed whose shared truth graph is nonempty
        seed = next(s for s in range(100) if gen_example1(400, 10, s).truth.edges[0])
        ds = gen_example1(400, 10, seed)
        cfg = RunConfig(example="rdpg-gaussian").resolved()
        B = embed_stage(ds.A, None, "ase", cfg.m)
        model, _, plan = fit_stage(ds.X, B, cfg, seed)
        fld, delta, search = graph_stage(model, ds.X, B, cfg, plan, seed)

        def f1(d):
            return replication_report(confusion(threshold_edges(fld, d), ds.truth)).f1

        oracle = max(f1(d) for d in search.grid)
        assert f1(delta) >= 0.9 * oracle
