import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ngm.errors import InvalidInputError
from ngm.graph import EdgeSetCollection, OmegaField, field_from_jacobians, omega, threshold_edges
from ngm.score import FitConfig, fit, median_kernel, score_partials


@pytest.fixture(scope="module")
def model_and_targets():
    r = np.random.default_rng(3)
    X, B = r.standard_normal((30, 3)), r.uniform(size=(30, 2))
    return fit(X, B, FitConfig(0.05, median_kernel(X, B))), B


def zero_field(n, d):
    z = np.zeros((n, d, d))
    return OmegaField(matrices=z, raw=z)


class TestOmega:
    def test_matches_average_of_squared_partials(self, model_and_targets):
        model, B = model_and_targets
        field = omega(model, B[:4])
        for t in range(4):
            raw = np.mean([score_partials(model, x, B[t]) ** 2 for x in model.train_x], axis=0)
            np.testing.assert_allclose(field.raw[t], raw, rtol=1e-12)
            np.testing.assert_allclose(field.matrices[t], 0.5 * (raw + raw.T), rtol=1e-12)

    def test_constant_partials_stub(self):
        C = np.array([[1.0, 2.0, 0.0], [-3.0, 0.5, 1.0], [0.0, 4.0, 2.0]])
        J = np.broadcast_to(C, (5, 7, 3, 3))
        field = field_from_jacobians(J)
        for i in range(5):
            np.testing.assert_array_equal(field.matrices[i], (C ** 2 + C.T ** 2) / 2)

    def test_invariants(self, model_and_targets):
        model, B = model_and_targets
        M = omega(model, B).matrices
        assert np.all(M >= 0)
        assert np.array_equal(M, np.swapaxes(M, 1, 2))

    @pytest.mark.parametrize("seed", [0, 1, 99])
    def test_full_subsample_equals_full_average(self, model_and_targets, seed):
        model, B = model_and_targets
        np.testing.assert_array_equal(omega(model, B[:3], eval_subsample=model.n, seed=seed).matrices,
                                      omega(model, B[:3]).matrices)

    def test_subsample_is_seeded(self, model_and_targets):
        model, B = model_and_targets
        a = omega(model, B[:3], eval_subsample=10, seed=4).matrices
        b = omega(model, B[:3], eval_subsample=10, seed=4).matrices
        assert np.array_equal(a, b)

    def test_identical_targets_bitwise_equal(self, model_and_targets):
        model, B = model_and_targets
        T = np.vstack([B[2], B[5], B[2], B[2]])
        M = omega(model, T).matrices
        assert np.array_equal(M[0], M[2]) and np.array_equal(M[0], M[3])

    def test_locality(self, model_and_targets):
        model, B = model_and_targets
        b = B[7]
        T = np.vstack([b, b + 1e-8 * np.array([0.6, 0.8])])
        M = omega(model, T).matrices
        assert np.abs(M[0] - M[1]).max() <= 1e-6

    def test_bad_subsample(self, model_and_targets):
        model, B = model_and_targets
        with pytest.raises(InvalidInputError):
            omega(model, B, eval_subsample=0)
        with pytest.raises(InvalidInputError):
            omega(model, B, eval_subsample=model.n + 1)

    def test_wrong_embedding_width(self, model_and_targets):
        model, _ = model_and_targets
        with pytest.raises(InvalidInputError):
            omega(model, np.zeros((2, 3)))


class TestThreshold:
    def test_zero_field_positive_delta(self):
        edges = threshold_edges(zero_field(4, 5), 0.1)
        assert all(len(es) == 0 for es in edges.edges)

    def test_delta_zero_keeps_all_pairs(self, model_and_targets):
        model, B = model_and_targets
        edges = threshold_edges(omega(model, B), 0.0)
        assert all(len(es) == 3 for es in edges.edges)

    def test_hand_built_instance(self):
        M = np.zeros((5, 6, 6))
        M[3, 2, 5] = M[3, 5, 2] = 0.5
        edges = threshold_edges(OmegaField(M, M), 0.4)
        assert edges.edges[3] == {(2, 5)}
        assert all(len(es) == 0 for i, es in enumerate(edges.edges) if i != 3)

    def test_infinite_delta_gives_empty_graphs(self, model_and_targets):
        model, B = model_and_targets
        assert all(len(es) == 0 for es in threshold_edges(omega(model, B), np.inf).edges)

    @given(st.integers(0, 2**31), st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=50)
    def test_monotone_in_delta(self, seed, a, b):
        r = np.random.default_rng(seed)
        raw = r.random((6, 4, 4))
        field = field_from_jacobians(np.sqrt(raw)[:, None])
        lo, hi = sorted((a, b))
        small, big = threshold_edges(field, hi), threshold_edges(field, lo)
        assert all(s <= g for s, g in zip(small.edges, big.edges))

    def test_negative_delta(self):
        with pytest.raises(InvalidInputError):
            threshold_edges(zero_field(2, 3), -0.1)


class TestEdgeSetCollection:
    def test_canonical_pairs(self):
        e = EdgeSetCollection(n=2, d=4, edges=({(3, 1)}, {(0, 2), (2, 0)}))
        assert e.edges == (frozenset({(1, 3)}), frozenset({(0, 2)}))

    @pytest.mark.parametrize("pair", [(1, 1), (0, 4), (-1, 2)])
    def test_rejects_bad_pairs(self, pair):
        with pytest.raises(InvalidInputError):
            EdgeSetCollection(n=1, d=4, edges=({pair},))

    def test_wrong_count(self):
        with pytest.raises(InvalidInputError):
            EdgeSetCollection(n=2, d=3, edges=(frozenset(),))

    @given(st.integers(0, 2**31), st.integers(2, 7), st.integers(1, 6))
    @settings(max_examples=40)
    def test_mask_round_trip(self, seed, d, n):
        mask = np.random.default_rng(seed).random((n, d * (d - 1) // 2)) < 0.4
        e = EdgeSetCollection.from_mask(mask)
        assert e.d == d and np.array_equal(e.to_mask(), mask)

    def test_homogeneous(self):
        e = EdgeSetCollection.homogeneous(3, 4, [(2, 0), (1, 3)])
        assert e.edges == (frozenset({(0, 2), (1, 3)}),) * 3
