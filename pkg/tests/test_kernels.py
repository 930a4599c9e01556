import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ngm.errors import DegenerateDataError, InvalidInputError
from ngm.kernels import (KernelConfig, cross_gram, grad2_k1, gram, hess12_k1, k1,
                         median_heuristic)
from conftest import central_diff, rel_err


def brute_median_inverse(points):
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    dists = [np.linalg.norm(a - b) for a, b in itertools.combinations(pts, 2)]
    return 1.0 / float(np.median(dists))


class TestKernelConfig:
    def test_valid(self):
        cfg = KernelConfig(0.5, 2.0)
        assert cfg.sigma_x == 0.5 and cfg.sigma_b == 2.0

    @pytest.mark.parametrize("sx,sb", [(0, 1), (1, -1), (math.inf, 1), (1, math.nan)])
    def test_rejects_bad_bandwidths(self, sx, sb):
        with pytest.raises(InvalidInputError):
            KernelConfig(sx, sb)


class TestMedianHeuristic:
    def test_single_pair(self):
        assert median_heuristic([[0, 0], [3, 4]]) == pytest.approx(0.2)

    def test_odd_count_scalars(self):
        assert median_heuristic([0, 1, 3]) == pytest.approx(0.5)

    def test_normal_cloud_range_and_brute_force(self, rng):
        pts = rng.standard_normal((100, 10))
        val = median_heuristic(pts)
        assert 0.15 <= val <= 0.35
        assert val == pytest.approx(brute_median_inverse(pts), rel=1e-12)

    def test_zero_median_raises(self):
        with pytest.raises(DegenerateDataError):
            median_heuristic(np.zeros((5, 2)))

    def test_needs_two_points(self):
        with pytest.raises(InvalidInputError):
            median_heuristic([[1.0, 2.0]])

    def test_large_input_subsamples_deterministically(self, rng):
        pts = rng.standard_normal((5200, 2))
        a, b = median_heuristic(pts, seed=3), median_heuristic(pts, seed=3)
        assert a == b
        # a million sampled pairs pin the median to well under one percent
        ref = brute_median_inverse(pts[:1500])
        assert a == pytest.approx(ref, rel=0.03)


class TestGram:
    def test_unit_diagonal(self, rng):
        G = gram(rng.standard_normal((7, 3)), 0.8)
        np.testing.assert_array_equal(np.diag(G), 1.0)

    def test_two_scalars(self):
        G = gram([0.0, 1.0], 1.0)
        assert G[0, 1] == pytest.approx(0.3678794, abs=1e-7)

    def test_matches_double_loop(self, rng):
        P = rng.standard_normal((8, 3))
        G = gram(P, 0.7)
        ref = np.array([[math.exp(-0.49 * np.sum((a - b) ** 2)) for b in P] for a in P])
        np.testing.assert_allclose(G, ref, rtol=1e-14, atol=1e-15)

    @given(st.integers(2, 30), st.integers(1, 5), st.floats(0.05, 5.0), st.integers(0, 2**31))
    @settings(max_examples=40)
    def test_psd_symmetric_in_range(self, n, dim, sigma, seed):
        P = np.random.default_rng(seed).standard_normal((n, dim))
        G = gram(P, sigma)
        assert np.array_equal(G, G.T)
        assert np.all(G > 0) and np.all(G <= 1)
        assert np.linalg.eigvalsh(0.5 * (G + G.T)).min() >= -1e-10 * n

    def test_cross_gram_consistent(self, rng):
        P = rng.standard_normal((6, 2))
        np.testing.assert_allclose(cross_gram(P, P, 1.3), gram(P, 1.3), atol=1e-15)


class TestDerivatives:
    def test_grad2_zero_at_coincidence(self):
        x = np.array([0.3, -1.2, 2.0])
        for j in range(3):
            assert grad2_k1(x, x, 0.9, j) == 0.0

    def test_grad2_closed_form_value(self):
        # first coordinate is index 0 here
        assert grad2_k1([1.0, 0.0], [0.0, 0.0], 1.0, 0) == pytest.approx(0.7357589, abs=1e-7)

    def test_hess12_at_coincidence(self):
        x = np.array([0.5, 0.1])
        s = 1.7
        assert hess12_k1(x, x, s, 0, 0) == pytest.approx(2 * s * s)
        assert hess12_k1(x, x, s, 1, 1) == pytest.approx(2 * s * s)
        assert hess12_k1(x, x, s, 0, 1) == 0.0

    def test_index_out_of_range(self):
        with pytest.raises(InvalidInputError):
            grad2_k1([0.0, 1.0], [1.0, 0.0], 1.0, 2)
        with pytest.raises(InvalidInputError):
            hess12_k1([0.0, 1.0], [1.0, 0.0], 1.0, 0, -1)

    @given(st.integers(0, 2**31), st.integers(1, 4), st.floats(0.3, 2.0))
    @settings(max_examples=100)
    def test_grad2_finite_difference(self, seed, d, sigma):
        r = np.random.default_rng(seed)
        x, xp = r.uniform(-1, 1, d), r.uniform(-1, 1, d)
        j = int(r.integers(d))
        fd = central_diff(lambda z: k1(x, z, sigma), xp, j)
        assert rel_err(fd, grad2_k1(x, xp, sigma, j)) <= 1e-6

    @given(st.integers(0, 2**31), st.integers(1, 4), st.floats(0.3, 2.0))
    @settings(max_examples=100)
    def test_hess12_nested_finite_difference(self, seed, d, sigma):
        r = np.random.default_rng(seed)
        x, xp = r.uniform(-1, 1, d), r.uniform(-1, 1, d)
        j, l = (int(v) for v in r.integers(d, size=2))
        h = 1e-4

        def k(a, b):
            return k1(a, b, sigma)

        ej, el = np.eye(d)[j] * h, np.eye(d)[l] * h
        fd = (k(x + ej, xp + el) - k(x + ej, xp - el) - k(x - ej, xp + el)
              + k(x - ej, xp - el)) / (4 * h * h)
        assert rel_err(fd, hess12_k1(x, xp, sigma, j, l)) <= 1e-4

    @given(st.integers(0, 2**31), st.integers(1, 4))
    @settings(max_examples=50)
    def test_grad2_is_minus_first_argument_derivative(self, seed, d):
        r = np.random.default_rng(seed)
        x, xp = r.uniform(-1, 1, d), r.uniform(-1, 1, d)
        j = int(r.integers(d))
        fd_first = central_diff(lambda z: k1(z, xp, 0.8), x, j)
        assert grad2_k1(x, xp, 0.8, j) == pytest.approx(-fd_first, rel=1e-6, abs=1e-10)

    @given(st.integers(0, 2**31), st.integers(2, 4))
    @settings(max_examples=50)
    def test_hess12_symmetries(self, seed, d):
        r = np.random.default_rng(seed)
        x, xp = r.uniform(-1, 1, d), r.uniform(-1, 1, d)
        j, l = 0, d - 1
        assert hess12_k1(x, xp, 1.1, j, l) == pytest.approx(hess12_k1(xp, x, 1.1, l, j), rel=1e-13)
        assert hess12_k1(x, x, 1.1, j, l) == hess12_k1(x, x, 1.1, l, j)
