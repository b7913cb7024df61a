import numpy as np
import pytest
from hypothesis import given, strategies as st

from polarbandit import kernels
from polarbandit.errors import ConvergenceFailure, NotPositiveDefinite, NotUnitVector
from polarbandit.graph import erdos_renyi, laplacian
from polarbandit.numerics import (fix_sign, nuclear_norm, orthonormal_completion, spd_solve,
                                  svd_soft_threshold, sym_eig, top_eigvec)

from conftest import random_symmetric

seeds = st.integers(0, 2**32 - 1)


class TestSpdSolve:
    def test_identity(self):
        np.testing.assert_array_equal(spd_solve(np.eye(2), np.eye(2)), np.eye(2))

    def test_diagonal(self):
        out = spd_solve(np.diag([2.0, 4.0]), np.eye(2))
        np.testing.assert_allclose(out, [[0.5, 0], [0, 0.25]])

    def test_tridiagonal_vector(self):
        a = np.array([[2.0, -1.0], [-1.0, 2.0]])
        x = spd_solve(a, np.array([1.0, 1.0]))
        np.testing.assert_allclose(a @ x, [1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            spd_solve(np.diag([1.0, -1.0]), np.eye(2))

    @given(seeds)
    def test_relative_residual(self, seed):
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((6, 6))
        a = g @ g.T + 6 * np.eye(6)
        b = rng.standard_normal((6, 3))
        x = spd_solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)


class TestSymEig:
    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_identity(self, method):
        np.testing.assert_allclose(sym_eig(np.eye(3), method).values, [1, 1, 1])

    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_diagonal_axis_aligned(self, method):
        d = sym_eig(np.diag([3.0, 1.0]), method)
        np.testing.assert_allclose(d.values, [3, 1])
        np.testing.assert_allclose(np.abs(d.vectors), np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_swap_matrix(self, method):
        d = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]), method)
        np.testing.assert_allclose(d.values, [1, -1], atol=1e-12)
        r = 1 / np.sqrt(2)
        np.testing.assert_allclose(d.vectors[:, 0], [r, r], atol=1e-12)
        np.testing.assert_allclose(np.abs(d.vectors[:, 1]), [r, r], atol=1e-12)

    @given(seeds, st.integers(1, 9))
    def test_invariants_and_backends_agree(self, seed, n):
        a = random_symmetric(np.random.default_rng(seed), n)
        lap, jac = sym_eig(a, "lapack"), sym_eig(a, "jacobi")
        for d in (lap, jac):
            assert np.all(np.diff(d.values) <= 1e-12)
            np.testing.assert_allclose(d.vectors.T @ d.vectors, np.eye(n), atol=1e-8)
            assert np.linalg.norm(d.reconstruct() - a) <= 1e-8
        np.testing.assert_allclose(lap.values, jac.values, atol=1e-10)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            sym_eig(np.eye(2), "qr")


class TestTopEigvec:
    def test_diagonal(self):
        val, vec = top_eigvec(np.diag([5.0, 1.0, 1.0]))
        assert val == pytest.approx(5.0)
        np.testing.assert_allclose(vec, [1, 0, 0], atol=1e-9)

    def test_rank_one_sign_convention(self):
        s = np.array([1.0, -1.0]) / np.sqrt(2)
        val, vec = top_eigvec(np.outer(s, s))
        assert val == pytest.approx(1.0)
        # tie in magnitude goes to the lowest index, which must be positive
        np.testing.assert_allclose(vec, s, atol=1e-9)

    def test_matches_sym_eig(self):
        g = np.random.default_rng(11).standard_normal((4, 4))
        a = g @ g.T
        val, vec = top_eigvec(a, tol=1e-10)
        d = sym_eig(a)
        assert val == pytest.approx(d.values[0], abs=1e-9)
        np.testing.assert_allclose(vec, d.vectors[:, 0], atol=1e-8)
        assert np.linalg.norm(a @ vec - val * vec) <= 1e-10 * 10

    def test_negative_dominant_uses_shift(self):
        # largest algebraic eigenvalue is returned even when |lambda_min| is larger
        val, _ = top_eigvec(np.diag([1.0, -3.0]))
        assert val == pytest.approx(1.0)

    def test_cap_raises(self):
        a = np.diag([1.0, 1.0 - 1e-9, 0.0])
        with pytest.raises(ConvergenceFailure):
            top_eigvec(a, tol=1e-15, max_iter=3)


class TestSoftThreshold:
    def test_shrinks(self):
        np.testing.assert_allclose(svd_soft_threshold(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]),
                                   atol=1e-12)

    def test_zero_tau_identity(self):
        a = random_symmetric(np.random.default_rng(3), 5)
        np.testing.assert_allclose(svd_soft_threshold(a, 0.0), a, atol=1e-8)

    def test_negative_eigenvalue_killed(self):
        np.testing.assert_allclose(svd_soft_threshold(np.diag([3.0, -1.0]), 2.0),
                                   np.diag([1.0, 0.0]), atol=1e-12)

    @given(seeds, st.floats(0.0, 2.0))
    def test_non_expansive(self, seed, tau):
        rng = np.random.default_rng(seed)
        a, b = random_symmetric(rng, 5), random_symmetric(rng, 5)
        lhs = np.linalg.norm(svd_soft_threshold(a, tau) - svd_soft_threshold(b, tau))
        assert lhs <= np.linalg.norm(a - b) + 1e-12

    def test_nuclear_norm(self):
        assert nuclear_norm(np.diag([2.0, -3.0])) == pytest.approx(5.0)


class TestCompletion:
    def test_e1(self):
        q = orthonormal_completion(np.array([1.0, 0.0, 0.0]))
        assert q.shape == (3, 2)
        np.testing.assert_allclose(np.abs(q[0]), 0, atol=1e-15)
        np.testing.assert_allclose(q.T @ q, np.eye(2), atol=1e-12)

    def test_two_dimensional(self):
        v = np.array([1.0, 1.0]) / np.sqrt(2)
        q = orthonormal_completion(v)
        np.testing.assert_allclose(np.abs(q[:, 0]), [1 / np.sqrt(2)] * 2, atol=1e-12)
        assert q[0, 0] == pytest.approx(-q[1, 0])

    @given(seeds, st.integers(2, 12))
    def test_orthogonal(self, seed, n):
        v = np.random.default_rng(seed).standard_normal(n)
        v /= np.linalg.norm(v)
        q = np.column_stack([v, orthonormal_completion(v)])
        assert np.linalg.norm(q.T @ q - np.eye(n)) <= 1e-9

    def test_not_unit(self):
        with pytest.raises(NotUnitVector):
            orthonormal_completion(np.array([1.0, 1.0]))

    def test_deterministic(self):
        v = np.array([0.6, -0.8])
        np.testing.assert_array_equal(orthonormal_completion(v), orthonormal_completion(v))


def test_fix_sign_tie_lowest_index():
    np.testing.assert_array_equal(fix_sign(np.array([-1.0, 1.0])), [1.0, -1.0])
    np.testing.assert_array_equal(fix_sign(np.array([0.2, -0.9])), [-0.2, 0.9])


def test_forest_spectrum_in_unit_interval():
    for seed in range(20):
        lap = laplacian(erdos_renyi(10, 0.3, seed))
        x = spd_solve(np.eye(10) + lap, np.eye(10))
        vals = sym_eig((x + x.T) / 2, "jacobi").values
        assert vals.min() > 0 and vals.max() <= 1 + 1e-8


def test_backend_is_reported():
    assert kernels.BACKEND in ("compiled", "python")
