import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from bnskel.blocks import (
    BlockMatrix,
    block_norm,
    group_soft_threshold,
    max_eigenvalue,
    min_eigenvalue,
    op_norm,
    solve_spd,
)
from bnskel.encoding import BlockIndexMap
from bnskel.errors import NotPositiveDefinite, NotSquare, ShapeMismatch, UnsupportedPair

INF = float("inf")


def random_blocked(rng, max_blocks=5, max_width=3, cols=None):
    widths = rng.integers(1, max_width + 1, size=rng.integers(1, max_blocks + 1))
    q = cols or int(rng.integers(1, 5))
    A = rng.normal(size=(int(widths.sum()), q)) * rng.choice([1e-3, 1, 1e3])
    return BlockMatrix(A, BlockIndexMap.uniform(widths))


class TestBlockNorm:
    def test_single_block(self):
        assert block_norm(BlockMatrix(np.array([[-3.0]]), BlockIndexMap.uniform([1])), 1, 2) == 3

    def test_two_blocks(self):
        A = BlockMatrix(np.array([[3.0, 4.0], [0.0, 0.0]]), BlockIndexMap.uniform([1, 1]))
        assert block_norm(A, INF, 2) == 5
        assert block_norm(A, 1, 2) == 5
        assert block_norm(A, INF, 1) == 7

    @pytest.mark.parametrize("pair", [(INF, 2), (INF, 1), (1, 2)])
    def test_zero(self, pair):
        assert block_norm(BlockMatrix(np.zeros((4, 2)), BlockIndexMap.uniform([2, 2])), *pair) == 0

    def test_empty_partition(self):
        assert block_norm(BlockMatrix(np.zeros((0, 2)), BlockIndexMap((), ())), INF, 2) == 0

    def test_unsupported(self):
        with pytest.raises(UnsupportedPair):
            block_norm(BlockMatrix(np.eye(2), BlockIndexMap.uniform([2])), 2, 2)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            BlockMatrix(np.eye(3), BlockIndexMap.uniform([2]))

    @given(st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_unit_partition_is_inf_inf(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(int(rng.integers(1, 8)), int(rng.integers(1, 8))))
        bm = BlockMatrix(A, BlockIndexMap.uniform([1] * A.shape[0]))
        assert abs(block_norm(bm, INF, 1) - op_norm(A, "inf_inf")) <= 1e-12 * max(1, op_norm(A, "inf_inf"))


class TestNormInequalities:
    @given(st.integers(0, 2**31))
    @settings(max_examples=200, deadline=None)
    def test_inf2_submultiplicative(self, seed):
        rng = np.random.default_rng(seed)
        A = random_blocked(rng)
        B = rng.normal(size=(A.values.shape[1], int(rng.integers(1, 5))))
        lhs = block_norm(BlockMatrix(A.values @ B, A.partition), INF, 2)
        rhs = block_norm(A, INF, 1) * op_norm(B, "inf_2")
        assert lhs <= rhs * (1 + 1e-12) + 1e-12

    @given(st.integers(0, 2**31))
    @settings(max_examples=200, deadline=None)
    def test_inf1_submultiplicative(self, seed):
        rng = np.random.default_rng(seed)
        A = random_blocked(rng)
        B = rng.normal(size=(A.values.shape[1], int(rng.integers(1, 5))))
        lhs = block_norm(BlockMatrix(A.values @ B, A.partition), INF, 1)
        rhs = block_norm(A, INF, 1) * op_norm(B, "inf_inf")
        assert lhs <= rhs * (1 + 1e-12) + 1e-12


class TestOpNorm:
    def test_identity(self):
        I = np.eye(3)
        assert op_norm(I, "inf_inf") == 1 and op_norm(I, "spectral") == pytest.approx(1)
        assert op_norm(I, "frobenius") == pytest.approx(np.sqrt(3))
        assert op_norm(I, "inf_2") == 1

    def test_row_sum(self):
        assert op_norm(np.array([[1, -2], [3, 0]]), "inf_inf") == 3

    def test_unknown(self):
        with pytest.raises(ValueError):
            op_norm(np.eye(2), "nuclear")

    @given(st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_sandwich(self, seed):
        A = np.random.default_rng(seed).normal(size=(5, 5))
        s, f = op_norm(A, "spectral"), op_norm(A, "frobenius")
        assert s <= f * (1 + 1e-12) and f <= np.sqrt(5) * s * (1 + 1e-12)


class TestEigen:
    def test_diag(self):
        assert min_eigenvalue(np.diag([2.0, 0.5])) == pytest.approx(0.5)
        assert max_eigenvalue(np.diag([2.0, 0.5])) == pytest.approx(2.0)

    def test_two_by_two(self):
        assert min_eigenvalue(np.array([[1, 0.48], [0.48, 1]])) == pytest.approx(0.52, abs=1e-14)

    def test_identity(self):
        assert min_eigenvalue(np.eye(4)) == pytest.approx(1)

    def test_not_square(self):
        with pytest.raises(NotSquare):
            min_eigenvalue(np.ones((2, 3)))


class TestSolveSpd:
    def test_identity(self):
        B = np.arange(6.0).reshape(3, 2)
        np.testing.assert_allclose(solve_spd(np.eye(3), B), B)

    def test_scalar(self):
        np.testing.assert_allclose(solve_spd(np.array([[4.0]]), np.array([2.0])), [0.5])

    @pytest.mark.parametrize("seed", range(10))
    def test_against_inverse(self, seed):
        rng = np.random.default_rng(seed)
        G = rng.normal(size=(6, 6))
        A = G @ G.T + 0.1 * np.eye(6)
        B = rng.normal(size=(6, 3))
        X = solve_spd(A, B)
        np.testing.assert_allclose(X, np.linalg.inv(A) @ B, atol=1e-9)
        assert np.linalg.norm(A @ X - B) <= 1e-8 * np.linalg.norm(B)

    def test_singular(self):
        with pytest.raises(NotPositiveDefinite):
            solve_spd(np.ones((2, 2)), np.ones(2))


class TestGroupSoftThreshold:
    def test_inside_ball(self):
        g = np.array([[0.9]])
        assert np.all(group_soft_threshold(g, 1.0) == 0)

    def test_no_penalty(self):
        np.testing.assert_array_equal(group_soft_threshold(np.array([[3.0, 4.0]]), 0.0), [[3.0, 4.0]])

    def test_half_scale(self):
        np.testing.assert_allclose(group_soft_threshold(np.array([[3.0, 4.0]]), 2.5), [[1.5, 2.0]])

    @given(st.integers(0, 2**31))
    @settings(max_examples=60, deadline=None)
    def test_is_prox_minimizer(self, seed):
        rng = np.random.default_rng(seed)
        g = rng.normal(size=2) * 2
        tau = float(rng.uniform(0, 3))

        def f(x):
            return 0.5 * np.sum((x - g) ** 2) + tau * np.linalg.norm(x)

        x = group_soft_threshold(g, tau)
        best = min(
            (minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12}) for x0 in (g, np.zeros(2) + 1e-3)),
            key=lambda res: res.fun,
        )
        assert f(x) <= best.fun + 1e-9
