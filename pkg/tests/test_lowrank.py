import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrstokes import lowrank
from lrstokes.lowrank import LowRankMatrix, TruncationPolicy

from oracles import svd_eps_rank, svd_tail


def hilbert(m, n=None):
    n = m if n is None else n
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    return 1.0 / (i + j + 1.0)


def rand_lr(rng, m, n, r):
    return LowRankMatrix(rng.standard_normal((m, r)), rng.standard_normal((n, r)))


def graded_lr(rng, m, n, r, decay=0.5):
    """Random factors with geometrically decaying singular values."""
    Q1, _ = np.linalg.qr(rng.standard_normal((m, r)))
    Q2, _ = np.linalg.qr(rng.standard_normal((n, r)))
    s = decay ** np.arange(r)
    # non-orthogonal representation of the same matrix
    T = rng.standard_normal((r, r)) + 3 * np.eye(r)
    return LowRankMatrix(Q1 * s @ T, Q2 @ np.linalg.inv(T).T)


class TestPolicy:
    def test_eps_zero_needs_cap(self):
        with pytest.raises(ValueError):
            TruncationPolicy(eps_rel=0.0)
        TruncationPolicy(eps_rel=0.0, rank_max=3)

    def test_negative_eps(self):
        with pytest.raises(ValueError):
            TruncationPolicy(eps_rel=-1e-3)


class TestConstruction:
    def test_factor_mismatch(self):
        with pytest.raises(ValueError):
            LowRankMatrix(np.ones((3, 2)), np.ones((4, 1)))

    def test_zero_is_rank_zero(self):
        Z = lowrank.zeros(5, 7)
        assert Z.rank == 0 and Z.shape == (5, 7)
        np.testing.assert_array_equal(Z.to_dense(), np.zeros((5, 7)))

    def test_from_dense_zero(self):
        assert lowrank.from_dense(np.zeros((6, 6)), 1e-3).rank == 0

    def test_from_dense_outer(self):
        rng = np.random.default_rng(0)
        M = np.outer(rng.standard_normal(9), rng.standard_normal(11))
        assert lowrank.from_dense(M, 1e-12).rank == 1

    def test_from_dense_hilbert_matches_svd(self):
        H = 1.0 / (np.arange(1, 11)[:, None] + np.arange(1, 11)[None, :] - 1)
        A = lowrank.from_dense(H, 1e-8)
        assert A.rank == svd_eps_rank(H, 1e-8)
        assert np.linalg.norm(A.to_dense() - H) <= 1e-8 * np.linalg.norm(H)

    def test_from_dense_rejects_nan(self):
        M = np.ones((3, 3))
        M[1, 1] = np.nan
        with pytest.raises(ValueError):
            lowrank.from_dense(M)

    def test_cap_flags_tolerance(self):
        A = lowrank.from_dense(hilbert(30), TruncationPolicy(1e-12, rank_max=3))
        assert A.rank == 3
        assert not A.tol_met
        assert A.err_estimate > 1e-12


class TestAdd:
    def test_add_zero(self):
        rng = np.random.default_rng(1)
        A = rand_lr(rng, 6, 5, 2)
        B = lowrank.add(A, lowrank.zeros(6, 5))
        np.testing.assert_array_equal(B.to_dense(), A.to_dense())

    def test_cancellation(self):
        rng = np.random.default_rng(2)
        A = rand_lr(rng, 8, 8, 3)
        C = lowrank.round(lowrank.add(A, -1.0 * A), 1e-13)
        assert C.rank == 0

    def test_rank_adds(self):
        rng = np.random.default_rng(3)
        A = rand_lr(rng, 8, 9, 1)
        B = rand_lr(rng, 8, 9, 1)
        assert lowrank.add(A, B).rank == 2

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            lowrank.add(lowrank.zeros(3, 3), lowrank.zeros(3, 4))

    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 4), st.integers(0, 4),
           st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_add_matches_dense(self, m, n, r1, r2, seed):
        rng = np.random.default_rng(seed)
        A, B = rand_lr(rng, m, n, r1), rand_lr(rng, m, n, r2)
        ref = A.to_dense() + B.to_dense()
        got = lowrank.add(A, B).to_dense()
        assert np.linalg.norm(got - ref) <= 1e-13 * max(np.linalg.norm(ref), 1.0)


class TestApplyFactors:
    def test_identity(self):
        rng = np.random.default_rng(4)
        A = rand_lr(rng, 7, 6, 2)
        B = lowrank.apply_factors(np.eye(7), np.eye(6), A)
        np.testing.assert_allclose(B.to_dense(), A.to_dense(), rtol=0, atol=1e-14)

    def test_orthogonal_preserves_norm(self):
        rng = np.random.default_rng(5)
        A = rand_lr(rng, 12, 10, 3)
        Q1, _ = np.linalg.qr(rng.standard_normal((12, 12)))
        Q2, _ = np.linalg.qr(rng.standard_normal((10, 10)))
        B = lowrank.apply_factors(Q1, Q2, A)
        assert abs(lowrank.frob_norm(B) / lowrank.frob_norm(A) - 1) <= 1e-13

    def test_difference_kills_constants(self):
        n = 9
        G = np.eye(n - 1, n, k=1) - np.eye(n - 1, n)
        H = np.eye(n - 1, n, k=1) + np.eye(n - 1, n)
        B = lowrank.apply_factors(G, H, lowrank.outer(np.ones(n), np.ones(n)))
        assert np.abs(B.to_dense()).max() == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            lowrank.apply_factors(np.eye(3), np.eye(4), lowrank.zeros(4, 4))

    def test_callable(self):
        rng = np.random.default_rng(6)
        A = rand_lr(rng, 5, 5, 2)
        B = lowrank.apply_factors(lambda X: 2 * X, lambda X: X[::-1], A)
        np.testing.assert_allclose(B.to_dense(), 2 * A.to_dense()[:, ::-1], atol=1e-14)

    @given(st.integers(1, 8), st.integers(1, 8), st.integers(1, 8), st.integers(1, 8),
           st.integers(0, 3), st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_commutes_with_dense(self, m, n, p, q, r, seed):
        rng = np.random.default_rng(seed)
        A = rand_lr(rng, m, n, r)
        L, R = rng.standard_normal((p, m)), rng.standard_normal((q, n))
        ref = L @ A.to_dense() @ R.T
        got = lowrank.apply_factors(L, R, A)
        assert got.rank == r
        assert np.linalg.norm(got.to_dense() - ref) <= 1e-13 * max(np.linalg.norm(ref), 1.0)


class TestHadamard:
    def test_ones_is_identity(self):
        rng = np.random.default_rng(7)
        A = rand_lr(rng, 6, 4, 2)
        B = lowrank.hadamard(A, lowrank.outer(np.ones(6), np.ones(4)))
        np.testing.assert_allclose(B.to_dense(), A.to_dense(), atol=1e-14)

    def test_rank_one_product(self):
        rng = np.random.default_rng(8)
        assert lowrank.hadamard(rand_lr(rng, 5, 5, 1), rand_lr(rng, 5, 5, 1)).rank == 1

    def test_matches_dense(self):
        rng = np.random.default_rng(9)
        A, B = rand_lr(rng, 20, 15, 2), rand_lr(rng, 20, 15, 3)
        C = lowrank.hadamard(A, B)
        ref = A.to_dense() * B.to_dense()
        assert C.rank == 6
        assert np.linalg.norm(C.to_dense() - ref) <= 1e-13 * np.linalg.norm(ref)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            lowrank.hadamard(lowrank.zeros(2, 3), lowrank.zeros(3, 2))


class TestRound:
    def test_exact_rank_two_in_five_columns(self):
        rng = np.random.default_rng(10)
        u, v = rng.standard_normal((30, 2)), rng.standard_normal((25, 2))
        # five columns spanning a rank-2 matrix
        C = rng.standard_normal((2, 5))
        A = LowRankMatrix(u @ C, v @ np.linalg.pinv(C).T)
        assert A.rank == 5
        R = lowrank.round(A, 1e-12)
        assert R.rank == 2
        np.testing.assert_allclose(R.to_dense(), A.to_dense(), atol=1e-12)

    def test_best_fixed_rank(self):
        rng = np.random.default_rng(11)
        A = graded_lr(rng, 40, 30, 8)
        R = lowrank.round(A, TruncationPolicy(eps_rel=0.0, rank_max=3))
        assert R.rank == 3
        err = np.linalg.norm(R.to_dense() - A.to_dense())
        assert abs(err - svd_tail(A.to_dense(), 3)) <= 1e-12 * np.linalg.norm(A.to_dense())

    def test_zero(self):
        assert lowrank.round(lowrank.zeros(4, 4), 1e-8).rank == 0
        A = LowRankMatrix(np.zeros((4, 2)), np.ones((4, 2)))
        assert lowrank.round(A, 1e-8).rank == 0

    def test_cap_flag(self):
        rng = np.random.default_rng(12)
        A = graded_lr(rng, 30, 30, 10, decay=0.9)
        R = lowrank.round(A, TruncationPolicy(1e-10, rank_max=4))
        assert R.rank == 4 and not R.tol_met
        assert R.err_estimate == pytest.approx(
            svd_tail(A.to_dense(), 4) / np.linalg.norm(A.to_dense()), rel=1e-8
        )

    @given(st.integers(2, 40), st.integers(2, 40), st.integers(1, 10),
           st.sampled_from([1e-2, 1e-4, 1e-8, 1e-12]), st.integers(0, 2**31 - 1))
    @settings(max_examples=60, deadline=None)
    def test_error_and_rank_vs_svd(self, m, n, r, eps, seed):
        rng = np.random.default_rng(seed)
        A = graded_lr(rng, m, n, min(r, m, n))
        M = A.to_dense()
        R = lowrank.round(A, eps)
        assert R.rank <= min(m, n)
        assert np.linalg.norm(R.to_dense() - M) <= eps * np.linalg.norm(M) * (1 + 1e-8) + 1e-14
        assert R.rank == svd_eps_rank(M, eps)

    @given(st.integers(2, 30), st.integers(1, 8), st.sampled_from([1e-3, 1e-6, 1e-9]),
           st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_idempotent(self, n, r, eps, seed):
        rng = np.random.default_rng(seed)
        A = graded_lr(rng, n, n + 3, min(r, n))
        R1 = lowrank.round(A, eps)
        R2 = lowrank.round(R1, eps)
        assert R2.rank == R1.rank
        norm = np.linalg.norm(A.to_dense())
        assert np.linalg.norm(R2.to_dense() - R1.to_dense()) <= 2 * eps * norm

    def test_dense_sizes_up_to_256(self):
        rng = np.random.default_rng(13)
        for n in (16, 64, 256):
            x = np.linspace(0, 1, n)
            # sum of smooth separable terms plus a random low-rank part
            A = lowrank.add(
                LowRankMatrix(np.exp(-np.outer(x, np.arange(1, 15))), np.cos(np.outer(x, np.arange(14)))),
                1e-3 * rand_lr(rng, n, n, 4),
            )
            M = A.to_dense()
            for eps in (1e-3, 1e-7, 1e-11):
                R = lowrank.round(A, eps)
                assert np.linalg.norm(R.to_dense() - M) <= eps * np.linalg.norm(M) * (1 + 1e-8)

    @staticmethod
    def _round_time(n, r=30, reps=15, seed=14):
        rng = np.random.default_rng(seed)
        A = LowRankMatrix(rng.standard_normal((n, r)), rng.standard_normal((n, r)))
        ts = []
        for _ in range(reps):
            t0 = time.perf_counter()
            lowrank.round(A, 1e-8)
            ts.append(time.perf_counter() - t0)
        return min(ts)

    @pytest.mark.xfail(
        strict=False,
        reason="1024 x 30 factors fit in L2 cache, 4096 x 30 do not; on small-cache "
        "machines the ratio can exceed 5 although the flop count is linear",
    )
    def test_cost_ratio_4096_vs_1024(self):
        self._round_time(1024, reps=3)  # warm-up
        ratio = self._round_time(4096) / self._round_time(1024)
        assert ratio <= 5.0, ratio

    def test_linear_cost_out_of_cache(self):
        # Past L2 even a plain n x r matmul scales with slope ~1.2 here, so the
        # bound separates linear from quadratic cost (slope 2), not more.
        ns = np.array([8192, 16384, 32768, 65536, 131072])
        ts = np.array([self._round_time(n, reps=5) for n in ns])
        slope = np.polyfit(np.log(ns), np.log(ts), 1)[0]
        assert slope <= 1.5, (slope, ts)


class TestNormDot:
    def test_dot_self_is_norm_squared(self):
        rng = np.random.default_rng(15)
        A = rand_lr(rng, 9, 7, 3)
        assert lowrank.dot(A, A) == pytest.approx(lowrank.frob_norm(A) ** 2, rel=1e-13)

    def test_dot_zero(self):
        rng = np.random.default_rng(16)
        assert lowrank.dot(rand_lr(rng, 4, 4, 2), lowrank.zeros(4, 4)) == 0.0
        assert lowrank.frob_norm(lowrank.zeros(4, 4)) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            lowrank.dot(lowrank.zeros(3, 3), lowrank.zeros(3, 2))

    @given(st.integers(1, 15), st.integers(1, 15), st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_dense(self, m, n, seed):
        rng = np.random.default_rng(seed)
        A, B = rand_lr(rng, m, n, 3), rand_lr(rng, m, n, 3)
        ref = float(np.sum(A.to_dense() * B.to_dense()))
        scale = np.linalg.norm(A.to_dense()) * np.linalg.norm(B.to_dense())
        assert abs(lowrank.dot(A, B) - ref) <= 1e-12 * scale
        assert lowrank.frob_norm(A) == pytest.approx(np.linalg.norm(A.to_dense()), rel=1e-12)

    def test_norm_small_difference(self):
        # the difference of two close matrices keeps its relative accuracy
        rng = np.random.default_rng(17)
        A = rand_lr(rng, 20, 20, 3)
        E = 1e-9 * rand_lr(rng, 20, 20, 1)
        D = lowrank.add(lowrank.add(A, E), -A)
        assert lowrank.frob_norm(D) == pytest.approx(np.linalg.norm(E.to_dense()), rel=1e-5)
