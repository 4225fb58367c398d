import numpy as np
import pytest

from momentsos.linalg import (
    NotPositiveDefiniteError,
    cholesky,
    gen_eig_min,
    is_positive_definite,
    logdet_psd,
    min_eigenvalue,
    psd_inverse,
    psd_solve,
    sym_eig,
)


def _random_pd(rng, n):
    B = rng.standard_normal((n, n))
    return B @ B.T + n * np.eye(n)


class TestCholesky:
    def test_identity(self):
        np.testing.assert_allclose(cholesky(np.eye(3)), np.eye(3))

    def test_hand_factorization(self):
        L = cholesky(np.array([[4.0, 2.0], [2.0, 2.0]]))
        np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, 1.0]])

    def test_indefinite_reports_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))  # eigenvalues 3, -1
        assert err.value.index == 1

    def test_reconstruction_random(self):
        rng = np.random.default_rng(0)
        for n in (2, 5, 17, 60):
            S = _random_pd(rng, n)
            L = cholesky(S)
            assert np.linalg.norm(L @ L.T - S) <= 1e-10 * np.linalg.norm(S)
            assert np.all(np.diagonal(L) > 0)

    def test_scale_relative_tolerance(self):
        # tiny pivot relative to the max diagonal trips the failure
        S = np.diag([1.0, 1e-15])
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(S)
        assert is_positive_definite(S, rtol=0.0)


class TestSymEig:
    def test_diagonal(self):
        w, _ = sym_eig(np.diag([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(w, [1.0, 2.0, 3.0])

    def test_swap_matrix(self):
        w, V = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(w, [-1.0, 1.0])
        np.testing.assert_allclose(V.T @ V, np.eye(2), atol=1e-12)

    def test_rank_one(self):
        w, _ = sym_eig(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        np.testing.assert_allclose(w, [0.0, 2.0], atol=1e-12)

    def test_residual_random(self):
        rng = np.random.default_rng(1)
        S = _random_pd(rng, 30)
        w, V = sym_eig(S)
        scale = np.linalg.norm(S)
        for i in range(30):
            assert np.linalg.norm(S @ V[:, i] - w[i] * V[:, i]) <= 1e-10 * scale


class TestGenEigMin:
    def test_identity_pencil(self):
        lam, _ = gen_eig_min(np.diag([5.0, 1.0]), np.eye(2))
        assert lam == pytest.approx(1.0)

    def test_pushforward_pencil(self):
        # the tau_1 pencil for f = x against uniform moments
        A = np.array([[0.0, 1 / 3], [1 / 3, 0.0]])
        B = np.diag([1.0, 1 / 3])
        lam, w = gen_eig_min(A, B)
        assert lam == pytest.approx(-1 / np.sqrt(3), abs=1e-12)
        np.testing.assert_allclose(A @ w, lam * (B @ w), atol=1e-9)

    def test_equal_pencil(self):
        rng = np.random.default_rng(2)
        A = _random_pd(rng, 6)
        lam, _ = gen_eig_min(A, A)
        assert lam == pytest.approx(1.0, abs=1e-10)

    def test_b_not_pd_propagates(self):
        with pytest.raises(NotPositiveDefiniteError):
            gen_eig_min(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_matches_reduced_eigenproblem(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            A = rng.standard_normal((8, 8))
            A = 0.5 * (A + A.T)
            B = _random_pd(rng, 8)
            lam, w = gen_eig_min(A, B)
            L = cholesky(B)
            Li = np.linalg.inv(L)
            lam_ref = np.linalg.eigvalsh(Li @ A @ Li.T)[0]
            assert lam == pytest.approx(lam_ref, abs=1e-9)
            assert w @ B @ w == pytest.approx(1.0, abs=1e-8)


class TestPsdSolve:
    def test_identity(self):
        b = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(psd_solve(np.eye(3), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(
            psd_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1.0, 1.0]
        )

    def test_row_sums(self):
        S = np.array([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(psd_solve(S, np.array([3.0, 3.0])), [1.0, 1.0])

    def test_matrix_rhs(self):
        rng = np.random.default_rng(4)
        S = _random_pd(rng, 7)
        B = rng.standard_normal((7, 3))
        X = psd_solve(S, B)
        assert np.linalg.norm(S @ X - B) <= 1e-10 * np.linalg.norm(B)


class TestPsdInverse:
    def test_inverse_quality(self):
        rng = np.random.default_rng(5)
        for n in (3, 10, 25):
            S = _random_pd(rng, n)
            Q = psd_inverse(S, refine=1)
            assert np.linalg.norm(S @ Q - np.eye(n)) <= 1e-12 * n
            np.testing.assert_allclose(Q, Q.T)

    def test_refinement_tightens_hankel_inverse(self):
        # moments of the arcsine measure: exactly representable, ill-conditioned
        from math import comb

        t = 8
        m = [comb(k, k // 2) / 4 ** (k // 2) if k % 2 == 0 else 0.0 for k in range(2 * t + 1)]
        H = np.array([[m[i + j] for j in range(t + 1)] for i in range(t + 1)])
        plain = psd_inverse(H, refine=0)
        refined = psd_inverse(H, refine=2)
        r_plain = np.linalg.norm(H @ plain - np.eye(t + 1))
        r_refined = np.linalg.norm(H @ refined - np.eye(t + 1))
        assert r_refined < r_plain
        assert r_refined <= 1e-10


def test_logdet_psd():
    rng = np.random.default_rng(6)
    S = _random_pd(rng, 12)
    assert logdet_psd(S) == pytest.approx(np.linalg.slogdet(S)[1], rel=1e-12)


def test_min_eigenvalue():
    assert min_eigenvalue(np.diag([3.0, -2.0, 5.0])) == pytest.approx(-2.0)
