"""Acceptance suite: every criterion at its stated tolerance and budget.

Run `pytest tests/test_acceptance.py -s` to see one PASS/FAIL line per
criterion; each test also enforces its runtime budget.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import scipy.linalg

from momentsos.christoffel import CDKernel, support_score
from momentsos.christrep import (
    active_generators,
    assemble_representation,
    christoffel_representation,
    fenchel_gap,
    pell_check,
    solve_logdet_primal,
)
from momentsos.disintegration import disintegrate_cf
from momentsos.hierarchy import lower_bound, upper_bound, upper_bound_pushforward
from momentsos.moments import (
    MeasureDescriptor,
    SemialgebraicSet,
    catalog_moments,
    nonneg_test,
)
from momentsos.poly import MonomialBasis, Polynomial, basis_size
from momentsos.sdp import SolveOptions

X = Polynomial.variable(1, 0)
INTERVAL = SemialgebraicSet.interval()


@contextmanager
def criterion(number: int, label: str, budget_seconds: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:2d} FAIL - {label}")
        raise
    elapsed = time.perf_counter() - start
    status = "PASS" if elapsed < budget_seconds else "FAIL"
    print(f"ACCEPTANCE {number:2d} {status} - {label} ({elapsed:.2f}s / {budget_seconds:g}s)")
    assert elapsed < budget_seconds, f"runtime {elapsed:.2f}s exceeds {budget_seconds}s"


def cheb(bound):
    return catalog_moments(MeasureDescriptor("chebyshev1"), bound)


def unif(bound):
    return catalog_moments(MeasureDescriptor("uniform_interval"), bound)


def test_criterion_01_pell_identity():
    with criterion(1, "Pell identity for Chebyshev moments, t = 1..8", 1.0):
        phi = cheb(16)
        for t in range(1, 9):
            res = pell_check(INTERVAL, phi, t)
            assert res.constant == 2 * t + 1
            assert res.max_residual <= 1e-8, f"t={t}: {res.max_residual}"


def test_criterion_02_exact_lower_bound():
    with criterion(2, "min x on [-1,1]: rho_1 = -1, certificate, flat, minimizer", 1.0):
        res = lower_bound(X, INTERVAL, 1)
        assert abs(res.rho + 1.0) <= 1e-6
        assert res.certificate_residual <= 1e-6
        assert res.flat
        assert len(res.minimizers) == 1
        assert abs(res.minimizers[0][0] + 1.0) <= 1e-6


def test_criterion_03_upper_bound_pencil():
    with criterion(3, "tau_1 = -1/sqrt(3); tau_t non-increasing t = 0..8", 1.0):
        mu = unif(20)
        taus = [upper_bound(X, mu, t).tau for t in range(0, 9)]
        assert abs(taus[1] + 1.0 / math.sqrt(3)) <= 1e-9
        for hi, lo in zip(taus, taus[1:]):
            assert lo <= hi + 1e-9
        assert taus[8] <= taus[1]
        # oracle: independent pencil eigenvalues from closed-form moments
        for t in range(0, 9):
            m = [0.0 if k % 2 else 1.0 / (k + 1) for k in range(2 * t + 2)]
            A = np.array([[m[i + j + 1] for j in range(t + 1)] for i in range(t + 1)])
            B = np.array([[m[i + j] for j in range(t + 1)] for i in range(t + 1)])
            oracle = scipy.linalg.eigh(A, B, eigvals_only=True)[0]
            assert abs(taus[t] - oracle) <= 1e-8


def test_criterion_04_pushforward_bound():
    with criterion(4, "delta_1 = (15 - 2 sqrt 30)/35 for f = x^2; Hankel order 2", 1.0):
        res = upper_bound_pushforward(X * X, unif(20), 1)
        expected = (15 - 2 * math.sqrt(30)) / 35
        assert abs(res.delta - expected) <= 1e-6
        # the pencil has order t+1 = 2: reproduce it directly
        h = [1.0, 1 / 3, 1 / 5, 1 / 7]
        H0 = np.array([[h[0], h[1]], [h[1], h[2]]])
        H1 = np.array([[h[1], h[2]], [h[2], h[3]]])
        oracle = scipy.linalg.eigh(H1, H0, eigvals_only=True)[0]
        assert abs(res.delta - oracle) <= 1e-12
        assert res.sigma_star.n == 1 and res.sigma_star.degree == 2


def test_criterion_05_roundtrip_theorem():
    with criterion(5, "log-det round trip on 20 random interior polynomials", 30.0):
        rng = np.random.default_rng(2024)
        for trial in range(20):
            n = 1 if trial % 2 == 0 else 2
            t = 1 + trial % 3
            S = INTERVAL if n == 1 else SemialgebraicSet.ball2d()
            grams = []
            for _, tg in active_generators(S, t):
                o = basis_size(n, t - tg)
                B = rng.standard_normal((o, o))
                grams.append(B @ B.T + 0.1 * o * np.eye(o))
            p = assemble_representation(grams, S, t)
            rep = christoffel_representation(p, S, t)
            assert abs(rep.dual_value - rep.primal_value) <= 1e-6
            assert rep.residual_poly.norm_inf() <= 1e-6 * p.norm_inf()
            for Q, (g, tg) in zip(rep.gram_blocks, active_generators(S, t)):
                M = rep.phi_star.localizing_matrix(g, t - tg)
                assert np.max(np.abs(Q @ M - np.eye(len(Q)))) <= 1e-6


def test_criterion_06_equilibrium_recovery():
    with criterion(6, "constant input recovers Chebyshev moments, t = 1, 2, 3", 5.0):
        expected = [1.0, 0.0, 0.5, 0.0, 0.375, 0.0, 0.3125]
        for t in (1, 2, 3):
            p = Polynomial.constant(1, 2 * t + 1)
            phi, _ = solve_logdet_primal(p, INTERVAL, t)
            for k in range(2 * t + 1):
                assert abs(phi.value((k,)) - expected[k]) <= 1e-6


def test_criterion_07_disintegration():
    with criterion(7, "CF disintegration on product uniform measures", 5.0):
        mu = catalog_moments(
            MeasureDescriptor(
                "product",
                {"factors": [{"kind": "uniform_interval", "params": {}},
                             {"kind": "uniform_interval", "params": {}}]},
            ),
            6,
        )
        rep = disintegrate_cf(mu, [0.0], 1)
        assert abs(rep.nu_moments.value((0,)) - 1.0) <= 1e-6
        assert abs(rep.nu_moments.value((1,))) <= 1e-6
        assert abs(rep.nu_moments.value((2,)) - 1 / 3) <= 1e-6
        assert rep.factor_residual <= 1e-6
        rng = np.random.default_rng(7)
        for t in (1, 2, 3):
            for x in rng.uniform(-1, 1, 5):
                assert disintegrate_cf(mu, [x], t).factor_residual <= 1e-6


def test_criterion_08_fenchel_lemma():
    with criterion(8, "log-det Fenchel inequality on 100 random PD pairs", 1.0):
        rng = np.random.default_rng(88)
        for _ in range(100):
            o = int(rng.integers(1, 21))
            B1 = rng.standard_normal((o, o))
            B2 = rng.standard_normal((o, o))
            M = B1 @ B1.T + 0.1 * o * np.eye(o)
            Q = B2 @ B2.T + 0.1 * o * np.eye(o)
            assert fenchel_gap(M, Q) >= -1e-10
            assert abs(fenchel_gap(M, np.linalg.inv(M))) <= 1e-10


CATALOG = [
    MeasureDescriptor("chebyshev1"),
    MeasureDescriptor("chebyshev2"),
    MeasureDescriptor("uniform_interval"),
    MeasureDescriptor("uniform_box", {"bounds": [[-1, 1], [-1, 1]]}),
    MeasureDescriptor("uniform_ball2d"),
    MeasureDescriptor("uniform_simplex2d"),
    MeasureDescriptor("gaussian", {"n": 2}),
]


def test_criterion_09_cf_consistency():
    with criterion(9, "three CF definitions agree; reproducing property", 5.0):
        rng = np.random.default_rng(99)
        checked = 0
        for desc in CATALOG:
            for t in (2, 5):
                phi = catalog_moments(desc, 2 * t)
                kern = CDKernel(phi, t)
                for _ in range(8):
                    x = rng.uniform(-1, 1, desc.n)
                    lam = kern.cf(x)
                    lam_var, _ = kern.cf_variational(x)
                    lam_k = 1.0 / kern.eval(x, x)
                    assert abs(lam - lam_var) <= 1e-10 * lam
                    assert abs(lam - lam_k) <= 1e-10 * lam
                    basis_t = MonomialBasis(desc.n, t)
                    p = Polynomial(
                        desc.n, {a: rng.uniform(-1, 1) for a in basis_t}
                    )
                    assert kern.reproducing_residual(p, x) <= 1e-10
                    checked += 1
        assert checked >= 100


def test_criterion_10_support_decay():
    with criterion(10, "support decay dichotomy and scaled CF calibration", 1.0):
        phi = unif(20)
        kern = CDKernel(phi, 10)
        assert kern.cf([1.5]) / kern.cf([0.5]) <= 1e-4
        for t in (2, 4, 6, 8, 10):
            assert abs(support_score(cheb(2 * t), t, [0.0]) - 1.0) <= 1e-10


def test_criterion_11_nonnegativity_cone():
    with criterion(11, "spectrahedral nonnegativity test on Gaussian moments", 1.0):
        gauss = catalog_moments(MeasureDescriptor("gaussian", {"n": 1}), 12)
        res = nonneg_test(X, gauss, 1)
        assert not res.is_psd
        assert res.witness < 0
        for s in range(0, 5):
            assert nonneg_test(X * X, gauss, s).is_psd


def test_criterion_12_sandwich_and_monotonicity():
    with criterion(12, "sandwich rho_t <= tau_s / delta_s and monotonicity", 5.0):
        mu = unif(40)
        opts = SolveOptions(gap_tol=1e-10, feas_tol=1e-10)
        rhos = [lower_bound(X, INTERVAL, t, opts).rho for t in range(1, 7)]
        taus = [upper_bound(X, mu, t).tau for t in range(0, 7)]
        deltas = [upper_bound_pushforward(X, mu, t).delta for t in range(0, 7)]
        for rho in rhos:
            for bound in taus + deltas:
                assert rho <= bound + 1e-9
        for lo, hi in zip(rhos, rhos[1:]):
            assert hi >= lo - 1e-9
        for seq in (taus, deltas):
            for hi, lo in zip(seq, seq[1:]):
                assert lo <= hi + 1e-9
