import math

import numpy as np
import pytest

from momentsos.christoffel import (
    CDKernel,
    MomentMatrixSingularError,
    cd_kernel_eval,
    cf_eval,
    cf_reciprocal_poly,
    cf_variational,
    equilibrium_moment_estimate,
    orthonormal_basis,
    reproducing_check,
    support_score,
)
from momentsos.moments import (
    DegreeOverflowError,
    MeasureDescriptor,
    catalog_moments,
    empirical_moments,
)
from momentsos.poly import MonomialBasis, Polynomial

CATALOG = [
    MeasureDescriptor("chebyshev1"),
    MeasureDescriptor("chebyshev2"),
    MeasureDescriptor("uniform_interval"),
    MeasureDescriptor("uniform_box", {"bounds": [[-1, 1], [-1, 1]]}),
    MeasureDescriptor("uniform_ball2d"),
    MeasureDescriptor("uniform_simplex2d"),
    MeasureDescriptor("gaussian", {"n": 2}),
]


def cheb(bound):
    return catalog_moments(MeasureDescriptor("chebyshev1"), bound)


def unif(bound):
    return catalog_moments(MeasureDescriptor("uniform_interval"), bound)


class TestOrthonormalBasis:
    def test_chebyshev_degree_one(self):
        ob = orthonormal_basis(cheb(2), 1)
        P = ob.polynomials()
        assert P[0] == Polynomial.constant(1, 1.0)
        assert P[1].coefficient((1,)) == pytest.approx(math.sqrt(2))
        assert P[1].coefficient((0,)) == pytest.approx(0.0)

    def test_uniform_degree_one(self):
        P = orthonormal_basis(unif(2), 1).polynomials()
        assert P[1].coefficient((1,)) == pytest.approx(math.sqrt(3))

    def test_chebyshev_degree_two(self):
        # P2 = sqrt(2) * (2x^2 - 1)
        P = orthonormal_basis(cheb(4), 2).polynomials()
        assert P[2].coefficient((2,)) == pytest.approx(2 * math.sqrt(2))
        assert P[2].coefficient((0,)) == pytest.approx(-math.sqrt(2))

    def test_lower_triangular_positive_diagonal(self):
        ob = orthonormal_basis(unif(8), 4)
        C = ob.coeffs
        assert np.allclose(C, np.tril(C))
        assert np.all(np.diagonal(C) > 0)

    @pytest.mark.parametrize("desc", CATALOG, ids=lambda d: d.kind)
    def test_orthonormality_invariant(self, desc):
        # phi(P_a P_b) = delta to 1e-8, all catalog measures, t <= 6
        t = 6 if desc.n == 1 else 4
        phi = catalog_moments(desc, 2 * t)
        polys = orthonormal_basis(phi, t).polynomials()
        worst = 0.0
        for i, p in enumerate(polys):
            for j in range(i + 1):
                val = phi.riesz(p * polys[j])
                worst = max(worst, abs(val - (1.0 if i == j else 0.0)))
        assert worst <= 1e-8

    def test_singular_matrix_reported(self):
        # two points cannot support a degree-2 basis
        phi = empirical_moments([[0.0], [1.0]], 4)
        with pytest.raises(MomentMatrixSingularError, match="degree 2"):
            orthonormal_basis(phi, 2)


class TestKernel:
    def test_order_zero_constant(self):
        assert cd_kernel_eval(unif(0), 0, [0.3], [-0.7]) == pytest.approx(1.0)

    def test_chebyshev_at_one(self):
        assert cd_kernel_eval(cheb(2), 1, [1.0], [1.0]) == pytest.approx(3.0)

    def test_product_uniform_origin(self):
        mu = catalog_moments(
            MeasureDescriptor("uniform_box", {"bounds": [[-1, 1], [-1, 1]]}), 2
        )
        assert cd_kernel_eval(mu, 1, [0.0, 0.0], [0.0, 0.0]) == pytest.approx(1.0)

    def test_symmetry_in_arguments(self):
        phi = cheb(8)
        k = CDKernel(phi, 4)
        rng = np.random.default_rng(0)
        for _ in range(5):
            x, z = rng.uniform(-1, 1, 2)
            assert k.eval([x], [z]) == pytest.approx(k.eval([z], [x]), rel=1e-12)


class TestChristoffelFunction:
    def test_order_zero(self):
        assert cf_eval(unif(0), 0, [2.5]) == pytest.approx(1.0)

    def test_chebyshev_origin(self):
        assert cf_eval(cheb(2), 1, [0.0]) == pytest.approx(1.0)

    def test_chebyshev_degree_two_at_one(self):
        assert cf_eval(cheb(4), 2, [1.0]) == pytest.approx(0.2)

    def test_variational_order_zero(self):
        val, pstar = cf_variational(unif(0), 0, [0.4])
        assert val == pytest.approx(1.0)
        assert pstar == Polynomial.constant(1, 1.0)

    def test_variational_chebyshev(self):
        val, _ = cf_variational(cheb(2), 1, [1.0])
        assert val == pytest.approx(1 / 3)

    def test_variational_minimizer_pinned(self):
        rng = np.random.default_rng(1)
        phi = catalog_moments(MeasureDescriptor("uniform_ball2d"), 8)
        for _ in range(10):
            x = rng.uniform(-1, 1, 2)
            _, pstar = cf_variational(phi, 3, x)
            assert pstar(x) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("desc", CATALOG, ids=lambda d: d.kind)
    def test_two_definitions_agree(self, desc):
        # cf_eval vs cf_variational vs 1/cd_kernel, 1e-10 relative, t <= 5
        rng = np.random.default_rng(2)
        t = 5 if desc.n == 1 else 4
        phi = catalog_moments(desc, 2 * t)
        kern = CDKernel(phi, t)
        for _ in range(20):
            x = rng.uniform(-1, 1, desc.n)
            lam = kern.cf(x)
            lam_var, _ = kern.cf_variational(x)
            lam_kernel = 1.0 / kern.eval(x, x)
            assert abs(lam - lam_var) <= 1e-10 * lam
            assert abs(lam - lam_kernel) <= 1e-10 * lam

    def test_monotone_nonincreasing_in_t(self):
        rng = np.random.default_rng(3)
        phi = unif(12)
        xs = rng.uniform(-1.5, 1.5, 8)
        for x in xs:
            vals = [cf_eval(phi, t, [x]) for t in range(0, 7)]
            for lo, hi in zip(vals[1:], vals[:-1]):
                assert lo <= hi * (1 + 1e-12)


class TestReciprocalPoly:
    def test_chebyshev_t1(self):
        q = cf_reciprocal_poly(cheb(2), 1).q
        assert q.coefficient((0,)) == pytest.approx(1.0)
        assert q.coefficient((2,)) == pytest.approx(2.0)

    def test_uniform_t1(self):
        q = cf_reciprocal_poly(unif(2), 1).q
        assert q.coefficient((2,)) == pytest.approx(3.0)

    def test_chebyshev_t2_explicit(self):
        # 1 + 2x^2 + 2(2x^2 - 1)^2 = 3 - 6x^2 + 8x^4
        q = cf_reciprocal_poly(cheb(4), 2).q
        assert q.coefficient((0,)) == pytest.approx(3.0)
        assert q.coefficient((2,)) == pytest.approx(-6.0)
        assert q.coefficient((4,)) == pytest.approx(8.0)

    def test_matches_kernel_diagonal(self):
        rng = np.random.default_rng(4)
        phi = catalog_moments(MeasureDescriptor("uniform_simplex2d"), 8)
        kern = CDKernel(phi, 3)
        q = kern.reciprocal_poly().q
        for _ in range(10):
            x = rng.uniform(0, 0.6, 2)
            assert q(x) == pytest.approx(kern.eval(x, x), rel=1e-9)

    def test_sum_of_squares_structure(self):
        cp = cf_reciprocal_poly(unif(4), 2)
        assert cp.num_squares == 3
        assert cp.q.degree == 4

    def test_at_least_one_for_normalized_measure(self):
        # K(x,x) >= P_0(x)^2 = 1 whenever phi has mass one
        rng = np.random.default_rng(7)
        q = cf_reciprocal_poly(cheb(8), 4).q
        for x in rng.uniform(-2, 2, 20):
            assert q([x]) >= 1.0 - 1e-12


def _legendre_kernel(t, x):
    # brute-force oracle: orthonormal Legendre polynomials via recurrence
    p_prev, p_cur = 1.0, x
    total = 1.0  # (sqrt(1) * P_0)^2 with normalization sqrt(2k+1)
    for k in range(1, t + 1):
        total += (2 * k + 1) * p_cur**2
        p_next = ((2 * k + 1) * x * p_cur - k * p_prev) / (k + 1)
        p_prev, p_cur = p_cur, p_next
    return total


class TestSupportScore:
    def test_chebyshev_even_t_origin(self):
        for t in (2, 4, 6, 8, 10):
            assert support_score(cheb(2 * t), t, [0.0]) == pytest.approx(1.0, abs=1e-9)

    def test_order_zero_everywhere_one(self):
        assert support_score(unif(0), 0, [42.0]) == pytest.approx(1.0)

    def test_uniform_outside_decay(self):
        score = support_score(unif(20), 10, [2.0])
        oracle = 11.0 / _legendre_kernel(10, 2.0)
        assert score < 1e-4
        assert score == pytest.approx(oracle, rel=1e-4)

    def test_decay_dichotomy(self):
        phi = unif(20)
        kern = CDKernel(phi, 10)
        assert kern.cf([1.5]) / kern.cf([0.5]) <= 1e-4

    def test_ridge_regularization_on_degenerate_cloud(self):
        phi = empirical_moments([[0.0], [1.0]], 4)
        kern = CDKernel(phi, 2, regularize=True)
        assert kern.regularized
        assert kern.ridge > 0
        assert np.isfinite(kern.support_score([0.5]))


class TestReproducing:
    def test_constants_reproduce(self):
        assert reproducing_check(unif(4), 2, Polynomial.constant(1, 1.0), [0.3]) <= 1e-10

    def test_chebyshev_random_cubic(self):
        rng = np.random.default_rng(5)
        phi = cheb(6)
        for _ in range(10):
            p = Polynomial(1, {(k,): rng.uniform(-1, 1) for k in range(4)})
            assert reproducing_check(phi, 3, p, [0.3]) <= 1e-10

    def test_degree_guard(self):
        p = Polynomial.monomial(1, (3,))
        with pytest.raises(DegreeOverflowError):
            reproducing_check(unif(4), 2, p, [0.0])

    def test_dirac_mimic_signed_density(self):
        # p = K_t(y, .) pushes moments to y^alpha for |alpha| <= t
        rng = np.random.default_rng(6)
        phi = catalog_moments(
            MeasureDescriptor("uniform_box", {"bounds": [[-1, 1], [-1, 1]]}), 8
        )
        t = 2
        kern = CDKernel(phi, t)
        ob = kern.orthonormal_basis()
        y = rng.uniform(-1, 1, 2)
        weights = ob.eval_all(y)
        p = Polynomial.zero(2)
        for w, poly in zip(weights, ob.polynomials()):
            p = p + w * poly
        for alpha in MonomialBasis(2, t):
            mono = Polynomial.monomial(2, alpha)
            pushed = phi.riesz(mono * p)
            target = float(np.prod([y[i] ** a for i, a in enumerate(alpha)]))
            assert abs(pushed - target) <= 1e-9


class TestEquilibriumMoment:
    def test_zero_index_exactly_one(self):
        for desc in CATALOG[:3]:
            phi = catalog_moments(desc, 10)
            assert equilibrium_moment_estimate(phi, 4, (0,) * desc.n) == pytest.approx(
                1.0, abs=1e-10
            )

    def test_uniform_second_moment_trend(self):
        # nu_t second moment increases toward the arcsine value 1/2
        phi = unif(28)
        vals = [equilibrium_moment_estimate(phi, t, (2,)) for t in range(2, 13)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[0] > 1 / 3  # already above the uniform second moment
        assert 0.45 < vals[-1] < 0.5

    def test_chebyshev_odd_moment_zero(self):
        phi = cheb(12)
        for t in (2, 4):
            assert equilibrium_moment_estimate(phi, t, (1,)) == pytest.approx(0.0, abs=1e-12)

    def test_degree_guard(self):
        with pytest.raises(DegreeOverflowError):
            equilibrium_moment_estimate(unif(8), 4, (2,))
