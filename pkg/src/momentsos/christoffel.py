"""Christoffel-Darboux kernels and Christoffel functions.

Everything here is driven by a single Cholesky factorization M_t(phi) =
L L^T of the degree-t moment matrix: the orthonormal polynomials are the
rows of C = L^-1 (lower triangular, positive diagonal), the kernel is
K_t(x, z) = <C v(x), C v(z)>, and the Christoffel function is
Lambda_t(x) = 1 / K_t(x, x) = 1 / (v(x)^T M_t^-1 v(x)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .linalg import (
    NotPositiveDefiniteError,
    cholesky,
    psd_inverse,
    solve_from_cholesky,
    solve_refined,
)
from .moments import DegreeOverflowError, MomentSequence
from .poly import MonomialBasis, Polynomial


class MomentMatrixSingularError(ArithmeticError):
    """The moment matrix is numerically singular at the requested degree."""


#: ridge factor applied when regularizing a singular moment matrix
RIDGE_RTOL = 1e-10


@dataclass
class OrthonormalBasis:
    """Orthonormal polynomials P_alpha = sum_beta C[alpha, beta] x^beta.

    C is lower triangular with positive diagonal in graded order, so P_0 is
    the constant 1 whenever phi has mass 1.
    """

    n: int
    t: int
    coeffs: np.ndarray
    basis: MonomialBasis
    source: str = ""

    def polynomials(self) -> list:
        return [
            Polynomial(self.n, dict(zip(self.basis.exponents, row)))
            for row in self.coeffs
        ]

    def eval_all(self, x) -> np.ndarray:
        """Vector (P_alpha(x)) in basis order."""
        return self.coeffs @ self.basis.monomial_vector(x)


@dataclass
class ChristoffelPoly:
    """Reciprocal Christoffel function as an explicit degree-2t polynomial.

    q(x) = K_t(x, x) = sum of the s(t) squares P_alpha(x)^2.
    """

    t: int
    q: Polynomial
    num_squares: int


class CDKernel:
    """Factorized Christoffel-Darboux kernel of a truncated moment sequence.

    Builds M_t(phi) once; all evaluations share the factorization (the
    object is read-only after construction, so grid sweeps can share it
    across threads).  When the moment matrix is numerically singular and
    ``regularize`` is set, a documented ridge eps*I with
    eps = 1e-10 * trace / s(t) is applied and the ``regularized`` flag is
    raised; otherwise MomentMatrixSingularError propagates.
    """

    def __init__(self, phi: MomentSequence, t: int, regularize: bool = False):
        self.phi = phi
        self.t = t
        self.basis = MonomialBasis(phi.n, t)
        M = phi.moment_matrix(t)
        self.regularized = False
        self.ridge = 0.0
        try:
            self.L = cholesky(M)
        except NotPositiveDefiniteError as err:
            if not regularize:
                raise MomentMatrixSingularError(
                    f"moment matrix singular at degree {t} (pivot {err.index})"
                ) from err
            eps = RIDGE_RTOL * float(np.trace(M)) / len(self.basis)
            eps = max(eps, np.finfo(float).tiny)
            M = M + eps * np.eye(len(self.basis))
            self.ridge = eps
            self.regularized = True
            try:
                self.L = cholesky(M)
            except NotPositiveDefiniteError as err2:
                raise MomentMatrixSingularError(
                    f"moment matrix singular at degree {t} even after ridge "
                    f"{eps:g} (pivot {err2.index})"
                ) from err2
        self.M = M

    @property
    def size(self) -> int:
        """s(t), the number of orthonormal polynomials."""
        return len(self.basis)

    def orthonormal_basis(self) -> OrthonormalBasis:
        C = solve_triangular(self.L, np.eye(self.size), lower=True)
        return OrthonormalBasis(self.phi.n, self.t, C, self.basis, source=self.phi.label)

    def eval(self, x, z) -> float:
        """K_t(x, z) = sum_alpha P_alpha(x) P_alpha(z); symmetric in (x, z)."""
        px = solve_triangular(self.L, self.basis.monomial_vector(x), lower=True)
        pz = solve_triangular(self.L, self.basis.monomial_vector(z), lower=True)
        return float(px @ pz)

    def kernel_diag(self, x) -> float:
        v = self.basis.monomial_vector(x)
        return float(v @ solve_from_cholesky(self.L, v))

    def cf(self, x) -> float:
        """Christoffel function Lambda_t(x) = 1 / (v^T M^-1 v)."""
        return 1.0 / self.kernel_diag(x)

    def cf_variational(self, x):
        """Minimal moment-mass polynomial pinned to 1 at x.

        Closed-form optimum of min p^T M p subject to p(x) = 1:
        p* = M^-1 v / (v^T M^-1 v); returns (value, p*) where the value
        equals cf(x).
        """
        v = self.basis.monomial_vector(x)
        u = solve_from_cholesky(self.L, v)
        denom = float(v @ u)
        pstar = Polynomial.from_coefficients(self.basis, u / denom)
        return 1.0 / denom, pstar

    def reciprocal_poly(self) -> ChristoffelPoly:
        """Coefficients of Lambda_t^-1 as a polynomial of degree 2t."""
        Minv = psd_inverse(self.M, refine=2)
        terms: dict = {}
        exps = self.basis.exponents
        for i in range(self.size):
            for j in range(self.size):
                alpha = tuple(a + b for a, b in zip(exps[i], exps[j]))
                terms[alpha] = terms.get(alpha, 0.0) + Minv[i, j]
        return ChristoffelPoly(self.t, Polynomial(self.phi.n, terms), self.size)

    def support_score(self, x) -> float:
        """Scaled Christoffel function s(t) * Lambda_t(x).

        Roughly O(1) inside the support of phi and decaying to 0 outside as
        t grows; the conventional inside/outside threshold is 1.
        """
        return self.size * self.cf(x)

    def reproducing_residual(self, p: Polynomial, x) -> float:
        """|integral K_t(x, .) p dphi - p(x)|, evaluated exactly from moments.

        The identity holds exactly in exact arithmetic, so the computation
        works on the Jacobi-equilibrated moment matrix with a refined solve:
        the scaling removes the size disparity between moment coordinates
        (simplex-type measures span many orders) that would otherwise
        dominate the residual.
        """
        if p.degree > self.t:
            raise DegreeOverflowError(
                f"reproducing property needs deg(p) <= {self.t}, got {p.degree}"
            )
        pvec = p.coefficients(self.basis).astype(np.longdouble)
        Mx = self.phi.moment_matrix(self.t).astype(np.longdouble)
        d = np.sqrt(np.diagonal(self.M))
        Ms = self.M / np.outer(d, d)
        Ls = cholesky(Ms)
        rhs = ((Mx @ pvec) / d).astype(np.float64)  # D^-1 (M p) in extended precision
        u = solve_refined(Ls, Ms, rhs)
        v = self.basis.monomial_vector(x)
        value = float((v / d) @ u)
        return abs(value - p(np.asarray(x, dtype=float)))

    def equilibrium_moment(self, alpha) -> float:
        """alpha-moment of nu_t = (1/s(t)) Lambda_t^-1 dphi.

        These converge to the equilibrium-measure moments of supp(phi) for
        favourable phi; needs phi's bound to cover 2t + |alpha|.
        """
        alpha = tuple(alpha)
        if 2 * self.t + sum(alpha) > self.phi.degree_bound:
            raise DegreeOverflowError(
                f"equilibrium moment needs degree {2 * self.t + sum(alpha)}, "
                f"have {self.phi.degree_bound}"
            )
        q = self.reciprocal_poly().q
        mono = Polynomial.monomial(self.phi.n, alpha)
        return self.phi.riesz(mono * q) / self.size


# -- functional wrappers (one factorization per call) -------------------------


def orthonormal_basis(phi: MomentSequence, t: int) -> OrthonormalBasis:
    return CDKernel(phi, t).orthonormal_basis()


def cd_kernel_eval(phi: MomentSequence, t: int, x, z) -> float:
    return CDKernel(phi, t).eval(x, z)


def cf_eval(phi: MomentSequence, t: int, x) -> float:
    return CDKernel(phi, t).cf(x)


def cf_variational(phi: MomentSequence, t: int, x):
    return CDKernel(phi, t).cf_variational(x)


def cf_reciprocal_poly(phi: MomentSequence, t: int) -> ChristoffelPoly:
    return CDKernel(phi, t).reciprocal_poly()


def support_score(phi: MomentSequence, t: int, x) -> float:
    return CDKernel(phi, t).support_score(x)


def reproducing_check(phi: MomentSequence, t: int, p: Polynomial, x) -> float:
    return CDKernel(phi, t).reproducing_residual(p, x)


def equilibrium_moment_estimate(phi: MomentSequence, t: int, alpha) -> float:
    return CDKernel(phi, t).equilibrium_moment(alpha)
