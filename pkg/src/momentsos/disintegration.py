"""Disintegration of the Christoffel function over a product space S x Y.

For a probability measure mu on S x Y with S in R^n and Y in R, and any
fixed x, the joint CF factors as

    Lambda^mu_t(x, y) = Lambda^phi_t(x) * Lambda^{nu_{x,t}}_t(y)

where phi is the marginal of mu on S and nu_{x,t} is a measure on the real
line.  The factor nu is recovered constructively: the y-section
q(y) = Lambda^phi_t(x) * (Lambda^mu_t(x, y))^-1 is a strictly positive
univariate polynomial of degree 2t, hence the reciprocal CF of a unique
Hankel moment vector, found by the G = {1} log-det solve (with a
closed-form shortcut when the quadratic case is diagonal).

Normalization note: the factor with reciprocal CF exactly q is unique, and
its total mass is pinned by q itself.  It equals 1 in the diagonal
quadratic cases (for example product measures at t = 1) but deviates from
1 at higher orders; `nu_probability()` provides the mass-1 rescaling, at
the price of scaling the marginal factor accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .christoffel import CDKernel, cf_reciprocal_poly
from .christrep import NewtonOptions, solve_logdet_primal
from .linalg import psd_inverse
from .moments import DegreeOverflowError, MomentSequence, SemialgebraicSet
from .poly import MonomialBasis, Polynomial

#: grid size for the cheap positivity pre-check of the y-section
POSITIVITY_GRID = 512


class FactorizationError(RuntimeError):
    """The y-section is not strictly positive; no interior factor exists."""


def marginal_moments(mu: MomentSequence, degree: int) -> MomentSequence:
    """Marginal on the first n-1 coordinates: phi_alpha = mu_{(alpha, 0)}."""
    if mu.n < 2:
        raise ValueError("marginalization needs at least two variables")
    if degree > mu.degree_bound:
        raise DegreeOverflowError(
            f"marginal degree {degree} exceeds bound {mu.degree_bound}"
        )
    n = mu.n - 1
    out = {}
    for alpha in MonomialBasis(n, degree):
        out[alpha] = mu.values.get(alpha + (0,), 0.0)
    return MomentSequence(n, degree, out, label=f"marginal({mu.label})")


@dataclass
class DisintegrationReport:
    x: np.ndarray
    t: int
    joint_reciprocal: Polynomial  # y -> (Lambda^mu_t(x, y))^-1, univariate
    lambda_marginal: float  # Lambda^phi_t(x)
    nu_moments: MomentSequence  # recovered conditional factor, univariate
    factor_residual: float  # max coefficient mismatch of the factor identity
    nu_mass: float = 1.0  # total mass of the exact factor (1 at t <= 1)
    closed_form: bool = False

    def lambda_joint(self, y: float) -> float:
        return 1.0 / self.joint_reciprocal(np.array([y]))

    def nu_probability(self) -> MomentSequence:
        """The factor rescaled to a probability sequence (mass 1)."""
        vals = {a: v / self.nu_mass for a, v in self.nu_moments.values.items()}
        return MomentSequence(1, self.nu_moments.degree_bound, vals, label="nu-normalized")


def _section_reciprocal(mu: MomentSequence, x: np.ndarray, t: int) -> Polynomial:
    """(Lambda^mu_t(x, .))^-1 as a univariate polynomial in the last variable."""
    basis = MonomialBasis(mu.n, t)
    Minv = psd_inverse(mu.moment_matrix(t), refine=2)
    xpow = np.array(
        [np.prod([x[i] ** a for i, a in enumerate(alpha[:-1])]) for alpha in basis]
    )
    ydeg = np.array([alpha[-1] for alpha in basis])
    coeffs = np.zeros(2 * t + 1)
    for i in range(len(basis)):
        row = Minv[i] * xpow[i] * xpow
        np.add.at(coeffs, ydeg[i] + ydeg, row)
    return Polynomial(1, {(d,): coeffs[d] for d in range(2 * t + 1)})


def _positivity_window(mu: MomentSequence) -> tuple:
    """Interval covering the y-range of mu, inflated by 1.5."""
    n = mu.n
    mean = mu.values.get((0,) * (n - 1) + (1,), 0.0)
    m2 = mu.values.get((0,) * (n - 1) + (2,), 0.0)
    spread = 1.5 * max(1.0, 3.0 * np.sqrt(max(m2 - mean**2, 0.0)))
    return mean - spread, mean + spread


def _hankel_from_reciprocal(q: Polynomial, t: int) -> MomentSequence:
    """Univariate moments whose reciprocal CF equals q (G = {1} log-det solve)."""
    if t == 1 and abs(q.coefficient((1,))) <= 1e-12 * max(q.norm_inf(), 1.0):
        # diagonal quadratic case in closed form: M^-1 = diag(q0, q2)
        q0, q2 = q.coefficient((0,)), q.coefficient((2,))
        if q0 > 0 and q2 > 0:
            return MomentSequence(
                1, 2, {(0,): 1.0 / q0, (1,): 0.0, (2,): 1.0 / q2}, label="closed-form"
            )
    line = SemialgebraicSet(1, [])
    nu, _ = solve_logdet_primal(q, line, t, NewtonOptions())
    return nu


def disintegrate_cf(mu: MomentSequence, x, t: int) -> DisintegrationReport:
    """Factor the joint CF at a fixed x; see the module docstring.

    The report's factor_residual is the max coefficient mismatch between
    (Lambda^mu_t(x, .))^-1 and Lambda^phi_t(x)^-1 * (Lambda^nu_t)^-1.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (mu.n - 1,):
        raise ValueError(f"x must have {mu.n - 1} coordinates, got shape {x.shape}")
    joint_recip = _section_reciprocal(mu, x, t)
    phi = marginal_moments(mu, min(2 * t, mu.degree_bound))
    lam_x = CDKernel(phi, t).cf(x)
    q = lam_x * joint_recip
    lo, hi = _positivity_window(mu)
    grid = np.linspace(lo, hi, POSITIVITY_GRID)
    qvals = [q(np.array([y])) for y in grid]
    if min(qvals) <= 0:
        raise FactorizationError(
            f"factorization candidate not interior: y-section dips to "
            f"{min(qvals):.3e} on [{lo:g}, {hi:g}]"
        )
    closed = t == 1 and abs(q.coefficient((1,))) <= 1e-12 * max(q.norm_inf(), 1.0)
    nu = _hankel_from_reciprocal(q, t)
    nu_recip = cf_reciprocal_poly(nu, t).q
    mismatch = (joint_recip + (-1.0 / lam_x) * nu_recip).norm_inf()
    return DisintegrationReport(
        x=x,
        t=t,
        joint_reciprocal=joint_recip,
        lambda_marginal=lam_x,
        nu_moments=nu,
        factor_residual=mismatch,
        nu_mass=nu.mass,
        closed_form=closed,
    )
