"""Moment-SOS hierarchies of lower and upper bounds.

Lower bounds: step t of the hierarchy minimizes phi(f) over pseudo-moment
sequences phi of degree 2t with phi(1) = 1 and all localizing matrices
M_{t-t_g}(g.phi) PSD.  The normalization phi_0 = 1 is handled by variable
elimination (phi_0's coefficient matrices become the constant block parts),
and the SDP dual blocks are exactly the Gram matrices of the SOS weights
sigma_g certifying f - rho_t = sum_g sigma_g g.

Upper bounds: the degree-t bound is the smallest generalized eigenvalue of
the pencil (M_t(f.mu), M_t(mu)) for a reference measure mu; the pushforward
variant replaces the pair by univariate Hankel matrices of order t+1 built
from the moments of the image measure of mu under f.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import schur

from .linalg import NotPositiveDefiniteError, gen_eig_min, sym_eig
from .moments import (
    MomentSequence,
    SemialgebraicSet,
    localizing_structure,
    pushforward_moments,
)
from .poly import MonomialBasis, Polynomial
from .sdp import OPTIMAL, SdpBlock, SdpProblem, SdpSolution, SolveOptions, solve_sdp

#: eigenvalues below this fraction of the largest count as zero in rank tests
RANK_RTOL = 1e-7

#: atomic-measure replay residual above this downgrades an extraction
WEIGHT_RESIDUAL_TOL = 1e-5


class SdpFailureError(RuntimeError):
    """An SDP subproblem did not reach optimality; message carries the stage."""


class ExtractionInstabilityError(RuntimeError):
    """Shift operators fail to commute (or triangularize) within tolerance."""


@dataclass
class LowerRelaxation:
    """SDP encoding of one lower-bound step, plus the variable bookkeeping."""

    problem: SdpProblem
    var_basis: MonomialBasis  # degree-2t basis; variables are entries 1..end
    row_bases: list  # per generator, the basis indexing its PSD block
    objective_constant: float
    t: int


def _half_degree(p: Polynomial) -> int:
    return (p.degree + 1) // 2


def _has_ball_generator(S: SemialgebraicSet) -> bool:
    # ball-like generator: degree-2 g whose quadratic part is negative definite
    for g in S.generators[1:]:
        if g.degree != 2:
            continue
        Q = np.zeros((S.n, S.n))
        for alpha, c in g.terms.items():
            if sum(alpha) != 2:
                continue
            idx = [i for i, a in enumerate(alpha) for _ in range(a)]
            i, j = idx[0], idx[1]
            if i == j:
                Q[i, i] += c
            else:
                Q[i, j] += c / 2
                Q[j, i] += c / 2
        if np.all(np.linalg.eigvalsh(Q) < 0):
            return True
    return False


def build_lower_relaxation(f: Polynomial, S: SemialgebraicSet, t: int) -> LowerRelaxation:
    """Assemble the degree-t moment relaxation of min f over S as an SDP.

    Variables are the pseudo-moments (phi_alpha), |alpha| <= 2t, alpha != 0;
    one PSD block of order s(t - t_g) per generator.
    """
    if f.n != S.n:
        raise ValueError("objective and set dimensions differ")
    t0 = max(_half_degree(f), max(S.half_degrees))
    if t < t0:
        raise ValueError(f"relaxation order t={t} below minimum t0={t0}")
    if not _has_ball_generator(S):
        warnings.warn(
            "no ball-like generator detected; consider archimedean_augment "
            "to certify compactness",
            RuntimeWarning,
            stacklevel=2,
        )
    var_basis = MonomialBasis(S.n, 2 * t)
    blocks, row_bases = [], []
    for g, tg in zip(S.generators, S.half_degrees):
        F = localizing_structure(g, t - tg, var_basis)
        blocks.append(SdpBlock(const=F[0], coeffs=F[1:]))
        row_bases.append(MonomialBasis(S.n, t - tg))
    c = np.zeros(len(var_basis) - 1)
    for alpha, coef in f.terms.items():
        idx = var_basis.index(alpha)
        if idx > 0:
            c[idx - 1] = coef
    f0 = f.coefficient((0,) * S.n)
    return LowerRelaxation(
        problem=SdpProblem(c=c, blocks=blocks),
        var_basis=var_basis,
        row_bases=row_bases,
        objective_constant=f0,
        t=t,
    )


@dataclass
class FlatnessResult:
    flat: bool
    rank_full: int
    rank_reduced: int
    cutoff: float

    def __bool__(self) -> bool:
        return self.flat


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    w, _ = sym_eig(M)
    wmax = float(np.max(np.abs(w))) if w.size else 0.0
    if wmax == 0.0:
        return 0
    return int(np.sum(np.abs(w) > rtol * wmax))


def flatness_check(phi: MomentSequence, t: int, s: int, rtol: float = RANK_RTOL) -> FlatnessResult:
    """Rank-stabilization test rank M_t(phi) == rank M_{t-s}(phi)."""
    if s < 0 or s > t:
        raise ValueError(f"need 0 <= s <= t, got s={s}, t={t}")
    r_full = numerical_rank(phi.moment_matrix(t), rtol)
    r_red = numerical_rank(phi.moment_matrix(t - s), rtol)
    return FlatnessResult(r_full == r_red, r_full, r_red, rtol)


def _rref(A: np.ndarray, tol: float):
    """Reduced row echelon form with partial pivoting; returns (R, pivot cols)."""
    A = A.copy()
    nrows, ncols = A.shape
    pivots = []
    row = 0
    for col in range(ncols):
        if row >= nrows:
            break
        k = int(np.argmax(np.abs(A[row:, col]))) + row
        if abs(A[k, col]) <= tol:
            continue
        A[[row, k]] = A[[k, row]]
        A[row] = A[row] / A[row, col]
        mask = np.arange(nrows) != row
        A[mask] -= np.outer(A[mask, col], A[row])
        pivots.append(col)
        row += 1
    return A, pivots


def extract_minimizers(phi: MomentSequence, t: int, rank_rtol: float = RANK_RTOL) -> list:
    """Recover the atoms of a flat pseudo-moment sequence.

    Column-echelon reduction of a rank factorization of M_t(phi) yields a
    monomial basis of the quotient space; multiplication (shift) operators
    per variable are read off row-wise, and the atoms are their joint
    eigenvalues via a real Schur decomposition of a random convex
    combination.  Raises ExtractionInstabilityError when the shifts do not
    commute within tolerance or the combination has complex eigenvalues.
    """
    n = phi.n
    basis = MonomialBasis(n, t)
    M = phi.moment_matrix(t)
    w, V = sym_eig(M)
    wmax = float(np.max(np.abs(w))) if w.size else 0.0
    r = int(np.sum(w > rank_rtol * wmax)) if wmax > 0 else 0
    if r == 0:
        return []
    U = V[:, -r:] * np.sqrt(w[-r:])
    R, pivots = _rref(U.T, tol=1e-8 * max(1.0, float(np.max(np.abs(U)))))
    if len(pivots) < r:
        raise ExtractionInstabilityError(
            f"rank factorization has only {len(pivots)} independent columns, expected {r}"
        )
    pivot_exps = [basis.exponents[c] for c in pivots]
    if any(sum(e) >= t and t > 0 for e in pivot_exps):
        raise ExtractionInstabilityError(
            "pivot monomials reach the top degree; shift operators unavailable"
        )
    shifts = []
    for i in range(n):
        Ni = np.zeros((r, r))
        for k, e in enumerate(pivot_exps):
            shifted = tuple(a + (1 if j == i else 0) for j, a in enumerate(e))
            Ni[k, :] = R[:, basis.index(shifted)]
        shifts.append(Ni)
    scale = max(1.0, max(np.linalg.norm(N) for N in shifts))
    for i in range(n):
        for j in range(i + 1, n):
            comm = shifts[i] @ shifts[j] - shifts[j] @ shifts[i]
            if np.linalg.norm(comm) > 1e-6 * scale * scale:
                raise ExtractionInstabilityError(
                    f"shift operators {i} and {j} do not commute "
                    f"(residual {np.linalg.norm(comm):.2e})"
                )
    rng = np.random.default_rng(0)
    lam = rng.random(n) + 0.5
    lam /= lam.sum()
    T, Q = schur(sum(l * N for l, N in zip(lam, shifts)), output="real")
    sub = np.diag(T, -1) if r > 1 else np.zeros(0)
    if sub.size and np.max(np.abs(sub)) > 1e-7 * max(1.0, np.max(np.abs(T))):
        raise ExtractionInstabilityError("complex joint eigenvalues; atoms not real")
    atoms = []
    for j in range(r):
        q = Q[:, j]
        atoms.append(np.array([float(q @ N @ q) for N in shifts]))
    return atoms


def atomic_replay(phi: MomentSequence, atoms: list, degree: int):
    """Fit weights of an atomic measure on the given atoms to phi.

    Returns (weights, max moment residual) from the Vandermonde-type least
    squares over all moments up to the given degree.
    """
    basis = MonomialBasis(phi.n, degree)
    A = np.empty((len(basis), len(atoms)))
    for j, x in enumerate(atoms):
        A[:, j] = basis.monomial_vector(x)
    target = phi.vector(basis)
    weights, *_ = np.linalg.lstsq(A, target, rcond=None)
    residual = float(np.max(np.abs(A @ weights - target)))
    return weights, residual


@dataclass
class LowerBoundResult:
    t: int
    rho: float
    phi_star: MomentSequence
    sos_certificate: list  # Gram matrix per generator, aligned with S.generators
    certificate_residual: float
    flat: bool
    ranks: tuple
    minimizers: list = field(default_factory=list)
    extraction_status: str = "not_flat"
    weights: Optional[np.ndarray] = None
    sdp: Optional[SdpSolution] = None


def gram_polynomial(Z: np.ndarray, rows: MonomialBasis) -> Polynomial:
    """The SOS polynomial v^T Z v with v the monomial vector of `rows`."""
    terms: dict = {}
    exps = rows.exponents
    for i in range(len(rows)):
        for j in range(len(rows)):
            alpha = tuple(a + b for a, b in zip(exps[i], exps[j]))
            terms[alpha] = terms.get(alpha, 0.0) + Z[i, j]
    return Polynomial(rows.n, terms)


def certificate_residual(
    f: Polynomial, S: SemialgebraicSet, rho: float, grams: list, row_bases: list
) -> float:
    """Max coefficient of f - rho - sum_g g * (v^T Z_g v), scaled by ||f||."""
    acc = Polynomial.constant(f.n, rho) + (-1.0) * f
    for g, Z, rows in zip(S.generators, grams, row_bases):
        acc = acc + g * gram_polynomial(Z, rows)
    return acc.norm_inf() / max(1.0, f.norm_inf())


def lower_bound(
    f: Polynomial,
    S: SemialgebraicSet,
    t: int,
    opts: SolveOptions | None = None,
) -> LowerBoundResult:
    """Solve the degree-t lower-bound relaxation and post-process.

    Returns rho_t, the optimal pseudo-moments, the SOS certificate read off
    the SDP dual blocks, the flatness diagnosis, and (when flat) the
    extracted minimizers with their replay verification.
    """
    relax = build_lower_relaxation(f, S, t)
    sol = solve_sdp(relax.problem, opts)
    if sol.status != OPTIMAL:
        raise SdpFailureError(
            f"lower-bound relaxation at t={t}: solver returned {sol.status} "
            f"({sol.message or 'no detail'})"
        )
    rho = relax.objective_constant + float(relax.problem.c @ sol.y)
    values = {(0,) * S.n: 1.0}
    for alpha, val in zip(relax.var_basis.exponents[1:], sol.y):
        values[alpha] = float(val)
    phi_star = MomentSequence(S.n, 2 * t, values, label=f"lower_bound[t={t}]")
    resid = certificate_residual(f, S, rho, sol.block_duals, relax.row_bases)
    s = max(S.half_degrees)
    flat = flatness_check(phi_star, t, s)
    result = LowerBoundResult(
        t=t,
        rho=rho,
        phi_star=phi_star,
        sos_certificate=sol.block_duals,
        certificate_residual=resid,
        flat=flat.flat,
        ranks=(flat.rank_full, flat.rank_reduced),
        sdp=sol,
    )
    if flat.flat:
        try:
            atoms = extract_minimizers(phi_star, t)
        except ExtractionInstabilityError as err:
            result.extraction_status = f"failed: {err}"
            return result
        weights, replay = atomic_replay(phi_star, atoms, 2 * t)
        result.minimizers = atoms
        result.weights = weights
        result.extraction_status = (
            "verified" if replay <= WEIGHT_RESIDUAL_TOL else "unverified"
        )
    return result


@dataclass
class UpperBoundResult:
    t: int
    mode: str  # "multivariate" or "pushforward"
    tau: Optional[float] = None  # generalized-eigenvalue bound (multivariate)
    delta: Optional[float] = None  # Hankel-pencil bound (pushforward)
    sigma_star: Optional[Polynomial] = None
    degenerate: bool = False

    @property
    def value(self) -> float:
        return self.tau if self.mode == "multivariate" else self.delta


def _sign_fix(w: np.ndarray) -> np.ndarray:
    for v in w:
        if abs(v) > 1e-12:
            return w if v > 0 else -w
    return w


def upper_bound(f: Polynomial, mu: MomentSequence, t: int) -> UpperBoundResult:
    """tau_t = min generalized eigenvalue of (M_t(f.mu), M_t(mu)).

    The optimal SOS density sigma* is the squared eigenvector polynomial,
    normalized so that mu(sigma*) = 1.
    """
    Mf = mu.localizing_matrix(f, t)
    Mmu = mu.moment_matrix(t)
    lam, w = gen_eig_min(Mf, Mmu)
    w = _sign_fix(w)
    basis = MonomialBasis(mu.n, t)
    sigma = Polynomial.from_coefficients(basis, w)
    sigma = sigma * sigma
    mass = mu.riesz(sigma)
    if mass > 0:
        sigma = sigma * (1.0 / mass)
    return UpperBoundResult(t=t, mode="multivariate", tau=float(lam), sigma_star=sigma)


def upper_bound_pushforward(f: Polynomial, mu: MomentSequence, t: int) -> UpperBoundResult:
    """delta_t from the univariate Hankel pencil of the pushforward of mu by f.

    The matrices have order t+1 regardless of the ambient dimension.  A
    Dirac-like pushforward (constant f) makes the Hankel matrix singular;
    that degenerate case reports delta_t = mean of the pushforward.
    """
    h = pushforward_moments(f, mu, 2 * t + 1)
    hv = np.array([h.value((j,)) for j in range(2 * t + 2)])
    H0 = np.array([[hv[i + j] for j in range(t + 1)] for i in range(t + 1)])
    H1 = np.array([[hv[i + j + 1] for j in range(t + 1)] for i in range(t + 1)])
    try:
        lam, w = gen_eig_min(H1, H0)
    except NotPositiveDefiniteError:
        mean = hv[1] / hv[0]
        if abs(hv[2] / hv[0] - mean**2) <= 1e-10 * max(1.0, abs(hv[2])):
            return UpperBoundResult(
                t=t, mode="pushforward", delta=float(mean), degenerate=True
            )
        raise
    w = _sign_fix(w)
    sigma = Polynomial(1, {(j,): w[j] for j in range(t + 1)})
    sigma = sigma * sigma
    mass = h.riesz(sigma)
    if mass > 0:
        sigma = sigma * (1.0 / mass)
    return UpperBoundResult(
        t=t, mode="pushforward", delta=float(lam), sigma_star=sigma
    )
