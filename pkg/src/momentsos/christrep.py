"""Christoffel representations of interior-cone polynomials via log-det duality.

For a generator family G and order t, a polynomial p in the interior of the
truncated quadratic module admits the distinguished decomposition

    p = sum_g g * v_{t-t_g}^T Q_g v_{t-t_g},     Q_g > 0,

where the optimal Q_g are inverses of the localizing matrices of a moment
sequence phi*: the unique minimizer of

    minimize   - sum_g log det M_{t-t_g}(g . phi)
    subject to phi(p) = sum_g s(t - t_g),   M_{t-t_g}(g . phi) > 0.

The minimizer is computed by damped Newton on the reduced space obtained by
eliminating one variable through the single equality; the objective is
self-concordant so the damped phase is followed by quadratic convergence.
At the optimum the gradient equals minus the coefficient vector of p, which
gives an absolute KKT residual to report.

The same machinery verifies generalized Pell equations
sum_g s(t-t_g) = sum_g g * (reciprocal CF of g.phi at degree t-t_g)
and recovers candidate equilibrium-measure moments by solving the problem
with a constant right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import (
    NotPositiveDefiniteError,
    cholesky,
    psd_inverse,
    psd_solve,
)
from .moments import (
    MeasureDescriptor,
    MomentSequence,
    SemialgebraicSet,
    catalog_moments,
    localizing_structure,
)
from .poly import MonomialBasis, Polynomial, basis_size
from .sdp import OPTIMAL, SdpBlock, SdpProblem, SolveOptions, solve_sdp


class NotInteriorError(RuntimeError):
    """The input polynomial does not appear to lie in the interior of the cone."""


class LogDetConvergenceError(RuntimeError):
    """Newton exhausted its iteration budget far from the optimality tolerance."""


@dataclass
class NewtonOptions:
    decrement_tol: float = 1e-10
    max_iter: int = 100
    initial: Optional[MomentSequence] = None


@dataclass
class LogDetInfo:
    iterations: int
    decrement: float
    objective: float
    kkt_residual: float
    objective_trace: list = field(default_factory=list)
    fallback_used: bool = False


@dataclass
class ChristoffelRep:
    """Optimal pseudo-moments and Gram blocks realizing p = sum_g g v^T Q_g v."""

    t: int
    set: SemialgebraicSet
    phi_star: MomentSequence
    gram_blocks: list  # Q_g per generator, aligned with set.generators
    primal_value: float  # - sum_g log det M_{t-t_g}(g . phi*)
    dual_value: float  # sum_g log det Q_g
    residual_poly: Polynomial  # p - assembled representation
    info: Optional[LogDetInfo] = None


def active_generators(S: SemialgebraicSet, t: int) -> list:
    """Generators participating at order t: those with t_g <= t.

    Higher-degree generators re-enter the sums as the order grows; g_0 = 1
    is always active.
    """
    return [(g, tg) for g, tg in zip(S.generators, S.half_degrees) if tg <= t]


class _SetStructure:
    """Linear-map view of the active localizing matrices of (S, t)."""

    def __init__(self, S: SemialgebraicSet, t: int):
        if t < 0:
            raise ValueError("order must be >= 0")
        self.S = S
        self.t = t
        self.active = active_generators(S, t)
        self.var_basis = MonomialBasis(S.n, 2 * t)
        self.tensors = [
            localizing_structure(g, t - tg, self.var_basis) for g, tg in self.active
        ]
        self.orders = [F.shape[1] for F in self.tensors]
        self.row_bases = [MonomialBasis(S.n, t - tg) for _, tg in self.active]

    @property
    def constraint_value(self) -> float:
        """sum_g s(t - t_g), the right-hand side of the equality constraint."""
        return float(sum(self.orders))

    def matrices(self, phi_vec: np.ndarray) -> list:
        return [np.tensordot(phi_vec, F, axes=1) for F in self.tensors]

    def objective(self, phi_vec: np.ndarray) -> float:
        """- sum_g log det M_g(phi); +inf outside the PD domain."""
        total = 0.0
        for M in self.matrices(phi_vec):
            try:
                L = cholesky(0.5 * (M + M.T))
            except NotPositiveDefiniteError:
                return np.inf
            total -= 2.0 * float(np.sum(np.log(np.diagonal(L))))
        return total

    def gradient_hessian(self, phi_vec: np.ndarray):
        nvar = len(self.var_basis)
        grad = np.zeros(nvar)
        H = np.zeros((nvar, nvar))
        for F, M in zip(self.tensors, self.matrices(phi_vec)):
            K = psd_inverse(0.5 * (M + M.T), refine=1)
            grad -= np.einsum("pq,jpq->j", K, F)
            T = np.einsum("pq,jqr,rs->jps", K, F, K, optimize=True)
            H += np.einsum("jpq,kqp->jk", T, F, optimize=True)
        return grad, 0.5 * (H + H.T)


def _newton_direction(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Solve H dz = -g for badly scaled PD Hessians.

    Jacobi pre-scaling evens out the wildly different magnitudes of moment
    coordinates (simplex-type measures span many orders); if the scaled
    system still fails to factor, an eigenvalue-floored solve keeps the
    direction a descent direction.
    """
    d = np.sqrt(np.clip(np.diagonal(H), 1e-300, None))
    Hs = H / np.outer(d, d)
    gs = g / d
    try:
        dz = psd_solve(Hs, -gs)
    except NotPositiveDefiniteError:
        w, V = np.linalg.eigh(0.5 * (Hs + Hs.T))
        floor = 1e-14 * max(float(w[-1]), 1e-300)
        dz = -V @ ((V.T @ gs) / np.maximum(w, floor))
    return dz / d


def _default_initial(S: SemialgebraicSet, degree_bound: int) -> MomentSequence:
    if S.n == 1:
        desc = MeasureDescriptor("uniform_interval", {"a": -1.0, "b": 1.0})
    else:
        desc = MeasureDescriptor("uniform_box", {"bounds": [[-1.0, 1.0]] * S.n})
    return catalog_moments(desc, degree_bound)


def _interior_start_sdp(
    struct: _SetStructure, a: np.ndarray, b: float
) -> np.ndarray:
    """Deep-interior fallback: maximize the min eigenvalue margin via the SDP

        max lam  s.t.  M_g(phi) - lam I >= 0,  lam <= 1,  <a, phi> = b.
    """
    nvar = len(struct.var_basis)
    blocks = []
    for F, o in zip(struct.tensors, struct.orders):
        coeffs = np.concatenate([F, -np.eye(o)[None, :, :]], axis=0)
        blocks.append(SdpBlock(const=np.zeros((o, o)), coeffs=coeffs))
    cap = SdpBlock(
        const=np.array([[1.0]]),
        coeffs=np.concatenate(
            [np.zeros((nvar, 1, 1)), -np.ones((1, 1, 1))], axis=0
        ),
    )
    blocks.append(cap)
    c = np.zeros(nvar + 1)
    c[-1] = -1.0  # maximize lam
    eq = np.zeros((1, nvar + 1))
    eq[0, :nvar] = a
    prob = SdpProblem(c=c, blocks=blocks, eq_mat=eq, eq_rhs=np.array([b]))
    sol = solve_sdp(prob, SolveOptions(gap_tol=1e-9, feas_tol=1e-9))
    lam = sol.y[-1]
    if sol.status != OPTIMAL or lam <= 1e-9:
        raise NotInteriorError(
            "no strictly feasible moment sequence found: p likely not in the "
            f"interior of Q_t(G) (margin {lam:.2e}, solver {sol.status})"
        )
    return sol.y[:nvar]


def solve_logdet_primal(
    p: Polynomial,
    S: SemialgebraicSet,
    t: int,
    opts: NewtonOptions | None = None,
):
    """Minimize -sum_g log det M_{t-t_g}(g.phi) subject to phi(p) = sum_g s(t-t_g).

    Returns (phi_star, info).  Failure of the damped Newton line search to
    make progress inside the PD domain is reported as NotInteriorError: the
    solver's behaviour is the practical interior-membership test.
    """
    opts = opts or NewtonOptions()
    if p.n != S.n:
        raise ValueError("polynomial and set dimensions differ")
    if p.degree > 2 * t:
        raise ValueError(f"deg(p) = {p.degree} exceeds 2t = {2 * t}")
    struct = _SetStructure(S, t)
    a = p.coefficients(struct.var_basis)
    b = struct.constraint_value

    fallback_used = False
    phi = None
    init = opts.initial
    if init is None:
        init = _default_initial(S, 2 * t)
    try:
        u = init.vector(struct.var_basis)
        up = float(a @ u)
        if up > 1e-12 * max(1.0, np.linalg.norm(a) * np.linalg.norm(u)):
            cand = (b / up) * u
            if np.isfinite(struct.objective(cand)):
                phi = cand
    except Exception:
        phi = None
    if phi is None:
        phi = _interior_start_sdp(struct, a, b)
        fallback_used = True
        if not np.isfinite(struct.objective(phi)):
            raise NotInteriorError("fallback start not strictly feasible")

    # reduced space: eliminate the variable with the largest |a| entry
    piv = int(np.argmax(np.abs(a)))
    keep = np.array([i for i in range(len(a)) if i != piv], dtype=int)
    if keep.size == 0:
        # single variable: the equality constraint determines phi outright
        phi = np.array([b / a[piv]])
        if not np.isfinite(struct.objective(phi)):
            raise NotInteriorError("constraint-determined point not strictly feasible")
        phi_star = MomentSequence(
            S.n, 2 * t, dict(zip(struct.var_basis.exponents, phi)), label=f"logdet[t={t}]"
        )
        info = LogDetInfo(
            iterations=0,
            decrement=0.0,
            objective=struct.objective(phi),
            kkt_residual=0.0,
            objective_trace=[struct.objective(phi)],
            fallback_used=fallback_used,
        )
        return phi_star, info
    ratio = a[keep] / a[piv]

    def reduce_vec(v):
        return v[keep] - ratio * v[piv]

    def reduce_mat(H):
        Hkk = H[np.ix_(keep, keep)]
        Hkp = H[keep, piv]
        Hpp = H[piv, piv]
        return Hkk - np.outer(ratio, Hkp) - np.outer(Hkp, ratio) + np.outer(ratio, ratio) * Hpp

    def lift(dz):
        dphi = np.zeros(len(a))
        dphi[keep] = dz
        dphi[piv] = -float(ratio @ dz)
        return dphi

    obj = struct.objective(phi)
    trace = [obj]
    decrement = np.inf
    it = 0
    kkt = np.inf
    for it in range(1, opts.max_iter + 1):
        grad, H = struct.gradient_hessian(phi)
        kkt = float(np.linalg.norm(grad + a)) / max(1.0, float(np.linalg.norm(a)))
        g_red = reduce_vec(grad)
        H_red = reduce_mat(H)
        dz = _newton_direction(H_red, g_red)
        decrement = float(np.sqrt(max(-g_red @ dz, 0.0)))
        if decrement <= opts.decrement_tol:
            break
        dphi = lift(dz)
        accepted = False
        if decrement < 0.25:
            # quadratic phase: self-concordance guarantees the full Newton
            # step stays in the domain, and objective changes ~ decrement^2
            # fall below double rounding, so only domain feasibility is
            # checked here
            step = 1.0
            for _ in range(30):
                cand = phi + step * dphi
                cand_obj = struct.objective(cand)
                if np.isfinite(cand_obj):
                    phi, obj = cand, cand_obj
                    trace.append(obj)
                    accepted = True
                    break
                step *= 0.5
        else:
            # damped phase: guaranteed-decrease step length with Armijo
            step = 1.0 / (1.0 + decrement)
            for _ in range(60):
                cand = phi + step * dphi
                cand_obj = struct.objective(cand)
                if cand_obj < obj - 0.01 * step * decrement**2:
                    phi, obj = cand, cand_obj
                    trace.append(obj)
                    accepted = True
                    break
                step *= 0.5
        if not accepted:
            raise NotInteriorError(
                "line search hit the PD boundary without progress; "
                "p likely not in interior of Q_t(G) "
                f"(Newton decrement {decrement:.2e} at iteration {it})"
            )

    if decrement > max(1e3 * opts.decrement_tol, 1e-7):
        raise LogDetConvergenceError(
            f"Newton stopped after {it} iterations with decrement {decrement:.2e}"
        )
    values = dict(zip(struct.var_basis.exponents, phi))
    phi_star = MomentSequence(S.n, 2 * t, values, label=f"logdet[t={t}]")
    info = LogDetInfo(
        iterations=it,
        decrement=decrement,
        objective=obj,
        kkt_residual=kkt,
        objective_trace=trace,
        fallback_used=fallback_used,
    )
    return phi_star, info


def recover_dual(phi_star: MomentSequence, S: SemialgebraicSet, t: int) -> list:
    """Gram blocks Q_g = M_{t-t_g}(g.phi*)^-1, one per active generator."""
    out = []
    for g, tg in active_generators(S, t):
        M = phi_star.localizing_matrix(g, t - tg)
        out.append(psd_inverse(M, refine=2))
    return out


def assemble_representation(
    gram_blocks: list, S: SemialgebraicSet, t: int
) -> Polynomial:
    """Expand sum_g g * (v_{t-t_g}^T Q_g v_{t-t_g}) into coefficient form.

    Blocks are aligned with active_generators(S, t).
    """
    active = active_generators(S, t)
    if len(gram_blocks) != len(active):
        raise ValueError(
            f"expected {len(active)} blocks for the active generators, "
            f"got {len(gram_blocks)}"
        )
    total = Polynomial.zero(S.n)
    for (g, tg), Q in zip(active, gram_blocks):
        rows = MonomialBasis(S.n, t - tg)
        terms: dict = {}
        for i in range(len(rows)):
            for j in range(len(rows)):
                alpha = tuple(x + y for x, y in zip(rows.exponents[i], rows.exponents[j]))
                terms[alpha] = terms.get(alpha, 0.0) + Q[i, j]
        total = total + g * Polynomial(S.n, terms)
    return total


def christoffel_representation(
    p: Polynomial, S: SemialgebraicSet, t: int, opts: NewtonOptions | None = None
) -> ChristoffelRep:
    """Full pipeline: log-det solve, dual recovery, representation residual."""
    phi_star, info = solve_logdet_primal(p, S, t, opts)
    grams = recover_dual(phi_star, S, t)
    primal = -sum(
        float(np.linalg.slogdet(phi_star.localizing_matrix(g, t - tg))[1])
        for g, tg in active_generators(S, t)
    )
    dual = sum(float(np.linalg.slogdet(Q)[1]) for Q in grams)
    residual = p + (-1.0) * assemble_representation(grams, S, t)
    return ChristoffelRep(
        t=t,
        set=S,
        phi_star=phi_star,
        gram_blocks=grams,
        primal_value=primal,
        dual_value=dual,
        residual_poly=residual,
        info=info,
    )


@dataclass
class PellResult:
    t: int
    residual_poly: Polynomial
    max_residual: float
    constant: float


def pell_check(S: SemialgebraicSet, phi: MomentSequence, t: int) -> PellResult:
    """Residual of the generalized Pell identity for the given moments.

    Computes sum_g g * (reciprocal CF of g.phi at degree t-t_g) minus the
    constant sum_g s(t-t_g), in coefficient form.  Zero residual for all t
    characterizes the distinguished (equilibrium-like) measures.
    """
    grams = recover_dual(phi, S, t)
    rep = assemble_representation(grams, S, t)
    const = float(sum(basis_size(S.n, t - tg) for _, tg in active_generators(S, t)))
    residual = rep - const
    return PellResult(
        t=t, residual_poly=residual, max_residual=residual.norm_inf(), constant=const
    )


def pstar_density(lam: MomentSequence, S: SemialgebraicSet, t: int):
    """Normalized Christoffel mixture (sum_g s(t-t_g))^-1 sum_g g (Lambda^{g.lam})^-1.

    Returns (p*_t, mass); the mass lam(p*_t) equals 1 exactly by the trace
    identity <M, M^-1> = order, whether or not p*_t is constant.
    """
    grams = recover_dual(lam, S, t)
    rep = assemble_representation(grams, S, t)
    const = float(sum(basis_size(S.n, t - tg) for _, tg in active_generators(S, t)))
    pstar = rep * (1.0 / const)
    mass = lam.riesz(pstar)
    return pstar, mass


CANONICAL_SETS = ("interval", "ball2d", "box2d", "simplex2d")


def canonical_set(name: str) -> SemialgebraicSet:
    """Generator sets used by the equilibrium experiments.

    The box carries the cross generator (1-x^2)(1-y^2) and the simplex the
    degree-2 products {x(1-x-y), y(1-x-y), xy}: with degree-1 generators the
    top-degree moments escape every localizing block and the log-det
    objective is unbounded below (constants are not interior), while these
    sets keep 1 - ||x||^2 in the order-1 module and the Pell identities
    attainable.  Higher-degree generators only enter at orders t >= t_g.
    """
    from .poly import Polynomial as P

    if name == "interval":
        return SemialgebraicSet.interval()
    if name == "ball2d":
        return SemialgebraicSet.ball2d()
    if name == "box2d":
        x, y = P.variable(2, 0), P.variable(2, 1)
        gx, gy = 1 - x * x, 1 - y * y
        return SemialgebraicSet(2, [gx, gy, gx * gy])
    if name == "simplex2d":
        x, y = P.variable(2, 0), P.variable(2, 1)
        s = 1 - x - y
        return SemialgebraicSet(2, [x * s, y * s, x * y])
    raise ValueError(f"unknown canonical set {name!r}; known: {CANONICAL_SETS}")


def _canonical_uniform(name: str, degree_bound: int) -> MomentSequence:
    desc = {
        "interval": MeasureDescriptor("uniform_interval", {"a": -1.0, "b": 1.0}),
        "ball2d": MeasureDescriptor("uniform_ball2d", {"radius": 1.0}),
        "box2d": MeasureDescriptor("uniform_box", {"bounds": [[-1.0, 1.0]] * 2}),
        "simplex2d": MeasureDescriptor("uniform_simplex2d"),
    }[name]
    return catalog_moments(desc, degree_bound)


def equilibrium_experiment(set_name: str, t_values) -> dict:
    """Solve the constant-polynomial log-det problem across orders.

    For each t the input is p = sum_g s(t-t_g) (constant); the report
    collects the optimal moment vectors and the drift between consecutive
    orders on shared coordinates, probing whether a single measure solves
    every order (the Pell/equilibrium situation).  t <= 3 is the documented
    scope; larger t is allowed but flagged exploratory.
    """
    S = canonical_set(set_name)
    t_values = sorted(t_values)
    results = {}
    for t in t_values:
        struct = _SetStructure(S, t)
        p = Polynomial.constant(S.n, struct.constraint_value)
        init = _canonical_uniform(set_name, 2 * t)
        phi, info = solve_logdet_primal(p, S, t, NewtonOptions(initial=init))
        pell = pell_check(S, phi, t)
        results[t] = {
            "phi": phi,
            "constant": struct.constraint_value,
            "newton_iterations": info.iterations,
            "kkt_residual": info.kkt_residual,
            "pell_residual": pell.max_residual,
            "exploratory": t > 3,
        }
    drifts = {}
    for lo, hi in zip(t_values, t_values[1:]):
        basis = MonomialBasis(S.n, 2 * lo)
        v_lo = results[lo]["phi"].vector(basis)
        v_hi = results[hi]["phi"].vector(basis)
        drifts[(lo, hi)] = float(np.max(np.abs(v_lo - v_hi)))
    return {"set": set_name, "results": results, "drift": drifts}


def fenchel_gap(M: np.ndarray, Q: np.ndarray) -> float:
    """<M, Q> - n - log det M - log det Q; nonnegative for PD pairs.

    Zero exactly when Q = M^-1 (the equality case of the log-det Fenchel
    inequality).
    """
    M = np.asarray(M, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if M.shape != Q.shape:
        raise ValueError("matrices must have equal orders")
    n = M.shape[0]
    LM = cholesky(M)
    LQ = cholesky(Q)
    logdetM = 2.0 * float(np.sum(np.log(np.diagonal(LM))))
    logdetQ = 2.0 * float(np.sum(np.log(np.diagonal(LQ))))
    return float(np.vdot(M, Q)) - n - logdetM - logdetQ
