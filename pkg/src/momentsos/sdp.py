"""Dense primal-dual interior-point solver for small block-diagonal SDPs.

Problem form (the "LMI" or dual standard form):

    minimize    c^T y
    subject to  A_b(y) := F_b0 + sum_j y_j F_bj  >= 0   for every block b,
                E y = d                                  (optional).

The solver runs infeasible-start path following with the HKM direction and
a Mehrotra predictor-corrector step.  Writing S_b for the slack A_b(y) and
X_b for the dual block variables, the KKT system is

    sum_b <F_bj, X_b> + (E^T w)_j = c_j,     X_b, S_b >= 0,
    S_b = A_b(y),  E y = d,  X_b S_b = mu I (central path),

and each iteration solves the Schur complement
H_jk = sum_b tr(F_bj X_b F_bk S_b^-1) (symmetrized), bordered by the
equality rows.  The duality gap is sum_b <X_b, S_b>; the dual objective is
-sum_b <F_b0, X_b> + d^T w.

Infeasibility is detected by a divergence heuristic: when the dual
variables blow up while their normalized copy X/tr(X) nearly satisfies the
homogeneous dual constraints with strictly positive dual objective, that
copy is an improving ray proving that no feasible y exists.  Unboundedness
is symmetric (primal objective diverging to -infinity with feasibility
intact).  Both detectors are exercised in the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve_triangular

from .linalg import NotPositiveDefiniteError, cholesky


def _chol(M):
    # IPM iterates approach the cone boundary; accept any positive pivot
    return cholesky(M, rtol=0.0)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"
NUM_ERROR = "num_error"


@dataclass
class SdpBlock:
    """One PSD constraint F0 + sum_j y_j F[j] >= 0."""

    const: np.ndarray  # (o, o)
    coeffs: np.ndarray  # (m, o, o)

    def __post_init__(self):
        self.const = np.asarray(self.const, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        o = self.const.shape[0]
        if self.const.shape != (o, o):
            raise ValueError("block constant must be square")
        if self.coeffs.ndim != 3 or self.coeffs.shape[1:] != (o, o):
            raise ValueError("coefficient tensor must be (m, o, o)")
        if not np.allclose(self.const, self.const.T, atol=1e-12):
            raise ValueError("block constant must be symmetric")
        if not np.allclose(self.coeffs, np.swapaxes(self.coeffs, 1, 2), atol=1e-12):
            raise ValueError("block coefficients must be symmetric")

    @property
    def order(self) -> int:
        return self.const.shape[0]

    def value(self, y: np.ndarray) -> np.ndarray:
        A = self.const + np.tensordot(y, self.coeffs, axes=1)
        return 0.5 * (A + A.T)


@dataclass
class SdpProblem:
    """min c^T y subject to per-block LMIs and optional equalities E y = d."""

    c: np.ndarray
    blocks: list
    eq_mat: Optional[np.ndarray] = None
    eq_rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if not self.blocks:
            raise ValueError("at least one block is required")
        m = self.c.shape[0]
        for b in self.blocks:
            if b.coeffs.shape[0] != m:
                raise ValueError("block coefficient count must match len(c)")
        if self.eq_mat is not None:
            self.eq_mat = np.atleast_2d(np.asarray(self.eq_mat, dtype=float))
            self.eq_rhs = np.atleast_1d(np.asarray(self.eq_rhs, dtype=float))
            if self.eq_mat.shape != (self.eq_rhs.shape[0], m):
                raise ValueError("equality shapes inconsistent")

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]


@dataclass
class SolveOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200
    step_frac: float = 0.98
    min_step: float = 1e-14
    debug_log: Optional[object] = None  # path or file-like; JSON lines per iteration


@dataclass
class SdpSolution:
    status: str
    y: np.ndarray
    block_duals: list
    primal_objective: float
    dual_objective: float
    iterations: int
    gap: float
    eq_duals: Optional[np.ndarray] = None
    message: str = ""


def _step_to_boundary(L: np.ndarray, D: np.ndarray) -> float:
    """sup {a : P + a D >= 0} given P = L L^T."""
    W = solve_triangular(L, D, lower=True)
    W = solve_triangular(L, W.T, lower=True).T
    lam = np.linalg.eigvalsh(0.5 * (W + W.T))[0]
    if lam >= -1e-16:
        return np.inf
    return -1.0 / lam


class _Workspace:
    """Per-iteration factorizations and residuals."""

    def __init__(self, prob: SdpProblem):
        self.prob = prob
        scale = [np.linalg.norm(b.const) for b in prob.blocks]
        scale += [np.linalg.norm(b.coeffs[j]) for b in prob.blocks for j in range(prob.num_vars)]
        self.data_scale = max(1.0, max(scale, default=1.0))
        xi = max(10.0, self.data_scale)
        self.y = np.zeros(prob.num_vars)
        self.w = (
            np.zeros(prob.eq_mat.shape[0]) if prob.eq_mat is not None else np.zeros(0)
        )
        self.X = [xi * np.eye(b.order) for b in prob.blocks]
        self.S = [xi * np.eye(b.order) for b in prob.blocks]
        self.total_order = sum(b.order for b in prob.blocks)

    def refresh(self):
        prob = self.prob
        self.LS = [_chol(S) for S in self.S]
        self.LX = [_chol(X) for X in self.X]
        self.Sinv = []
        for L, S in zip(self.LS, self.S):
            Li = solve_triangular(L, np.eye(S.shape[0]), lower=True)
            self.Sinv.append(Li.T @ Li)
        # residuals
        self.Rp = [
            b.value(self.y) - S for b, S in zip(prob.blocks, self.S)
        ]  # want 0: S = A(y)
        rd = prob.c.copy()
        for b, X in zip(prob.blocks, self.X):
            rd -= np.einsum("jpq,pq->j", b.coeffs, X)
        if prob.eq_mat is not None:
            rd -= prob.eq_mat.T @ self.w
        self.rd = rd
        self.re = (
            prob.eq_rhs - prob.eq_mat @ self.y if prob.eq_mat is not None else np.zeros(0)
        )
        self.mu = sum(np.vdot(X, S) for X, S in zip(self.X, self.S)) / self.total_order

    def objective_pair(self):
        prob = self.prob
        pobj = float(prob.c @ self.y)
        dobj = -sum(float(np.vdot(b.const, X)) for b, X in zip(prob.blocks, self.X))
        if prob.eq_mat is not None:
            dobj += float(prob.eq_rhs @ self.w)
        return pobj, dobj


def solve_sdp(prob: SdpProblem, opts: SolveOptions | None = None) -> SdpSolution:
    """Solve the block SDP; see the module docstring for the formulation."""
    opts = opts or SolveOptions()
    ws = _Workspace(prob)
    m = prob.num_vars
    k = ws.w.shape[0]
    log = _open_log(opts.debug_log)
    status, message = MAX_ITER, ""
    it = 0
    try:
        for it in range(1, opts.max_iter + 1):
            try:
                ws.refresh()
            except NotPositiveDefiniteError:
                status, message = NUM_ERROR, "iterate left the PSD cone"
                break
            pobj, dobj = ws.objective_pair()
            gap = pobj - dobj
            relgap = abs(gap) / (1.0 + abs(pobj) + abs(dobj))
            feas_p = max(np.linalg.norm(R) for R in ws.Rp) / ws.data_scale
            feas_d = np.linalg.norm(ws.rd) / (1.0 + np.linalg.norm(prob.c))
            feas_e = np.linalg.norm(ws.re) if k else 0.0
            if log:
                log.write(
                    json.dumps(
                        {
                            "iteration": it,
                            "gap": gap,
                            "relgap": relgap,
                            "primal_objective": pobj,
                            "dual_objective": dobj,
                            "primal_feas": feas_p,
                            "dual_feas": feas_d,
                            "mu": ws.mu,
                        }
                    )
                    + "\n"
                )
            if (
                relgap <= opts.gap_tol
                and feas_p <= opts.feas_tol
                and feas_d <= opts.feas_tol
                and feas_e <= opts.feas_tol
            ):
                status = OPTIMAL
                break
            diverged = _check_divergence(ws, pobj, dobj, feas_p, feas_d)
            if diverged:
                status, message = diverged
                break

            H = np.zeros((m, m))
            blocks_T = []
            for b, X, Sinv in zip(prob.blocks, ws.X, ws.Sinv):
                T = np.einsum("pq,jqr,rs->jps", X, b.coeffs, Sinv, optimize=True)
                blocks_T.append(T)
                H += np.einsum("jpq,kqp->jk", b.coeffs, T, optimize=True)
            H = 0.5 * (H + H.T)
            kkt = _factor_kkt(H, prob.eq_mat, m, k)

            # predictor (affine scaling, nu = 0)
            dy_a, dw_a, dS_a, dX_a = _direction(ws, blocks_T, kkt, nu=0.0, extra=None)
            alpha_a = _max_step(ws.LS, dS_a, opts.step_frac)
            beta_a = _max_step(ws.LX, dX_a, opts.step_frac)
            gap_aff = sum(
                np.vdot(X + beta_a * dX, S + alpha_a * dS)
                for X, S, dX, dS in zip(ws.X, ws.S, dX_a, dS_a)
            )
            mu_aff = max(gap_aff / ws.total_order, 0.0)
            sigma = min(1.0, max((mu_aff / ws.mu) ** 3, 1e-10)) if ws.mu > 0 else 0.1

            # corrector with second-order term dX_a dS_a
            extra = [dXa @ dSa for dXa, dSa in zip(dX_a, dS_a)]
            dy, dw, dS, dX = _direction(ws, blocks_T, kkt, nu=sigma * ws.mu, extra=extra)
            alpha = _max_step(ws.LS, dS, opts.step_frac)
            beta = _max_step(ws.LX, dX, opts.step_frac)
            # eigenvalue-based boundary steps carry rounding; back off until
            # the updated iterate factorizes
            accepted = False
            for _ in range(40):
                if min(alpha, beta) < opts.min_step:
                    break
                S_new = [S + alpha * D for S, D in zip(ws.S, dS)]
                X_new = [X + beta * D for X, D in zip(ws.X, dX)]
                if _all_pd(S_new) and _all_pd(X_new):
                    ws.y = ws.y + alpha * dy
                    ws.w = ws.w + beta * dw
                    ws.S = S_new
                    ws.X = X_new
                    accepted = True
                    break
                alpha *= 0.8
                beta *= 0.8
            if not accepted:
                status, message = NUM_ERROR, f"step length collapsed at iteration {it}"
                break
    finally:
        if log and log is not opts.debug_log:
            log.close()

    pobj, dobj = ws.objective_pair()
    return SdpSolution(
        status=status,
        y=ws.y.copy(),
        block_duals=[X.copy() for X in ws.X],
        primal_objective=pobj,
        dual_objective=dobj,
        iterations=it,
        gap=pobj - dobj,
        eq_duals=ws.w.copy() if k else None,
        message=message,
    )


def _open_log(target):
    if target is None:
        return None
    if hasattr(target, "write"):
        return target
    return open(target, "w")


def _factor_kkt(H, E, m, k):
    if k == 0:
        reg = 0.0
        for _ in range(3):
            try:
                return ("chol", _chol(H + reg * np.eye(m)))
            except NotPositiveDefiniteError:
                reg = max(reg * 100, 1e-12 * max(np.trace(H) / m, 1.0))
        return ("lu", lu_factor(H + reg * np.eye(m)))
    KKT = np.zeros((m + k, m + k))
    KKT[:m, :m] = H
    KKT[:m, m:] = -E.T
    KKT[m:, :m] = E
    return ("lu", lu_factor(KKT))


def _solve_kkt(kkt, rhs1, rhs2):
    kind, fac = kkt
    m = rhs1.shape[0]
    if kind == "chol":
        x = solve_triangular(fac, rhs1, lower=True)
        return solve_triangular(fac.T, x, lower=False), np.zeros(0)
    if rhs2.shape[0] == 0 and fac[0].shape[0] == m:
        return lu_solve(fac, rhs1), np.zeros(0)
    sol = lu_solve(fac, np.concatenate([rhs1, rhs2]))
    return sol[:m], sol[m:]


def _direction(ws, blocks_T, kkt, nu, extra):
    """HKM direction for centrality target nu (with optional corrector term)."""
    prob = ws.prob
    m = prob.num_vars
    q = np.zeros(m)
    for idx, (b, X, Sinv, Rp) in enumerate(zip(prob.blocks, ws.X, ws.Sinv, ws.Rp)):
        Rmat = nu * Sinv - X - (X @ Rp) @ Sinv
        if extra is not None:
            Rmat = Rmat - extra[idx] @ Sinv
        q += np.einsum("jpq,qp->j", b.coeffs, Rmat)
    dy, dw = _solve_kkt(kkt, q - ws.rd, ws.re)
    dS, dX = [], []
    for idx, (b, X, Sinv, Rp) in enumerate(zip(prob.blocks, ws.X, ws.Sinv, ws.Rp)):
        DS = Rp + np.tensordot(dy, b.coeffs, axes=1)
        DS = 0.5 * (DS + DS.T)
        DX = nu * Sinv - X - (X @ DS) @ Sinv
        if extra is not None:
            DX = DX - extra[idx] @ Sinv
        DX = 0.5 * (DX + DX.T)
        dS.append(DS)
        dX.append(DX)
    return dy, dw, dS, dX


def _max_step(Ls, Ds, frac):
    alpha = 1.0
    for L, D in zip(Ls, Ds):
        alpha = min(alpha, frac * _step_to_boundary(L, D))
    return alpha


def _all_pd(mats) -> bool:
    for M in mats:
        try:
            _chol(M)
        except NotPositiveDefiniteError:
            return False
    return True


def _check_divergence(ws, pobj, dobj, feas_p, feas_d):
    """Divergence heuristics for infeasible / unbounded certificates."""
    prob = ws.prob
    trX = sum(np.trace(X) for X in ws.X)
    if trX > 1e7 * ws.data_scale:
        # normalized dual ray: homogeneous feasibility + positive objective
        ray_feas = np.zeros(prob.num_vars)
        for b, X in zip(prob.blocks, ws.X):
            ray_feas += np.einsum("jpq,pq->j", b.coeffs, X)
        if prob.eq_mat is not None:
            ray_feas += prob.eq_mat.T @ ws.w
        ray_obj = -sum(np.vdot(b.const, X) for b, X in zip(prob.blocks, ws.X))
        if prob.eq_mat is not None:
            ray_obj += float(prob.eq_rhs @ ws.w)
        if np.linalg.norm(ray_feas) / trX < 1e-6 and ray_obj / trX > 1e-8:
            return INFEASIBLE, "dual improving ray found (primal LMIs infeasible)"
    if np.linalg.norm(ws.y) > 1e8 * ws.data_scale and feas_p < 1e-6:
        if pobj < -1e8 * (1.0 + ws.data_scale):
            return UNBOUNDED, "objective diverging to -infinity along feasible ray"
    return None


def verify_solution(prob: SdpProblem, sol: SdpSolution, tol: float = 1e-8) -> dict:
    """Independent post-hoc checks: eigenvalues, complementarity, weak duality."""
    report = {"status": sol.status}
    mins_S, mins_X, comp = [], [], []
    for b, X in zip(prob.blocks, sol.block_duals):
        A = b.value(sol.y)
        mins_S.append(float(np.linalg.eigvalsh(A)[0]))
        mins_X.append(float(np.linalg.eigvalsh(X)[0]))
        comp.append(float(np.vdot(A, X)))
    scale = max(1.0, max(abs(sol.primal_objective), abs(sol.dual_objective)))
    report["min_eig_slack"] = min(mins_S)
    report["min_eig_dual"] = min(mins_X)
    report["complementarity"] = max(comp)
    report["weak_duality_ok"] = sol.primal_objective >= sol.dual_objective - 1e-9 * scale
    report["gap"] = sol.gap
    report["ok"] = (
        sol.status == OPTIMAL
        and report["min_eig_slack"] >= -tol * scale
        and report["min_eig_dual"] >= -tol * scale
        and report["weak_duality_ok"]
    )
    return report
