"""Moment sequences, Riesz functionals, moment and localizing matrices.

A moment sequence stores pseudo-moment values phi_alpha up to a degree
bound together with the Riesz functional p -> sum_alpha p_alpha phi_alpha.
The catalog covers the reference measures used throughout (all normalized
to probability measures):

  chebyshev1        dx / (pi sqrt(1-x^2)) on [-1,1]:     m_2k = C(2k,k)/4^k
  chebyshev2        (2/pi) sqrt(1-x^2) dx on [-1,1]:     m_2k = C(2k,k)/((k+1) 4^k)
  uniform_interval  dx/(b-a) on [a,b]:                   m_k = (b^{k+1}-a^{k+1})/((k+1)(b-a))
  uniform_box       coordinate product of intervals
  uniform_ball2d    normalized area on a disk of radius r
  uniform_simplex2d normalized area on {x,y >= 0, x+y <= 1}:  m_ab = 2 a! b!/(a+b+2)!
  gaussian          exp(-||x||^2/s^2) dx normalized:     per axis m_2k = (2k-1)!! (s^2/2)^k
  empirical         equal-weight average over a point cloud
  product           factor-wise product of sub-descriptors
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import sym_eig
from .poly import MonomialBasis, Polynomial

CATALOG_KINDS = (
    "chebyshev1",
    "chebyshev2",
    "uniform_interval",
    "uniform_box",
    "uniform_ball2d",
    "uniform_simplex2d",
    "gaussian",
    "empirical",
    "product",
)

#: PSD test threshold, relative to the largest diagonal entry
PSD_RTOL = 1e-10


class DegreeOverflowError(ValueError):
    """A required moment lies beyond the stored degree bound."""


@dataclass
class MomentSequence:
    """Pseudo-moments (phi_alpha) for |alpha| <= degree_bound.

    Treated as immutable after construction.
    """

    n: int
    degree_bound: int
    values: dict
    label: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.degree_bound < 0:
            raise ValueError("degree bound must be >= 0")
        clean = {}
        for alpha, v in self.values.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n:
                raise ValueError(f"index {alpha} has wrong length for n={self.n}")
            if sum(alpha) > self.degree_bound:
                raise ValueError(f"index {alpha} beyond degree bound {self.degree_bound}")
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"non-finite moment at {alpha}")
            clean[alpha] = v
        zero = (0,) * self.n
        if zero not in clean:
            raise ValueError("moment of the zero index (total mass) is required")
        self.values = clean

    @property
    def mass(self) -> float:
        return self.values[(0,) * self.n]

    def value(self, alpha) -> float:
        alpha = tuple(alpha)
        if sum(alpha) > self.degree_bound:
            raise DegreeOverflowError(
                f"moment {alpha} of degree {sum(alpha)} exceeds bound {self.degree_bound}"
            )
        return self.values.get(alpha, 0.0)

    def vector(self, basis: MonomialBasis) -> np.ndarray:
        """Moments in basis order (basis bound must fit within ours)."""
        if basis.t > self.degree_bound:
            raise DegreeOverflowError(
                f"basis bound {basis.t} exceeds moment bound {self.degree_bound}"
            )
        return np.array([self.values.get(a, 0.0) for a in basis.exponents])

    # -- Riesz functional and shifted sequences -----------------------------

    def riesz(self, p: Polynomial) -> float:
        """Apply the Riesz functional: sum_alpha p_alpha phi_alpha."""
        if p.n != self.n:
            raise ValueError(f"polynomial dimension {p.n} != sequence dimension {self.n}")
        total = 0.0
        for alpha, c in p.terms.items():
            if sum(alpha) > self.degree_bound:
                raise DegreeOverflowError(
                    f"monomial {alpha} of degree {sum(alpha)} exceeds bound "
                    f"{self.degree_bound}"
                )
            total += c * self.values.get(alpha, 0.0)
        return total

    def shift(self, g: Polynomial) -> "MomentSequence":
        """The sequence g.phi with (g.phi)_alpha = sum_gamma g_gamma phi_{alpha+gamma}.

        Output degree bound shrinks by deg(g); satisfies (g.phi)(p) = phi(g p).
        """
        if g.n != self.n:
            raise ValueError("dimension mismatch between polynomial and sequence")
        dg = g.degree
        if self.degree_bound < dg:
            raise DegreeOverflowError(
                f"sequence bound {self.degree_bound} below deg(g) = {dg}"
            )
        bound = self.degree_bound - dg
        out = {}
        for alpha in MonomialBasis(self.n, bound):
            v = 0.0
            for gamma, c in g.terms.items():
                v += c * self.values.get(tuple(a + b for a, b in zip(alpha, gamma)), 0.0)
            out[alpha] = v
        return MomentSequence(self.n, bound, out, label=f"shift({self.label})")

    # -- matrices ------------------------------------------------------------

    def moment_matrix(self, t: int) -> np.ndarray:
        """M_t(phi) with entries phi_{alpha+beta}, indexed in graded order."""
        if 2 * t > self.degree_bound:
            raise DegreeOverflowError(
                f"moment matrix of degree {t} needs moments to {2*t}, "
                f"have {self.degree_bound}"
            )
        basis = MonomialBasis(self.n, t)
        m = len(basis)
        M = np.empty((m, m))
        for i, a in enumerate(basis.exponents):
            for j in range(i, m):
                b = basis.exponents[j]
                v = self.values.get(tuple(x + y for x, y in zip(a, b)), 0.0)
                M[i, j] = v
                M[j, i] = v
        return M

    def localizing_matrix(self, g: Polynomial, t: int) -> np.ndarray:
        """M_t(g.phi), the moment matrix of the shifted sequence."""
        if 2 * t + g.degree > self.degree_bound:
            raise DegreeOverflowError(
                f"localizing matrix needs moments to {2*t + g.degree}, "
                f"have {self.degree_bound}"
            )
        return self.shift(g).moment_matrix(t)

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        basis = MonomialBasis(self.n, self.degree_bound)
        return {
            "n": self.n,
            "degree_bound": self.degree_bound,
            "label": self.label,
            "ordering": "graded-lex",
            "values": [self.values.get(a, 0.0) for a in basis.exponents],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MomentSequence":
        basis = MonomialBasis(int(data["n"]), int(data["degree_bound"]))
        vals = data["values"]
        if len(vals) != len(basis):
            raise ValueError(
                f"expected {len(basis)} moment values in graded-lex order, got {len(vals)}"
            )
        return cls(
            basis.n,
            basis.t,
            dict(zip(basis.exponents, map(float, vals))),
            label=data.get("label", ""),
        )


@dataclass
class SemialgebraicSet:
    """Generators G = {g_0 = 1, g_1, ..., g_m} describing {x : g(x) >= 0}."""

    n: int
    generators: list = field(default_factory=list)

    def __post_init__(self):
        one = Polynomial.constant(self.n, 1.0)
        gens = list(self.generators)
        if not gens or gens[0] != one:
            gens.insert(0, one)
        for g in gens:
            if g.n != self.n:
                raise ValueError("generator dimension mismatch")
        self.generators = gens

    @property
    def half_degrees(self) -> list:
        """t_g = ceil(deg(g)/2) per generator."""
        return [(g.degree + 1) // 2 for g in self.generators]

    # canonical sets used by the equilibrium experiments
    @classmethod
    def interval(cls) -> "SemialgebraicSet":
        """[-1, 1] with generator 1 - x^2."""
        x = Polynomial.variable(1, 0)
        return cls(1, [1 - x * x])

    @classmethod
    def ball2d(cls) -> "SemialgebraicSet":
        x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
        return cls(2, [1 - x * x - y * y])

    @classmethod
    def box2d(cls) -> "SemialgebraicSet":
        x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
        return cls(2, [1 - x * x, 1 - y * y])

    @classmethod
    def simplex2d(cls) -> "SemialgebraicSet":
        x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
        return cls(2, [x, y, 1 - x - y])


def archimedean_augment(S: SemialgebraicSet, radius_sq: float) -> SemialgebraicSet:
    """Append the redundant ball constraint R - ||x||^2 to the generator list.

    Callers are responsible for not appending twice (augmenting twice
    simply stores two copies).
    """
    if radius_sq <= 0:
        raise ValueError("radius must be positive")
    from .poly import ball_constraint

    return SemialgebraicSet(S.n, S.generators[1:] + [ball_constraint(S.n, radius_sq)])


# ---------------------------------------------------------------------------
# measure catalog
# ---------------------------------------------------------------------------


@dataclass
class MeasureDescriptor:
    """Declarative description of a reference measure; see module docstring."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CATALOG_KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}; known: {CATALOG_KINDS}")
        p = self.params
        if self.kind == "uniform_interval":
            a, b = p.get("a", -1.0), p.get("b", 1.0)
            if not a < b:
                raise ValueError("uniform_interval needs a < b")
        elif self.kind == "uniform_box":
            bounds = p.get("bounds")
            if not bounds or any(not lo < hi for lo, hi in bounds):
                raise ValueError("uniform_box needs non-degenerate per-axis bounds")
        elif self.kind == "uniform_ball2d":
            if p.get("radius", 1.0) <= 0:
                raise ValueError("ball radius must be positive")
        elif self.kind == "gaussian":
            if p.get("n", 1) < 1:
                raise ValueError("gaussian dimension must be >= 1")
            if p.get("scale", 1.0) <= 0:
                raise ValueError("gaussian scale must be positive")
        elif self.kind == "empirical":
            pts = p.get("points")
            if not pts:
                raise ValueError("empirical measure needs at least one point")
        elif self.kind == "product":
            if not p.get("factors"):
                raise ValueError("product measure needs at least one factor")

    @property
    def n(self) -> int:
        k, p = self.kind, self.params
        if k in ("chebyshev1", "chebyshev2", "uniform_interval"):
            return 1
        if k in ("uniform_ball2d", "uniform_simplex2d"):
            return 2
        if k == "uniform_box":
            return len(p["bounds"])
        if k == "gaussian":
            return int(p.get("n", 1))
        if k == "empirical":
            return len(p["points"][0])
        return sum(MeasureDescriptor(**f).n if isinstance(f, dict) else f.n
                   for f in p["factors"])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    @classmethod
    def from_dict(cls, data: dict) -> "MeasureDescriptor":
        return cls(data["kind"], dict(data.get("params", {})))


def _interval_moment(k: int, a: float, b: float) -> float:
    return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))


def _chebyshev1_moment(k: int) -> float:
    return 0.0 if k % 2 else math.comb(k, k // 2) / 4 ** (k // 2)


def _chebyshev2_moment(k: int) -> float:
    if k % 2:
        return 0.0
    h = k // 2
    return math.comb(k, h) / ((h + 1) * 4**h)


def _gaussian_moment(k: int, scale: float) -> float:
    # moments of N(0, scale^2/2): m_2k = (2k-1)!! (scale^2/2)^k
    if k % 2:
        return 0.0
    h = k // 2
    return math.prod(range(1, k, 2)) * (scale * scale / 2.0) ** h


def _ball2d_moment(a: int, b: int, radius: float) -> float:
    if a % 2 or b % 2:
        return 0.0
    num = 2.0 * math.gamma((a + 1) / 2) * math.gamma((b + 1) / 2)
    den = (a + b + 2) * math.pi * math.gamma((a + b) / 2 + 1)
    return radius ** (a + b) * num / den


def _simplex2d_moment(a: int, b: int) -> float:
    return 2.0 * math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def catalog_moments(descriptor: MeasureDescriptor, degree_bound: int) -> MomentSequence:
    """Closed-form moments of a catalog measure, normalized to mass 1."""
    k, p = descriptor.kind, descriptor.params
    if k == "empirical":
        return empirical_moments(p["points"], degree_bound)
    if k == "product":
        factors = [
            f if isinstance(f, MeasureDescriptor) else MeasureDescriptor.from_dict(f)
            for f in p["factors"]
        ]
        seqs = [catalog_moments(f, degree_bound) for f in factors]
        n = sum(s.n for s in seqs)
        out = {}
        for alpha in MonomialBasis(n, degree_bound):
            v, pos = 1.0, 0
            for s in seqs:
                v *= s.values.get(alpha[pos : pos + s.n], 0.0)
                pos += s.n
            out[alpha] = v
        return MomentSequence(n, degree_bound, out, label=f"product[{len(seqs)}]")

    n = descriptor.n
    out = {}
    for alpha in MonomialBasis(n, degree_bound):
        if k == "chebyshev1":
            v = _chebyshev1_moment(alpha[0])
        elif k == "chebyshev2":
            v = _chebyshev2_moment(alpha[0])
        elif k == "uniform_interval":
            v = _interval_moment(alpha[0], p.get("a", -1.0), p.get("b", 1.0))
        elif k == "uniform_box":
            v = math.prod(
                _interval_moment(ai, lo, hi) for ai, (lo, hi) in zip(alpha, p["bounds"])
            )
        elif k == "uniform_ball2d":
            v = _ball2d_moment(alpha[0], alpha[1], p.get("radius", 1.0))
        elif k == "uniform_simplex2d":
            v = _simplex2d_moment(alpha[0], alpha[1])
        elif k == "gaussian":
            v = math.prod(_gaussian_moment(ai, p.get("scale", 1.0)) for ai in alpha)
        else:
            raise ValueError(f"unsupported measure kind {k!r}")
        out[alpha] = v
    return MomentSequence(n, degree_bound, out, label=k)


def empirical_moments(points: Sequence, degree_bound: int) -> MomentSequence:
    """Equal-weight moments phi_alpha = (1/N) sum_j x_j^alpha of a point cloud."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.size == 0:
        raise ValueError("empirical measure needs at least one point")
    npts, n = pts.shape
    out = {}
    for alpha in MonomialBasis(n, degree_bound):
        mono = np.ones(npts)
        for i, ai in enumerate(alpha):
            if ai:
                mono = mono * pts[:, i] ** ai
        out[alpha] = float(mono.mean())
    return MomentSequence(n, degree_bound, out, label=f"empirical[{npts}]")


def pushforward_moments(f: Polynomial, mu: MomentSequence, k: int) -> MomentSequence:
    """Moments of the univariate pushforward #mu of mu by f, up to degree k.

    The j-th moment is mu(f^j); requires k * deg(f) within mu's bound.
    """
    if f.n != mu.n:
        raise ValueError("dimension mismatch between f and mu")
    if k * f.degree > mu.degree_bound:
        raise DegreeOverflowError(
            f"pushforward to degree {k} needs moments to {k * f.degree}, "
            f"have {mu.degree_bound}"
        )
    out = {}
    power = Polynomial.constant(f.n, 1.0)
    for j in range(k + 1):
        out[(j,)] = mu.riesz(power)
        if j < k:
            power = power * f
    return MomentSequence(1, k, out, label=f"pushforward({mu.label})")


class NonnegResult(NamedTuple):
    is_psd: bool
    witness: float  # minimum eigenvalue of the localizing matrix

    def __bool__(self) -> bool:
        return self.is_psd


def nonneg_test(g: Polynomial, phi: MomentSequence, s: int) -> NonnegResult:
    """Spectrahedral nonnegativity test: is M_s(g.phi) PSD?

    For phi the moments of a measure supported on S, nonnegativity of g on
    S is equivalent to this holding for every s; at fixed s it is a relaxed
    (outer) test.  The witness is the minimum eigenvalue.
    """
    M = phi.localizing_matrix(g, s)
    scale = max(float(np.max(np.abs(np.diagonal(M)))), 1.0) if M.size else 1.0
    w, _ = sym_eig(M) if M.size else (np.zeros(1), None)
    wmin = float(w[0])
    return NonnegResult(wmin >= -PSD_RTOL * scale, wmin)


def localizing_structure(g: Polynomial, t_block: int, var_basis: MonomialBasis) -> np.ndarray:
    """Coefficient matrices of phi -> M_{t_block}(g.phi) as a linear map.

    Returns F of shape (len(var_basis), o, o) with
    M_{t_block}(g.phi) = sum_alpha phi_alpha F[alpha]; entry (beta, gamma) of
    F[alpha] collects g_delta over delta + beta + gamma = alpha.
    """
    rows = MonomialBasis(g.n, t_block)
    o = len(rows)
    F = np.zeros((len(var_basis), o, o))
    for i, a in enumerate(rows.exponents):
        for j in range(i, o):
            b = rows.exponents[j]
            for delta, c in g.terms.items():
                alpha = tuple(x + y + z for x, y, z in zip(a, b, delta))
                idx = var_basis.index(alpha)
                F[idx, i, j] += c
                if i != j:
                    F[idx, j, i] += c
    return F
