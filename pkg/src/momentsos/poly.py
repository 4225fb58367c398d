"""Multivariate monomial bookkeeping and sparse polynomial arithmetic.

Multi-indices are plain tuples of non-negative ints; the degree of a
multi-index is the sum of its entries.  Monomial bases are enumerated in
graded order (degree-major, ties broken lexicographically on the exponent
tuple), which makes matrix indexing deterministic across runs.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Mapping

import numpy as np

MultiIndex = tuple  # exponent tuple, one entry per variable

#: largest basis cardinality we are willing to enumerate
MAX_BASIS_SIZE = 50_000_000


class DimensionMismatchError(ValueError):
    """Operands live in different ambient dimensions."""


class BasisSizeError(ValueError):
    """Requested monomial basis exceeds the representable index range."""


def basis_size(n: int, t: int) -> int:
    """Number of monomials of degree <= t in n variables, C(n+t, n)."""
    return math.comb(n + t, n)


def _graded_indices(n: int, t: int) -> Iterator[MultiIndex]:
    # degree-major, lexicographic within each degree
    def compositions(total, length):
        if length == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for tail in compositions(total - head, length - 1):
                yield (head,) + tail

    for d in range(t + 1):
        yield from sorted(compositions(d, n))


class MonomialBasis:
    """Ordered enumeration of all multi-indices with degree <= t.

    Entry 0 is always the zero index (constant monomial) and the ordering
    has the prefix property: the degree <= t-1 entries of the basis for
    bound t coincide with the basis for bound t-1.
    """

    __slots__ = ("n", "t", "exponents", "_index")

    def __init__(self, n: int, t: int):
        if n < 1:
            raise ValueError(f"dimension must be >= 1, got {n}")
        if t < 0:
            raise ValueError(f"degree bound must be >= 0, got {t}")
        size = basis_size(n, t)
        if size > MAX_BASIS_SIZE:
            raise BasisSizeError(
                f"basis of {size} monomials (n={n}, t={t}) exceeds the "
                f"supported size {MAX_BASIS_SIZE}"
            )
        self.n = n
        self.t = t
        self.exponents: tuple[MultiIndex, ...] = tuple(_graded_indices(n, t))
        self._index = {alpha: i for i, alpha in enumerate(self.exponents)}

    def __len__(self) -> int:
        return len(self.exponents)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.exponents)

    def __getitem__(self, i: int) -> MultiIndex:
        return self.exponents[i]

    def index(self, alpha: MultiIndex) -> int:
        """Position of a multi-index in the basis ordering."""
        try:
            return self._index[tuple(alpha)]
        except KeyError:
            raise KeyError(f"multi-index {alpha} not in basis (n={self.n}, t={self.t})")

    def __contains__(self, alpha) -> bool:
        return tuple(alpha) in self._index

    def monomial_vector(self, x) -> np.ndarray:
        """Evaluate v_t(x), the vector of all monomials x^alpha in basis order."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatchError(
                f"point has shape {x.shape}, basis dimension is {self.n}"
            )
        out = np.empty(len(self.exponents))
        for i, alpha in enumerate(self.exponents):
            v = 1.0
            for xi, ai in zip(x, alpha):
                if ai:
                    v *= xi**ai
            out[i] = v
        return out

    def __repr__(self) -> str:
        return f"MonomialBasis(n={self.n}, t={self.t}, size={len(self)})"


class Polynomial:
    """Sparse real polynomial: a map from exponent tuple to coefficient.

    Immutable by convention; all arithmetic returns new instances and drops
    exact-zero coefficients.  The zero polynomial has an empty term map and
    degree 0.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[MultiIndex, float] | None = None):
        if n < 1:
            raise ValueError(f"dimension must be >= 1, got {n}")
        self.n = n
        clean: dict[MultiIndex, float] = {}
        if terms:
            for alpha, c in terms.items():
                alpha = tuple(int(a) for a in alpha)
                if len(alpha) != n:
                    raise DimensionMismatchError(
                        f"multi-index {alpha} has length {len(alpha)}, expected {n}"
                    )
                if any(a < 0 for a in alpha):
                    raise ValueError(f"negative exponent in {alpha}")
                c = float(c)
                if c != 0.0:
                    clean[alpha] = clean.get(alpha, 0.0) + c
                    if clean[alpha] == 0.0:
                        del clean[alpha]
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls(n)

    @classmethod
    def constant(cls, n: int, c: float) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> "Polynomial":
        """The coordinate polynomial x_i (0-based)."""
        if not 0 <= i < n:
            raise ValueError(f"variable index {i} out of range for dimension {n}")
        alpha = tuple(1 if j == i else 0 for j in range(n))
        return cls(n, {alpha: 1.0})

    @classmethod
    def monomial(cls, n: int, alpha: Iterable[int], c: float = 1.0) -> "Polynomial":
        return cls(n, {tuple(alpha): c})

    @classmethod
    def from_coefficients(cls, basis: MonomialBasis, coeffs) -> "Polynomial":
        """Polynomial with the given coefficient vector in basis order."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (len(basis),):
            raise DimensionMismatchError(
                f"coefficient vector has shape {coeffs.shape}, basis size is {len(basis)}"
            )
        return cls(basis.n, dict(zip(basis.exponents, coeffs)))

    # -- basic queries -----------------------------------------------------

    @property
    def degree(self) -> int:
        """Max total degree of stored terms; 0 for the zero polynomial."""
        return max((sum(a) for a in self.terms), default=0)

    def coefficient(self, alpha: Iterable[int]) -> float:
        return self.terms.get(tuple(alpha), 0.0)

    def coefficients(self, basis: MonomialBasis) -> np.ndarray:
        """Dense coefficient vector in the given basis order."""
        if basis.n != self.n:
            raise DimensionMismatchError(
                f"basis dimension {basis.n} != polynomial dimension {self.n}"
            )
        if self.degree > basis.t:
            raise ValueError(
                f"polynomial degree {self.degree} exceeds basis bound {basis.t}"
            )
        out = np.zeros(len(basis))
        for alpha, c in self.terms.items():
            out[basis.index(alpha)] = c
        return out

    def norm_inf(self) -> float:
        """Largest absolute coefficient (0 for the zero polynomial)."""
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_constant(self) -> bool:
        return all(sum(a) == 0 for a in self.terms)

    # -- evaluation and arithmetic ------------------------------------------

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatchError(
                f"point has shape {x.shape}, polynomial dimension is {self.n}"
            )
        total = 0.0
        for alpha, c in self.terms.items():
            v = c
            for xi, ai in zip(x, alpha):
                if ai:
                    v *= xi**ai
            total += v
        return total

    def _check_dim(self, other: "Polynomial") -> None:
        if self.n != other.n:
            raise DimensionMismatchError(
                f"polynomials in {self.n} and {other.n} variables"
            )

    def __add__(self, other):
        if np.isscalar(other):
            other = Polynomial.constant(self.n, other)
        self._check_dim(other)
        out = dict(self.terms)
        for alpha, c in other.terms.items():
            out[alpha] = out.get(alpha, 0.0) + c
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        if np.isscalar(other):
            other = Polynomial.constant(self.n, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return Polynomial(self.n, {a: c * other for a, c in self.terms.items()})
        self._check_dim(other)
        out: dict[MultiIndex, float] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                ab = tuple(i + j for i, j in zip(a, b))
                out[ab] = out.get(ab, 0.0) + ca * cb
        return Polynomial(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = Polynomial.constant(self.n, 1.0)
        for _ in range(k):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.n == other.n
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        """JSON form: {"n": int, "terms": [{"exp": [...], "coef": float}, ...]}."""
        return {
            "n": self.n,
            "terms": [
                {"exp": list(alpha), "coef": c}
                for alpha, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Polynomial":
        return cls(int(data["n"]), {tuple(t["exp"]): t["coef"] for t in data["terms"]})

    def __repr__(self) -> str:
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for alpha, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            mono = "*".join(
                f"x{i}^{a}" if a > 1 else f"x{i}" for i, a in enumerate(alpha) if a
            )
            bits.append(f"{c:g}*{mono}" if mono else f"{c:g}")
        return "Polynomial(" + " + ".join(bits) + ")"


def ball_constraint(n: int, radius_sq: float) -> Polynomial:
    """The polynomial R - ||x||^2 whose nonnegativity bounds the ball."""
    terms: dict[MultiIndex, float] = {(0,) * n: float(radius_sq)}
    for i in range(n):
        alpha = tuple(2 if j == i else 0 for j in range(n))
        terms[alpha] = -1.0
    return Polynomial(n, terms)
