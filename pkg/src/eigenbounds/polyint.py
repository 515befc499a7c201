"""Exact integration of polynomials over simplices.

On a d-simplex K with barycentric coordinates lambda_0..lambda_d,

    int_K lambda^alpha dx = d! |K| prod(alpha_i!) / (|alpha| + d)!

Integrands are represented as :class:`BaryPoly`, a sparse polynomial in the
barycentric coordinates whose coefficients may be exact rationals, float
arrays (one entry per cell) or :class:`IntervalArray` values.  Products
and integrals therefore vectorise over all cells of a mesh at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .errors import GeometryError
from .interval import Interval, IntervalArray

__all__ = [
    "BaryPoly",
    "MonomialBasis",
    "barycentric_factor",
    "integrate_barycentric",
    "monomials_up_to",
    "lower",
]


@lru_cache(maxsize=None)
def barycentric_factor(alpha: tuple[int, ...]) -> Fraction:
    """Reference factor ``d! prod(alpha_i!) / (|alpha| + d)!`` with d = len(alpha) - 1."""
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative exponent in {alpha}")
    d = len(alpha) - 1
    num = math.factorial(d) * math.prod(math.factorial(a) for a in alpha)
    return Fraction(num, math.factorial(sum(alpha) + d))


def integrate_barycentric(volume, alpha):
    """Integral of ``lambda^alpha`` over a simplex of the given volume.

    ``volume`` may be a float, an ndarray of per-cell volumes, an
    :class:`Interval` or an :class:`IntervalArray`; the result has the same
    kind.  In interval mode the rational factor is enclosed before the
    product, so the result contains the exact integral.
    """
    fac = barycentric_factor(tuple(int(a) for a in alpha))
    if isinstance(volume, (Interval, IntervalArray)):
        if np.any(np.asarray(volume.lo) <= 0):
            raise GeometryError("degenerate simplex: non-positive volume")
        return volume * Interval.from_value(fac)
    if np.any(np.asarray(volume) <= 0):
        raise GeometryError("degenerate simplex: non-positive volume")
    return volume * float(fac)


@dataclass(frozen=True)
class MonomialBasis:
    """Cartesian monomials ``x^beta`` with ``|beta| <= degree`` in graded-lex order."""

    dim: int
    degree: int
    monomials: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)


def monomials_up_to(dim: int, k: int) -> MonomialBasis:
    """Exponent tuples of all monomials of total degree <= k.

    >>> monomials_up_to(2, 1).monomials
    ((0, 0), (1, 0), (0, 1))
    """
    if k < 0:
        raise ValueError("degree must be non-negative")
    out = []
    for deg in range(k + 1):
        level = []
        for combo in combinations_with_replacement(range(dim), deg):
            beta = [0] * dim
            for c in combo:
                beta[c] += 1
            level.append(tuple(beta))
        # graded lexicographic: within a degree, larger leading exponent first
        level.sort(reverse=True)
        out.extend(level)
    return MonomialBasis(dim, k, tuple(out))


def lower(value, kind: str):
    """Convert an exact rational to the working scalar kind."""
    if isinstance(value, (int, Fraction)):
        return Interval.from_value(value) if kind == "interval" else float(value)
    return value


class BaryPoly:
    """Sparse polynomial in barycentric coordinates.

    ``terms`` maps exponent tuples (length d+1) to coefficients.  Mixing
    rational and array coefficients is allowed as long as rationals are
    lowered first (see :meth:`lowered`).
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        self.terms = dict(terms or {})

    @classmethod
    def constant(cls, nvars, c=1):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def coordinate(cls, nvars, i, c=1):
        alpha = [0] * nvars
        alpha[i] = 1
        return cls(nvars, {tuple(alpha): c})

    @classmethod
    def linear(cls, coeffs):
        """``sum_i coeffs[i] * lambda_i``."""
        n = len(coeffs)
        return cls(n, {tuple(int(j == i) for j in range(n)): c for i, c in enumerate(coeffs)})

    def lowered(self, kind: str) -> "BaryPoly":
        return BaryPoly(self.nvars, {a: lower(c, kind) for a, c in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, BaryPoly):
            other = BaryPoly.constant(self.nvars, other)
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms[a] + c if a in terms else c
        return BaryPoly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return BaryPoly(self.nvars, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, BaryPoly):
            other = BaryPoly.constant(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, BaryPoly):
            return BaryPoly(self.nvars, {a: c * other for a, c in self.terms.items()})
        terms: dict = {}
        for a, c in self.terms.items():
            for b, e in other.terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                prod = c * e
                terms[key] = terms[key] + prod if key in terms else prod
        return BaryPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = BaryPoly.constant(self.nvars, 1)
        for _ in range(n):
            out = out * self
        return out

    def derivative(self, i: int) -> "BaryPoly":
        """Formal partial derivative with respect to ``lambda_i``."""
        terms = {}
        for a, c in self.terms.items():
            if a[i]:
                b = list(a)
                b[i] -= 1
                terms[tuple(b)] = c * a[i]
        return BaryPoly(self.nvars, terms)

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def reference_integral(self):
        """``int_K p dx / |K|`` (coefficients times reference factors)."""
        total = None
        for a, c in self.terms.items():
            fac = barycentric_factor(a)
            if isinstance(c, (int, Fraction)):
                t = c * fac
            elif isinstance(c, (Interval, IntervalArray)):
                t = c * Interval.from_value(fac)
            else:
                t = c * float(fac)
            total = t if total is None else total + t
        return 0 if total is None else total

    def integrate(self, volume):
        """``int_K p dx`` for cells of the given volume(s)."""
        return self.reference_integral() * volume

    def __call__(self, lam):
        """Evaluate at barycentric point ``lam`` (used by tests/oracles)."""
        total = 0
        for a, c in self.terms.items():
            term = c
            for li, ai in zip(lam, a):
                term = term * li ** ai
            total = total + term
        return total

    def __repr__(self):
        return f"BaryPoly({self.terms!r})"
