"""Interval arithmetic with outward rounding.

Scalar :class:`Interval` operations are rounded directionally: the
round-to-nearest result is compared with the exact value (error-free
transformation for sums, rational comparison otherwise) and moved one ulp
outward only when it lies on the wrong side.  Array operations skip the
comparison and always widen by one ulp with ``nextafter``; IEEE 754
guarantees the nearest result is within half an ulp of the exact one, so
the widened interval still contains it.  No floating-point environment
state is touched, which keeps the primitives safe to call from several
threads at once.

Two types are provided: :class:`Interval` for scalars and
:class:`IntervalArray` for numpy-vectorised work (matrices, per-cell
coefficients during assembly).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import IntervalDomainError

__all__ = [
    "Interval",
    "IntervalArray",
    "UNIT_ROUNDOFF",
    "interval_scatter_add",
    "interval_solve",
    "round_up",
]

#: unit roundoff of binary64, u = 2**-53
UNIT_ROUNDOFF = 2.0 ** -53
_TINY = 2.0 ** -1000  # absorbs underflow in a-priori error bounds

_down = math.nextafter
_INF = math.inf


def _dn(x: float) -> float:
    return _down(x, -_INF)


def _up(x: float) -> float:
    return _down(x, _INF)


def _two_sum_err(a: float, b: float, s: float) -> float:
    """Exact ``(a + b) - s`` for ``s = fl(a + b)`` (Knuth's TwoSum)."""
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _sum_dn(a: float, b: float) -> float:
    s = a + b
    if math.isinf(s):
        return s
    return _dn(s) if _two_sum_err(a, b, s) < 0 else s


def _sum_up(a: float, b: float) -> float:
    s = a + b
    if math.isinf(s):
        return s
    return _up(s) if _two_sum_err(a, b, s) > 0 else s


def _directed(value: float, exact: Fraction, down: bool) -> float:
    """Round ``value`` (a nearest approximation of ``exact``) in one direction."""
    if math.isinf(value) or math.isnan(value):
        return value
    fv = Fraction(value)
    if down:
        return value if fv <= exact else _dn(value)
    return value if fv >= exact else _up(value)


def round_up(x):
    """Smallest representable value strictly above ``x`` (elementwise)."""
    return np.nextafter(x, np.inf)


def _fraction_enclosure(q: Fraction) -> tuple[float, float]:
    f = float(q)  # correctly rounded
    if Fraction(f) == q:
        return f, f
    if Fraction(f) < q:
        return f, _up(f)
    return _dn(f), f


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` of reals with float endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise IntervalDomainError(f"non-finite endpoint in [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise IntervalDomainError(f"empty interval [{self.lo}, {self.hi}]")

    # -- construction -----------------------------------------------------
    @classmethod
    def point(cls, x: float) -> "Interval":
        x = float(x)
        return cls(x, x)

    @classmethod
    def from_value(cls, x) -> "Interval":
        """Tightest enclosure of an exact number (int, Fraction, decimal str, float)."""
        if isinstance(x, Interval):
            return x
        if isinstance(x, float):
            return cls(x, x)
        if isinstance(x, str):
            x = Fraction(x)
        if isinstance(x, (int, Rational)):
            return cls(*_fraction_enclosure(Fraction(x)))
        raise TypeError(f"cannot enclose {type(x).__name__}")

    @classmethod
    def hull(cls, *values) -> "Interval":
        ivs = [cls.from_value(v) for v in values]
        return cls(min(v.lo for v in ivs), max(v.hi for v in ivs))

    # -- queries ------------------------------------------------------------
    @property
    def mid(self) -> float:
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def width(self) -> float:
        return _up(self.hi - self.lo)

    @property
    def mig(self) -> float:
        """Mignitude: smallest absolute value in the interval."""
        if self.lo > 0:
            return self.lo
        if self.hi < 0:
            return -self.hi
        return 0.0

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, (int, Rational)) and not isinstance(x, bool):
            q = Fraction(x)
            return Fraction(self.lo) <= q <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    __contains__ = contains

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        o = _as_interval(other)
        if o is NotImplemented:
            return o
        return Interval(_sum_dn(self.lo, o.lo), _sum_up(self.hi, o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = _as_interval(other)
        if o is NotImplemented:
            return o
        return Interval(_sum_dn(self.lo, -o.hi), _sum_up(self.hi, -o.lo))

    def __rsub__(self, other):
        o = _as_interval(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = _as_interval(other)
        if o is NotImplemented:
            return o
        # select extremes by exact value: distinct products may round alike
        cands = [(Fraction(x) * Fraction(y), x * y) for x in (self.lo, self.hi) for y in (o.lo, o.hi)]
        lo = min(cands, key=lambda t: t[0])
        hi = max(cands, key=lambda t: t[0])
        return Interval(_directed(lo[1], lo[0], True), _directed(hi[1], hi[0], False))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_interval(other)
        if o is NotImplemented:
            return o
        if o.lo <= 0.0 <= o.hi:
            raise IntervalDomainError(f"division by interval containing zero: {o}")
        cands = [(Fraction(x) / Fraction(y), x / y) for x in (self.lo, self.hi) for y in (o.lo, o.hi)]
        lo = min(cands, key=lambda t: t[0])
        hi = max(cands, key=lambda t: t[0])
        return Interval(_directed(lo[1], lo[0], True), _directed(hi[1], hi[0], False))

    def __rtruediv__(self, other):
        o = _as_interval(other)
        if o is NotImplemented:
            return o
        return o / self

    def square(self) -> "Interval":
        m = self.mig
        a = max(abs(self.lo), abs(self.hi))
        lo = _directed(m * m, Fraction(m) ** 2, True)
        return Interval(lo, _directed(a * a, Fraction(a) ** 2, False))

    def sqrt(self) -> "Interval":
        if self.lo < 0:
            raise IntervalDomainError(f"sqrt of interval with negative part: {self}")
        lo = math.sqrt(self.lo)
        hi = math.sqrt(self.hi)
        # compare squares: sqrt is monotone
        if Fraction(lo) ** 2 > Fraction(self.lo):
            lo = _dn(lo)
        if Fraction(hi) ** 2 < Fraction(self.hi):
            hi = _up(hi)
        return Interval(max(lo, 0.0), hi)

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _as_interval(x):
    if isinstance(x, Interval):
        return x
    if isinstance(x, (float, int, Rational)) and not isinstance(x, bool):
        return Interval.from_value(x)
    if isinstance(x, np.floating):
        return Interval.point(float(x))
    return NotImplemented


# ---------------------------------------------------------------------------
# arrays
# ---------------------------------------------------------------------------

def _nd(x):
    return np.nextafter(x, -np.inf)


def _nu(x):
    return np.nextafter(x, np.inf)


class IntervalArray:
    """Elementwise intervals backed by two float64 arrays ``lo`` and ``hi``.

    Supports broadcasting arithmetic with other interval arrays, scalar
    :class:`Interval` values, plain floats/ndarrays (treated as exact
    points) and Fractions (enclosed first).
    """

    __array_ufunc__ = None  # make ndarray <op> IntervalArray defer to us

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=float)
        hi = lo.copy() if hi is None else np.asarray(hi, dtype=float)
        if lo.shape != hi.shape:
            lo, hi = np.broadcast_arrays(lo, hi)
        self.lo = lo
        self.hi = hi

    # -- construction -----------------------------------------------------
    @classmethod
    def point(cls, x) -> "IntervalArray":
        x = np.array(x, dtype=float)
        return cls(x, x.copy())

    @classmethod
    def zeros(cls, shape) -> "IntervalArray":
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def from_values(cls, values) -> "IntervalArray":
        """Enclose a (nested) sequence of exact numbers elementwise."""
        obj = np.asarray(values, dtype=object)
        lo = np.empty(obj.shape)
        hi = np.empty(obj.shape)
        for idx, v in np.ndenumerate(obj):
            iv = Interval.from_value(v)
            lo[idx], hi[idx] = iv.lo, iv.hi
        return cls(lo, hi)

    @classmethod
    def from_midrad(cls, mid, rad) -> "IntervalArray":
        mid = np.asarray(mid, dtype=float)
        rad = np.asarray(rad, dtype=float)
        return cls(_nd(mid - rad), _nu(mid + rad))

    # -- structure ----------------------------------------------------------
    @property
    def shape(self):
        return self.lo.shape

    @property
    def ndim(self):
        return self.lo.ndim

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, key):
        lo, hi = self.lo[key], self.hi[key]
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        return IntervalArray(lo, hi)

    def __setitem__(self, key, value):
        v = _as_interval_array(value)
        self.lo[key] = v.lo
        self.hi[key] = v.hi

    def copy(self) -> "IntervalArray":
        return IntervalArray(self.lo.copy(), self.hi.copy())

    @property
    def T(self) -> "IntervalArray":
        return IntervalArray(self.lo.T, self.hi.T)

    def reshape(self, *shape) -> "IntervalArray":
        return IntervalArray(self.lo.reshape(*shape), self.hi.reshape(*shape))

    # -- queries ------------------------------------------------------------
    def mid(self) -> np.ndarray:
        return 0.5 * self.lo + 0.5 * self.hi

    def rad(self) -> np.ndarray:
        """Radius about :meth:`mid`, rounded up so that mid ± rad covers [lo, hi]."""
        m = self.mid()
        return _nu(np.maximum(m - self.lo, self.hi - m))

    def width(self) -> np.ndarray:
        return _nu(self.hi - self.lo)

    def mag(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def mig(self) -> np.ndarray:
        return np.where(self.lo > 0, self.lo, np.where(self.hi < 0, -self.hi, 0.0))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (self.lo <= x) & (x <= self.hi)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.lo, self.lo.T) and np.array_equal(self.hi, self.hi.T))

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self):
        return IntervalArray(-self.hi, -self.lo)

    def __add__(self, other):
        o = _as_interval_array(other)
        if o is NotImplemented:
            return o
        return IntervalArray(_nd(self.lo + o.lo), _nu(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = _as_interval_array(other)
        if o is NotImplemented:
            return o
        return IntervalArray(_nd(self.lo - o.hi), _nu(self.hi - o.lo))

    def __rsub__(self, other):
        o = _as_interval_array(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = _as_interval_array(other)
        if o is NotImplemented:
            return o
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        if o.lo is o.hi or np.array_equal(c, d):  # point multiplier
            p, q = a * c, b * c
            return IntervalArray(_nd(np.minimum(p, q)), _nu(np.maximum(p, q)))
        p1, p2, p3, p4 = a * c, a * d, b * c, b * d
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        return IntervalArray(_nd(lo), _nu(hi))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_interval_array(other)
        if o is NotImplemented:
            return o
        if np.any((o.lo <= 0) & (o.hi >= 0)):
            raise IntervalDomainError("division by interval containing zero")
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        q1, q2, q3, q4 = a / c, a / d, b / c, b / d
        lo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
        hi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
        return IntervalArray(_nd(lo), _nu(hi))

    def __rtruediv__(self, other):
        o = _as_interval_array(other)
        if o is NotImplemented:
            return o
        return o / self

    def square(self) -> "IntervalArray":
        m = self.mig()
        a = self.mag()
        return IntervalArray(np.where(m == 0, 0.0, _nd(m * m)), _nu(a * a))

    def sqrt(self) -> "IntervalArray":
        if np.any(self.lo < 0):
            raise IntervalDomainError("sqrt of interval with negative part")
        lo = np.sqrt(self.lo)
        return IntervalArray(np.where(lo == 0, 0.0, _nd(lo)), _nu(np.sqrt(self.hi)))

    def abs(self) -> "IntervalArray":
        return IntervalArray(self.mig(), self.mag())

    def sum(self, axis=None) -> "IntervalArray | Interval":
        """Rigorous sum: float sum plus the a-priori bound gamma_m * sum|x|."""
        lo = np.sum(self.lo, axis=axis)
        hi = np.sum(self.hi, axis=axis)
        m = self.lo.size if axis is None else self.lo.shape[axis]
        g = _gamma(m + 1)
        elo = _nu(g * np.sum(np.abs(self.lo), axis=axis) + _TINY)
        ehi = _nu(g * np.sum(np.abs(self.hi), axis=axis) + _TINY)
        out = IntervalArray(_nd(lo - elo), _nu(hi + ehi))
        if out.ndim == 0:
            return Interval(float(out.lo), float(out.hi))
        return out

    def __matmul__(self, other):
        return interval_matmul(self, other)

    def __rmatmul__(self, other):
        return interval_matmul(other, self)

    def intersect(self, other: "IntervalArray") -> "IntervalArray":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            raise IntervalDomainError("empty intersection")
        return IntervalArray(lo, hi)

    def __repr__(self):
        return f"IntervalArray(shape={self.shape})"


def _as_interval_array(x):
    if isinstance(x, IntervalArray):
        return x
    if isinstance(x, Interval):
        return IntervalArray(np.float64(x.lo), np.float64(x.hi))
    if isinstance(x, (Rational,)) and not isinstance(x, (int, bool)):
        iv = Interval.from_value(x)
        return IntervalArray(np.float64(iv.lo), np.float64(iv.hi))
    if isinstance(x, (int, float, np.floating, np.integer, np.ndarray)):
        a = np.asarray(x, dtype=float)
        return IntervalArray(a, a)
    return NotImplemented


def _gamma(m: int) -> float:
    """gamma_m = m u / (1 - m u), rounded up."""
    mu = m * UNIT_ROUNDOFF
    return _up(_up(mu) / _dn(1.0 - mu))


def interval_matmul(a, b) -> IntervalArray:
    """Enclosure of ``a @ b`` via midpoint-radius products on BLAS.

    Uses the a-priori bound |fl(X Y) - X Y| <= gamma_q |X||Y|, valid for any
    summation order, so blocked BLAS kernels are fine.
    """
    A = _as_interval_array(a)
    B = _as_interval_array(b)
    am, ar = A.mid(), A.rad()
    bm, br = B.mid(), B.rad()
    q = am.shape[-1]
    cm = am @ bm
    aam, abm = np.abs(am), np.abs(bm)
    g = _gamma(q + 2)
    rad = aam @ br + ar @ (abm + br) + g * (aam @ abm)
    # the radius itself was computed in round-to-nearest: inflate
    rad = _nu(rad * (1.0 + 4 * g) + _TINY)
    return IntervalArray(_nd(cm - rad), _nu(cm + rad))


def interval_scatter_add(target: IntervalArray, index, values: IntervalArray) -> None:
    """``target[index] += values`` with repeated indices, rigorously.

    ``index`` is anything accepted by ``np.add.at``.  Repeated entries are
    summed in round-to-nearest and the result is widened by the summation
    bound for the largest multiplicity.
    """
    vlo, vhi = values.lo, values.hi
    count = np.zeros(target.shape, dtype=np.int64)
    np.add.at(count, index, 1)
    m = int(count.max()) + 1  # +1 for the existing target value
    abs_lo = np.abs(target.lo)
    abs_hi = np.abs(target.hi)
    np.add.at(abs_lo, index, np.abs(vlo))
    np.add.at(abs_hi, index, np.abs(vhi))
    np.add.at(target.lo, index, vlo)
    np.add.at(target.hi, index, vhi)
    g = _gamma(m + 1)
    touched = count > 0
    elo = _nu(g * abs_lo + _TINY)
    ehi = _nu(g * abs_hi + _TINY)
    target.lo[touched] = _nd(target.lo[touched] - elo[touched])
    target.hi[touched] = _nu(target.hi[touched] + ehi[touched])


def interval_solve(W: IntervalArray, G: IntervalArray) -> IntervalArray:
    """Enclose ``W^{-1} G`` by interval Gaussian elimination.

    ``W`` is a small square interval matrix, ``G`` has any number of
    columns.  Rows are pivoted by the largest mignitude in the current
    column.  Raises :class:`IntervalDomainError` if every candidate pivot
    contains zero.
    """
    W = W.copy()
    X = G.copy()
    m = W.shape[0]
    if X.ndim == 1:
        X = X.reshape(m, 1)
        squeeze = True
    else:
        squeeze = False
    for k in range(m):
        mig = W[k:, k].mig()
        p = k + int(np.argmax(mig))
        if mig[p - k] == 0.0:
            raise IntervalDomainError("interval Gaussian elimination: singular pivot")
        if p != k:
            for arr in (W.lo, W.hi, X.lo, X.hi):
                arr[[k, p]] = arr[[p, k]]
        piv = W[k, k]
        for i in range(k + 1, m):
            f = W[i, k] / piv
            W[i, k:] = W[i, k:] - W[k, k:] * f
            X[i] = X[i] - X[k] * f
    for k in range(m - 1, -1, -1):
        acc = X[k]
        for j in range(k + 1, m):
            acc = acc - X[j] * W[k, j]
        X[k] = acc / W[k, k]
    return X[:, 0] if squeeze else X
