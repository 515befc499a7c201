"""Certified eigenvalue bounds by verified inertia counting.

By Sylvester's law the number of negative eigenvalues of ``A - sigma*B``
equals the number of pencil eigenvalues below ``sigma`` whenever B is
positive definite, and also when A is positive definite, B semi-definite
and ``sigma > 0`` (finite eigenvalues only).  Every certificate below
holds for every point pencil inside the interval enclosures.

Two routes are used:

* small pencils (``n <= DIRECT_LIMIT``): interval LDL^T of ``A - sigma*B``
  with diagonal pivoting by largest mignitude, repeated after a congruence
  with approximate eigenvectors when the plain factorization fails;
* large pencils: "at most k-1 eigenvalues below sigma" is proved by showing
  ``A - sigma*B + tau*(BX)(BX)^T`` positive definite (a rank k-1 update),
  and positive definiteness by a floating-point Cholesky of a shifted
  midpoint matrix whose shift dominates all rounding errors and the
  interval radius.  "At least k eigenvalues below sigma" is proved by
  checking that the k x k Ritz matrix ``V^T (A - sigma*B) V`` is negative
  definite with interval LDL^T.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .interval import (
    UNIT_ROUNDOFF,
    Interval,
    IntervalArray,
    _gamma,
    _nd,
    _nu,
    interval_matmul,
)

__all__ = [
    "Interval",
    "IntervalArray",
    "InertiaResult",
    "DIRECT_LIMIT",
    "as_interval",
    "verified_inertia",
    "interval_ldl_inertia",
    "congruence_inertia",
    "verify_positive_definite",
    "counting_precondition",
    "certify_lower_bound",
    "certify_upper_bound",
    "bisect_lower_bound",
    "bisect_upper_bound",
    "search_lower_bound",
    "search_upper_bound",
]

DIRECT_LIMIT = 300
BISECTION_BUDGET = 60
LOWER_RELAXATION = (1e-7, 1e-6, 1e-5, 1e-4, 1e-3)
UPPER_RELAXATION = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


@dataclass(frozen=True)
class InertiaResult:
    """Count of pencil eigenvalues strictly below the shift."""

    below: int
    certified: bool


def as_interval(M) -> IntervalArray:
    if isinstance(M, IntervalArray):
        return M
    return IntervalArray.point(np.asarray(M, dtype=float))


def _shifted(A, B, sigma: float) -> IntervalArray:
    """Enclosure of ``A - sigma*B`` made structurally symmetric."""
    H = as_interval(A) - as_interval(B) * float(sigma)
    if H.ndim == 2:
        H = H.intersect(H.T)
    return H


# ---------------------------------------------------------------------------
# interval LDL^T
# ---------------------------------------------------------------------------

def interval_ldl_inertia(H: IntervalArray) -> InertiaResult:
    """Number of negative pivots of an interval LDL^T, or uncertified.

    Symmetric diagonal pivoting picks the remaining diagonal entry of largest
    mignitude; if that entry contains zero the factorization cannot decide
    the sign and ``certified=False`` is returned.
    """
    lo = np.array(H.lo, dtype=float)
    hi = np.array(H.hi, dtype=float)
    n = lo.shape[0]
    neg = 0
    active = np.arange(n)
    for _ in range(n):
        dlo = lo[active, active]
        dhi = hi[active, active]
        mig = np.where(dlo > 0, dlo, np.where(dhi < 0, -dhi, 0.0))
        j = int(np.argmax(mig))
        if mig[j] <= 0.0:
            return InertiaResult(neg, False)
        p = active[j]
        plo, phi = lo[p, p], hi[p, p]
        if phi < 0:
            neg += 1
        rest = np.delete(active, j)
        if rest.size == 0:
            break
        c = IntervalArray(lo[rest, p], hi[rest, p])
        piv = IntervalArray(np.float64(plo), np.float64(phi))
        l = c / piv
        upd = IntervalArray(l.lo[:, None], l.hi[:, None]) * IntervalArray(c.lo[None, :], c.hi[None, :])
        upd = upd.intersect(upd.T)
        ix = np.ix_(rest, rest)
        blk = IntervalArray(lo[ix], hi[ix]) - upd
        lo[ix] = blk.lo
        hi[ix] = blk.hi
        active = rest
    return InertiaResult(neg, True)


def congruence_inertia(H: IntervalArray) -> InertiaResult:
    """Interval LDL^T of ``Q^T H Q`` with Q the float eigenvectors of mid(H).

    The transformed matrix is nearly diagonal, so its pivots keep the
    accuracy that plain elimination loses near a singular shift.  By
    Sylvester's law the inertia is unchanged for any nonsingular Q, and a
    certified factorization already proves Q nonsingular.
    """
    _, Q = np.linalg.eigh(H.mid())
    D = interval_matmul(Q.T, interval_matmul(H, Q))
    return interval_ldl_inertia(D.intersect(D.T))


def verified_inertia(A, B, sigma: float) -> InertiaResult:
    """Certified count of eigenvalues of ``(A, B)`` strictly below ``sigma``.

    Runs the interval LDL^T of ``A - sigma*B``, retrying on the
    eigenvector-preconditioned matrix when a pivot encloses zero.  The count
    equals the number of eigenvalues below sigma when B is positive definite
    (see :func:`counting_precondition` for the semi-definite case).
    """
    H = _shifted(A, B, sigma)
    res = interval_ldl_inertia(H)
    if res.certified or H.shape[0] == 0:
        return res
    return congruence_inertia(H)


# ---------------------------------------------------------------------------
# positive definiteness of large interval matrices
# ---------------------------------------------------------------------------

def _midrad(H: IntervalArray):
    mid = 0.5 * (H.lo + H.hi)
    rad = _nu(np.maximum(H.hi - mid, mid - H.lo))
    return mid, rad


def verify_positive_definite(H) -> bool:
    """Prove every symmetric matrix in the enclosure ``H`` positive definite.

    A floating-point Cholesky factorization of ``mid(H) - c*I`` that runs to
    completion proves ``lambda_min(mid(H)) > 0`` as soon as ``c`` exceeds the
    backward error bound ``gamma_{n+1} * tr(|R^T||R|)``; adding the spectral
    bound ``||rad(H)||_inf`` covers all matrices in the enclosure.
    """
    H = as_interval(H)
    n = H.shape[0]
    if n == 0:
        return True
    if n <= DIRECT_LIMIT:
        res = interval_ldl_inertia(H)
        return res.certified and res.below == 0
    mid, rad = _midrad(H)
    diag = mid.diagonal()
    if np.any(diag <= 0):
        return False
    g = _gamma(n + 2)
    alpha = _nu(2.0 * g / _nd(1.0 - 2.0 * g))
    trace = _nu(np.sum(diag) * (1.0 + n * UNIT_ROUNDOFF * 2))
    radius = _nu(np.max(np.sum(rad, axis=1)) * (1.0 + n * UNIT_ROUNDOFF * 2))
    c = _nu(_nu(alpha * trace) + radius + n * 2.0 ** -1000)
    S = mid.copy()
    idx = np.arange(n)
    S[idx, idx] = _nd(diag - c)
    if np.any(S[idx, idx] <= 0):
        return False
    _, info = sla.lapack.dpotrf(S, lower=1, clean=0, overwrite_a=1)
    return info == 0


_PRECONDITION: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def counting_precondition(pencil) -> bool:
    """Whether inertia of ``A - sigma*B`` counts eigenvalues for ``sigma > 0``.

    True if B is certified positive definite, or (semi-definite B) if A is.
    Cached per pencil object.
    """
    from .assembly import Case

    hit = _PRECONDITION.get(pencil)
    if hit is not None:
        return hit
    if pencil.case is Case.CASE2:
        ok = verify_positive_definite(pencil.A)
    else:
        ok = verify_positive_definite(pencil.B)
    _PRECONDITION[pencil] = ok
    return ok


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def _deflated(pencil, sigma, X):
    """``A - sigma*B + tau*(BX)(BX)^T`` as an interval matrix."""
    H = _shifted(pencil.A, pencil.B, sigma)
    if X is None or X.shape[1] == 0:
        return H
    BX = interval_matmul(as_interval(pencil.B), X)
    tau = 1.5 * abs(sigma) + 1.0
    U = interval_matmul(BX, BX.T) * tau
    H = H + U
    return H.intersect(H.T)


def certify_lower_bound(pencil, k: int, sigma: float, deflation: np.ndarray | None = None) -> bool:
    """Prove ``lambda_k >= sigma`` (1-based, zero eigenvalues included).

    Small pencils use verified inertia directly.  Large ones need ``k-1``
    float vectors in ``deflation`` (approximate eigenvectors of the k-1
    lowest eigenvalues); any vectors give a valid proof, good ones make it
    succeed.
    """
    if k < 1:
        raise ValueError("k is 1-based")
    if not counting_precondition(pencil):
        return False
    if _semidefinite_B(pencil) and sigma <= 0:
        return True  # A definite and B semi-definite: finite eigenvalues are positive
    if pencil.n <= DIRECT_LIMIT:
        res = verified_inertia(pencil.A, pencil.B, sigma)
        return res.certified and res.below <= k - 1
    if k > 1:
        if deflation is None or deflation.shape[1] < k - 1:
            raise ValueError(f"lower bound for k={k} on a large pencil needs {k - 1} deflation vectors")
        deflation = deflation[:, : k - 1]
    else:
        deflation = None
    return verify_positive_definite(_deflated(pencil, sigma, deflation))


def _semidefinite_B(pencil) -> bool:
    from .assembly import Case

    return pencil.case is Case.CASE2


def certify_upper_bound(pencil, k: int, sigma: float, vectors: np.ndarray | None = None) -> bool:
    """Prove ``lambda_k <= sigma`` (strictly: at least k eigenvalues below sigma).

    Large pencils need ``k`` float trial vectors; the k x k Ritz matrix
    ``V^T (A - sigma*B) V`` is enclosed and shown negative definite.
    """
    if k < 1:
        raise ValueError("k is 1-based")
    if not counting_precondition(pencil):
        return False
    if _semidefinite_B(pencil) and sigma <= 0:
        return False
    if pencil.n <= DIRECT_LIMIT and vectors is None:
        res = verified_inertia(pencil.A, pencil.B, sigma)
        return res.certified and res.below >= k
    if vectors is None or vectors.shape[1] < k:
        raise ValueError(f"upper bound for k={k} on a large pencil needs {k} trial vectors")
    V = np.asarray(vectors[:, :k], dtype=float)
    AV = interval_matmul(as_interval(pencil.A), V)
    BV = interval_matmul(as_interval(pencil.B), V)
    R = interval_matmul(V.T, AV) - interval_matmul(V.T, BV) * float(sigma)
    R = R.intersect(R.T)
    res = interval_ldl_inertia(R)
    return res.certified and res.below == k


# ---------------------------------------------------------------------------
# searching for the tightest certified shift
# ---------------------------------------------------------------------------

def search_lower_bound(pencil, k: int, estimate: float, deflation=None, relax=LOWER_RELAXATION):
    """Largest ``sigma = estimate*(1-delta)`` certified as a lower bound of lambda_k.

    Returns ``(sigma, delta)`` or ``(None, None)`` if every relaxation fails.
    """
    for delta in relax:
        sigma = _nd(estimate * (1.0 - delta))
        if certify_lower_bound(pencil, k, sigma, deflation):
            return sigma, delta
    return None, None


def search_upper_bound(pencil, k: int, estimate: float, vectors=None, relax=UPPER_RELAXATION):
    """Smallest ``sigma = estimate*(1+delta)`` certified as an upper bound of lambda_k."""
    for delta in relax:
        sigma = _nu(estimate * (1.0 + delta))
        if certify_upper_bound(pencil, k, sigma, vectors):
            return sigma, delta
    return None, None


def bisect_lower_bound(pencil, k: int, lo: float, hi: float, deflation=None, budget: int = BISECTION_BUDGET):
    """Bisection for the largest certified lower bound in ``[lo, hi]``.

    ``lo`` must certify.  Stops after ``budget`` halvings or when the
    interval no longer splits in floating point.  Returns the best certified
    shift and the number of iterations used.
    """
    if not certify_lower_bound(pencil, k, lo, deflation):
        return None, 0
    it = 0
    while it < budget:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        it += 1
        if certify_lower_bound(pencil, k, mid, deflation):
            lo = mid
        else:
            hi = mid
    return lo, it


def bisect_upper_bound(pencil, k: int, lo: float, hi: float, vectors=None, budget: int = BISECTION_BUDGET):
    """Bisection for the smallest certified upper bound in ``[lo, hi]`` (``hi`` must certify)."""
    if not certify_upper_bound(pencil, k, hi, vectors):
        return None, 0
    it = 0
    while it < budget:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        it += 1
        if certify_upper_bound(pencil, k, mid, vectors):
            hi = mid
        else:
            lo = mid
    return hi, it
