"""Floating-point solvers for symmetric generalized eigenproblems.

Small pencils (n <= ``NATIVE_LIMIT``) go through a self-contained
Householder tridiagonalisation followed by implicit QL iteration; larger
ones are handed to LAPACK via :func:`scipy.linalg.eigh`.  Results here are
approximations only; :mod:`eigenbounds.rigor` turns them into certified
bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConfigurationError, PencilShapeError

__all__ = [
    "EigenSpectrum",
    "NATIVE_LIMIT",
    "cholesky_factor",
    "tridiagonalize",
    "tridiagonal_ql",
    "symmetric_eig",
    "solve_definite_pencil",
    "solve_reversed_pencil",
    "solve_pencil",
    "ReversedSpectrum",
    "FloatInertia",
    "float_inertia",
    "zero_tolerance",
]

NATIVE_LIMIT = 200
ZERO_RTOL = 1e-8
KERNEL_PROBE = 32  # eigenvalues inspected when counting Ker(B) on large pencils


@dataclass
class EigenSpectrum:
    """Ascending eigenvalues with B-orthonormal eigenvectors (columns).

    ``zero_count`` is the number of eigenvalues judged to vanish and
    ``residual_norm`` the largest ``||A x - lambda B x||_2``.
    """

    values: np.ndarray
    vectors: np.ndarray | None
    zero_count: int = 0
    residual_norm: float = 0.0
    method: str = ""

    def positive(self) -> np.ndarray:
        return self.values[self.zero_count:]


@dataclass
class ReversedSpectrum:
    """Result of ``N x = mu M x`` with M definite.

    ``mu`` is descending (all of it when computed in full), ``lam = 1/mu``
    over the positive ``mu`` is ascending, ``kernel_count`` is dim Ker(N)
    and ``vectors`` are N-orthonormal eigenvectors matching ``lam``.
    """

    mu: np.ndarray
    lam: np.ndarray
    kernel_count: int
    vectors: np.ndarray | None = None
    method: str = ""

    @property
    def values(self) -> np.ndarray:
        return self.lam


def cholesky_factor(B: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises :class:`PencilShapeError` naming the failing minor."""
    B = np.asarray(B, dtype=float)
    c, info = sla.lapack.dpotrf(B, lower=1, clean=1)
    if info > 0:
        raise PencilShapeError(
            f"matrix is not positive definite: leading minor of order {info} fails", minor=int(info)
        )
    if info < 0:  # pragma: no cover - argument error
        raise ValueError(f"dpotrf argument {-info} invalid")
    return c


def tridiagonalize(C: np.ndarray):
    """Householder reduction ``C = Q T Q^T``; returns ``(diag, offdiag, Q)``."""
    A = np.array(C, dtype=float)
    n = A.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = A[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        # A <- H A H with H = I - 2 v v^T acting on rows/cols k+1:
        sub = A[k + 1:, k:]
        sub -= 2.0 * np.outer(v, v @ sub)
        sub = A[k:, k + 1:]
        sub -= 2.0 * np.outer(sub @ v, v)
        Qs = Q[:, k + 1:]
        Qs -= 2.0 * np.outer(Qs @ v, v)
    d = np.diag(A).copy()
    e = np.diag(A, -1).copy()
    return d, e, Q


def tridiagonal_ql(d: np.ndarray, e: np.ndarray, Z: np.ndarray | None = None, max_iter: int = 60):
    """Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix.

    ``Z`` (optional) is updated with the accumulated rotations, so passing the
    Householder ``Q`` yields eigenvectors of the original matrix.
    """
    d = np.array(d, dtype=float)
    n = d.size
    e = np.append(np.array(e, dtype=float), 0.0)
    Z = None if Z is None else np.array(Z, dtype=float)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise ArithmeticError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:  # underflow: deflate and restart this l
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    zi1 = Z[:, i + 1].copy()
                    Z[:, i + 1] = s * Z[:, i] + c * zi1
                    Z[:, i] = c * Z[:, i] - s * zi1
            else:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    order = np.argsort(d, kind="stable")
    return d[order], (None if Z is None else Z[:, order])


def symmetric_eig(C: np.ndarray, vectors: bool = True):
    """Eigen-decomposition of a symmetric matrix with the native solver."""
    d, e, Q = tridiagonalize(C)
    return tridiagonal_ql(d, e, Q if vectors else None)


def zero_tolerance(A, B, scale_A: float | None = None) -> float:
    """Eigenvalues with ``|lambda| <= ZERO_RTOL * ||A|| / ||B||`` count as zero.

    ``scale_A`` replaces ``||A||`` when given, for matrices such as the
    projection form whose entries may cancel to pure rounding noise.
    """
    na = np.linalg.norm(A, ord=np.inf) if scale_A is None else max(scale_A, np.linalg.norm(A, ord=np.inf))
    nb = np.linalg.norm(B, ord=np.inf)
    return ZERO_RTOL * na / nb if nb > 0 else ZERO_RTOL


def _choose(method, n):
    if method == "auto":
        return "native" if n <= NATIVE_LIMIT else "lapack"
    if method not in ("native", "lapack"):
        raise ConfigurationError(f"unknown eigen method {method!r}")
    return method


def _definite(A, B, count, method):
    """Smallest ``count`` eigenpairs of ``A x = lambda B x`` with B definite."""
    n = A.shape[0]
    count = n if count is None else min(count, n)
    L = cholesky_factor(B)
    if method == "native":
        Li = sla.solve_triangular(L, np.eye(n), lower=True)
        C = Li @ A @ Li.T
        C = 0.5 * (C + C.T)
        w, Y = symmetric_eig(C)
        X = Li.T @ Y
        return w[:count], X[:, :count]
    if count < n:
        return sla.eigh(A, B, subset_by_index=[0, count - 1], driver="gvx")
    return sla.eigh(A, B, driver="gv")


def _residual(A, B, w, X):
    if X is None or X.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(A @ X - (B @ X) * w[None, :], axis=0)))


def solve_definite_pencil(A, B, count: int | None = None, method: str = "auto") -> EigenSpectrum:
    """All (or the ``count`` smallest) eigenpairs of ``A x = lambda B x``, B definite.

    Parameters
    ----------
    A, B : ndarray
        Symmetric; B must admit a Cholesky factorization.
    count : int, optional
        Number of smallest eigenvalues wanted.
    method : {"auto", "native", "lapack"}
        ``auto`` uses the native solver up to ``NATIVE_LIMIT`` unknowns.

    Raises
    ------
    PencilShapeError
        If B is not positive definite; the failing leading minor is named.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    _check_square(A, B)
    m = _choose(method, A.shape[0])
    w, X = _definite(A, B, count, m)
    tol = zero_tolerance(A, B)
    return EigenSpectrum(w, X, zero_count=int(np.sum(np.abs(w) <= tol)), residual_norm=_residual(A, B, w, X), method=m)


def solve_reversed_pencil(
    N, M, count: int | None = None, method: str = "auto", scale_N: float | None = None
) -> ReversedSpectrum:
    """Solve ``N x = mu M x`` for N semi-definite and M definite.

    The positive eigenvalues of ``M x = lambda N x`` are ``lambda = 1/mu`` for
    the ``mu`` above the zero threshold; the remaining ``mu`` count
    ``dim Ker(N)``.  With ``count`` set on a large pencil only the largest
    ``count`` values of mu plus a probe of the bottom of the spectrum are
    computed.  ``scale_N`` sets the size of N used by the zero threshold
    (see :func:`zero_tolerance`).
    """
    N = np.asarray(N, dtype=float)
    M = np.asarray(M, dtype=float)
    _check_square(M, N)
    n = M.shape[0]
    m = _choose(method, n)
    L = cholesky_factor(M)
    tol = zero_tolerance(N, M, scale_N)
    if m == "native":
        Li = sla.solve_triangular(L, np.eye(n), lower=True)
        C = Li @ N @ Li.T
        C = 0.5 * (C + C.T)
        mu, Y = symmetric_eig(C)
        X = Li.T @ Y
    elif count is not None and count + KERNEL_PROBE < n:
        low = sla.eigh(N, M, eigvals_only=True, subset_by_index=[0, KERNEL_PROBE - 1], driver="gvx")
        n_inf = int(np.sum(low <= tol))
        if n_inf < KERNEL_PROBE:
            mu, X = sla.eigh(N, M, subset_by_index=[n - count, n - 1], driver="gvx")
            return _reversed_result(mu, X, tol, count, m, n_inf)
        mu, X = sla.eigh(N, M, driver="gv")
    else:
        mu, X = sla.eigh(N, M, driver="gv")
    return _reversed_result(mu, X, tol, count, m, int(np.sum(mu <= tol)))


def _reversed_result(mu, X, tol, count, method, n_inf):
    mu = np.maximum(mu, 0.0)[::-1]
    X = X[:, ::-1]
    finite = mu > tol
    lam = 1.0 / mu[finite]
    V = X[:, finite] * np.sqrt(lam)[None, :]  # M-normalised -> N-normalised
    if count is not None:
        lam, V = lam[:count], V[:, :count]
    return ReversedSpectrum(mu=mu, lam=lam, kernel_count=n_inf, vectors=V, method=method)


def solve_pencil(pencil, count: int | None = None, method: str = "auto"):
    """Dispatch on the pencil case (see :class:`eigenbounds.assembly.Case`).

    Case 2 pencils are solved in reversed form; the returned object has
    ``values`` and ``vectors`` either way.
    """
    from .assembly import Case

    A, B = pencil.midpoint()
    if pencil.case is Case.CASE2:
        return solve_reversed_pencil(B, A, count, method, scale_N=pencil.scale_B)
    return solve_definite_pencil(A, B, count, method)


@dataclass(frozen=True)
class FloatInertia:
    below: int
    at: int
    above: int
    determinate: bool = True


def float_inertia(A, B, sigma: float, rtol: float = 1e-12) -> FloatInertia:
    """Sylvester inertia of ``A - sigma*B`` from a Bunch-Kaufman LDL^T.

    Floating point only.  When a pivot (eigenvalue of a 1x1 or 2x2 block of
    D) is below ``rtol * ||A - sigma*B||`` the sign is not trusted and the
    result is flagged indeterminate; move sigma and retry.
    """
    H = np.asarray(A, dtype=float) - float(sigma) * np.asarray(B, dtype=float)
    H = 0.5 * (H + H.T)
    n = H.shape[0]
    _, D, _ = sla.ldl(H, lower=True)
    ev = []
    i = 0
    while i < n:
        if i + 1 < n and D[i + 1, i] != 0.0:
            ev.extend(np.linalg.eigvalsh(D[i:i + 2, i:i + 2]))
            i += 2
        else:
            ev.append(D[i, i])
            i += 1
    ev = np.asarray(ev)
    tol = rtol * max(np.linalg.norm(H, ord=np.inf), np.finfo(float).tiny)
    small = np.abs(ev) <= tol
    below = int(np.sum(ev < -tol))
    at = int(np.sum(small))
    return FloatInertia(below, at, n - below - at, determinate=at == 0)


def _check_square(A, B):
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise PencilShapeError(f"pencil matrices must be square and equal-sized, got {A.shape} and {B.shape}")
