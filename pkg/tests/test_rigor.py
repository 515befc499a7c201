import numpy as np
import pytest
from scipy.linalg import hilbert

from eigenbounds.assembly import Case, DofSpace, Pencil, neumann_pencil, projection_pencil
from eigenbounds.eigen import float_inertia, solve_definite_pencil, solve_pencil
from eigenbounds.interval import IntervalArray
from eigenbounds.mesh import reference_domain, refine
from eigenbounds.rigor import (
    DIRECT_LIMIT,
    bisect_lower_bound,
    bisect_upper_bound,
    certify_lower_bound,
    certify_upper_bound,
    interval_ldl_inertia,
    search_lower_bound,
    search_upper_bound,
    verified_inertia,
    verify_positive_definite,
)

K1 = reference_domain("K1")


def _point_pencil(A, B, case=Case.CASE1):
    return Pencil(
        IntervalArray.point(A), IntervalArray.point(B), case, DofSpace("CR", A.shape[0]), scalar_kind="interval"
    )


def test_verified_inertia_sign_pattern():
    A = IntervalArray(np.diag([1.0, -2.0]), np.diag([1.1, -1.9]))
    res = verified_inertia(A, np.eye(2), 0.0)
    assert res.below == 1 and res.certified


def test_straddling_pivot_is_uncertified():
    A = IntervalArray(np.diag([-0.1, 1.0]), np.diag([0.1, 2.0]))
    assert not interval_ldl_inertia(A).certified


def test_hilbert_is_positive_definite():
    res = verified_inertia(hilbert(3), np.eye(3), 0.0)
    assert res.below == 0 and res.certified
    assert np.linalg.eigvalsh(hilbert(3)).min() > 0


def test_k1_pencil_certificates():
    p = neumann_pencil(K1, "CR", "interval")
    assert certify_lower_bound(p, 2, 11.9)
    assert not certify_lower_bound(p, 2, 12.1)
    assert certify_upper_bound(p, 2, 12.1)
    assert not certify_upper_bound(p, 2, 11.9)


def test_identity_pencil_certificates():
    p = _point_pencil(np.eye(3), np.eye(3))
    assert certify_lower_bound(p, 1, 0.5)
    assert certify_upper_bound(p, 1, 2.0)
    with pytest.raises(ValueError):
        certify_lower_bound(p, 0, 0.5)


def test_lower_certification_is_monotone():
    p = neumann_pencil(refine(K1, 1), "CR", "interval")
    lam2 = solve_definite_pencil(*p.midpoint()).values[1]
    grid = np.linspace(0.5 * lam2, 1.2 * lam2, 41)
    flags = [certify_lower_bound(p, 2, s) for s in grid]
    # once it fails it keeps failing
    first_fail = flags.index(False)
    assert all(flags[:first_fail]) and not any(flags[first_fail:])
    assert grid[first_fail - 1] <= lam2 <= grid[first_fail]


def test_soundness_on_point_pencils():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = int(rng.integers(2, 30))
        X, Y = rng.standard_normal((n, n)), rng.standard_normal((n, n))
        A, B = X + X.T, Y @ Y.T + n * np.eye(n)
        for sigma in rng.uniform(-10, 10, size=5):
            f = float_inertia(A, B, sigma)
            v = verified_inertia(A, B, sigma)
            if f.determinate and v.certified:
                assert v.below == f.below


def test_interval_width_is_respected():
    # widening the enclosure past an eigenvalue must break certification
    A = np.diag([1.0, 2.0, 3.0])
    wide = IntervalArray(A - np.diag([0, 0.2, 0]), A + np.diag([0, 0.2, 0]))
    assert not verified_inertia(wide, np.eye(3), 1.9).certified
    assert verified_inertia(wide, np.eye(3), 1.7).certified


@pytest.mark.parametrize("seed", range(5))
def test_bisection_converges(seed):
    # well separated spectrum in [1, 10] under a random congruence; the
    # attainable accuracy is about n * u * ||A|| / lambda, so the spectrum
    # is kept moderately conditioned
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 50))
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    S = np.eye(n) + 0.1 * rng.standard_normal((n, n))
    A = S @ Q @ np.diag(np.linspace(1.0, 10.0, n)) @ Q.T @ S.T
    B = S @ S.T
    A, B = 0.5 * (A + A.T), 0.5 * (B + B.T)
    p = _point_pencil(A, B)
    w = solve_definite_pencil(A, B).values
    for k in (1, 3):
        lam = w[k - 1]
        gap = 0.4 * np.min(np.abs(np.delete(w, k - 1) - lam))
        lo, _ = bisect_lower_bound(p, k, lam - gap, lam + gap)
        hi, _ = bisect_upper_bound(p, k, lam - gap, lam + gap)
        assert lo <= lam <= hi
        assert lam - lo <= 2.0 ** -40 * lam and hi - lam <= 2.0 ** -40 * lam


def test_search_relaxation():
    p = neumann_pencil(K1, "CR", "interval")
    lo, d = search_lower_bound(p, 2, 12.0)
    hi, e = search_upper_bound(p, 2, 12.0)
    assert lo < 12.0 < hi and d == 1e-7 and e == 1e-8


def test_case2_semidefinite_counting():
    m = refine(K1, 1)
    p = projection_pencil(m, "CR", 1, "interval")
    lam = solve_pencil(p, count=1).values[0]
    assert certify_lower_bound(p, 1, lam * (1 - 1e-6))
    assert certify_upper_bound(p, 1, lam * (1 + 1e-6))
    assert not certify_lower_bound(p, 1, lam * (1 + 1e-6))
    assert certify_lower_bound(p, 1, 0.0)  # finite eigenvalues are positive
    assert not certify_upper_bound(p, 1, -1.0)


def test_large_pencil_route():
    # above the direct limit: shifted Cholesky for lower bounds, Ritz test for upper
    m = refine(K1, 4)
    p = projection_pencil(m, "CR", 0, "interval")
    assert p.n > DIRECT_LIMIT
    sol = solve_pencil(p, count=2)
    lam, V = sol.values, sol.vectors
    assert certify_lower_bound(p, 1, lam[0] * (1 - 1e-6))
    assert not certify_lower_bound(p, 1, lam[0] * (1 + 1e-6))
    assert certify_lower_bound(p, 2, lam[1] * (1 - 1e-6), deflation=V[:, :1])
    assert certify_upper_bound(p, 2, lam[1] * (1 + 1e-6), vectors=V)
    assert not certify_upper_bound(p, 1, lam[0] * (1 - 1e-6), vectors=V)
    with pytest.raises(ValueError):
        certify_lower_bound(p, 2, 1.0)


def test_verify_positive_definite_large():
    rng = np.random.default_rng(1)
    n = DIRECT_LIMIT + 50
    X = rng.standard_normal((n, n))
    H = X @ X.T / n + 1e-3 * np.eye(n)
    assert verify_positive_definite(H)
    lam_min = np.linalg.eigvalsh(H).min()
    assert not verify_positive_definite(H - 2 * lam_min * np.eye(n))
