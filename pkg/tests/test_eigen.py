import numpy as np
import pytest

from eigenbounds.assembly import (
    Case,
    boundary_mean_functional,
    neumann_pencil,
    projection_pencil,
    reduce_by_constraint,
)
from eigenbounds.eigen import (
    KERNEL_PROBE,
    cholesky_factor,
    float_inertia,
    solve_definite_pencil,
    solve_pencil,
    solve_reversed_pencil,
    symmetric_eig,
)
from eigenbounds.errors import PencilShapeError
from eigenbounds.mesh import reference_domain, refine

K1 = reference_domain("K1")


def _random_pencil(rng, n):
    X = rng.standard_normal((n, n))
    Y = rng.standard_normal((n, n))
    A = X + X.T
    B = Y @ Y.T + n * np.eye(n)
    return A, B


def test_diagonal_example():
    spec = solve_definite_pencil(np.diag([2.0, 8.0]), np.diag([1.0, 2.0]))
    np.testing.assert_allclose(spec.values, [2, 4], rtol=1e-15)


@pytest.mark.parametrize("method", ["native", "lapack"])
def test_k1_neumann_spectrum(method):
    p = neumann_pencil(K1, "CR")
    spec = solve_definite_pencil(p.A, p.B, method=method)
    np.testing.assert_allclose(spec.values, [0, 12, 36], atol=1e-12)
    assert spec.zero_count == 1
    # eigenvector of 12 is (0, 1, -1) in local facet order
    v = spec.vectors[:, 1][K1.cell_facets[0]]
    v = v / v[1]
    np.testing.assert_allclose(v, [0, 1, -1], atol=1e-12)


@pytest.mark.parametrize("n", [5, 30, 120])
def test_residual_and_orthogonality(n):
    rng = np.random.default_rng(n)
    A, B = _random_pencil(rng, n)
    spec = solve_definite_pencil(A, B)
    assert np.all(np.diff(spec.values) >= 0) and len(spec.values) == n
    bound = 1e-12 * (np.linalg.norm(A) + np.abs(spec.values).max() * np.linalg.norm(B))
    assert spec.residual_norm <= bound
    G = spec.vectors.T @ B @ spec.vectors
    assert np.abs(G - np.eye(n)).max() <= 1e-10


def test_native_matches_lapack():
    rng = np.random.default_rng(7)
    A, B = _random_pencil(rng, 60)
    a = solve_definite_pencil(A, B, method="native")
    b = solve_definite_pencil(A, B, method="lapack")
    np.testing.assert_allclose(a.values, b.values, rtol=1e-10, atol=1e-12)
    # standard symmetric solver against numpy
    np.testing.assert_allclose(symmetric_eig(A, vectors=False)[0], np.linalg.eigvalsh(A), atol=1e-11)


def test_shift_consistency():
    rng = np.random.default_rng(9)
    A, B = _random_pencil(rng, 25)
    base = solve_definite_pencil(A, B).values
    for c in rng.uniform(-10, 10, size=5):
        shifted = solve_definite_pencil(A + c * B, B).values
        np.testing.assert_allclose(shifted, base + c, atol=1e-10 * max(1, np.abs(base).max()))


def test_count_subset():
    rng = np.random.default_rng(4)
    A, B = _random_pencil(rng, 40)
    full = solve_definite_pencil(A, B).values
    for method in ("native", "lapack"):
        part = solve_definite_pencil(A, B, count=3, method=method)
        np.testing.assert_allclose(part.values, full[:3], rtol=1e-10)


def test_cholesky_failure_names_minor():
    B = np.diag([1.0, 2.0, -1.0, 4.0])
    with pytest.raises(PencilShapeError) as info:
        cholesky_factor(B)
    assert info.value.minor == 3
    with pytest.raises(PencilShapeError):
        solve_definite_pencil(np.eye(4), B)
    with pytest.raises(PencilShapeError):
        solve_definite_pencil(np.eye(3), np.eye(4))


def test_reversed_reciprocal_mapping():
    N = np.diag([0.5, 0.25, 0.0])
    res = solve_reversed_pencil(N, np.eye(3))
    np.testing.assert_allclose(res.mu, [0.5, 0.25, 0.0])
    np.testing.assert_allclose(res.lam, [2, 4])
    assert res.kernel_count == 1
    # eigenvectors are normalised against N
    V = res.vectors
    np.testing.assert_allclose(V.T @ N @ V, np.eye(2), atol=1e-14)


def test_reversed_zero_matrix():
    res = solve_reversed_pencil(np.zeros((4, 4)), np.eye(4))
    assert res.kernel_count == 4 and res.lam.size == 0
    with pytest.raises(PencilShapeError):
        solve_reversed_pencil(np.eye(2), -np.eye(2))


def test_reversed_large_matches_full():
    # the subset path with a kernel probe agrees with a full solve
    m = refine(reference_domain("K1"), 3)
    p = projection_pencil(m, "CR", 1)
    full = solve_reversed_pencil(p.B, p.A, method="lapack")
    part = solve_reversed_pencil(p.B, p.A, count=2, method="lapack")
    assert p.n > 2 + KERNEL_PROBE
    np.testing.assert_allclose(part.lam, full.lam[:2], rtol=1e-10)
    assert part.kernel_count == full.kernel_count == 2


def test_case2_k0_matches_neumann_positive_spectrum():
    # k=0: N is the mass form minus the mean; on the unconstrained space the
    # reversed Case-2 solve and the Case-3 Neumann solve share their positive
    # spectrum once the constants are deflated from A
    m = refine(K1, 2)
    un2 = projection_pencil(m, "CR", 0, constrained=False)
    assert un2.case is Case.CASE2
    full3 = solve_definite_pencil(*neumann_pencil(m, "CR").midpoint())
    mvec = neumann_pencil(m, "CR").B.sum(axis=1)  # M times the constant vector
    rev = solve_reversed_pencil(un2.B, un2.A + np.outer(mvec, mvec))
    assert full3.zero_count == 1 and rev.kernel_count == 1
    np.testing.assert_allclose(rev.lam[:5], full3.positive()[:5], rtol=1e-10)
    # with the boundary-mean constraint the first eigenvalue still agrees
    c = boundary_mean_functional(m, "CR")
    case3 = reduce_by_constraint(neumann_pencil(m, "CR"), c)
    case2 = projection_pencil(m, "CR", 0, boundary=c)
    lam2 = solve_pencil(case2, count=1).values
    lam3 = solve_definite_pencil(case3.A, case3.B, count=1).values
    assert lam2[0] == pytest.approx(lam3[0], rel=1e-10)


def test_float_inertia_examples():
    A = np.diag([1.0, 3.0])
    assert float_inertia(A, np.eye(2), 2.0).below == 1
    assert float_inertia(A, np.eye(2), 0.5).below == 0
    p = neumann_pencil(K1, "CR")
    r = float_inertia(p.A, p.B, 20.0)
    assert r.below == 2 and r.determinate
    assert not float_inertia(A, np.eye(2), 1.0).determinate


def test_float_inertia_agrees_with_spectrum():
    rng = np.random.default_rng(12)
    checked = 0
    for trial in range(100):
        n = int(rng.integers(2, 50))
        A, B = _random_pencil(rng, n)
        w = solve_definite_pencil(A, B).values
        sigma = rng.uniform(w[0] - 1, w[-1] + 1)
        if np.min(np.abs(w - sigma)) < 1e-6 * max(1, abs(sigma)):
            continue
        r = float_inertia(A, B, sigma)
        assert r.determinate and r.below == int(np.sum(w < sigma))
        checked += 1
    assert checked > 90
