import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from eigenbounds.assembly import (
    Case,
    DofSpace,
    Pencil,
    assemble_cr,
    assemble_p2,
    assemble_projection_form,
    boundary_mean_functional,
    cell_dofs,
    dump_matrix,
    neumann_pencil,
    num_dofs,
    projection_form_parts,
    projection_pencil,
    reduce_by_constraint,
)
from eigenbounds.eigen import solve_definite_pencil
from eigenbounds.errors import ConstraintError
from eigenbounds.mesh import reference_domain, refine

import oracles

K1 = reference_domain("K1")


def _to_float(M):
    return np.array([[float(x) for x in row] for row in M])


def test_k1_cr_element_matrices():
    S, M = assemble_cr(K1)
    local = K1.cell_facets[0]  # facet opposite local vertex i
    Sl = S[np.ix_(local, local)]
    np.testing.assert_allclose(Sl, [[4, -2, -2], [-2, 2, 0], [-2, 0, 2]], atol=1e-15)
    np.testing.assert_allclose(M, np.eye(3) / 6, atol=1e-16)
    Ke, Me = oracles.element_matrices("CR", [(0, 0), (1, 0), (0, 1)])
    assert Ke == [[4, -2, -2], [-2, 2, 0], [-2, 0, 2]]
    assert Me == [[Fraction(1, 6) if i == j else 0 for j in range(3)] for i in range(3)]


def test_k1_cr_boundary_functional():
    c = boundary_mean_functional(K1, "CR")
    np.testing.assert_allclose(c[K1.cell_facets[0]], [math.sqrt(2), 1, 1], rtol=1e-15)
    assert np.ones(3) @ c == pytest.approx(2 + math.sqrt(2), rel=1e-15)
    ci = boundary_mean_functional(K1, "CR", "interval")
    assert np.all(ci.contains(c))


def test_interior_dofs_have_zero_boundary_weight():
    m = refine(reference_domain("T1"), 1)
    c = boundary_mean_functional(m, "CR")
    assert np.all(c[~m.boundary_facets] == 0) and np.all(c[m.boundary_facets] > 0)
    cp = boundary_mean_functional(m, "P2")
    # perimeter check: constant 1 integrates to the surface area
    area = 1.5 + math.sqrt(3) / 2
    assert cp.sum() == pytest.approx(area, rel=1e-14)
    assert c.sum() == pytest.approx(area, rel=1e-14)


@pytest.mark.parametrize("name, level", [("K2", 2), ("SQUARE", 1), ("T2", 1)])
def test_row_sums_vanish(name, level):
    m = refine(reference_domain(name), level)
    for asm in (assemble_cr, assemble_p2):
        S, M = asm(m)
        scale = np.abs(S).max()
        assert np.abs(S.sum(axis=1)).max() <= 1e-13 * scale
        np.linalg.cholesky(M)
        assert np.array_equal(S, S.T) and np.array_equal(M, M.T)


def test_p2_single_element():
    S, M = assemble_p2(K1)
    assert S.shape == (6, 6)
    np.linalg.cholesky(M)
    # interpolant of x^2: vertex values then edge midpoints (edges in package order)
    pts = K1.coordinates
    nodes = list(pts) + [(pts[a] + pts[b]) / 2 for a, b in K1.edges]
    u = np.array([p[0] ** 2 for p in nodes])
    assert u @ S @ u == pytest.approx(1 / 3, rel=1e-14)


def test_single_element_cr_projection_k1_is_zero():
    N = assemble_projection_form(K1, "CR", 1)
    assert np.abs(N).max() <= 1e-15


@pytest.mark.parametrize("element", ["CR", "P2"])
def test_k0_schur_form(element):
    m = refine(reference_domain("K2"), 2)
    S, M = (assemble_cr if element == "CR" else assemble_p2)(m)
    N = assemble_projection_form(m, element, 0, mass=M)
    mvec = M.sum(axis=1)  # m_j = int phi_j since sum phi_j = 1
    area = math.sqrt(3) / 4
    np.testing.assert_allclose(N, M - np.outer(mvec, mvec) / area, atol=1e-15)


@pytest.mark.parametrize("name, level, k", [("K1", 2, 2), ("T4", 1, 2), ("K3", 2, 1)])
def test_projection_form_semidefinite(name, level, k):
    m = refine(reference_domain(name), level)
    rng = np.random.default_rng(5)
    for element in ("CR", "P2"):
        N = assemble_projection_form(m, element, k)
        assert np.array_equal(N, N.T)
        for _ in range(20):
            x = rng.standard_normal(N.shape[0])
            assert x @ N @ x >= -1e-13 * (x @ x)


def test_projection_parts_gram_positive_definite():
    parts = projection_form_parts(refine(reference_domain("T3"), 1), "P2", 2)
    assert parts.W.shape == (10, 10)
    np.linalg.cholesky(parts.W)


def test_reduce_by_constraint_identity_example():
    p = Pencil(np.eye(2), np.eye(2), Case.CASE1, DofSpace("CR", 2))
    r = reduce_by_constraint(p, np.array([1.0, 0.0]))
    assert r.n == 1 and r.A[0, 0] == 1.0 and r.B[0, 0] == 1.0
    with pytest.raises(ConstraintError):
        reduce_by_constraint(p, np.zeros(2))
    with pytest.raises(ConstraintError):
        reduce_by_constraint(p, np.ones(3))


def test_reduce_drops_one_dimension_and_keeps_symmetry():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 6))
    A = X @ X.T + np.eye(6)
    p = Pencil(A, np.eye(6), Case.CASE1, DofSpace("CR", 6))
    for _ in range(5):
        c = rng.standard_normal(6)
        r = reduce_by_constraint(p, c)
        assert r.n == 5 and np.allclose(r.A, r.A.T, rtol=0, atol=1e-14)
        assert r.dof_space.constrained


def test_constrained_neumann_has_positive_spectrum():
    m = refine(K1, 2)
    pencil = neumann_pencil(m, "CR")
    S = pencil.A
    assert np.abs(S.sum(axis=1)).max() < 1e-13
    r = reduce_by_constraint(pencil, boundary_mean_functional(m, "CR"))
    assert r.case is Case.CASE1 and r.expected_kernel_A == 0
    spec = solve_definite_pencil(r.A, r.B, count=1)
    assert spec.values[0] > 1.0


def test_kernel_dimensions():
    m = refine(reference_domain("K2"), 2)
    S, M = assemble_cr(m)
    ev = np.linalg.eigvalsh(S)
    assert np.sum(np.abs(ev) < 1e-10 * ev.max()) == 1
    for k in (1, 2):
        p = projection_pencil(m, "CR", k)
        evN = np.linalg.eigvalsh(p.B)
        assert np.sum(np.abs(evN) < 1e-10 * evN.max()) == m.dim
    m3 = refine(reference_domain("T1"), 1)
    p = projection_pencil(m3, "CR", 1)
    evN = np.linalg.eigvalsh(p.B)
    assert np.sum(np.abs(evN) < 1e-10 * evN.max()) == m3.dim


ORACLE_CASES = [("K1", 2, "CR"), ("K1", 1, "P2"), ("SQUARE", 1, "CR"), ("SQUARE", 1, "P2"), ("T1", 1, "CR")]


@pytest.mark.parametrize("name, level, element", ORACLE_CASES)
def test_oracle_equivalence(name, level, element):
    m = refine(reference_domain(name), level)
    n = num_dofs(m, element)
    dofs = cell_dofs(m, element)
    Ks, Ms = oracles.global_matrices(m, element, dofs, n)
    Kx, Mx = oracles.dense(Ks, n), oracles.dense(Ms, n)
    S, M = (assemble_cr if element == "CR" else assemble_p2)(m)
    rng = np.random.default_rng(3)
    Kf, Mf = _to_float(Kx), _to_float(Mx)
    for _ in range(5):
        u, v = rng.standard_normal(n), rng.standard_normal(n)
        assert u @ S @ v == pytest.approx(u @ Kf @ v, rel=1e-12, abs=1e-13)
        assert u @ M @ v == pytest.approx(u @ Mf @ v, rel=1e-12, abs=1e-13)
    Si, Mi = (assemble_cr if element == "CR" else assemble_p2)(m, "interval")
    for (i, j), val in Ks.items():
        assert Fraction(Si.lo[i, j]) <= val <= Fraction(Si.hi[i, j])
    for (i, j), val in Ms.items():
        assert Fraction(Mi.lo[i, j]) <= val <= Fraction(Mi.hi[i, j])
    for k in (0, 1):
        Nx = oracles.projection_form(m, element, dofs, n, k, Mx)
        N = assemble_projection_form(m, element, k, mass=M)
        np.testing.assert_allclose(N, _to_float(Nx), atol=1e-13)
        Ni = assemble_projection_form(m, element, k, "interval", mass=Mi)
        for i in range(n):
            for j in range(n):
                assert Fraction(Ni.lo[i, j]) <= Nx[i][j] <= Fraction(Ni.hi[i, j])


def test_oracle_equivalence_quadratic_projection():
    m = refine(K1, 1)
    n = num_dofs(m, "CR")
    dofs = cell_dofs(m, "CR")
    _, Ms = oracles.global_matrices(m, "CR", dofs, n)
    Nx = oracles.projection_form(m, "CR", dofs, n, 2, oracles.dense(Ms, n))
    np.testing.assert_allclose(assemble_projection_form(m, "CR", 2), _to_float(Nx), atol=1e-13)


def test_assembly_is_bit_deterministic():
    m = refine(reference_domain("T5"), 1)
    a = projection_pencil(m, "P2", 2)
    b = projection_pencil(m, "P2", 2)
    assert a.A.tobytes() == b.A.tobytes() and a.B.tobytes() == b.B.tobytes()


def test_dump_matrix_roundtrip():
    S, _ = assemble_cr(K1)
    buf = io.StringIO()
    dump_matrix(S, buf)
    lines = buf.getvalue().splitlines()
    assert json.loads(lines[0]) == {"n": 3, "scalar_kind": "float"}
    back = np.array([[float(x) for x in line.split()] for line in lines[1:]])
    assert np.array_equal(back, S)
    Si, _ = assemble_cr(K1, "interval")
    buf = io.StringIO()
    dump_matrix(Si, buf, "A")
    head, *rows = buf.getvalue().splitlines()
    assert json.loads(head)["scalar_kind"] == "interval"
    lo, hi = rows[0].split()[0].split(":")
    assert float(lo) <= S[0, 0] <= float(hi)
