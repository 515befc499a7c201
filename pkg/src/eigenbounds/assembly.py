"""Finite element matrices for the discrete eigenproblems.

Two elements are provided on simplicial meshes:

* ``"CR"``: Crouzeix-Raviart, one dof per facet, local basis
  ``1 - d*lambda_i`` for the facet opposite vertex ``i``.  Gradients are
  taken element-wise.
* ``"P2"``: conforming quadratic Lagrange, dofs on vertices then edges.

All element integrals use :mod:`eigenbounds.polyint`, so with
``kind="interval"`` every entry is an outward-rounded enclosure of the
exact value and with ``kind="float"`` it is accurate to rounding.
Matrices are dense.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy.linalg import null_space

from .errors import ConfigurationError, ConstraintError, GeometryError
from .interval import Interval, IntervalArray, interval_scatter_add, interval_solve
from .mesh import SimplicialMesh
from .polyint import BaryPoly, monomials_up_to

__all__ = [
    "Case",
    "DofSpace",
    "Pencil",
    "StiffnessMass",
    "ProjectionFormParts",
    "element_basis",
    "num_dofs",
    "cell_dofs",
    "assemble_cr",
    "assemble_p2",
    "assemble",
    "projection_form_parts",
    "assemble_projection_form",
    "boundary_mean_functional",
    "reduce_by_constraint",
    "neumann_pencil",
    "projection_pencil",
    "dump_matrix",
]

ELEMENTS = ("CR", "P2")


class Case(enum.Enum):
    """Definiteness pattern of a pencil (A, B)."""

    CASE1 = "both definite"
    CASE2 = "A definite, B semi-definite"
    CASE3 = "A semi-definite, B definite"


@dataclass(frozen=True)
class DofSpace:
    element: str
    size: int
    constrained: bool = False
    eliminated: int | None = None  # dof index removed by the constraint


@dataclass(frozen=True, eq=False)
class Pencil:
    """Symmetric matrix pair for ``A x = lambda B x``.

    ``A`` holds the form M, ``B`` the form N.  Matrices are ndarrays when
    ``scalar_kind == "float"`` and :class:`IntervalArray` otherwise.
    ``kernel_A`` optionally carries a float basis (columns) of the known
    structural kernel of A, e.g. the constants for the Neumann problem.
    """

    A: object
    B: object
    case: Case
    dof_space: DofSpace
    expected_kernel_A: int | None = 0
    expected_kernel_B: int | None = 0
    scalar_kind: str = "float"
    kernel_A: np.ndarray | None = field(default=None, repr=False)
    scale_B: float | None = None  # natural size of B when B = N cancels to rounding noise

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def midpoint(self) -> tuple[np.ndarray, np.ndarray]:
        """Float matrices (interval midpoints in rigorous mode)."""
        if self.scalar_kind == "interval":
            return self.A.mid(), self.B.mid()
        return self.A, self.B


class StiffnessMass(NamedTuple):
    stiffness: object
    mass: object


@dataclass(frozen=True)
class ProjectionFormParts:
    """Pieces of ``N = Mass - G^T W^{-1} G``.

    G holds the moments ``int q_m phi_j`` of the polynomial basis against the
    finite element basis and W the polynomial Gram matrix.
    """

    mass: object
    G: object
    W: object
    degree: int


# ---------------------------------------------------------------------------
# reference element data (exact rationals)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def element_basis(element: str, dim: int) -> tuple[BaryPoly, ...]:
    """Local basis functions as barycentric polynomials with rational coefficients."""
    nv = dim + 1
    lam = [BaryPoly.coordinate(nv, i) for i in range(nv)]
    if element == "CR":
        return tuple(1 - dim * lam[i] for i in range(nv))
    if element == "P2":
        verts = tuple(lam[i] * (2 * lam[i] - 1) for i in range(nv))
        edges = tuple(4 * lam[i] * lam[j] for i, j in combinations(range(nv), 2))
        return verts + edges
    raise ConfigurationError(f"unknown element {element!r}")


@lru_cache(maxsize=None)
def _reference_tensors(element: str, dim: int):
    """Exact ``mass[a,b]`` and ``stiff[a,b,p]`` per unit volume.

    ``stiff`` is indexed by unordered pairs ``p = (i, j), i <= j`` of
    barycentric gradients so that element matrices come out bitwise
    symmetric.
    """
    basis = element_basis(element, dim)
    nb, nv = len(basis), dim + 1
    pairs = [(i, j) for i in range(nv) for j in range(i, nv)]
    mass = [[(basis[a] * basis[b]).reference_integral() for b in range(nb)] for a in range(nb)]
    d = [[phi.derivative(i) for i in range(nv)] for phi in basis]
    stiff = []
    for a in range(nb):
        row = []
        for b in range(nb):
            vals = []
            for i, j in pairs:
                v = (d[a][i] * d[b][j]).reference_integral()
                if i != j:
                    v += (d[a][j] * d[b][i]).reference_integral()
                vals.append(v)
            row.append(vals)
        stiff.append(row)
    return mass, stiff, pairs


def _lift_table(table, kind):
    arr = np.asarray(table, dtype=object)
    if kind == "interval":
        return IntervalArray.from_values(arr)
    return arr.astype(float)


def num_dofs(mesh: SimplicialMesh, element: str) -> int:
    if element == "CR":
        return mesh.num_facets
    if element == "P2":
        return mesh.num_vertices + len(mesh.edges)
    raise ConfigurationError(f"unknown element {element!r}")


def cell_dofs(mesh: SimplicialMesh, element: str) -> np.ndarray:
    """Global dof indices per cell, matching :func:`element_basis` order."""
    if element == "CR":
        return np.asarray(mesh.cell_facets)
    if element == "P2":
        return np.hstack([mesh.cells, mesh.num_vertices + mesh.cell_edges])
    raise ConfigurationError(f"unknown element {element!r}")


# ---------------------------------------------------------------------------
# geometry per cell
# ---------------------------------------------------------------------------

def _cell_geometry(mesh: SimplicialMesh, kind: str):
    """Per-cell determinant and adjugate rows of the affine map.

    Returns ``(det, adj)`` where ``adj[i]`` is a list of ``dim`` component
    arrays with ``grad lambda_i = adj[i] / det``.
    """
    X = mesh.coordinate_enclosure if kind == "interval" else mesh.coordinates
    cells = mesh.cells
    d = mesh.dim
    # e[k][r]: component r of edge vector v_{k+1} - v_0
    e = [[X[cells[:, k + 1], r] - X[cells[:, 0], r] for r in range(d)] for k in range(d)]
    if d == 2:
        det = e[0][0] * e[1][1] - e[1][0] * e[0][1]
        rows = [[e[1][1], -e[1][0]], [-e[0][1], e[0][0]]]
    else:
        def cross(a, b):
            return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]

        rows = [cross(e[1], e[2]), cross(e[2], e[0]), cross(e[0], e[1])]
        det = e[0][0] * rows[0][0] + e[0][1] * rows[0][1] + e[0][2] * rows[0][2]
    det_lo = det.lo if kind == "interval" else det
    if np.any(det_lo <= 0):
        raise GeometryError("degenerate or inverted cell")
    row0 = [-sum(rows[k][r] for k in range(1, d)) - rows[0][r] for r in range(d)]
    return det, [row0] + rows


def _volumes(det, dim, kind):
    fac = Interval.from_value(math.factorial(dim)) if kind == "interval" else float(math.factorial(dim))
    return det / fac


def _scatter(n_rows, n_cols, rows, cols, vals, kind):
    if kind == "interval":
        out = IntervalArray.zeros((n_rows, n_cols))
        interval_scatter_add(out, (rows, cols), vals)
        return out
    out = np.zeros((n_rows, n_cols))
    np.add.at(out, (rows, cols), vals)
    return out


def _check_kind(kind):
    if kind not in ("float", "interval"):
        raise ConfigurationError(f"scalar kind must be 'float' or 'interval', got {kind!r}")


def assemble(mesh: SimplicialMesh, element: str, kind: str = "float") -> StiffnessMass:
    """Stiffness ``sum_K int grad u . grad v`` and L2 mass for ``element``."""
    _check_kind(kind)
    d = mesh.dim
    mass_ref, stiff_ref, pairs = _reference_tensors(element, d)
    det, adj = _cell_geometry(mesh, kind)
    vol = _volumes(det, d, kind)
    # |K| grad(lambda_i).grad(lambda_j) = adj_i . adj_j / (d! det)
    scale = det * (Interval.from_value(math.factorial(d)) if kind == "interval" else float(math.factorial(d)))
    S = _lift_table(stiff_ref, kind)  # (nb, nb, npairs)
    R = _lift_table(mass_ref, kind)  # (nb, nb)
    elem_k = None
    for p, (i, j) in enumerate(pairs):
        dot = sum(adj[i][r] * adj[j][r] for r in range(1, d)) + adj[i][0] * adj[j][0]
        kg = dot / scale
        term = S[:, :, p][None, :, :] * _expand(kg)
        elem_k = term if elem_k is None else elem_k + term
    elem_m = R[None, :, :] * _expand(vol)
    dofs = cell_dofs(mesh, element)
    n = num_dofs(mesh, element)
    rows = np.broadcast_to(dofs[:, :, None], elem_k.shape)
    cols = np.broadcast_to(dofs[:, None, :], elem_k.shape)
    return StiffnessMass(_scatter(n, n, rows, cols, elem_k, kind), _scatter(n, n, rows, cols, elem_m, kind))


def _expand(a):
    return a[:, None, None] if not isinstance(a, IntervalArray) else IntervalArray(a.lo[:, None, None], a.hi[:, None, None])


def assemble_cr(mesh: SimplicialMesh, kind: str = "float") -> StiffnessMass:
    """Crouzeix-Raviart stiffness (element-wise gradients) and mass."""
    return assemble(mesh, "CR", kind)


def assemble_p2(mesh: SimplicialMesh, kind: str = "float") -> StiffnessMass:
    """Conforming quadratic Lagrange stiffness and mass."""
    return assemble(mesh, "P2", kind)


# ---------------------------------------------------------------------------
# projection form N(u, v) = (u - P_k u, v - P_k v)
# ---------------------------------------------------------------------------

def _polynomial_frame(mesh: SimplicialMesh):
    """Centre and scale for the shifted monomial basis (exact floats)."""
    x = mesh.coordinates
    centre = np.round(0.5 * (x.min(axis=0) + x.max(axis=0)) * 2 ** 20) / 2 ** 20
    half_extent = 0.5 * float(np.max(x.max(axis=0) - x.min(axis=0)))
    scale = 2.0 ** round(math.log2(half_extent))
    return centre, scale


def _cell_monomials(mesh: SimplicialMesh, k: int, kind: str) -> list[BaryPoly]:
    """Shifted/scaled monomials ``((x - c)/s)^beta`` restricted to every cell."""
    d = mesh.dim
    nv = d + 1
    centre, scale = _polynomial_frame(mesh)
    X = mesh.coordinate_enclosure if kind == "interval" else mesh.coordinates
    cells = mesh.cells
    xi = []
    for r in range(d):
        coeffs = [(X[cells[:, i], r] - float(centre[r])) * (1.0 / scale) for i in range(nv)]
        xi.append(BaryPoly.linear(coeffs))
    out = []
    for beta in monomials_up_to(d, k):
        q = BaryPoly.constant(nv, Interval.point(1.0) if kind == "interval" else 1.0)
        for r, b in enumerate(beta):
            for _ in range(b):
                q = q * xi[r]
        out.append(q)
    return out


def projection_form_parts(mesh: SimplicialMesh, element: str, k: int, kind: str = "float", mass=None) -> ProjectionFormParts:
    """Mass matrix, moment matrix G and Gram matrix W for degree ``k``."""
    _check_kind(kind)
    if k < 0:
        raise ConfigurationError("projection degree must be >= 0")
    if mass is None:
        mass = assemble(mesh, element, kind).mass
    d = mesh.dim
    det, _ = _cell_geometry(mesh, kind)
    vol = _volumes(det, d, kind)
    qs = _cell_monomials(mesh, k, kind)
    basis = [phi.lowered(kind) for phi in element_basis(element, d)]
    dofs = cell_dofs(mesh, element)
    n = num_dofs(mesh, element)
    m = len(qs)
    nc = mesh.num_cells
    # moments: one (m, nc, nb) block, scattered by dof
    mom = [[(q * phi).reference_integral() * vol for phi in basis] for q in qs]
    if kind == "interval":
        lo = np.stack([np.stack([t.lo for t in row], axis=1) for row in mom])
        hi = np.stack([np.stack([t.hi for t in row], axis=1) for row in mom])
        vals = IntervalArray(lo, hi)
    else:
        vals = np.stack([np.stack(row, axis=1) for row in mom])
    rows = np.broadcast_to(np.arange(m)[:, None, None], (m, nc, len(basis)))
    cols = np.broadcast_to(dofs[None, :, :], (m, nc, len(basis)))
    G = _scatter(m, n, rows, cols, vals, kind)
    gram = [[(qs[a] * qs[b]).reference_integral() * vol for b in range(m)] for a in range(m)]
    if kind == "interval":
        W = IntervalArray.zeros((m, m))
        for a in range(m):
            for b in range(m):
                W[a, b] = gram[a][b].sum()
        W = W.intersect(W.T)
    else:
        W = np.array([[float(np.sum(gram[a][b])) for b in range(m)] for a in range(m)])
        W = 0.5 * (W + W.T)
    return ProjectionFormParts(mass=mass, G=G, W=W, degree=k)


def assemble_projection_form(mesh: SimplicialMesh, element: str, k: int, kind: str = "float", mass=None, parts=None):
    """Matrix of ``N(u, v) = (u - P_k u, v - P_k v)`` on the element space.

    ``P_k`` is the L2 projection onto polynomials of degree <= k over the
    whole domain.  Computed as ``Mass - G^T W^{-1} G`` by solving with W.
    """
    if parts is None:
        parts = projection_form_parts(mesh, element, k, kind, mass=mass)
    G, W, M = parts.G, parts.W, parts.mass
    if kind == "interval":
        # precondition with an approximate inverse Cholesky factor R of W:
        # G^T W^{-1} G = (RG)^T (R W R^T)^{-1} (RG) and R W R^T is close to I
        R = np.linalg.inv(np.linalg.cholesky(W.mid()))
        Wr = R @ W @ R.T
        Wr = Wr.intersect(Wr.T)
        Gr = R @ G
        X = interval_solve(Wr, Gr)
        P = Gr.T @ X
        P = P.intersect(P.T)
        return M - P
    try:
        L = np.linalg.cholesky(W)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - W is a Gram matrix
        raise ArithmeticError("polynomial Gram matrix is numerically singular") from exc
    from scipy.linalg import solve_triangular

    Y = solve_triangular(L, G, lower=True)
    P = Y.T @ Y
    N = M - 0.5 * (P + P.T)
    return N


# ---------------------------------------------------------------------------
# boundary mean constraint
# ---------------------------------------------------------------------------

def _facet_measures(mesh: SimplicialMesh, facets: np.ndarray, kind: str):
    X = mesh.coordinate_enclosure if kind == "interval" else mesh.coordinates
    d = mesh.dim
    e = [[X[facets[:, k + 1], r] - X[facets[:, 0], r] for r in range(d)] for k in range(d - 1)]
    if d == 2:
        sq = e[0][0] * e[0][0] + e[0][1] * e[0][1]
        return sq.sqrt() if kind == "interval" else np.sqrt(sq)
    a, b = e
    c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    sq = c[0] * c[0] + c[1] * c[1] + c[2] * c[2]
    if kind == "interval":
        return sq.sqrt() * Interval.point(0.5)
    return 0.5 * np.sqrt(sq)


def boundary_mean_functional(mesh: SimplicialMesh, element: str, kind: str = "float"):
    """Vector ``c_j = int_{boundary} phi_j ds``; zero for interior dofs."""
    _check_kind(kind)
    n = num_dofs(mesh, element)
    bidx = np.flatnonzero(mesh.boundary_facets)
    facets = mesh.facets[bidx]
    meas = _facet_measures(mesh, facets, kind)
    if element == "CR":
        # phi_j is 1 on its own facet and has zero mean on every other facet
        rows, vals = bidx, meas
        weights = None
    elif element == "P2":
        nvf = mesh.dim  # vertices per facet
        fbasis = element_basis("P2", mesh.dim - 1)
        weights = [phi.reference_integral() for phi in fbasis]
        edge_index = {tuple(e): i for i, e in enumerate(mesh.edges.tolist())}
        fverts = facets
        fedges = np.array(
            [[edge_index[(f[i], f[j])] for i, j in combinations(range(nvf), 2)] for f in facets.tolist()],
            dtype=np.int64,
        ).reshape(len(facets), -1)
        local = np.hstack([fverts, mesh.num_vertices + fedges])
        w = _lift_table(weights, kind)
        rows = local
        if kind == "interval":
            vals = IntervalArray(meas.lo[:, None], meas.hi[:, None]) * w[None, :]
        else:
            vals = meas[:, None] * w[None, :]
    else:
        raise ConfigurationError(f"unknown element {element!r}")
    if kind == "interval":
        out = IntervalArray.zeros((n,))
        interval_scatter_add(out, (rows,), vals)
        return out
    out = np.zeros(n)
    np.add.at(out, rows, vals)
    return out


def reduce_by_constraint(pencil: Pencil, c) -> Pencil:
    """Restrict the pencil to ``{x : c . x = 0}`` by eliminating one dof.

    The dof with largest ``|c_j|`` is written as a combination of the others,
    ``x = Z y``, and both matrices become ``Z^T A Z``, ``Z^T B Z``.
    """
    interval = pencil.scalar_kind == "interval"
    cmid = c.mid() if interval else np.asarray(c, dtype=float)
    if cmid.shape != (pencil.n,):
        raise ConstraintError("constraint vector has wrong length")
    if not np.any(cmid != 0):
        raise ConstraintError("constraint functional is identically zero")
    j = int(np.argmax(np.abs(cmid)))
    keep = np.delete(np.arange(pencil.n), j)
    if interval:
        cj = c[j]
        if cj.lo <= 0 <= cj.hi:
            raise ConstraintError("pivot of constraint encloses zero")
        w = -(c[keep] / cj)
    else:
        w = -cmid[keep] / cmid[j]

    def project(Mx):
        if interval:
            Mrr = Mx[np.ix_(keep, keep)]
            a = Mx[keep, j]
            ajj = Mx[j, j]
            wcol = IntervalArray(w.lo[:, None], w.hi[:, None])
            S = wcol * IntervalArray(a.lo[None, :], a.hi[None, :])
            out = Mrr + (S + S.T) + (wcol * IntervalArray(w.lo[None, :], w.hi[None, :])) * ajj
            return out
        Mrr = Mx[np.ix_(keep, keep)]
        a = Mx[keep, j]
        S = np.outer(w, a)
        return Mrr + (S + S.T) + Mx[j, j] * np.outer(w, w)

    kernel = pencil.kernel_A
    kdim = pencil.expected_kernel_A
    if kernel is not None and kernel.shape[1] > 0:
        cons = cmid @ kernel
        tol = 1e-10 * np.linalg.norm(cmid) * np.linalg.norm(kernel, axis=0).max()
        if np.all(np.abs(cons) <= tol):
            new_kernel = kernel[keep]
        else:
            ns = null_space(cons[None, :])
            new_kernel = (kernel @ ns)[keep]
        kdim = new_kernel.shape[1]
        kernel = new_kernel
    case = pencil.case
    if case is Case.CASE3 and kdim == 0:
        case = Case.CASE1
    space = replace(pencil.dof_space, size=pencil.n - 1, constrained=True, eliminated=j)
    return Pencil(
        A=project(pencil.A),
        B=project(pencil.B),
        case=case,
        dof_space=space,
        expected_kernel_A=kdim,
        expected_kernel_B=None if pencil.case is Case.CASE2 else pencil.expected_kernel_B,
        scalar_kind=pencil.scalar_kind,
        kernel_A=kernel,
        scale_B=pencil.scale_B,
    )


# ---------------------------------------------------------------------------
# pencils used by the pipelines
# ---------------------------------------------------------------------------

def neumann_pencil(mesh: SimplicialMesh, element: str = "CR", kind: str = "float", forms: StiffnessMass | None = None) -> Pencil:
    """Stiffness/mass pencil on the full space; constants span Ker(A)."""
    if forms is None:
        forms = assemble(mesh, element, kind)
    n = num_dofs(mesh, element)
    return Pencil(
        A=forms.stiffness,
        B=forms.mass,
        case=Case.CASE3,
        dof_space=DofSpace(element, n),
        expected_kernel_A=1,
        expected_kernel_B=0,
        scalar_kind=kind,
        kernel_A=np.ones((n, 1)),
    )


def projection_pencil(
    mesh: SimplicialMesh,
    element: str,
    k: int,
    kind: str = "float",
    forms: StiffnessMass | None = None,
    boundary=None,
    constrained: bool = True,
) -> Pencil:
    """Pencil (stiffness, N_k) restricted to zero boundary mean.

    Without the constraint the pencil has the constants in the kernel of
    both matrices and is returned tagged CASE2 only for inspection.
    """
    if forms is None:
        forms = assemble(mesh, element, kind)
    N = assemble_projection_form(mesh, element, k, kind, mass=forms.mass)
    n = num_dofs(mesh, element)
    mass_mid = forms.mass.mid() if kind == "interval" else forms.mass
    pencil = Pencil(
        A=forms.stiffness,
        B=N,
        case=Case.CASE2,
        dof_space=DofSpace(element, n),
        expected_kernel_A=1,
        expected_kernel_B=None,
        scalar_kind=kind,
        kernel_A=np.ones((n, 1)),
        scale_B=float(np.linalg.norm(mass_mid, ord=np.inf)),
    )
    if not constrained:
        return pencil
    if boundary is None:
        boundary = boundary_mean_functional(mesh, element, kind)
    return reduce_by_constraint(pencil, boundary)


def dump_matrix(M, sink, label: str = "") -> None:
    """Write a symmetric matrix as plain text.

    The first line is a JSON header ``{"n": ..., "scalar_kind": ...}``
    (plus ``"label"`` when given).  Float matrices follow with one row per
    line; interval matrices write each entry as ``lo:hi``.  Values use 17
    significant digits so they read back exactly.
    """
    import json

    interval = isinstance(M, IntervalArray)
    header = {"n": int(M.shape[0]), "scalar_kind": "interval" if interval else "float"}
    if label:
        header["label"] = label
    sink.write(json.dumps(header) + "\n")
    if interval:
        for lo, hi in zip(M.lo, M.hi):
            sink.write(" ".join(f"{a:.17g}:{b:.17g}" for a, b in zip(lo, hi)) + "\n")
    else:
        for row in np.asarray(M):
            sink.write(" ".join(f"{a:.17g}" for a in row) + "\n")
