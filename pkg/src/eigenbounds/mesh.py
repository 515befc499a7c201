"""Reference simplices and their uniform refinement.

Vertex coordinates are kept exactly, as elements ``q + r*sqrt(3)`` of the
field Q(sqrt 3) with rational ``q`` and ``r``.  This covers every domain
used here (the equilateral-type triangles need ``sqrt(3)/2``) and is
closed under the midpoint and centroid constructions of refinement.
Coordinates are lowered to floats or to outward-rounded intervals on
demand.

Examples
--------
>>> m = refine(reference_domain("K1"), 2)
>>> m.num_cells, round(m.h, 12)
(16, 0.353553390593)
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import ConfigurationError, GeometryError
from .interval import Interval, IntervalArray

__all__ = [
    "Exact",
    "Point",
    "SimplicialMesh",
    "DOMAIN_NAMES",
    "reference_domain",
    "refine",
    "mesh_size",
]


class Exact:
    """Number ``q + r*sqrt(3)`` with rational ``q``, ``r``."""

    __slots__ = ("q", "r")

    def __init__(self, q=0, r=0):
        self.q = Fraction(q)
        self.r = Fraction(r)

    @staticmethod
    def _coerce(x):
        if isinstance(x, Exact):
            return x
        if isinstance(x, (int, Fraction)):
            return Exact(x)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Exact(self.q + o.q, self.r + o.r)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Exact(self.q - o.q, self.r - o.r)

    def __rsub__(self, other):
        return Exact._coerce(other) - self

    def __neg__(self):
        return Exact(-self.q, -self.r)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Exact(self.q * o.q + 3 * self.r * o.r, self.q * o.r + self.r * o.q)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Exact(self.q / other, self.r / other)
        return NotImplemented

    def sign(self) -> int:
        """Exact sign, decided by comparing ``q**2`` with ``3 r**2``."""
        sq = (self.q > 0) - (self.q < 0)
        sr = (self.r > 0) - (self.r < 0)
        if sr == 0:
            return sq
        if sq == 0 or sq == sr:
            return sr
        # opposite signs: |q| vs |r| sqrt 3
        d = self.q * self.q - 3 * self.r * self.r
        return sq if d > 0 else (sr if d < 0 else 0)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.q == o.q and self.r == o.r

    def __hash__(self):
        return hash((self.q, self.r))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    @property
    def is_rational(self) -> bool:
        return self.r == 0

    def __float__(self):
        if self.r == 0:
            return float(self.q)
        return float(self.q) + float(self.r) * math.sqrt(3.0)

    def to_interval(self) -> Interval:
        if self.r == 0:
            return Interval.from_value(self.q)
        return Interval.from_value(self.q) + Interval.from_value(self.r) * _SQRT3

    @property
    def tag(self) -> str:
        """Human-readable exact form, e.g. ``"sqrt3/2"`` or ``"1/4"``."""
        parts = []
        if self.q != 0 or self.r == 0:
            parts.append(str(self.q))
        if self.r != 0:
            num, den = self.r.numerator, self.r.denominator
            s = "sqrt3" if abs(num) == 1 else f"{abs(num)}*sqrt3"
            if den != 1:
                s += f"/{den}"
            sign = "-" if num < 0 else ("+" if parts else "")
            parts.append(f"{sign}{s}" if not parts else f" {sign} {s}")
        return "".join(parts)

    def __repr__(self):
        return f"Exact({self.tag})"


_SQRT3 = Interval(3.0, 3.0).sqrt()
SQRT3_HALF = Exact(0, Fraction(1, 2))


@dataclass(frozen=True)
class Point:
    """Vertex with exact coordinates in Q(sqrt 3)."""

    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(c if isinstance(c, Exact) else Exact(c) for c in self.coords))
        if len(self.coords) not in (2, 3):
            raise GeometryError(f"points must have 2 or 3 coordinates, got {len(self.coords)}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(c.tag for c in self.coords)

    def to_float(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.coords)


def _midpoint(a: tuple, b: tuple) -> tuple:
    return tuple((x + y) / 2 for x, y in zip(a, b))


def _sqdist(a: tuple, b: tuple) -> Exact:
    s = Exact(0)
    for x, y in zip(a, b):
        t = x - y
        s = s + t * t
    return s


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    """Conforming simplicial mesh of a reference domain.

    Attributes
    ----------
    dim : int
        2 (triangles) or 3 (tetrahedra).
    points : tuple of tuple of Exact
        Exact vertex coordinates.
    cells : ndarray, shape (ncells, dim+1)
        Vertex indices, every cell positively oriented.
    level : int
        Number of uniform refinements applied to the initial domain.
    name : str
        Domain identifier ("K1", "T3", ...).
    """

    dim: int
    points: tuple
    cells: np.ndarray
    level: int = 0
    name: str = ""

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int64)
        if cells.ndim != 2 or cells.shape[1] != self.dim + 1:
            raise GeometryError("cells must have dim+1 vertices each")
        cells = _orient(np.array([[float(c) for c in p] for p in self.points]), cells)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    # -- basic sizes ----------------------------------------------------------
    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_vertices(self) -> int:
        return len(self.points)

    @property
    def vertices(self) -> tuple[Point, ...]:
        return tuple(Point(p) for p in self.points)

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Float vertex coordinates, shape (nverts, dim)."""
        x = np.array([[float(c) for c in p] for p in self.points])
        x.setflags(write=False)
        return x

    @cached_property
    def coordinate_enclosure(self) -> IntervalArray:
        """Interval vertex coordinates, exact where representable."""
        lo = np.empty((self.num_vertices, self.dim))
        hi = np.empty_like(lo)
        for i, p in enumerate(self.points):
            for j, c in enumerate(p):
                iv = c.to_interval()
                lo[i, j], hi[i, j] = iv.lo, iv.hi
        return IntervalArray(lo, hi)

    @property
    def is_rational(self) -> bool:
        return all(c.is_rational for p in self.points for c in p)

    # -- topology ---------------------------------------------------------------
    @cached_property
    def _facet_data(self):
        d = self.dim
        local = [tuple(j for j in range(d + 1) if j != i) for i in range(d + 1)]
        raw = np.sort(np.stack([self.cells[:, loc] for loc in local], axis=1), axis=2)
        flat = raw.reshape(-1, d)
        facets, inverse, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
        cell_facets = inverse.reshape(self.num_cells, d + 1)
        if counts.max() > 2:
            raise GeometryError("non-conforming mesh: facet shared by more than two cells")
        for arr in (facets, cell_facets, counts):
            arr.setflags(write=False)
        return facets, cell_facets, counts == 1

    @property
    def facets(self) -> np.ndarray:
        """Sorted vertex tuples of all facets, shape (nfacets, dim)."""
        return self._facet_data[0]

    @property
    def cell_facets(self) -> np.ndarray:
        """``cell_facets[c, i]`` is the facet of cell ``c`` opposite its local vertex ``i``."""
        return self._facet_data[1]

    @property
    def boundary_facets(self) -> np.ndarray:
        """Boolean flag per facet."""
        return self._facet_data[2]

    @property
    def num_facets(self) -> int:
        return len(self.facets)

    @cached_property
    def _edge_data(self):
        local = list(combinations(range(self.dim + 1), 2))
        raw = np.sort(np.stack([self.cells[:, list(p)] for p in local], axis=1), axis=2)
        edges, inverse = np.unique(raw.reshape(-1, 2), axis=0, return_inverse=True)
        cell_edges = inverse.reshape(self.num_cells, len(local))
        edges.setflags(write=False)
        cell_edges.setflags(write=False)
        return edges, cell_edges

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def cell_edges(self) -> np.ndarray:
        """Edge index per local vertex pair, pairs in ``itertools.combinations`` order."""
        return self._edge_data[1]

    # -- geometry ---------------------------------------------------------------
    @cached_property
    def volumes(self) -> np.ndarray:
        x = self.coordinates[self.cells]
        jac = x[:, 1:, :] - x[:, :1, :]
        v = np.linalg.det(jac) / math.factorial(self.dim)
        v.setflags(write=False)
        return v

    @cached_property
    def _diameter_squared(self) -> Exact:
        x = self.coordinates
        e = self.edges
        l2 = np.sum((x[e[:, 0]] - x[e[:, 1]]) ** 2, axis=1)
        cand = np.flatnonzero(l2 >= l2.max() * (1 - 1e-9))
        return max(_sqdist(self.points[e[i, 0]], self.points[e[i, 1]]) for i in cand)

    @property
    def h_squared(self) -> Exact:
        """Exact square of the mesh size."""
        return self._diameter_squared

    @cached_property
    def h_enclosure(self) -> Interval:
        return self._diameter_squared.to_interval().sqrt()

    @property
    def h(self) -> float:
        """Mesh size: largest cell diameter."""
        return math.sqrt(float(self._diameter_squared))

    # -- export -----------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "vertices": [list(p) for p in self.coordinates.tolist()],
            "cells": self.cells.tolist(),
            "level": self.level,
            "h": self.h,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _orient(x: np.ndarray, cells: np.ndarray) -> np.ndarray:
    jac = x[cells[:, 1:]] - x[cells[:, :1]]
    det = np.linalg.det(jac)
    scale = np.max(np.abs(jac), axis=(1, 2)) ** jac.shape[1]
    if np.any(np.abs(det) <= 1e-12 * scale):
        raise GeometryError("degenerate cell (zero volume)")
    cells = cells.copy()
    neg = det < 0
    cells[neg, -2], cells[neg, -1] = cells[neg, -1], cells[neg, -2].copy()
    return cells


def mesh_size(mesh: SimplicialMesh, mode: str = "fast") -> float:
    """Largest cell diameter; an upper bound for it in ``"rigorous"`` mode."""
    if mode == "rigorous":
        return mesh.h_enclosure.hi
    return mesh.h


# ---------------------------------------------------------------------------
# reference domains
# ---------------------------------------------------------------------------

_H = Fraction(1, 2)
_Q = Fraction(1, 4)
_P3D = {
    1: (0, 0, 0),
    2: (1, 0, 0),
    3: (0, 1, 0),
    4: (0, 0, 1),
    5: (1, 1, 1),
    6: (_Q, _Q, _Q),  # centroid of p1 p2 p3 p4
    7: (_H, _H, _H),  # centroid of p2 p3 p4 p5
}
_TETS = {"T1": (1, 2, 3, 4), "T2": (2, 3, 4, 5), "T3": (1, 2, 3, 6), "T4": (2, 3, 4, 6), "T5": (2, 3, 4, 7)}

DOMAIN_NAMES = ("K1", "K2", "K3", "T1", "T2", "T3", "T4", "T5", "SQUARE")


def reference_domain(name: str) -> SimplicialMesh:
    """Initial mesh of a named reference domain.

    ``K1``-``K3`` are single triangles, ``T1``-``T5`` single tetrahedra and
    ``SQUARE`` is the unit square cut along the diagonal from (0,0) to (1,1).
    """
    key = str(name).upper()
    if key == "K1":
        pts = [(0, 0), (1, 0), (0, 1)]
        cells = [[0, 1, 2]]
    elif key == "K2":
        pts = [(0, 0), (1, 0), (_H, SQRT3_HALF)]
        cells = [[0, 1, 2]]
    elif key == "K3":
        pts = [(0, 0), (_H, 0), (_H, SQRT3_HALF)]
        cells = [[0, 1, 2]]
    elif key == "SQUARE":
        pts = [(0, 0), (1, 0), (1, 1), (0, 1)]
        cells = [[0, 1, 2], [0, 2, 3]]
    elif key in _TETS:
        pts = [_P3D[i] for i in _TETS[key]]
        cells = [[0, 1, 2, 3]]
    else:
        raise ConfigurationError(f"unknown domain {name!r}; expected one of {', '.join(DOMAIN_NAMES)}")
    points = tuple(tuple(c if isinstance(c, Exact) else Exact(c) for c in p) for p in pts)
    return SimplicialMesh(dim=len(points[0]), points=points, cells=np.array(cells), level=0, name=key)


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def refine(mesh: SimplicialMesh, times: int = 1) -> SimplicialMesh:
    """Uniform refinement applied ``times`` times.

    Triangles split into four through their edge midpoints.  Tetrahedra
    split into the four corner children plus four tetrahedra around the
    shortest diagonal of the inner octahedron (ties go to the diagonal with
    the lexicographically smallest vertex pair).
    """
    for _ in range(times):
        mesh = _refine_once(mesh)
    return mesh


def _refine_once(mesh: SimplicialMesh) -> SimplicialMesh:
    points = list(mesh.points)
    mid: dict[tuple[int, int], int] = {}

    def m(a, b):
        key = (a, b) if a < b else (b, a)
        idx = mid.get(key)
        if idx is None:
            idx = len(points)
            points.append(_midpoint(points[a], points[b]))
            mid[key] = idx
        return idx

    new_cells = []
    if mesh.dim == 2:
        for a, b, c in mesh.cells.tolist():
            ab, bc, ca = m(a, b), m(b, c), m(c, a)
            new_cells += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    else:
        for v in mesh.cells.tolist():
            x = {(i, j): m(v[i], v[j]) for i, j in combinations(range(4), 2)}
            x01, x02, x03, x12, x13, x23 = (x[p] for p in sorted(x))
            new_cells += [
                (v[0], x01, x02, x03),
                (x01, v[1], x12, x13),
                (x02, x12, v[2], x23),
                (x03, x13, x23, v[3]),
            ]
            opposite = [(x01, x23), (x02, x13), (x03, x12)]

            def rank(pair):
                p, q = pair
                return (_sqdist(points[p], points[q]), min(p, q), max(p, q))

            # exact comparison: squared lengths live in Q(sqrt 3)
            best = 0
            for i in (1, 2):
                ri, rb = rank(opposite[i]), rank(opposite[best])
                if ri[0] < rb[0] or (ri[0] == rb[0] and ri[1:] < rb[1:]):
                    best = i
            p, q = opposite[best]
            (a, a2), (b, b2) = [opposite[i] for i in range(3) if i != best]
            for e1, e2 in ((a, b), (b, a2), (a2, b2), (b2, a)):
                new_cells.append((p, q, e1, e2))
    return SimplicialMesh(
        dim=mesh.dim,
        points=tuple(points),
        cells=np.array(new_cells, dtype=np.int64),
        level=mesh.level + 1,
        name=mesh.name,
    )
