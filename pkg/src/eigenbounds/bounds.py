"""Two-sided eigenvalue bounds and enclosures of projection error constants.

Lower bounds come from the Crouzeix-Raviart (CR) discretisation:
a certified lower bound ``lambda_h`` of the discrete eigenvalue is mapped to
a lower bound of the exact one by

    lambda >= lambda_h / (1 + lambda_h * C_h**2),

where ``C_h`` is the explicit CR interpolation constant (0.1893 h in 2D,
0.3804 h in 3D, h the largest cell diameter).  Upper bounds come from the
conforming P2 discretisation by min-max.

For the constant ``C_k`` of the L2 projection onto polynomials of degree
``<= k``, ``C_k = lambda_1 ** -0.5`` where ``lambda_1`` is the smallest
eigenvalue of ``(grad u, grad v) = lambda (u - P_k u, v - P_k v)`` on
functions with zero boundary mean.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .assembly import (
    StiffnessMass,
    assemble,
    boundary_mean_functional,
    neumann_pencil,
    num_dofs,
    projection_pencil,
)
from .eigen import solve_pencil
from .errors import ConfigurationError
from .interval import Interval
from .mesh import DOMAIN_NAMES, SimplicialMesh, mesh_size, reference_domain, refine
from .rigor import search_lower_bound, search_upper_bound

__all__ = [
    "CR_CONSTANT_2D",
    "CR_CONSTANT_3D",
    "MODES",
    "RunConfig",
    "ConstantEnclosure",
    "AssemblyCache",
    "ch_constant",
    "liu_lower_bound",
    "constant_enclosure_pipeline",
    "neumann_pipeline",
    "table1",
    "table3",
    "TABLE1_DOMAINS",
    "TABLE3_DOMAINS",
]

CR_CONSTANT_2D = Fraction("0.1893")
CR_CONSTANT_3D = Fraction("0.3804")
MODES = ("fast", "rigorous")
TABLE1_DOMAINS = ("K1", "K2", "K3")
TABLE3_DOMAINS = ("T1", "T2", "T3", "T4", "T5")
TABLE_DEGREES = (0, 1, 2)


def _check_mode(mode):
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")


def ch_constant(dim: int, h: float, mode: str = "fast") -> float:
    """CR interpolation error constant ``C_h`` for mesh size ``h``.

    Rounded upward in rigorous mode.
    """
    _check_mode(mode)
    if dim == 2:
        c = CR_CONSTANT_2D
    elif dim == 3:
        c = CR_CONSTANT_3D
    else:
        raise ConfigurationError(f"dimension must be 2 or 3, got {dim}")
    if not h > 0:
        raise ConfigurationError("mesh size must be positive")
    if mode == "rigorous":
        return (Interval.from_value(c) * Interval.point(float(h))).hi
    return float(c) * float(h)


def liu_lower_bound(lambda_h_lo: float, C_h_hi: float, mode: str = "fast") -> float:
    """Lower bound ``lambda_h / (1 + lambda_h * C_h**2)`` of an exact eigenvalue.

    Increasing in ``lambda_h`` and decreasing in ``C_h``; rounded downward in
    rigorous mode.
    """
    _check_mode(mode)
    if lambda_h_lo < 0 or C_h_hi < 0:
        raise ConfigurationError("lambda_h and C_h must be non-negative")
    if lambda_h_lo == 0:
        return 0.0
    if C_h_hi == 0:
        return float(lambda_h_lo)  # exact, no rounding needed
    if mode == "rigorous":
        lam = Interval.point(float(lambda_h_lo))
        c = Interval.point(float(C_h_hi))
        # lambda/(1 + lambda c^2) = 1/(1/lambda + c^2) keeps lambda single-use
        return (1 / (1 / lam + c.square())).lo
    return lambda_h_lo / (1.0 + lambda_h_lo * C_h_hi * C_h_hi)


@dataclass(frozen=True)
class RunConfig:
    domain: str
    degree: int = 0
    refine_level: int = 3
    mode: str = "fast"
    output_format: str = "json"

    def __post_init__(self):
        if self.domain not in DOMAIN_NAMES:
            raise ConfigurationError(f"unknown domain {self.domain!r}")
        if self.degree < 0:
            raise ConfigurationError("degree must be >= 0")
        if self.refine_level < 0:
            raise ConfigurationError("refine level must be >= 0")
        _check_mode(self.mode)
        if self.output_format not in ("json", "csv", "md"):
            raise ConfigurationError(f"unknown output format {self.output_format!r}")


@dataclass
class ConstantEnclosure:
    """Enclosure ``[lo, hi]`` of a constant ``C_k`` or an eigenvalue ``lambda_k``.

    ``certified`` is true only in rigorous mode when every certification
    step succeeded.  ``lambda_lb``/``lambda_ub`` record the eigenvalue
    bounds the enclosure was built from.
    """

    domain: str
    quantity: str  # "C_k" or "lambda_k"
    k: int
    lo: float
    hi: float
    refine_level: int
    mode: str
    certified: bool
    h_used: float
    C_h_used: float
    wall_time_s: float = 0.0
    mesh_cells: int = 0
    dofs_cr: int = 0
    dofs_p2: int = 0
    lambda_lb: float = float("nan")
    lambda_ub: float = float("nan")
    kernel_dim: int | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def intersects(self, lo: float, hi: float) -> bool:
        return self.lo <= hi and lo <= self.hi

    def to_record(self) -> dict:
        """Flat result record (the JSON schema)."""
        return {
            "domain": self.domain,
            "quantity": self.quantity,
            "k": self.k,
            "lo": self.lo,
            "hi": self.hi,
            "certified": self.certified,
            "mode": self.mode,
            "refine_level": self.refine_level,
            "h": self.h_used,
            "C_h": self.C_h_used,
            "wall_time_s": self.wall_time_s,
            "mesh_cells": self.mesh_cells,
            "dofs_cr": self.dofs_cr,
            "dofs_p2": self.dofs_p2,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ConstantEnclosure":
        return cls(
            domain=rec["domain"],
            quantity=rec["quantity"],
            k=int(rec["k"]),
            lo=float(rec["lo"]),
            hi=float(rec["hi"]),
            refine_level=int(rec["refine_level"]),
            mode=rec["mode"],
            certified=bool(rec["certified"]),
            h_used=float(rec["h"]),
            C_h_used=float(rec["C_h"]),
            wall_time_s=float(rec["wall_time_s"]),
            mesh_cells=int(rec["mesh_cells"]),
            dofs_cr=int(rec["dofs_cr"]),
            dofs_p2=int(rec["dofs_p2"]),
        )


class AssemblyCache:
    """Meshes, stiffness/mass matrices and boundary functionals keyed by setup.

    Table runs reuse one assembly per (domain, level, element, kind) across
    all degrees k.
    """

    def __init__(self):
        self._meshes: dict = {}
        self._forms: dict = {}
        self._boundary: dict = {}

    def mesh(self, domain: str, level: int) -> SimplicialMesh:
        key = (domain, level)
        if key not in self._meshes:
            self._meshes[key] = refine(reference_domain(domain), level)
        return self._meshes[key]

    def forms(self, domain: str, level: int, element: str, kind: str) -> StiffnessMass:
        key = (domain, level, element, kind)
        if key not in self._forms:
            self._forms[key] = assemble(self.mesh(domain, level), element, kind)
        return self._forms[key]

    def boundary(self, domain: str, level: int, element: str, kind: str):
        key = (domain, level, element, kind)
        if key not in self._boundary:
            self._boundary[key] = boundary_mean_functional(self.mesh(domain, level), element, kind)
        return self._boundary[key]


def _kind(mode):
    return "interval" if mode == "rigorous" else "float"


def _inv_sqrt_bounds(lam_ub: float, lam_lb: float, mode: str):
    """``[lam_ub**-0.5, lam_lb**-0.5]`` rounded outward in rigorous mode.

    A missing upper bound (``inf``) gives 0 and a missing lower bound
    (``<= 0``) gives ``inf``.
    """
    rigorous = mode == "rigorous"
    if math.isinf(lam_ub):
        lo = 0.0
    else:
        lo = (1 / Interval.point(lam_ub).sqrt()).lo if rigorous else 1.0 / math.sqrt(lam_ub)
    if lam_lb <= 0:
        return lo, math.inf
    return lo, (1 / Interval.point(lam_lb).sqrt()).hi if rigorous else 1.0 / math.sqrt(lam_lb)


def constant_enclosure_pipeline(config: RunConfig, cache: AssemblyCache | None = None) -> ConstantEnclosure:
    """Enclose ``C_k`` on ``config.domain`` for ``k = config.degree``.

    Lower eigenvalue bound: constrained CR pencil, certified discrete
    eigenvalue, then :func:`liu_lower_bound`.  Upper bound: constrained P2
    pencil, certified Ritz value.  In fast mode no certification is
    attempted and the float eigenvalues are used directly.
    """
    t0 = time.perf_counter()
    cache = cache or AssemblyCache()
    mode, kind, k = config.mode, _kind(config.mode), config.degree
    mesh = cache.mesh(config.domain, config.refine_level)
    h = mesh_size(mesh, mode)
    C_h = ch_constant(mesh.dim, h, mode)
    notes = []

    cr = projection_pencil(
        mesh, "CR", k, kind,
        forms=cache.forms(config.domain, config.refine_level, "CR", kind),
        boundary=cache.boundary(config.domain, config.refine_level, "CR", kind),
    )
    cr_spec = solve_pencil(cr, 1)
    p2 = projection_pencil(
        mesh, "P2", k, kind,
        forms=cache.forms(config.domain, config.refine_level, "P2", kind),
        boundary=cache.boundary(config.domain, config.refine_level, "P2", kind),
    )
    p2_spec = solve_pencil(p2, 1)
    # a coarse space may consist of Ker(N) only; no bound from that side then
    has_cr, has_p2 = len(cr_spec.values) > 0, len(p2_spec.values) > 0
    lam_h = float(cr_spec.values[0]) if has_cr else 0.0
    lam_p2 = float(p2_spec.values[0]) if has_p2 else math.inf
    if not has_cr:
        notes.append("CR space has no positive eigenvalue")
    if not has_p2:
        notes.append("P2 space has no positive eigenvalue")

    certified = False
    lam_h_lo, lam_ub = lam_h, lam_p2
    if mode == "rigorous" and has_cr and has_p2:
        sig_lo, _ = search_lower_bound(cr, 1, lam_h)
        sig_hi, _ = search_upper_bound(p2, 1, lam_p2, p2_spec.vectors)
        if sig_lo is None:
            notes.append("CR lower bound not certified")
        else:
            lam_h_lo = float(sig_lo)
        if sig_hi is None:
            notes.append("P2 upper bound not certified")
        else:
            lam_ub = float(sig_hi)
        certified = sig_lo is not None and sig_hi is not None
    lam_lb = liu_lower_bound(lam_h_lo, C_h, mode)
    if lam_lb > lam_ub:
        notes.append("lower bound exceeds upper bound")
        certified = False
        lam_lb, lam_ub = min(lam_lb, lam_ub), max(lam_lb, lam_ub)
    lo, hi = _inv_sqrt_bounds(lam_ub, lam_lb, mode)
    return ConstantEnclosure(
        domain=config.domain,
        quantity="C_k",
        k=k,
        lo=lo,
        hi=hi,
        refine_level=config.refine_level,
        mode=mode,
        certified=certified,
        h_used=h,
        C_h_used=C_h,
        wall_time_s=time.perf_counter() - t0,
        mesh_cells=mesh.num_cells,
        dofs_cr=num_dofs(mesh, "CR"),
        dofs_p2=num_dofs(mesh, "P2"),
        lambda_lb=lam_lb,
        lambda_ub=lam_ub,
        kernel_dim=getattr(cr_spec, "kernel_count", None),
        notes=notes,
    )


def neumann_pipeline(config: RunConfig, count: int = 2, cache: AssemblyCache | None = None) -> list[ConstantEnclosure]:
    """Enclosures of the ``count`` smallest Neumann Laplacian eigenvalues.

    The first eigenvalue is the structural zero (constants) and is reported
    as ``[0, 0]`` with ``kernel_dim`` set to the number of eigenvalues found
    numerically at zero.  In rigorous mode the second eigenvalue's certified
    positive lower bound also proves that the kernel is one-dimensional.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    t0 = time.perf_counter()
    cache = cache or AssemblyCache()
    mode, kind = config.mode, _kind(config.mode)
    level = config.refine_level
    mesh = cache.mesh(config.domain, level)
    h = mesh_size(mesh, mode)
    C_h = ch_constant(mesh.dim, h, mode)
    cr = neumann_pencil(mesh, "CR", kind, forms=cache.forms(config.domain, level, "CR", kind))
    p2 = neumann_pencil(mesh, "P2", kind, forms=cache.forms(config.domain, level, "P2", kind))
    # always treat lambda_2 as well: its certified positive lower bound is
    # what proves the kernel one-dimensional
    available = min(max(count, 2), cr.n, p2.n)
    cr_spec = solve_pencil(cr, available)
    p2_spec = solve_pencil(p2, available)
    zero_count = cr_spec.zero_count

    common = dict(
        domain=config.domain,
        quantity="lambda_k",
        refine_level=level,
        mode=mode,
        h_used=h,
        C_h_used=C_h,
        mesh_cells=mesh.num_cells,
        dofs_cr=cr.n,
        dofs_p2=p2.n,
        kernel_dim=zero_count,
    )
    out = []
    for j in range(1, available + 1):
        notes = []
        lam_h = float(cr_spec.values[j - 1])
        lam_p2 = float(p2_spec.values[j - 1])
        if j <= zero_count:
            # structural kernel: the exact eigenvalue is 0
            rec = ConstantEnclosure(k=j, lo=0.0, hi=0.0, certified=False, lambda_lb=0.0, lambda_ub=0.0, notes=notes, **common)
            out.append(rec)
            continue
        certified = False
        lam_h_lo, lam_ub = max(lam_h, 0.0), lam_p2
        if mode == "rigorous":
            sig_lo, _ = search_lower_bound(cr, j, lam_h, deflation=cr_spec.vectors[:, : j - 1])
            sig_hi, _ = search_upper_bound(p2, j, lam_p2, p2_spec.vectors[:, :j])
            if sig_lo is None:
                notes.append("CR lower bound not certified")
            else:
                lam_h_lo = float(sig_lo)
            if sig_hi is None:
                notes.append("P2 upper bound not certified")
            else:
                lam_ub = float(sig_hi)
            certified = sig_lo is not None and sig_hi is not None
        lam_lb = liu_lower_bound(lam_h_lo, C_h, mode)
        if lam_lb > lam_ub:
            notes.append("lower bound exceeds upper bound")
            certified = False
            lam_lb, lam_ub = lam_ub, lam_lb
        out.append(
            ConstantEnclosure(k=j, lo=lam_lb, hi=lam_ub, certified=certified, lambda_lb=lam_lb, lambda_ub=lam_ub, notes=notes, **common)
        )
    if mode == "rigorous" and len(out) > 1 and out[0].hi == 0.0:
        out[0].certified = bool(out[1].certified and out[1].lo > 0)
    out = out[:count]
    elapsed = time.perf_counter() - t0
    for rec in out:
        rec.wall_time_s = elapsed
    return out


def _table(domains, refine_level, mode, degrees=TABLE_DEGREES, cache=None):
    cache = cache or AssemblyCache()
    rows = []
    for dom in domains:
        for k in degrees:
            rows.append(constant_enclosure_pipeline(RunConfig(dom, k, refine_level, mode), cache))
    return rows


def table1(refine_level: int = 5, mode: str = "rigorous", degrees=TABLE_DEGREES, cache=None) -> list[ConstantEnclosure]:
    """``C_k`` enclosures on the three reference triangles, row-major by domain."""
    return _table(TABLE1_DOMAINS, refine_level, mode, degrees, cache)


def table3(refine_level: int = 3, mode: str = "rigorous", degrees=TABLE_DEGREES, cache=None) -> list[ConstantEnclosure]:
    """``C_k`` enclosures on the five reference tetrahedra, row-major by domain."""
    return _table(TABLE3_DOMAINS, refine_level, mode, degrees, cache)
