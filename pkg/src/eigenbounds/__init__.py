"""Certified eigenvalue bounds for bilinear-form eigenproblems.

Crouzeix-Raviart finite elements with an explicit a priori error constant
give guaranteed lower bounds, conforming P2 elements give upper bounds,
and verified inertia counting makes both rigorous.  The main application
is enclosing the error constants of L2 projections onto polynomials on
reference triangles and tetrahedra.
"""
from .assembly import (
    Case,
    Pencil,
    assemble_cr,
    assemble_p2,
    assemble_projection_form,
    boundary_mean_functional,
    neumann_pencil,
    projection_pencil,
    reduce_by_constraint,
)
from .bounds import (
    ConstantEnclosure,
    RunConfig,
    ch_constant,
    constant_enclosure_pipeline,
    liu_lower_bound,
    neumann_pipeline,
    table1,
    table3,
)
from .eigen import float_inertia, solve_definite_pencil, solve_pencil, solve_reversed_pencil
from .errors import (
    ConfigurationError,
    ConstraintError,
    EigenBoundsError,
    GeometryError,
    IntervalDomainError,
    PencilShapeError,
)
from .interval import Interval, IntervalArray
from .mesh import SimplicialMesh, mesh_size, reference_domain, refine
from .rigor import certify_lower_bound, certify_upper_bound, verified_inertia

__all__ = [
    "Case",
    "Pencil",
    "assemble_cr",
    "assemble_p2",
    "assemble_projection_form",
    "boundary_mean_functional",
    "neumann_pencil",
    "projection_pencil",
    "reduce_by_constraint",
    "ConstantEnclosure",
    "RunConfig",
    "ch_constant",
    "constant_enclosure_pipeline",
    "liu_lower_bound",
    "neumann_pipeline",
    "table1",
    "table3",
    "float_inertia",
    "solve_definite_pencil",
    "solve_pencil",
    "solve_reversed_pencil",
    "ConfigurationError",
    "ConstraintError",
    "EigenBoundsError",
    "GeometryError",
    "IntervalDomainError",
    "PencilShapeError",
    "Interval",
    "IntervalArray",
    "SimplicialMesh",
    "mesh_size",
    "reference_domain",
    "refine",
    "certify_lower_bound",
    "certify_upper_bound",
    "verified_inertia",
]

__version__ = "0.1.0"
