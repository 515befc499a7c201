"""Walk through the smallest possible case: one right triangle.

The Crouzeix-Raviart Neumann pencil on the triangle with legs 1 has the
spectrum {0, 12, 36}.  Feeding the eigenvalue 12 and the explicit
interpolation constant into the lower-bound formula gives a certified
lower bound for the exact second eigenvalue pi^2.
"""

import math

from eigenbounds import (
    ch_constant,
    liu_lower_bound,
    mesh_size,
    neumann_pencil,
    reference_domain,
    solve_pencil,
)

tri = reference_domain("K1")
print("vertices:", [tuple(float(c) for c in p.coords) for p in tri.vertices])

spec = solve_pencil(neumann_pencil(tri, "CR"))
print("discrete spectrum:", spec.values.round(12))

h = mesh_size(tri, "rigorous")
C = ch_constant(2, h, "rigorous")
lb = liu_lower_bound(spec.values[1], C, "rigorous")
print(f"h = {h:.6f}, C_h = {C:.6f}")
print(f"certified lower bound {lb:.6f} <= pi^2 = {math.pi ** 2:.6f}")
