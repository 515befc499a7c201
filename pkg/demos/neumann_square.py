"""Two-sided bounds for the first nonzero Neumann eigenvalue of the unit square.

The lower bound comes from the nonconforming CR eigenvalue, certified by
interval inertia counts and corrected with the explicit constant C_h.
The upper bound is a certified conforming P2 eigenvalue.
"""

import math
import sys

from eigenbounds import RunConfig, neumann_pipeline

level = int(sys.argv[1]) if len(sys.argv) > 1 else 4
rows = neumann_pipeline(RunConfig("SQUARE", refine_level=level, mode="rigorous"), count=3)
for r in rows:
    print(f"lambda_{r.k}: [{r.lo:.6f}, {r.hi:.6f}] certified={r.certified}")
print(f"kernel dimension {rows[0].kernel_dim}; exact lambda_2 = lambda_3 = pi^2 = {math.pi ** 2:.6f}")
