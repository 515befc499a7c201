"""Enclosures of C_0 on the right triangle under uniform refinement.

The exact value is 1/pi: reflecting the triangle across its hypotenuse
gives the unit square, whose first nonzero Neumann eigenvalue is pi^2.
Each level should contain 1/pi and be narrower than the one before.
"""

import math
import sys

from eigenbounds import RunConfig, constant_enclosure_pipeline
from eigenbounds.bounds import AssemblyCache

top = int(sys.argv[1]) if len(sys.argv) > 1 else 4
cache = AssemblyCache()
print(f"{'level':>5} {'lo':>12} {'hi':>12} {'width':>10} {'cert':>5} {'time':>6}")
for level in range(1, top + 1):
    e = constant_enclosure_pipeline(RunConfig("K1", 0, level, "rigorous"), cache)
    print(f"{level:5d} {e.lo:12.8f} {e.hi:12.8f} {e.width:10.2e} {str(e.certified):>5} {e.wall_time_s:6.1f}")
print(f"1/pi = {1 / math.pi:.8f}")
