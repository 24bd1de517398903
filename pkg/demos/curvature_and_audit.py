"""Curvature of B^(lambda) three ways, then the formula audit.

Run with ``python3 demos/curvature_and_audit.py``.
"""

import numpy as np

from g2kernels.automorphisms import symmetrize
from g2kernels.curvature import (
    bergman_curvature,
    bergman_curvature_on_lambda,
    curvature_numeric,
    det_curvature,
    det_curvature_methods,
)
from g2kernels.invariants import audit
from g2kernels.kernels import WeightedBergman

np.set_printoptions(precision=6, suppress=True)

lam, r = 2.0, 0.5
print("closed forms at (r, 0):\n", bergman_curvature_on_lambda(lam, r).entries.real)
print("finite differences:\n", curvature_numeric(WeightedBergman(lam), (r, 0)).entries.real)

# away from the fundamental set: closed form plus transport
u = symmetrize(0.2 + 0.5j, -0.3)
print("transported:\n", bergman_curvature(lam, u).entries)
print("finite differences:\n", curvature_numeric(WeightedBergman(lam), u).entries)

print("\ndet of the curvature of B^(1) at the origin")
for method in det_curvature_methods:
    print(f"  {method:16s} {det_curvature(1.0, (0, 0), method):.6f}")

print("\naudit, lambda = 1")
for row in audit(1.0, [0.0, 0.4, 0.8]):
    print(f"  {row.formula:18s} r={row.r:.1f}  published {row.paper_value:12.6g}  "
          f"oracle {row.oracle_value:12.6g}  gap {row.relative_gap:.1e}")
