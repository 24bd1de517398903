"""Quasi-invariance of the weighted Bergman kernel, and what breaks it.

Run with ``python3 demos/quasi_invariance.py``.
"""

from g2kernels.automorphisms import symmetrize
from g2kernels.homogeneity import (
    MultiplierSpec,
    default_multiplier,
    factorization_trials,
    quasi_invariance_trials,
    reconstruct_from_fundamental,
)
from g2kernels.kernels import WeightedBergman, as_kernel_function, eval_kernel

for lam in (0.5, 1.0, 2.5):
    spec = WeightedBergman(lam)
    mult = default_multiplier(spec)
    good = quasi_invariance_trials(spec, mult, n=50, seed=0)
    bad = quasi_invariance_trials(spec, MultiplierSpec(lam / 2), n=50, seed=0)
    print(f"lambda={lam}: kappa={mult.kappa:g} residual {good.max_relative_residual:.1e}, "
          f"kappa={lam / 2:g} residual {bad.max_relative_residual:.1e}")

# The factorization test needs no multiplier.  A sum of two kernels with
# different multipliers fails it.
f1 = as_kernel_function(WeightedBergman(1.0))
f2 = as_kernel_function(WeightedBergman(2.0))


def summed(u1, u2, v1, v2):
    return f1(u1, u2, v1, v2) + f2(u1, u2, v1, v2)


print("B1 + B2 factorization residual:", f"{factorization_trials(summed, n=20).max_relative_residual:.2f}")

# The diagonal on the fundamental set {(r, 0)} determines the kernel everywhere.
spec = WeightedBergman(2.0)
u = symmetrize(0.3 + 0.4j, -0.2 + 0.1j)
val = reconstruct_from_fundamental(lambda r: eval_kernel(spec, (r, 0), (r, 0)).real, default_multiplier(spec), u)
print(f"reconstructed K(u, u) = {val:.15f}, direct = {eval_kernel(spec, u, u).real:.15f}")
