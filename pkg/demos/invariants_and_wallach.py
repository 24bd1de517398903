"""Module invariants, classification, the Kaehler-Einstein test and a Wallach scan.

Run with ``python3 demos/invariants_and_wallach.py``.
"""

from g2kernels.invariants import classify, cross_family_quadratic, ke_test, parse_module, signature
from g2kernels.psd import SampleSet, wallach_probe

for text in ("w:l=2,nu=1", "w:l=1,nu=2", "d:l=1,nu=0"):
    s = signature(parse_module(text))
    print(f"{text:12s} pair {s.closed_pair}  fitted exponent {s.numeric_diagonal_exponent:.4f}  "
          f"references {s.reference_exponents}")

print(classify(parse_module("w:l=2,nu=1"), parse_module("w:l=1,nu=2")))
print(classify(parse_module("w:l=2,nu=1"), parse_module("d:l=1,nu=0")))
q = cross_family_quadratic(1.0)
print(f"cross-family quadratic at nu=1: {q.coefficients}, discriminant {q.discriminant:g}")

for lam in (1.0, 2.0):
    rep = ke_test(lam, [(0.2, 0.0), (0.6, 0.0)])
    print(f"KE test lambda={lam}: spread {rep.max_ratio_spread:.3f} -> {rep.verdict}")

# psd verdicts are evidence only
sample = SampleSet.random(10, seed=7)
for nu, rep in wallach_probe(2.0, [0.25, 0.5, 1.0, 1.5], sample):
    print(f"(B^(2))^{nu:<4g} min_eig {rep.min_eig: .3e}  {rep.verdict}")
