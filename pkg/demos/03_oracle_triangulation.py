"""Four independent routes to the same series coefficient.

For one random problem the order-n projector coefficient is computed by
(a) explicit enumeration over index compositions, (b) a truncated
polynomial recursion in the eigenbasis, (c) numerical contour integration
of resolvent products, and (d) Richardson-extrapolated finite differences
of the exact projector along Sigma + tE.  The remainder identity, which
expresses the truncation error through perturbed quantities, is checked
as well.

Run:  python3 demos/03_oracle_triangulation.py
"""

import numpy as np

from perturbseries.oracles import (
    contour_series_coefficient,
    finite_difference_coefficient,
    verify_remainder_identity,
)
from perturbseries.series import delta, series_coefficient_projection
from perturbseries.verify import random_instance

gen = random_instance(seed=11, index=0, d=10, target=0.25)
inst, j = gen.inst, gen.j
print(f"d = {inst.dim}, j = {j}, delta = {delta(inst, j).delta:.3f}\n")

print(f"{'n':>2} {'||P^(n)||':>11} {'enum-gen':>10} {'contour':>10} {'fin. diff':>10}  contour nodes")
for n in range(1, 6):
    gen_c = series_coefficient_projection(inst, j, n, method="generating")
    enum_c = series_coefficient_projection(inst, j, n, method="enumerate")
    cont = contour_series_coefficient(inst, j, n)
    fd = (f"{np.abs(finite_difference_coefficient(inst, j, n) - gen_c).max():10.1e}"
          if n <= 3 else f"{'-':>10}")
    print(f"{n:>2} {np.linalg.norm(gen_c):11.3e} {np.abs(enum_c - gen_c).max():10.1e} "
          f"{np.abs(cont.matrix - gen_c).max():10.1e} {fd}  {cont.nodes}")

print("\nRemainder identity (truncated at 40 composition levels):")
for p in (1, 2, 3, 4):
    r = verify_remainder_identity(inst, j, p, K=40)
    print(f"  p={p}: discrepancy {r.lhs:.1e}  allowed {r.rhs:.1e} + 1e-10  -> {'pass' if r.passed else 'FAIL'}")
print("\nThe algebraic paths agree to rounding; the contour rule converges")
print("spectrally; finite differences are limited by the step-size tradeoff.")
