"""How large must the constant in the contour eigenvalue bound be?

The contour-based eigenvalue bound has the form C * g * (2 delta)^p / (1 - 2 delta)
with an unspecified constant C for p >= 2.  The package defaults to the
safe choice C = 2d.  This script measures the smallest constant that
would have sufficed on random problems, i.e. the maximum over instances
of  |lambda_hat - partial sum| * (1 - 2 delta) / (g (2 delta)^p),  and
compares it with 1/2, a value suggested in the literature.

Run:  python3 demos/06_contour_constant.py [instances]
"""

import sys

import numpy as np

from perturbseries.oracles import exact_perturbed
from perturbseries.series import delta, eigenvalue_coefficients
from perturbseries.verify import random_instance

count = int(sys.argv[1]) if len(sys.argv) > 1 else 300
worst = np.zeros(7)
for i in range(count):
    gen = random_instance(77, i, d=12, target=(0.05, 0.2, 0.35, 0.45)[i % 4])
    inst, j = gen.inst, gen.j
    rep = delta(inst, j)
    lam_hat = exact_perturbed(inst).eigenvalue(j)
    lam = eigenvalue_coefficients(inst, j, 7)
    for p in range(2, 8):
        err = abs(lam_hat - lam[:p].sum())
        scale = rep.gap * (2 * rep.delta) ** p / (1 - 2 * rep.delta)
        worst[p - 1] = max(worst[p - 1], err / scale)

print(f"{count} random instances, d = 12\n")
print(" p   smallest sufficient C")
for p in range(2, 8):
    print(f" {p}   {worst[p - 1]:.4f}")
print(f"\nlargest over p: {worst.max():.4f}  (compare 1/2; package default 2d = 24)")
