"""Cluster projectors and the sign of the series.

For a doubly degenerate eigenvalue the series is built from the cluster
projector and the cluster's reduced resolvent.  Writing the sign as the
global factor (-1)^(n+1) reproduces the perturbed cluster projector.  The
alternative per-term factor (-1)^(k_1 + ... + k_{n+1}) equals (-1)^n on
every term (the indices always sum to n), so it flips the whole series
and converges to minus the projector.  This script shows both.

Run:  python3 demos/05_grouped_sign_convention.py
"""

import numpy as np

from perturbseries.series import multiple_group_series
from perturbseries.spectral import decompose_symmetric, group_eigenvalues

Sigma = np.diag([3.0, 2.0, 2.0, 0.5])
rng = np.random.default_rng(5)
G = rng.standard_normal((4, 4))
E = 0.08 * (G + G.T) / 2

groups = group_eigenvalues(decompose_symmetric(Sigma))
for g in groups.groups:
    print(f"group {g.index}: eigenvalue {g.value}, members {g.members}, gap {g.gap}")

w, V = np.linalg.eigh(Sigma + E)
V = V[:, ::-1][:, 1:3]
P_hat = V @ V.T

print("\n p   standard error   alternative error   distance of alternative from -P_hat   (4 delta)^p")
for p in range(1, 7):
    std = multiple_group_series(groups, 2, E, p, convention="standard")
    alt = multiple_group_series(groups, 2, E, p, convention="index_parity")
    print(f" {p}   {np.linalg.norm(P_hat - std.partial_sum):14.3e}   "
          f"{np.linalg.norm(P_hat - alt.partial_sum):17.3e}   "
          f"{np.linalg.norm(P_hat + alt.partial_sum):37.3e}   {std.bound_factor:11.3e}")
print("\nThe standard sign converges to the perturbed cluster projector;")
print("the alternative converges to its negative.")
