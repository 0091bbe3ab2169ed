"""Empirical-covariance eigenvalue errors against the reference shape 1/sqrt(n) + j/n.

Samples Gaussian data with exponentially decaying population eigenvalues
exp(-j), forms the empirical covariance, and measures the root-mean-square
relative eigenvalue error and the projector error for j = 3..20.  Two
estimates of the relative error are shown: the plain Monte Carlo RMS and
a control-variate estimate that subtracts the first two series terms
(whose Gaussian second moment is known exactly) and adds their moment
back.  The control variate keeps the estimator unbiased but removes most
of its noise, which is what makes the slow upward drift in j visible at
this replicate count.

Run:  python3 demos/04_phase_transition.py [replicates]
"""

import sys

import numpy as np

from perturbseries.covariance import ExperimentConfig, phase_transition_experiment

M = int(sys.argv[1]) if len(sys.argv) > 1 else 300
cfg = ExperimentConfig(alpha=1.0, d=40, n=500, m_replicates=M, seed=20240601, j_min=3, j_max=20)
table = phase_transition_experiment(cfg, threads=4)

ratio = table.column("ratio_ev")
C = float(np.exp(np.mean(np.log(ratio))))
print(f"alpha = 1, d = 40, n = 500, M = {M}; fitted constant C = {C:.3f}\n")
print(f"{'j':>3} {'raw RMS':>9} {'+-SE':>8} {'CV RMS':>9} {'+-SE':>8} {'ratio/C':>8} {'proj err':>9}")
for r in table.rows:
    print(f"{r['j']:>3} {r['rel_ev_err']:9.5f} {r['se_rel_ev_err']:8.5f} {r['rel_ev_err_cv']:9.5f} "
          f"{r['se_rel_ev_err_cv']:8.5f} {r['ratio_ev'] / C:8.3f} {r['proj_err']:9.4f}")
cv = table.column("rel_ev_err_cv")
print(f"\ncontrol-variate curve strictly increasing for j >= 5: {bool(np.all(np.diff(cv[2:]) > 0))}")
print("Projector errors are flat in j, as expected when alpha = 1.")
print(f"The j/n term only overtakes 1/sqrt(n) beyond j = sqrt(n) = {np.sqrt(cfg.n):.0f},")
print("so at this sample size the eigenvalue curve rises gently rather than linearly.")
