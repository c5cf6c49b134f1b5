"""
Block selection and residual weights
====================================

"""

import numpy as np

from nlkaczmarz import compute_delta, compute_eta, select_greedy, select_max_residual

f = np.array([0.1, -2.0, 0.5, 1.9, -0.05, 1.0])
sq = f * f
nrm = sq.sum()

# ### Greedy rule
#
# delta is half way between the largest share max f_i^2 / ||f||^2 and the
# average share 1/m. Rows at or above delta * ||f||^2 form the block.

delta = compute_delta(sq, nrm)
print("delta =", delta)
print("greedy block:", select_greedy(sq, delta, nrm))

# ### Max-residual rule
#
# rho trades block size against focus: rho = 1 keeps only the largest
# residual, small rho takes almost everything.

for rho in (1.0, 0.5, 0.2, 0.01):
    print(f"rho={rho:4}:", select_max_residual(sq, rho))

# ### Weights
#
# eta = |f|^(q-2) f. Larger q pushes the step towards the big residuals.

tau = select_max_residual(sq, 0.2)
for q in (2, 3, 4, 6):
    eta = compute_eta(f[tau], q)
    print(f"q={q}: eta/|eta| =", np.round(eta / np.abs(eta).max(), 4))

# eta^T f_tau is the q-th power of the q-norm of f_tau, whatever q is.
eta = compute_eta(f[tau], 3)
print(eta @ f[tau], np.sum(np.abs(f[tau]) ** 3))
