"""
Solving a nonlinear system with the four block Kaczmarz methods
===============================================================

"""

import numpy as np

from nlkaczmarz import SolverConfig, make_singular_broyden, solve

# ### The test problem
#
# The singular Broyden system squares every equation of the Broyden
# tridiagonal system, so the Jacobian vanishes at the root. Newton-type
# methods slow down there; row-action methods only ever need a few rows.

problem = make_singular_broyden(100)
x0 = problem.initial_point()
print("start:", x0[:4], "...  ||f||^2 =", np.sum(problem.residual(x0) ** 2))

# Each Jacobian row is sparse: (column indices, values).
idx, val = problem.jacobian_row(10, x0)
print("row 10 touches columns", idx, "with values", val)

# ### One solve per method
#
# RBWNK picks rows with the greedy delta rule, MRWNK takes every row whose
# squared residual is at least rho times the largest one. The "-m" variants
# add a heavy-ball term omega * (x_k - x_{k-1}).

configs = {
    "rbwnk":   SolverConfig("rbwnk", q=4),
    "rbwnk-m": SolverConfig("rbwnk-m", q=4, omega=0.5),
    "mrwnk":   SolverConfig("mrwnk", q=2, rho=0.2),
    "mrwnk-m": SolverConfig("mrwnk-m", q=2, omega=0.5, rho=0.2),
}
for name, cfg in configs.items():
    rep = solve(problem, cfg)
    print(f"{name:8s} converged={rep.converged}  IT={rep.iterations:4d}  ||f||^2={rep.final_res_norm_sq:.2e}")

# ### Looking at the residual history
#
# history holds (k, ||f(x_k)||^2) for k = 0 .. IT.

rep = solve(problem, configs["mrwnk-m"])
for k, r in rep.history[::4]:
    print(k, f"{r:.3e}")

# Momentum pays off: with the same rule and q, omega = 0.5 roughly halves IT.
plain = solve(problem, SolverConfig("mrwnk-m", q=2, omega=0.0, rho=0.2))
print("omega=0:", plain.iterations, " omega=0.5:", rep.iterations)
