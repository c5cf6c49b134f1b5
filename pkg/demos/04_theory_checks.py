"""
Checking the convergence constants numerically
==============================================

"""

import numpy as np

from nlkaczmarz import LinearSystem, SolverConfig, solve
from nlkaczmarz.analysis import (
    estimate_alpha,
    estimate_xi,
    recursion_factor,
    sigma_min_at,
    theoretical_constants,
    verify_recursion_bound,
)

rng = np.random.default_rng(11)

# ### A small affine system with a known root
#
# For f(x) = A x - b the tangential cone constant xi is zero, alpha is the
# largest squared row norm and sigma_min comes from A itself.

A = np.eye(3) + 0.1 * rng.normal(size=(3, 3))
x_star = rng.normal(size=3)
problem = LinearSystem(A, A @ x_star)

pairs = [tuple(rng.normal(size=(2, 3))) for _ in range(20)]
print("xi    ~", estimate_xi(problem, pairs).xi)
alpha = estimate_alpha(problem, [x_star])
sigma = sigma_min_at(problem, x_star)
print("alpha =", alpha, " sigma_min =", sigma)

# ### Rate constants
#
# a1 and a2 feed a two-term recursion F_{k+1} <= a1 F_k + a2 F_{k-1}; the
# factor p = (a1 + sqrt(a1^2 + 4 a2)) / 2 is the resulting linear rate.

omega = 0.05
rc = theoretical_constants(0.0, alpha, sigma, omega, q=2, m=3, rho=1.0, rule="maxres")
print(rc.to_json())

# More momentum raises a2 and, through 3w + 2w^2, a1 too.
for w in (0.0, 0.05, 0.1, 0.2):
    c = theoretical_constants(0.0, alpha, sigma, w, q=2, m=3, rule="maxres")
    print(f"omega={w:.2f}  a1+a2={c.a1 + c.a2:.4f}  p={c.p:.4f}  valid={c.valid}")

# ### Does the run respect the bound?
#
# F_k = ||x_k - x*||^2, with F_0 repeated because the first step has no
# momentum history.

rep = solve(problem, SolverConfig("mrwnk-m", 2, omega, 1.0, eps=1e-28), store_iterates=True)
F = [float(np.sum((x - x_star) ** 2)) for x in rep.iterates]
check = verify_recursion_bound([F[0]] + F, rc.a1, rc.a2)
print(f"IT={rep.iterations}  bound holds: {check.bound_holds}  worst excess: {check.worst_bound:.3f}")

print("p for (0.5, 0.25):", recursion_factor(0.5, 0.25)[0])
