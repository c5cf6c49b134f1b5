"""
Benchmark runs: iteration counts and timings
============================================

Takes about half a minute.
"""

from nlkaczmarz import Method, SolverConfig, make_h_equation, make_nondquar, solve
from nlkaczmarz.harness import PlanEntry, format_it, run_single

# ### Singular Broyden
#
# run_single repeats the solve and reports the mean wall time of the loop.

for n in (100, 500, 1000):
    fast = run_single(PlanEntry("singular-broyden", n, Method.MRWNK_M, 2, 0.2, 0.5), repeats=3)
    slow = run_single(PlanEntry("singular-broyden", n, Method.RBWNK, 4, 1.0, 0.0), repeats=3)
    print(f"n={n:5d}  MRWNK-m IT={fast.IT:5d} ({fast.cpu_mean_seconds:.4f}s)"
          f"  RBWNK IT={slow.IT:5d} ({slow.cpu_mean_seconds:.4f}s)")

# A large rho makes MRWNK take one row at a time, and it stalls.
row = run_single(PlanEntry("singular-broyden", 1000, Method.MRWNK, 2, 0.9, 0.0), repeats=1)
print("MRWNK rho=0.9 at n=1000:", format_it(row))

# ### H-equation
#
# Dense rows: every unknown appears in every equation. The constant c is a
# parameter (default 0.9); the count hardly depends on n.

for n in (100, 500):
    p = make_h_equation(n)
    print(n, [solve(p, SolverConfig("mrwnk", 2, rho=r)).iterations for r in (0.1, 0.5, 0.9)])

# ### NONDQUAR
#
# Here plain MRWNK with rho = 0.3 is hard to beat.

p = make_nondquar(200)
for cfg in (SolverConfig("mrwnk", 4, rho=0.3), SolverConfig("rbwnk", 4), SolverConfig("rbwnk-m", 4, 0.7)):
    print(cfg.method.value, solve(p, cfg).iterations)
