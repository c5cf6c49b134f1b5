"""
Sweeping the momentum weight
============================

The harness runs Cartesian products of parameter grids and picks the omega
with the fewest iterations. The same thing is available on the command line:

    python -m nlkaczmarz --problem singular-broyden --n 100 --method mrwnk-m \
        --rho 0.2 --omega 0:0.9:0.1 --repeats 1
"""

from nlkaczmarz.harness import ExperimentPlan, format_it, parse_grid, run_sweep

omegas = parse_grid("0:0.9:0.1")
print("omega grid:", omegas)

plan = ExperimentPlan(
    problems=["singular-broyden"],
    ns=[100],
    methods=["mrwnk-m"],
    qs=[2],
    rhos=[0.2],
    omegas=omegas,
    max_iter=2000,
)
rows, best = run_sweep(plan, workers=1, timing=False)

for r in rows:
    print(f"omega={r.omega:.1f}  IT={format_it(r):>6}")

# Runs that hit the iteration cap print as ">K".
b = best[0]
print(f"best omega = {b.omega} with IT = {b.IT}")
