"""
A tour of the worst-case welfare benchmarks
===========================================

Three small economies, from one divisible good to the two-good pair
where every division leaves someone empty-handed, and the two summary
tables over the six symmetric utilities.
"""

import numpy as np

from mannadiv.benchmarks import equipartition, max_min, min_max
from mannadiv.catalog import (
    compute_table,
    degenerate_problem,
    format_table,
    intro_problem,
    opening_problem,
)
from mannadiv.model import eval_commodity_grid

# One divisible good, ten units. Ann's value of a slice of size s is
# s(12 - s): a good that satiates. Bob's is s(s - 6): a bad that turns
# good once he holds enough of it.
prob = intro_problem()
print("== one good, two very different agents ==")
for name, u in prob.agents:
    mm = min_max(u, 2, prob.manna)
    mx = max_min(u, 2, prob.manna)
    print(f"{name}: minMax = {mm.value:6.2f}   Maxmin = {mx.value:6.2f}")

# The knife equipartition splits the good exactly in half for both,
# but the values they attach to that split could hardly differ more.
for name, u in prob.agents:
    eq = equipartition(u, prob.path, 2)
    print(f"{name}: equal-value cut at {10 * eq.cuts[0]:.2f} units, worth {eq.common_value:.2f}")

# Two goods where every division gives one of the agents exactly
# nothing, even though each could get 1 in her own best partition.
print("\n== the degenerate two-good pair ==")
prob = degenerate_problem()
(_, u1), (_, u2) = prob.agents
h = 0.02
xs = np.arange(0.0, 1.0 + h / 2, h)
X, Y = np.meshgrid(xs, xs, indexing="ij")
worst = np.minimum(
    eval_commodity_grid(u1, (X, Y)), eval_commodity_grid(u2, (1.0 - X, 1.0 - Y))
).max()
print(f"best achievable min(u1(z), u2(w-z)) over a {len(xs)}x{len(xs)} grid: {worst:.2e}")
for name, u in prob.agents:
    print(
        f"{name}: minMax = {min_max(u, 2, prob.manna).value:.3f}"
        f"   Maxmin = {max_min(u, 2, prob.manna).value:.3f}"
    )

# Minnie wants the goods together (min), Max wants either one (max).
print("\n== min versus max on (1, 1) ==")
prob = opening_problem()
for name, u in prob.agents:
    print(
        f"{name}: minMax = {min_max(u, 2, prob.manna).value:.3f}"
        f"   Maxmin = {max_min(u, 2, prob.manna).value:.3f}"
    )

# The two summary tables: guarantees sit between minMax and Maxmin,
# and convex preferences favor equal split while concave ones favor
# bidding.
print("\n== the catalog tables ==")
print(format_table(compute_table(2), 2))
print(format_table(compute_table(3), 3))
