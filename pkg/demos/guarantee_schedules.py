"""
Equalized bid schedules
=======================

Both clock rules promise each agent the common value of an equalized
schedule: clock times at which the agent is indifferent between
stopping now and waiting. This walks through the schedules for the
six catalog utilities and shows the witness partitions that make the
promise tight on both sides.
"""

from mannadiv.catalog import catalog, two_good_manna, uniform_price
from mannadiv.guarantees import BNC, MK, equalize, schedule_partition
from mannadiv.model import KnifePath, eval_utility

manna = two_good_manna()
theta = uniform_price(manna)
path = KnifePath.proportional(manna.whole_share())

# Moving knife along the diagonal: every catalog utility is linear on
# that path, so the guarantee is exactly the equal-split value.
print("== moving knife, two agents ==")
for u in catalog():
    rep = equalize(u, MK, 2, path=path)
    print(f"{u.label:26s} Gamma = {rep.value:7.4f}   stop at t = {rep.schedule.times[1]:.4f}")

# Bid and choose prices shares with the uniform price. Now the shape
# of the indifference curves matters: bidders with min-style tastes
# stop early, max-style tastes stop late.
print("\n== bid and choose, two agents ==")
for u in catalog():
    rep = equalize(u, BNC, 2, manna=manna, theta=theta)
    print(f"{u.label:26s} Gamma = {rep.value:7.4f}   stop at t = {rep.schedule.times[1]:.4f}")

# The schedule is a certificate. Carving the manna forward, taking the
# agent's best share of each budget step, every share is worth at
# least Gamma; carving backward with the worst shares, at most Gamma.
print("\n== witness partitions (leontief, three agents) ==")
u = catalog()[0]
rep = equalize(u, BNC, 3, manna=manna, theta=theta)
print(f"Gamma = {rep.value:.4f}, schedule = {[round(t, 4) for t in rep.schedule.times]}")
best = schedule_partition(u, theta, manna, rep.schedule, best=True)
worst = schedule_partition(u, theta, manna, rep.schedule, best=False)
print("best-share carve :", [round(eval_utility(u, s), 4) for s in best])
print("worst-share carve:", [round(eval_utility(u, s), 4) for s in worst])
