"""
Protocols in motion
===================

The same single-good economy played twice under divide and choose,
with outcomes that differ dramatically by who divides, then a bid and
choose game between opposite tastes, and a replay check.
"""

from mannadiv.catalog import intro_problem, opening_problem
from mannadiv.guarantees import BNC, equalize
from mannadiv.protocols import (
    ProtocolTranscript,
    TruthfulClockStrategy,
    TruthfulDncStrategy,
    replay,
    run_clock,
    run_dnc,
)

# Ann values a slice of size s at s(12 - s), Bob at s(s - 6). When Ann
# divides she offers the half-half split; Bob must take one half and
# eats a negative value.
prob = intro_problem()
truthful = [TruthfulDncStrategy(u, 2, prob.manna) for _, u in prob.agents]
t = run_dnc(prob, truthful, ordering=[0, 1])
print("Ann divides: utilities", [round(v, 2) for v in t.utilities])

# When Bob divides he can do better than any equal-value split: he
# offers everything-or-nothing. Ann grabs the full ten units, which
# suits Bob fine because holding nothing costs him nothing.
opening = [TruthfulDncStrategy(u, 2, prob.manna, maxmin_opening=True) for _, u in prob.agents]
t = run_dnc(prob, opening, ordering=[1, 0])
print("Bob divides: utilities", [round(v, 2) for v in t.utilities])

# Bid and choose between Minnie (min of the two goods) and Max (max of
# them). Minnie stops the clock first at a third of the budget, buys a
# balanced bundle, and Max keeps a lopsided remainder he likes.
prob = opening_problem()
strategies = []
for _, u in prob.agents:
    rep = equalize(u, BNC, 2, manna=prob.manna, theta=prob.theta)
    strategies.append(TruthfulClockStrategy(u, rep, prob.theta))
t = run_clock(prob, strategies, rule=BNC)
print("bid and choose: utilities", [round(v, 3) for v in t.utilities])
for e in t.events:
    if e["type"] in ("bid", "stop", "choice"):
        print("  ", e)

# Transcripts replay bit-identically through a fresh engine.
again = replay(ProtocolTranscript.loads(t.dumps()))
print("replay identical:", again.dumps() == t.dumps())
