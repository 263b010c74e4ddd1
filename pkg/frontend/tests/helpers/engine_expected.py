"""Reference runs for the end-to-end tests: play the same game
in-process that the browser client plays over HTTP, with the human's
actions scripted, and print the resulting allocation as JSON."""

import json
import sys

from mannadiv.model import Partition, Share, load_problem
from mannadiv.protocols import (
    BNC,
    ScriptedStrategy,
    TruthfulClockStrategy,
    TruthfulDncStrategy,
    run_clock,
    run_dnc,
)
from mannadiv.guarantees import equalize


def dnc3(problem_json, human_shares):
    problem = load_problem(problem_json)
    human = ScriptedStrategy([Partition([Share.from_json(s) for s in human_shares])])
    others = [
        TruthfulDncStrategy(u, problem.n, problem.manna)
        for _, u in problem.agents[1:]
    ]
    t = run_dnc(problem, [human] + others)
    return t.events[-1]["allocation"]


def bnc2(problem_json, human_bid, human_pick):
    problem = load_problem(problem_json)
    human = ScriptedStrategy([human_bid, Share.of_commodity(human_pick)])
    rep = equalize(
        problem.agents[1][1], BNC, 2, manna=problem.manna, theta=problem.theta
    )
    bot = TruthfulClockStrategy(problem.agents[1][1], rep, problem.theta)
    t = run_clock(problem, [human, bot], rule=BNC)
    return t.events[-1]["allocation"]


if __name__ == "__main__":
    spec = json.load(sys.stdin)
    if spec["scenario"] == "dnc3":
        out = dnc3(spec["problem"], spec["human_shares"])
    else:
        out = bnc2(spec["problem"], spec["human_bid"], spec["human_pick"])
    print(json.dumps(out))
