"""Division protocols: divide-and-choose and the two clock protocols.

Games are explicit state machines driven by `submit_*` calls, so the
same engine backs in-process simulation and the HTTP service. Every
action is validated and logged; a transcript replays bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set

import numpy as np

from .benchmarks import equipartition, max_min, min_max
from .errors import (
    BadBudgetShare,
    EmptyAcceptance,
    InvalidAction,
    InvariantViolation,
    MalformedPartition,
    NonIncreasingBid,
    NotYourTurn,
    OutOfRange,
    ProtocolError,
    ShapeMismatch,
    Unsupported,
    WrongPhase,
)
from .guarantees import BNC, MK, GuaranteeReport, best_budget_share
from .model import (
    COMMODITY,
    KNIFE,
    KnifePath,
    MannaSpec,
    MeasureSpec,
    Partition,
    Problem,
    Share,
    UtilitySpec,
    eval_utility,
    load_problem,
    measure,
)

DNC = "dnc"

AWAIT_DIVISION = "await_division"
AWAIT_ACCEPTANCES = "await_acceptances"
AWAIT_BIDS = "await_bids"
AWAIT_CHOICE = "await_share_choice"
DONE = "done"

BUDGET_TOL = 1e-6
BID_TOL = 1e-9


@dataclass(frozen=True)
class ClockContext:
    """What a bidding agent is allowed to see about the clock state."""

    rule: str
    direction: str
    step: int
    t_prev: float
    remaining: Share
    n_active: int
    budget: float = 0.0


class AgentStrategy:
    """Callbacks driving one agent in a simulated protocol run."""

    def propose_division(self, remaining: Share, n_shares: int) -> Partition:
        raise Unsupported("this strategy cannot divide")

    def acceptance(self, offers: Sequence[Share]) -> Set[int]:
        raise Unsupported("this strategy cannot accept")

    def bid(self, ctx: ClockContext) -> float:
        raise Unsupported("this strategy cannot bid")

    def choose_share(self, remaining: Share, budget: float, ctx: ClockContext) -> Share:
        raise Unsupported("this strategy cannot choose")


# ---------------------------------------------------------------------------
# transcripts


@dataclass
class ProtocolTranscript:
    """Full record of one protocol run, sufficient for exact replay."""

    rule: str
    problem: dict
    params: dict
    events: list
    allocation: list  # share json per agent
    utilities: list

    def to_json(self) -> dict:
        return {
            "v": 1,
            "rule": self.rule,
            "problem": self.problem,
            "params": self.params,
            "events": self.events,
            "allocation": self.allocation,
            "utilities": self.utilities,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @staticmethod
    def from_json(d: dict) -> "ProtocolTranscript":
        return ProtocolTranscript(
            rule=d["rule"],
            problem=d["problem"],
            params=d.get("params", {}),
            events=d["events"],
            allocation=d["allocation"],
            utilities=d["utilities"],
        )

    @staticmethod
    def loads(text: str) -> "ProtocolTranscript":
        return ProtocolTranscript.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# divide and choose


class DncGame:
    """Divide-and-choose with proper matching, one round at a time.

    Each round the first active agent (in priority order) divides the
    remaining manna into as many shares as there are active agents, the
    others report which shares they like, and the largest properly
    matchable set of agents is served. Unassigned shares are merged
    back and the round repeats; at most n - 1 rounds are needed.
    """

    def __init__(
        self,
        problem: Problem,
        ordering: Optional[Sequence[int]] = None,
        forced_accept: bool = False,
        tol: float = 1e-6,
    ):
        self.problem = problem
        n = problem.n
        self.ordering = list(ordering) if ordering is not None else list(range(n))
        if sorted(self.ordering) != list(range(n)):
            raise InvalidAction(f"ordering must be a permutation of 0..{n - 1}")
        self.forced_accept = forced_accept
        self.tol = tol
        self.active: List[int] = list(self.ordering)
        self.remaining: Share = problem.manna.whole_share()
        self.allocation: List[Optional[Share]] = [None] * n
        self.step = 1
        self.events: list = [
            {
                "type": "start",
                "rule": DNC,
                "n": n,
                "ordering": list(self.ordering),
                "names": problem.names(),
            }
        ]
        self._offers: Optional[Partition] = None
        self._acceptances: Dict[int, Set[int]] = {}
        if n == 1:
            self._assign(self.active[0], self.remaining)
            self.remaining = problem.manna.empty_share()
            self._finish()
        else:
            self.phase = AWAIT_DIVISION

    @property
    def divider(self) -> int:
        return self.active[0]

    def expected_actors(self) -> List[int]:
        if self.phase == AWAIT_DIVISION:
            return [self.divider]
        if self.phase == AWAIT_ACCEPTANCES:
            return [a for a in self.active[1:] if a not in self._acceptances]
        return []

    def submit_division(self, agent: int, partition: Partition):
        if self.phase != AWAIT_DIVISION:
            raise WrongPhase(f"no division expected in phase {self.phase}")
        if agent != self.divider:
            raise NotYourTurn(f"agent {agent} is not the divider")
        if len(partition) != len(self.active):
            raise MalformedPartition(
                f"need {len(self.active)} shares, got {len(partition)}"
            )
        try:
            partition.validate_against(self.remaining, tol=max(self.tol, 1e-9))
        except (InvariantViolation, ShapeMismatch) as e:
            raise MalformedPartition(str(e)) from e
        self._offers = partition
        self._acceptances = {}
        self.events.append(
            {
                "type": "division",
                "step": self.step,
                "agent": agent,
                "shares": partition.to_json(),
            }
        )
        self.phase = AWAIT_ACCEPTANCES

    def submit_acceptance(self, agent: int, liked: Set[int]):
        if self.phase != AWAIT_ACCEPTANCES:
            raise WrongPhase(f"no acceptance expected in phase {self.phase}")
        if agent not in self.active[1:] or agent in self._acceptances:
            raise NotYourTurn(f"agent {agent} owes no acceptance")
        liked = {int(i) for i in liked}
        if any(not (0 <= i < len(self._offers)) for i in liked):
            raise InvalidAction("acceptance references an unknown share")
        if not liked:
            if not self.forced_accept:
                raise EmptyAcceptance(f"agent {agent} must like at least one share")
            u = self.problem.agents[agent][1]
            vals = [eval_utility(u, s) for s in self._offers]
            liked = {int(np.argmax(vals))}
        self._acceptances[agent] = liked
        self.events.append(
            {
                "type": "acceptance",
                "step": self.step,
                "agent": agent,
                "liked": sorted(liked),
            }
        )
        if not self.expected_actors():
            self._resolve()

    def _resolve(self):
        from .matching import BipartiteGraph, proper_match

        m = len(self.active)
        likes = [set(range(m))]
        likes += [self._acceptances[a] for a in self.active[1:]]
        pm = proper_match(BipartiteGraph(likes, divider=0, n_shares=m))
        assigned_shares = set()
        for pos in pm.matched_agents:
            r = pm.assignment[pos]
            self._assign(self.active[pos], self._offers[r])
            assigned_shares.add(r)
        self.events.append(
            {
                "type": "match",
                "step": self.step,
                "assigned": {
                    str(self.active[pos]): r for pos, r in sorted(pm.assignment.items())
                },
                "unmatched": [self.active[pos] for pos in pm.unmatched_agents],
            }
        )
        leftover = self.problem.manna.empty_share()
        for r in range(m):
            if r not in assigned_shares:
                leftover = leftover.plus(self._offers[r])
        self.remaining = leftover
        self.active = [self.active[pos] for pos in pm.unmatched_agents]
        self._offers = None
        self._acceptances = {}
        self.step += 1
        if len(self.active) == 1:
            self._assign(self.active[0], self.remaining)
            self.remaining = self.problem.manna.empty_share()
            self.active = []
            self._finish()
        elif not self.active:
            self._finish()
        else:
            self.phase = AWAIT_DIVISION
        self._check_invariant()

    def _assign(self, agent: int, share: Share):
        self.allocation[agent] = share
        self.events.append(
            {"type": "assign", "step": self.step, "agent": agent, "share": share.to_json()}
        )

    def _finish(self):
        self.phase = DONE
        utilities = [
            eval_utility(u, s) if s is not None else None
            for (_, u), s in zip(self.problem.agents, self.allocation)
        ]
        self.events.append(
            {
                "type": "end",
                "allocation": [s.to_json() for s in self.allocation],
                "utilities": utilities,
            }
        )

    def _check_invariant(self):
        got = self.remaining
        for s in self.allocation:
            if s is not None:
                got = got.plus(s)
        whole = self.problem.manna.whole_share()
        if abs(got.length() - whole.length()) > 1e-6:
            raise InvariantViolation("assigned shares plus remainder lost some manna")


# ---------------------------------------------------------------------------
# clock protocols


class ClockGame:
    """The moving-knife and bid-and-choose clocks, either direction.

    Every active agent bids a stopping time at least the current clock
    time; the winner (smallest bid when the clock runs over good manna,
    largest when it runs over bad manna, ties to the lowest index) is
    served and drops out. Under "mk" the winner gets the path increment
    up to their bid; under "bnc" they pick any share of the remaining
    manna whose measure matches the budget accrued since the last stop.
    """

    def __init__(
        self,
        problem: Problem,
        rule: str = MK,
        direction: str = "increasing",
        tol: float = BUDGET_TOL,
    ):
        if rule not in (MK, BNC):
            raise Unsupported(f"unknown clock rule {rule!r}")
        if direction not in ("increasing", "decreasing"):
            raise Unsupported(f"unknown clock direction {direction!r}")
        if rule == BNC and problem.manna.kind != COMMODITY:
            raise Unsupported("bid-and-choose runs on commodity manna only")
        self.problem = problem
        self.rule = rule
        self.direction = direction
        self.tol = tol
        n = problem.n
        self.active: List[int] = list(range(n))
        self.t = 0.0
        self.step = 1
        self.allocation: List[Optional[Share]] = [None] * n
        self.remaining: Share = problem.manna.whole_share()
        self.events: list = [
            {
                "type": "start",
                "rule": rule,
                "n": n,
                "direction": direction,
                "names": problem.names(),
            }
        ]
        self._bids: Dict[int, float] = {}
        self._pending: Optional[tuple] = None  # (winner, budget)
        if n == 1:
            self._assign(0, self.remaining)
            self.remaining = problem.manna.empty_share()
            self._finish()
        else:
            self.phase = AWAIT_BIDS

    def context(self, budget: float = 0.0) -> ClockContext:
        return ClockContext(
            rule=self.rule,
            direction=self.direction,
            step=self.step,
            t_prev=self.t,
            remaining=self.remaining,
            n_active=len(self.active),
            budget=budget,
        )

    def expected_actors(self) -> List[int]:
        if self.phase == AWAIT_BIDS:
            return [a for a in self.active if a not in self._bids]
        if self.phase == AWAIT_CHOICE:
            return [self._pending[0]]
        return []

    def submit_bid(self, agent: int, value: float):
        if self.phase != AWAIT_BIDS:
            raise WrongPhase(f"no bid expected in phase {self.phase}")
        if agent not in self.active or agent in self._bids:
            raise NotYourTurn(f"agent {agent} owes no bid")
        value = float(value)
        if not np.isfinite(value) or value > 1.0 + BID_TOL:
            raise OutOfRange(f"bid {value} outside [clock, 1]")
        if value < self.t - BID_TOL:
            raise NonIncreasingBid(f"bid {value} is behind the clock at {self.t}")
        self._bids[agent] = min(max(value, self.t), 1.0)
        self.events.append(
            {"type": "bid", "step": self.step, "agent": agent, "value": value}
        )
        if not self.expected_actors():
            self._close_round()

    def _close_round(self):
        items = sorted(self._bids.items())
        if self.direction == "increasing":
            winner, stop = min(items, key=lambda kv: (kv[1], kv[0]))
        else:
            winner, stop = max(items, key=lambda kv: (kv[1], -kv[0]))
        budget = stop - self.t
        self.events.append(
            {
                "type": "stop",
                "step": self.step,
                "agent": winner,
                "time": stop,
                "budget": budget,
            }
        )
        if self.rule == MK:
            share = self.problem.path.segment(self.t, stop)
            self.t = stop
            self._serve(winner, share)
        else:
            self.t = stop
            self._pending = (winner, budget)
            self.phase = AWAIT_CHOICE

    def submit_choice(self, agent: int, share: Share):
        if self.phase != AWAIT_CHOICE:
            raise WrongPhase(f"no choice expected in phase {self.phase}")
        winner, budget = self._pending
        if agent != winner:
            raise NotYourTurn(f"agent {agent} was not served")
        if share.kind != self.remaining.kind:
            raise InvalidAction("share kind does not match the manna")
        if np.any(share.z > self.remaining.z + 1e-9):
            raise InvalidAction("chosen share exceeds the remaining manna")
        m = measure(self.problem.theta, share)
        if self.direction == "increasing":
            if m > budget + self.tol:
                raise BadBudgetShare(f"share measures {m}, budget is {budget}")
        else:
            if m < budget - self.tol:
                raise BadBudgetShare(f"share measures {m}, budget is {budget}")
        self.events.append(
            {"type": "choice", "step": self.step, "agent": agent, "share": share.to_json()}
        )
        self._pending = None
        self._serve(winner, share)

    def _serve(self, agent: int, share: Share):
        self._assign(agent, share)
        if self.rule == BNC:
            self.remaining = Share.of_commodity(
                np.clip(self.remaining.z - share.z, 0.0, None)
            )
        else:
            self.remaining = self.problem.path.segment(self.t, 1.0)
        self.active.remove(agent)
        self._bids = {}
        self.step += 1
        if len(self.active) == 1:
            last = self.active[0]
            if self.rule == MK:
                self._assign(last, self.problem.path.segment(self.t, 1.0))
            else:
                self._assign(last, self.remaining)
            self.remaining = self.problem.manna.empty_share()
            self.active = []
            self._finish()
        else:
            self.phase = AWAIT_BIDS

    def _assign(self, agent: int, share: Share):
        self.allocation[agent] = share
        self.events.append(
            {"type": "assign", "step": self.step, "agent": agent, "share": share.to_json()}
        )

    def _finish(self):
        self.phase = DONE
        utilities = [
            eval_utility(u, s) for (_, u), s in zip(self.problem.agents, self.allocation)
        ]
        self.events.append(
            {
                "type": "end",
                "allocation": [s.to_json() for s in self.allocation],
                "utilities": utilities,
            }
        )


# ---------------------------------------------------------------------------
# strategies


class TruthfulDncStrategy(AgentStrategy):
    """Divide into an equipartition, accept anything worth the minMax.

    The acceptance threshold is minMax over the whole manna; shares
    rejected in earlier rounds were all below it, so at least one offer
    always clears it. With `maxmin_opening` the opening division is a
    Maxmin witness instead of an equipartition, which is what a divider
    who expects sincere play should do.
    """

    def __init__(
        self,
        u: UtilitySpec,
        n: int,
        manna: MannaSpec,
        maxmin_opening: bool = False,
        slack: float = 1e-6,
    ):
        self.u = u
        self.n = n
        self.manna = manna
        self.maxmin_opening = maxmin_opening
        self.slack = slack
        self._threshold: Optional[float] = None

    @property
    def threshold(self) -> float:
        if self._threshold is None:
            self._threshold = min_max(self.u, self.n, self.manna).value
        return self._threshold

    def propose_division(self, remaining: Share, n_shares: int) -> Partition:
        if n_shares == 1:
            return Partition([remaining])
        whole = self.manna.whole_share()
        if self.maxmin_opening and remaining == whole and n_shares == self.n:
            return max_min(self.u, self.n, self.manna).witness
        eq = equipartition(self.u, KnifePath.proportional(remaining), n_shares)
        return eq.partition

    def acceptance(self, offers: Sequence[Share]) -> Set[int]:
        vals = [eval_utility(self.u, s) for s in offers]
        liked = {i for i, v in enumerate(vals) if v >= self.threshold - self.slack}
        return liked or {int(np.argmax(vals))}


class TruthfulClockStrategy(AgentStrategy):
    """Bid the equalized schedule; pick the best share within budget."""

    def __init__(
        self,
        u: UtilitySpec,
        report: GuaranteeReport,
        theta: Optional[MeasureSpec] = None,
    ):
        self.u = u
        self.report = report
        self.theta = theta

    def bid(self, ctx: ClockContext) -> float:
        times = self.report.schedule.times
        k = min(ctx.step, len(times) - 1)
        return min(max(times[k], ctx.t_prev), 1.0)

    def choose_share(self, remaining: Share, budget: float, ctx: ClockContext) -> Share:
        if self.theta is None:
            raise Unsupported("a bid-and-choose strategy needs the measure")
        return best_budget_share(self.u, self.theta, remaining, budget)


class RandomStrategy(AgentStrategy):
    """Seeded random legal play, the adversary of the soundness tests."""

    def __init__(self, seed: int, theta: Optional[MeasureSpec] = None):
        self.rng = np.random.default_rng(seed)
        self.theta = theta

    def propose_division(self, remaining: Share, n_shares: int) -> Partition:
        if remaining.kind == COMMODITY:
            W = self.rng.uniform(0.0, 1.0, (n_shares, remaining.z.size))
            W = W / W.sum(axis=0, keepdims=True)
            return Partition([Share.of_commodity(w * remaining.z) for w in W])
        cuts = np.sort(self.rng.uniform(0.0, 1.0, n_shares - 1))
        path = KnifePath.proportional(remaining)
        pts = [0.0] + list(cuts) + [1.0]
        return Partition([path.segment(pts[i], pts[i + 1]) for i in range(n_shares)])

    def acceptance(self, offers: Sequence[Share]) -> Set[int]:
        picks = {i for i in range(len(offers)) if self.rng.random() < 0.5}
        return picks or {int(self.rng.integers(len(offers)))}

    def bid(self, ctx: ClockContext) -> float:
        return float(self.rng.uniform(ctx.t_prev, 1.0))

    def choose_share(self, remaining: Share, budget: float, ctx: ClockContext) -> Share:
        if self.theta is None or remaining.kind != COMMODITY:
            raise Unsupported("random choice needs a commodity measure")
        p = self.theta.price
        cap = remaining.z
        b = min(max(budget, 0.0), float(p @ cap))
        if cap.size == 1:
            return Share.of_commodity([b / p[0]])
        xlo = max(0.0, (b - p[1] * cap[1]) / p[0])
        xhi = min(float(cap[0]), b / p[0])
        x = float(self.rng.uniform(xlo, xhi)) if xhi > xlo else xlo
        y = min(max((b - p[0] * x) / p[1], 0.0), float(cap[1]))
        return Share.of_commodity([x, y])


class ScriptedStrategy(AgentStrategy):
    """Plays back a fixed list of actions, one per callback."""

    def __init__(self, actions: Sequence):
        self.actions = list(actions)

    def _next(self):
        if not self.actions:
            raise InvalidAction("scripted strategy ran out of actions")
        return self.actions.pop(0)

    def propose_division(self, remaining, n_shares):
        return self._next()

    def acceptance(self, offers):
        return set(self._next())

    def bid(self, ctx):
        return float(self._next())

    def choose_share(self, remaining, budget, ctx):
        return self._next()


# ---------------------------------------------------------------------------
# runners and replay


def _drive(game, act) -> None:
    guard = 0
    while game.phase != DONE:
        actors = game.expected_actors()
        if not actors:
            raise InvariantViolation("game stalled with no expected actor")
        act(game, actors[0])
        guard += 1
        if guard > 10000:
            raise InvariantViolation("runaway protocol loop")


def _transcript(game, rule: str, params: dict) -> ProtocolTranscript:
    utilities = [
        eval_utility(u, s)
        for (_, u), s in zip(game.problem.agents, game.allocation)
    ]
    return ProtocolTranscript(
        rule=rule,
        problem=game.problem.to_json(),
        params=params,
        events=game.events,
        allocation=[s.to_json() for s in game.allocation],
        utilities=utilities,
    )


def run_dnc(
    problem: Problem,
    strategies: Sequence[AgentStrategy],
    ordering: Optional[Sequence[int]] = None,
    forced_accept: bool = False,
) -> ProtocolTranscript:
    """Simulate divide-and-choose with the given strategies."""
    game = DncGame(problem, ordering=ordering, forced_accept=forced_accept)

    def act(game, agent):
        if game.phase == AWAIT_DIVISION:
            part = strategies[agent].propose_division(game.remaining, len(game.active))
            game.submit_division(agent, part)
        else:
            liked = strategies[agent].acceptance(list(game._offers))
            game.submit_acceptance(agent, liked)

    _drive(game, act)
    return _transcript(
        game, DNC, {"ordering": list(game.ordering), "forced_accept": forced_accept}
    )


def run_clock(
    problem: Problem,
    strategies: Sequence[AgentStrategy],
    rule: str = MK,
    direction: str = "increasing",
) -> ProtocolTranscript:
    """Simulate a clock protocol with the given strategies."""
    game = ClockGame(problem, rule=rule, direction=direction)

    def act(game, agent):
        if game.phase == AWAIT_BIDS:
            game.submit_bid(agent, strategies[agent].bid(game.context()))
        else:
            _, budget = game._pending
            share = strategies[agent].choose_share(
                game.remaining, budget, game.context(budget)
            )
            game.submit_choice(agent, share)

    _drive(game, act)
    return _transcript(game, rule, {"direction": direction})


def replay(transcript: ProtocolTranscript) -> ProtocolTranscript:
    """Re-run a transcript's actions through a fresh engine.

    Returns the transcript of the re-run; callers can compare the two
    serializations to confirm the engine is deterministic.
    """
    problem = load_problem(transcript.problem)
    actions = [
        e
        for e in transcript.events
        if e["type"] in ("division", "acceptance", "bid", "choice")
    ]
    if transcript.rule == DNC:
        game = DncGame(
            problem,
            ordering=transcript.params.get("ordering"),
            forced_accept=transcript.params.get("forced_accept", False),
        )
        for e in actions:
            if e["type"] == "division":
                game.submit_division(e["agent"], Partition.from_json(e["shares"]))
            elif e["type"] == "acceptance":
                game.submit_acceptance(e["agent"], set(e["liked"]))
        params = transcript.params
    else:
        game = ClockGame(
            problem,
            rule=transcript.rule,
            direction=transcript.params.get("direction", "increasing"),
        )
        for e in actions:
            if e["type"] == "bid":
                game.submit_bid(e["agent"], e["value"])
            elif e["type"] == "choice":
                game.submit_choice(e["agent"], Share.from_json(e["share"]))
        params = transcript.params
    if game.phase != DONE:
        raise ProtocolError("transcript ended before the protocol finished")
    return _transcript(game, transcript.rule, params)
