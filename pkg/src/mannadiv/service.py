"""HTTP session API hosting live protocol games.

Sessions live in memory behind a per-session lock; bot participants
act automatically whenever the phase designates them. State views are
redacted per participant: a client sees the public event feed, its own
assignment and guarantee, and never anyone else's utility parameters,
thresholds, or pre-matching acceptance sets. All payloads carry
"v": 1.
"""

from __future__ import annotations

import secrets
import threading
import time
from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .benchmarks import min_max
from .errors import MannadivError, ProtocolError
from .guarantees import BNC, MK, equalize
from .model import Partition, Problem, Share, eval_utility, load_problem
from .protocols import (
    AWAIT_ACCEPTANCES,
    AWAIT_BIDS,
    AWAIT_CHOICE,
    AWAIT_DIVISION,
    DNC,
    DONE,
    ClockGame,
    DncGame,
    RandomStrategy,
    TruthfulClockStrategy,
    TruthfulDncStrategy,
)

LONG_POLL_TIMEOUT = 10.0
LONG_POLL_TICK = 0.05


class Session:
    """One live game: engine, participant slots, and a serializing lock."""

    def __init__(self, sid: str, problem: Problem, rule: str, params: dict, slots: list):
        self.id = sid
        self.problem = problem
        self.rule = rule
        self.params = params
        self.lock = threading.Lock()
        self.created = time.time()
        self.updated = self.created
        self.tokens: Dict[str, int] = {}
        self.bots: Dict[int, object] = {}
        self._guarantees: Dict[int, Optional[float]] = {}
        for i, slot in enumerate(slots):
            if slot.get("kind") == "human":
                token = secrets.token_hex(12)
                self.tokens[token] = i
            else:
                self.bots[i] = self._make_bot(i, slot)
        if rule == DNC:
            self.game = DncGame(
                problem,
                ordering=params.get("ordering"),
                forced_accept=params.get("forced_accept", False),
            )
        else:
            self.game = ClockGame(
                problem, rule=rule, direction=params.get("direction", "increasing")
            )

    def _make_bot(self, i: int, slot: dict):
        kind = slot.get("strategy", "truthful")
        u = self.problem.agents[i][1]
        if kind == "random":
            return RandomStrategy(int(slot.get("seed", 42)) + i, self.problem.theta)
        if kind != "truthful":
            raise HTTPException(422, f"unknown bot strategy {kind!r}")
        if self.rule == DNC:
            return TruthfulDncStrategy(u, self.problem.n, self.problem.manna)
        report = equalize(
            u,
            self.rule,
            self.problem.n,
            manna=self.problem.manna,
            path=self.problem.path,
            theta=self.problem.theta,
        )
        return TruthfulClockStrategy(u, report, self.problem.theta)

    def run_bots(self):
        """Let bot participants act until a human (or nobody) is up."""
        guard = 0
        while self.game.phase != DONE:
            actors = self.game.expected_actors()
            bot_actors = [a for a in actors if a in self.bots]
            if not bot_actors:
                break
            agent = bot_actors[0]
            bot = self.bots[agent]
            game = self.game
            if game.phase == AWAIT_DIVISION:
                part = bot.propose_division(game.remaining, len(game.active))
                game.submit_division(agent, part)
            elif game.phase == AWAIT_ACCEPTANCES:
                game.submit_acceptance(agent, bot.acceptance(list(game._offers)))
            elif game.phase == AWAIT_BIDS:
                game.submit_bid(agent, bot.bid(game.context()))
            else:
                _, budget = game._pending
                share = bot.choose_share(game.remaining, budget, game.context(budget))
                game.submit_choice(agent, share)
            guard += 1
            if guard > 10000:
                raise ProtocolError("runaway bot loop")
        self.updated = time.time()

    def guarantee_for(self, agent: int) -> Optional[float]:
        if agent not in self._guarantees:
            u = self.problem.agents[agent][1]
            try:
                if self.rule == DNC:
                    value = min_max(u, self.problem.n, self.problem.manna).value
                else:
                    value = equalize(
                        u,
                        self.rule,
                        self.problem.n,
                        manna=self.problem.manna,
                        path=self.problem.path,
                        theta=self.problem.theta,
                    ).value
            except MannadivError:
                value = None
            self._guarantees[agent] = value
        return self._guarantees[agent]

    # -- redaction ---------------------------------------------------------

    def public_events(self) -> list:
        """Event feed with private material removed.

        Acceptance sets stay hidden until the round's matching is out;
        the end event keeps the allocation but drops the utility list.
        """
        matched_steps = {e["step"] for e in self.game.events if e["type"] == "match"}
        out = []
        for e in self.game.events:
            if e["type"] == "acceptance" and e["step"] not in matched_steps:
                continue
            if e["type"] == "end":
                e = {"type": "end", "allocation": e["allocation"]}
            out.append(e)
        return out

    def view(self, agent: Optional[int], since: int = 0) -> dict:
        game = self.game
        events = self.public_events()
        v = {
            "v": 1,
            "id": self.id,
            "rule": self.rule,
            "n": self.problem.n,
            "names": self.problem.names(),
            "phase": game.phase,
            "step": game.step,
            "you": agent,
            "expected": game.expected_actors(),
            "remaining": game.remaining.to_json(),
            "event_count": len(events),
            "events": events[since:],
            "manna": self.problem.manna.to_json(),
        }
        if self.rule == DNC:
            if game._offers is not None:
                v["offers"] = game._offers.to_json()
        else:
            v["clock"] = {"t": game.t, "direction": game.direction}
            if game.phase == AWAIT_CHOICE:
                winner, budget = game._pending
                v["served"] = winner
                if agent == winner:
                    v["budget"] = budget
        if agent is not None:
            share = game.allocation[agent]
            if share is not None:
                v["assignment"] = share.to_json()
                u = self.problem.agents[agent][1]
                v["utility"] = eval_utility(u, share)
            if game.phase == DONE:
                v["guarantee"] = self.guarantee_for(agent)
        return v


class CreateSessionBody(BaseModel):
    v: int = 1
    problem: dict
    rule: str
    slots: List[dict]
    ordering: Optional[List[int]] = None
    direction: str = "increasing"
    forced_accept: bool = False


class ActionBody(BaseModel):
    v: int = 1
    token: str
    action: dict


def create_app() -> FastAPI:
    app = FastAPI(title="mannadiv session service")
    sessions: Dict[str, Session] = {}
    registry_lock = threading.Lock()

    def get_session(sid: str) -> Session:
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise HTTPException(404, "unknown session")
        return sess

    def authed_agent(sess: Session, token: Optional[str]) -> Optional[int]:
        if token is None:
            return None
        if token not in sess.tokens:
            raise HTTPException(403, "bad token")
        return sess.tokens[token]

    @app.get("/healthz")
    def healthz():
        return {"v": 1, "ok": True}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        if body.rule not in (DNC, MK, BNC):
            raise HTTPException(422, f"unknown rule {body.rule!r}")
        try:
            problem = load_problem(body.problem)
        except (MannadivError, KeyError, TypeError, ValueError, AttributeError) as e:
            raise HTTPException(422, f"bad problem: {e}")
        if problem.n < 2:
            raise HTTPException(422, "a session needs at least two agents")
        if len(body.slots) != problem.n:
            raise HTTPException(422, f"need {problem.n} slots, got {len(body.slots)}")
        sid = secrets.token_hex(8)
        params = {
            "ordering": body.ordering,
            "direction": body.direction,
            "forced_accept": body.forced_accept,
        }
        try:
            sess = Session(sid, problem, body.rule, params, body.slots)
            with sess.lock:
                sess.run_bots()
        except MannadivError as e:
            raise HTTPException(422, f"cannot start session: {e}")
        with registry_lock:
            sessions[sid] = sess
        tokens = {str(agent): token for token, agent in sess.tokens.items()}
        return {"v": 1, "id": sid, "tokens": tokens}

    @app.get("/sessions/{sid}")
    def get_state(sid: str, token: Optional[str] = None, since: int = 0,
                  wait: float = 0.0):
        sess = get_session(sid)
        agent = authed_agent(sess, token)
        deadline = time.time() + min(max(wait, 0.0), LONG_POLL_TIMEOUT)
        while True:
            with sess.lock:
                view = sess.view(agent, since=since)
            if view["events"] or view["phase"] == DONE or time.time() >= deadline:
                return view
            time.sleep(LONG_POLL_TICK)

    @app.post("/sessions/{sid}/actions")
    def post_action(sid: str, body: ActionBody):
        sess = get_session(sid)
        agent = authed_agent(sess, body.token)
        if agent is None:
            raise HTTPException(403, "a join token is required")
        action = body.action
        kind = action.get("type")
        allowed = ("divide", "accept") if sess.rule == DNC else ("bid", "choose")
        if kind in ("divide", "accept", "bid", "choose") and kind not in allowed:
            raise HTTPException(
                409, {"error": "WrongPhase", "detail": f"no {kind} in a {sess.rule} game"}
            )
        with sess.lock:
            game = sess.game
            try:
                if kind == "divide":
                    game.submit_division(agent, Partition.from_json(action["shares"]))
                elif kind == "accept":
                    game.submit_acceptance(agent, set(action["liked"]))
                elif kind == "bid":
                    game.submit_bid(agent, float(action["value"]))
                elif kind == "choose":
                    game.submit_choice(agent, Share.from_json(action["share"]))
                else:
                    raise HTTPException(422, f"unknown action type {kind!r}")
            except ProtocolError as e:
                raise HTTPException(
                    409, {"error": type(e).__name__, "detail": str(e)}
                )
            except (MannadivError, KeyError, TypeError, ValueError) as e:
                raise HTTPException(422, f"bad action payload: {e}")
            sess.run_bots()
            return sess.view(agent)

    @app.get("/sessions/{sid}/transcript")
    def get_transcript(sid: str, token: Optional[str] = None):
        sess = get_session(sid)
        authed_agent(sess, token)
        with sess.lock:
            game = sess.game
            out = {
                "v": 1,
                "rule": sess.rule,
                "params": {k: v for k, v in sess.params.items() if v is not None},
                "manna": sess.problem.manna.to_json(),
                "names": sess.problem.names(),
                "events": sess.public_events(),
                "done": game.phase == DONE,
            }
            if game.phase == DONE:
                out["allocation"] = [s.to_json() for s in game.allocation]
            return out

    return app
