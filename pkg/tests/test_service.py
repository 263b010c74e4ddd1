"""HTTP session service: creating and driving games over the wire,
token auth, redaction of private data, and agreement with the
in-process engine.
"""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from mannadiv.catalog import intro_problem, opening_problem
from mannadiv.guarantees import BNC, equalize
from mannadiv.protocols import TruthfulDncStrategy, run_dnc
from mannadiv.service import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


def make_session(client, problem, rule, slots, **params):
    body = {"problem": problem.to_json(), "rule": rule, "slots": slots, **params}
    r = client.post("/sessions", json=body)
    assert r.status_code == 200, r.text
    return r.json()


def test_healthz(client):
    r = client.get("/healthz")
    assert r.status_code == 200
    assert r.json() == {"v": 1, "ok": True}


def test_all_bot_session_completes_and_matches_engine(client):
    prob = intro_problem()
    made = make_session(client, prob, "dnc", [{"kind": "bot"}, {"kind": "bot"}])
    state = client.get(f"/sessions/{made['id']}").json()
    assert state["v"] == 1
    assert state["phase"] == "done"
    tr = client.get(f"/sessions/{made['id']}/transcript").json()
    engine = run_dnc(
        prob,
        [TruthfulDncStrategy(u, 2, prob.manna) for _, u in prob.agents],
    )
    assert tr["allocation"] == engine.to_json()["allocation"]


def test_human_session_flow_and_views(client):
    prob = opening_problem()
    made = make_session(client, prob, "bnc", [{"kind": "human"}, {"kind": "bot"}])
    sid, tok = made["id"], made["tokens"]["0"]
    state = client.get(f"/sessions/{sid}", params={"token": tok}).json()
    assert state["phase"] == "await_bids"
    assert state["you"] == 0 and state["expected"] == [0]
    r = client.post(
        f"/sessions/{sid}/actions",
        json={"token": tok, "action": {"type": "bid", "value": 1.0 / 3.0}},
    )
    state = r.json()
    assert state["phase"] == "await_share_choice"
    assert state["served"] == 0
    assert state["budget"] == pytest.approx(1.0 / 3.0)
    r = client.post(
        f"/sessions/{sid}/actions",
        json={
            "token": tok,
            "action": {"type": "choose", "share": {"z": [1.0 / 3.0, 1.0 / 3.0]}},
        },
    )
    state = r.json()
    assert state["phase"] == "done"
    assert state["utility"] == pytest.approx(1.0 / 3.0)
    assert state["guarantee"] == pytest.approx(1.0 / 3.0, abs=1e-3)


def test_incremental_event_polling(client):
    prob = intro_problem()
    made = make_session(client, prob, "dnc", [{"kind": "bot"}, {"kind": "bot"}])
    full = client.get(f"/sessions/{made['id']}").json()
    count = full["event_count"]
    later = client.get(f"/sessions/{made['id']}", params={"since": count}).json()
    assert later["events"] == []
    tail = client.get(f"/sessions/{made['id']}", params={"since": count - 2}).json()
    assert len(tail["events"]) == 2


def test_redaction(client):
    prob = intro_problem()
    made = make_session(client, prob, "dnc", [{"kind": "human"}, {"kind": "bot"}])
    sid, tok = made["id"], made["tokens"]["0"]
    # drive to completion: agent 0 divides, bot accepts
    client.post(
        f"/sessions/{sid}/actions",
        json={
            "token": tok,
            "action": {"type": "divide", "shares": [{"z": [5.0]}, {"z": [5.0]}]},
        },
    )
    for view in (
        client.get(f"/sessions/{sid}").json(),
        client.get(f"/sessions/{sid}", params={"token": tok}).json(),
        client.get(f"/sessions/{sid}/transcript").json(),
    ):
        text = json.dumps(view)
        # utility parameters and full utility lists never leave the server
        assert "coeffs" not in text
        assert "polynomial" not in text
        assert "utilities" not in text
        assert "threshold" not in text
    # an anonymous view carries no assignment or utility at all
    anon = client.get(f"/sessions/{sid}").json()
    assert "utility" not in anon and "assignment" not in anon
    # the authenticated agent sees only its own utility
    mine = client.get(f"/sessions/{sid}", params={"token": tok}).json()
    assert mine["utility"] == pytest.approx(35.0)


def test_acceptances_hidden_until_matched(client):
    prob = intro_problem()
    made = make_session(client, prob, "dnc", [{"kind": "bot"}, {"kind": "human"}])
    sid, tok = made["id"], made["tokens"]["1"]
    state = client.get(f"/sessions/{sid}", params={"token": tok}).json()
    assert state["phase"] == "await_acceptances"
    # the bot divider has moved; no acceptance events are public yet
    assert all(e["type"] != "acceptance" for e in state["events"])
    state = client.post(
        f"/sessions/{sid}/actions",
        json={"token": tok, "action": {"type": "accept", "liked": [0, 1]}},
    ).json()
    assert state["phase"] == "done"
    kinds = [e["type"] for e in state["events"]]
    assert "acceptance" in kinds and "match" in kinds
    assert kinds.index("acceptance") < kinds.index("match")


def test_wrong_token_and_unknown_session(client):
    prob = intro_problem()
    made = make_session(client, prob, "dnc", [{"kind": "human"}, {"kind": "bot"}])
    r = client.get(f"/sessions/{made['id']}", params={"token": "bogus"})
    assert r.status_code == 403
    r = client.post(
        f"/sessions/{made['id']}/actions",
        json={"token": "bogus", "action": {"type": "accept", "liked": [0]}},
    )
    assert r.status_code == 403
    assert client.get("/sessions/nope").status_code == 404


def test_invalid_problems_are_422(client):
    good = intro_problem().to_json()
    bad_problem = dict(good)
    bad_problem["agents"] = "nonsense"
    cases = [
        {"problem": bad_problem, "rule": "dnc", "slots": [{"kind": "bot"}] * 2},
        {"problem": good, "rule": "tennis", "slots": [{"kind": "bot"}] * 2},
        {"problem": good, "rule": "dnc", "slots": [{"kind": "bot"}]},
        {
            "problem": good,
            "rule": "dnc",
            "slots": [{"kind": "bot", "strategy": "psychic"}] * 2,
        },
        # the budget rule cannot price a nonmonotone utility
        {"problem": good, "rule": "bnc", "slots": [{"kind": "bot"}] * 2},
    ]
    for body in cases:
        assert client.post("/sessions", json=body).status_code == 422, body["rule"]


def test_protocol_violations_are_409(client):
    prob = opening_problem()
    made = make_session(client, prob, "bnc", [{"kind": "human"}, {"kind": "bot"}])
    sid, tok = made["id"], made["tokens"]["0"]
    r = client.post(
        f"/sessions/{sid}/actions",
        json={"token": tok, "action": {"type": "bid", "value": -2.0}},
    )
    assert r.status_code == 409
    detail = r.json()["detail"]
    assert detail["error"] == "NonIncreasingBid"
    r = client.post(
        f"/sessions/{sid}/actions",
        json={"token": tok, "action": {"type": "accept", "liked": [0]}},
    )
    assert r.status_code == 409
    assert r.json()["detail"]["error"] == "WrongPhase"


def test_clock_session_matches_engine_guarantee(client, manna2, theta2):
    prob = opening_problem()
    made = make_session(client, prob, "bnc", [{"kind": "bot"}, {"kind": "bot"}])
    tr = client.get(f"/sessions/{made['id']}/transcript").json()
    assert tr["done"]
    shares = [np.array(s["z"]) for s in tr["allocation"]]
    assert np.allclose(sum(shares), prob.manna.omega)
    rep0 = equalize(prob.agents[0][1], BNC, 2, manna=prob.manna, theta=prob.theta)
    # truthful bots achieve at least their guarantee
    assert float(np.min(shares[0])) >= rep0.value - 1e-3
