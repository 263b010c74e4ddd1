"""Proper matching of agents to offered shares.

A set of agents is properly matched to a set of shares when the match
is one-to-one onto shares they like and nobody outside the set likes
any assigned share. There is a unique largest properly matchable agent
set, obtained from a maximum matching plus the Dulmage-Mendelsohn
decomposition of the bipartite like-graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set

from .errors import InvariantViolation


@dataclass(frozen=True)
class BipartiteGraph:
    """Agents-like-shares relation with a distinguished divider.

    Agents and shares are referenced by index; `likes[a]` is the set of
    share indices agent `a` likes. The divider must like every share.
    """

    n_agents: int
    n_shares: int
    likes: tuple  # tuple of frozensets, one per agent
    divider: int

    def __init__(self, likes: Sequence[Set[int]], divider: int, n_shares: Optional[int] = None):
        likes = tuple(frozenset(s) for s in likes)
        n_agents = len(likes)
        if n_shares is None:
            n_shares = n_agents
        object.__setattr__(self, "n_agents", n_agents)
        object.__setattr__(self, "n_shares", n_shares)
        object.__setattr__(self, "likes", likes)
        object.__setattr__(self, "divider", divider)

    def validate(self):
        if self.n_agents != self.n_shares:
            raise InvariantViolation("need as many shares as agents")
        if not (0 <= self.divider < self.n_agents):
            raise InvariantViolation("divider index out of range")
        for a, liked in enumerate(self.likes):
            if not liked:
                raise InvariantViolation(f"agent {a} likes no share")
            if any(not (0 <= r < self.n_shares) for r in liked):
                raise InvariantViolation(f"agent {a} likes an unknown share")
        if self.likes[self.divider] != frozenset(range(self.n_shares)):
            raise InvariantViolation("the divider must like every share")


@dataclass(frozen=True)
class ProperMatch:
    """The largest properly matchable agent set and one proper assignment."""

    matched_agents: tuple  # M*, ascending agent indices
    assignment: dict  # agent -> share, injective, over M*
    unmatched_agents: tuple  # M+
    overdemanded_shares: tuple  # R+


def max_matching(likes: Sequence[Set[int]], n_shares: int) -> Dict[int, int]:
    """Maximum-cardinality matching by augmenting paths.

    Deterministic: agents are processed in order and liked shares in
    ascending index order.
    """
    match_agent: Dict[int, int] = {}
    match_share: Dict[int, int] = {}

    def try_augment(a: int, seen: Set[int]) -> bool:
        for r in sorted(likes[a]):
            if r in seen:
                continue
            seen.add(r)
            if r not in match_share or try_augment(match_share[r], seen):
                match_agent[a] = r
                match_share[r] = a
                return True
        return False

    for a in range(len(likes)):
        try_augment(a, set())
    return match_agent


def _reachable(likes, matching, n_agents):
    """Agents and shares on alternating paths from unmatched agents."""
    match_share = {r: a for a, r in matching.items()}
    seen_agents = {a for a in range(n_agents) if a not in matching}
    seen_shares: Set[int] = set()
    frontier = list(seen_agents)
    while frontier:
        a = frontier.pop()
        for r in likes[a]:
            if r in seen_shares:
                continue
            seen_shares.add(r)
            b = match_share.get(r)
            if b is not None and b not in seen_agents:
                seen_agents.add(b)
                frontier.append(b)
    return seen_agents, seen_shares


def _perfectly_matchable(agents, likes, shares) -> bool:
    """Can every listed agent be matched injectively into `shares`?"""
    sub = [likes[a] & shares for a in agents]
    return len(max_matching(sub, len(likes))) == len(agents)


def proper_match(g: BipartiteGraph) -> ProperMatch:
    """Largest properly matchable agent set, with lexicographic assignment.

    If a perfect matching exists everyone is matched; otherwise the
    Dulmage-Mendelsohn split (M+, M*) is computed from one maximum
    matching via alternating-path reachability.
    """
    g.validate()
    matching = max_matching(g.likes, g.n_shares)
    if len(matching) == g.n_agents:
        m_star = list(range(g.n_agents))
        m_plus: List[int] = []
        r_star = set(range(g.n_shares))
        r_plus: Set[int] = set()
    else:
        reach_agents, reach_shares = _reachable(g.likes, matching, g.n_agents)
        m_plus = sorted(reach_agents)
        m_star = sorted(set(range(g.n_agents)) - reach_agents)
        r_plus = reach_shares
        r_star = set(range(g.n_shares)) - reach_shares

    # lexicographically smallest proper assignment of M* into R*
    assignment: Dict[int, int] = {}
    taken: Set[int] = set()
    for pos, a in enumerate(m_star):
        rest = m_star[pos + 1 :]
        chosen = None
        for r in sorted(g.likes[a] & r_star - taken):
            if _perfectly_matchable(rest, g.likes, r_star - taken - {r}):
                chosen = r
                break
        if chosen is None:
            raise InvariantViolation("internal: M* not matchable into R*")
        assignment[a] = chosen
        taken.add(chosen)

    return ProperMatch(
        matched_agents=tuple(m_star),
        assignment=assignment,
        unmatched_agents=tuple(m_plus),
        overdemanded_shares=tuple(sorted(r_plus)),
    )


def enumerate_proper_matches(g: BipartiteGraph):
    """All properly matched agent sets, by brute force (test oracle).

    Yields (agent_set, assignment) pairs. Exponential; keep n small.
    """
    from itertools import combinations, permutations

    n = g.n_agents
    for size in range(n + 1):
        for agents in combinations(range(n), size):
            for shares in combinations(range(g.n_shares), size):
                outside = [a for a in range(n) if a not in agents]
                if any(g.likes[a] & set(shares) for a in outside):
                    continue
                for perm in permutations(shares):
                    if all(r in g.likes[a] for a, r in zip(agents, perm)):
                        yield set(agents), dict(zip(agents, perm))
                        break
