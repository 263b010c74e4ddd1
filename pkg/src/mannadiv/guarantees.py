"""Clock-protocol guarantees via equalized bid schedules.

A moving-knife clock slides a share K(t) along a path and serves the
first agent to stop it; a bid-and-choose clock raises a budget measured
by a benchmark measure theta and lets the first stopper pick any share
within budget. In both protocols the truthful bid schedule equalizes
the indirect utility of consecutive steps, and the common step value is
the guarantee of the protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import (
    NoConvergence,
    NonMonotone,
    OutOfRange,
    ShapeMismatch,
    Unsupported,
)
from .model import (
    COMMODITY,
    KnifePath,
    MannaSpec,
    MeasureSpec,
    Partition,
    Share,
    UtilitySpec,
    eval_commodity,
    eval_commodity_grid,
    eval_utility,
)
from .optimize import scan_optimize_1d, solve_root

MK = "mk"
BNC = "bnc"

DEFAULT_TOL_MK = 1e-6
DEFAULT_TOL_BNC = 1e-3


@dataclass(frozen=True)
class BidSchedule:
    """Clock times (t_0=0, t_1, ..., t_n=1) of an equalized schedule."""

    times: tuple

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))

    @property
    def n(self) -> int:
        return len(self.times) - 1

    def step(self, k: int) -> Tuple[float, float]:
        """Clock interval of step k (1-based)."""
        return self.times[k - 1], self.times[k]

    def to_json(self):
        return list(self.times)


@dataclass(frozen=True)
class GuaranteeReport:
    """An equalized schedule with its common step value (the guarantee)."""

    rule: str
    n: int
    value: float
    schedule: BidSchedule
    step_utilities: tuple
    residual: float
    tolerance: float

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "n": self.n,
            "value": self.value,
            "schedule": self.schedule.to_json(),
            "step_utilities": list(self.step_utilities),
            "residual": self.residual,
            "tolerance": self.tolerance,
        }


# ---------------------------------------------------------------------------
# indirect utilities


def u_kappa(u: UtilitySpec, path: KnifePath, t1: float, t2: float) -> float:
    """Utility of the path increment K(t2) minus K(t1)."""
    return eval_utility(u, path.segment(t1, t2))


def _check_theta_inputs(u: UtilitySpec, theta: MeasureSpec, manna: MannaSpec):
    if manna.kind != COMMODITY or theta.kind != COMMODITY:
        raise Unsupported("the budget indirect utility is commodity-only")
    if u.monotone_flag not in ("increasing", "decreasing"):
        raise NonMonotone("the budget indirect utility needs a co-monotone utility")
    if manna.n_goods > 2:
        raise Unsupported("budget-line search supports one or two goods")
    if np.any(theta.price <= 0):
        raise Unsupported("the measure must price every good positively")


def _best_on_line(u, cap, price, budget, maximize=True, samples=129, rounds=5):
    """Optimum of u over shares S <= cap with price . S = budget.

    Returns (value, share vector). The budget is clamped to the feasible
    range [0, price . cap]; one good is a direct solve and two goods a
    dense scan along the budget line.
    """
    cap = np.asarray(cap, dtype=float)
    p = np.asarray(price, dtype=float)
    total = float(p @ cap)
    b = min(max(float(budget), 0.0), total)
    if b >= total - 1e-13:
        return eval_commodity(u, cap), cap.copy()
    if cap.size == 1:
        z = np.array([b / p[0]])
        return eval_commodity(u, z), z
    if cap.size != 2:
        raise Unsupported("budget-line search supports one or two goods")
    xlo = max(0.0, (b - p[1] * cap[1]) / p[0])
    xhi = min(float(cap[0]), b / p[0])

    def f(xs):
        ys = np.clip((b - p[0] * xs) / p[1], 0.0, cap[1])
        return eval_commodity_grid(u, [xs, ys])

    x, v = scan_optimize_1d(f, xlo, xhi, maximize=maximize, samples=samples, rounds=rounds)
    y = min(max((b - p[0] * x) / p[1], 0.0), float(cap[1]))
    return float(v), np.array([x, y])


def _inner_best_rows(u, p, c0, c1, budget, samples, rounds):
    """Best share value of measure `budget` inside each cap row (c0, c1).

    Vectorised over rows: each row gets its own window on the budget
    line, refined by nested scans with per-row zooming.
    """
    total = p[0] * c0 + p[1] * c1
    b = np.minimum(budget, total)
    xlo0 = np.maximum(0.0, (b - p[1] * c1) / p[0])
    xhi0 = np.minimum(c0, b / p[0])
    lo, hi = xlo0.copy(), np.maximum(xhi0, xlo0)
    frac = np.linspace(0.0, 1.0, samples)
    rows = np.arange(c0.size)
    best = None
    for _ in range(rounds):
        X = lo[:, None] + frac[None, :] * (hi - lo)[:, None]
        Y = np.clip((b[:, None] - p[0] * X) / p[1], 0.0, c1[:, None])
        U = eval_commodity_grid(u, [X, Y])
        idx = np.argmax(U, axis=1)
        best = U[rows, idx]
        span = (hi - lo) / (samples - 1)
        bx = X[rows, idx]
        lo = np.maximum(xlo0, bx - span)
        hi = np.minimum(np.maximum(xhi0, xlo0), bx + span)
    return best


def u_theta(
    u: UtilitySpec,
    theta: MeasureSpec,
    manna: MannaSpec,
    t1: float,
    t2: float,
    samples: Tuple[int, int] = (49, 65),
    rounds: Tuple[int, int] = (5, 5),
    witness: bool = False,
):
    """Worst-case best share: an adversary removes any T of measure t1,
    then the agent takes their best share of measure t2 - t1 from what
    is left. Nonincreasing in t1 and nondecreasing in t2.
    """
    _check_theta_inputs(u, theta, manna)
    if not (-1e-9 <= t1 <= t2 + 1e-9 and t2 <= 1 + 1e-9):
        raise OutOfRange(f"need 0 <= t1 <= t2 <= 1, got ({t1}, {t2})")
    t1 = min(max(t1, 0.0), 1.0)
    t2 = min(max(t2, t1), 1.0)
    p = theta.price
    omega = manna.omega
    b2 = t2 - t1
    if manna.n_goods == 1:
        T = np.array([t1 / p[0]])
        val, S = _best_on_line(u, omega - T, p, b2)
        if witness:
            return val, Share.of_commodity(T), Share.of_commodity(S)
        return val
    if t1 <= 1e-13:
        val, S = _best_on_line(u, omega, p, b2, samples=samples[1], rounds=rounds[1])
        if witness:
            return val, manna.empty_share(), Share.of_commodity(S)
        return val
    # the removal T = (a, (t1 - p0 a) / p1) is a point on its own budget line
    alo = max(0.0, (t1 - p[1] * omega[1]) / p[0])
    ahi = min(float(omega[0]), t1 / p[0])
    lo, hi = alo, ahi
    best_a, best_g = alo, None
    for _ in range(rounds[0]):
        As = np.linspace(lo, hi, samples[0]) if hi > lo else np.array([lo])
        c0 = omega[0] - As
        c1 = np.clip(omega[1] - (t1 - p[0] * As) / p[1], 0.0, None)
        g = _inner_best_rows(u, p, c0, c1, b2, samples[1], rounds[1])
        i = int(np.argmin(g))
        best_a, best_g = float(As[i]), float(g[i])
        if hi <= lo:
            break
        span = (hi - lo) / (len(As) - 1)
        lo, hi = max(alo, best_a - span), min(ahi, best_a + span)
    if not witness:
        return best_g
    T = np.array([best_a, min(max((t1 - p[0] * best_a) / p[1], 0.0), float(omega[1]))])
    val, S = _best_on_line(u, omega - T, p, b2, samples=samples[1], rounds=rounds[1])
    return val, Share.of_commodity(T), Share.of_commodity(S)


# ---------------------------------------------------------------------------
# equalization


def _solve_cut(d, lo, hi, iters, scan):
    """Smallest s in [lo, hi] with d(s) = 0, assuming d(lo) <= 0 <= d(hi)."""
    if scan:
        return solve_root(d, lo, hi, samples=33, iters=iters)
    if d(lo) >= 0:
        return lo
    if d(hi) <= 0:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if d(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def equalize(
    u: UtilitySpec,
    rule: str,
    n: int,
    *,
    manna: Optional[MannaSpec] = None,
    path: Optional[KnifePath] = None,
    theta: Optional[MeasureSpec] = None,
    tol: Optional[float] = None,
    iters: int = 48,
) -> GuaranteeReport:
    """Equalized bid schedule and guarantee for a clock protocol.

    For rule "mk" steps are valued by u_kappa along `path`; for rule
    "bnc" by u_theta under `theta` on `manna`. The cut after each step
    is found by bisection so that the step matches the equalized value
    of the remaining steps; nonmonotone utilities (mk only) fall back to
    a scanning root solve that keeps the smallest root.
    """
    if rule not in (MK, BNC):
        raise Unsupported(f"unknown clock rule {rule!r}")
    if n < 1:
        raise Unsupported("need n >= 1")
    if tol is None:
        tol = DEFAULT_TOL_MK if rule == MK else DEFAULT_TOL_BNC
    if rule == MK:
        if path is None:
            raise Unsupported("the moving-knife rule needs a path")
        F = lambda a, b: u_kappa(u, path, a, b)
    else:
        if theta is None or manna is None:
            raise Unsupported("the bid-and-choose rule needs a measure and manna")
        _check_theta_inputs(u, theta, manna)
        F = lambda a, b: u_theta(u, theta, manna, a, b)
    sign = -1.0 if u.monotone_flag == "decreasing" else 1.0
    scan = rule == MK and u.monotone_flag == "none"

    def sigma(a, b):
        return sign * F(a, b)

    def tail(k, a):
        """Equalize steps k..n on [a, 1]; return (common value, cuts)."""
        if k == n:
            return sigma(a, 1.0), []
        s = _solve_cut(
            lambda s: sigma(a, s) - tail(k + 1, s)[0], a, 1.0, iters, scan
        )
        _, cuts = tail(k + 1, s)
        return sigma(a, s), [s] + cuts

    _, cuts = tail(1, 0.0)
    times = (0.0, *cuts, 1.0)
    step_utilities = tuple(F(times[i], times[i + 1]) for i in range(n))
    residual = float(max(step_utilities) - min(step_utilities))
    if residual > 50 * max(tol, 1e-12):
        raise NoConvergence(
            f"equalization residual {residual:.3e} above tolerance", residual=residual
        )
    return GuaranteeReport(
        rule=rule,
        n=n,
        value=float(np.mean(step_utilities)),
        schedule=BidSchedule(times),
        step_utilities=step_utilities,
        residual=residual,
        tolerance=float(tol),
    )


def gamma_kappa(
    u: UtilitySpec, path: KnifePath, n: int, tol: Optional[float] = None
) -> GuaranteeReport:
    """Moving-knife guarantee along `path`. With the default proportional
    path and a monotone utility this equals the equal-split utility."""
    return equalize(u, MK, n, path=path, tol=tol)


def gamma_theta(
    u: UtilitySpec,
    theta: MeasureSpec,
    manna: MannaSpec,
    n: int,
    tol: Optional[float] = None,
) -> GuaranteeReport:
    """Bid-and-choose guarantee under the benchmark measure `theta`."""
    return equalize(u, BNC, n, theta=theta, manna=manna, tol=tol)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class AntisymmetryReport:
    """Comparison of the guarantees of u and -u at n = 2."""

    ok: bool
    value: float
    negated_value: float
    gap: float
    tolerance: float


def antisymmetry_check(
    u: UtilitySpec,
    rule: str,
    *,
    manna: Optional[MannaSpec] = None,
    path: Optional[KnifePath] = None,
    theta: Optional[MeasureSpec] = None,
    tol: float = 5e-3,
) -> AntisymmetryReport:
    """For two agents the guarantee of -u is minus the guarantee of u.

    Both sides are computed independently by the equalizer, so this is a
    real consistency check rather than an identity.
    """
    r_pos = equalize(u, rule, 2, manna=manna, path=path, theta=theta)
    r_neg = equalize(u.negated(), rule, 2, manna=manna, path=path, theta=theta)
    gap = abs(r_pos.value + r_neg.value)
    return AntisymmetryReport(gap <= tol, r_pos.value, r_neg.value, gap, tol)


def schedule_partition(
    u: UtilitySpec,
    theta: MeasureSpec,
    manna: MannaSpec,
    schedule: BidSchedule,
    best: bool = True,
) -> Partition:
    """Greedy partition realizing a bid schedule.

    With best=True, share k is the agent's best share of the scheduled
    measure inside the remaining manna and the last share is the
    residual; every share is then worth at least the guarantee, which
    makes the schedule a Maxmin witness. With best=False the steps are
    carved in reverse order (the last increment first, each time the
    agent's worst share of that measure) and the residual becomes the
    first share; every share is then worth at most the guarantee,
    a minMax-style witness.
    """
    _check_theta_inputs(u, theta, manna)
    rem = manna.omega.copy()
    shares = []
    times = schedule.times
    n = len(times) - 1
    order = range(n) if best else range(n - 1, -1, -1)
    residual_step = n - 1 if best else 0
    for k in order:
        if k == residual_step:
            z = rem.copy()
        else:
            _, z = _best_on_line(u, rem, theta.price, times[k + 1] - times[k], maximize=best)
        shares.append(Share.of_commodity(z))
        rem = np.clip(rem - z, 0.0, None)
    if not best:
        shares.reverse()
    return Partition(shares)


def best_budget_share(
    u: UtilitySpec,
    theta: MeasureSpec,
    remaining: Share,
    budget: float,
    maximize: bool = True,
) -> Share:
    """The agent's best share of measure `budget` inside `remaining`."""
    if remaining.kind != COMMODITY:
        raise ShapeMismatch("budget shares are commodity-only")
    _, z = _best_on_line(u, remaining.z, theta.price, budget, maximize=maximize)
    return Share.of_commodity(z)
