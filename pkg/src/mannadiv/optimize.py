"""Small deterministic search primitives shared by the solvers.

Nothing here knows about manna or utilities: these operate on plain
callables and numpy arrays so the benchmark and guarantee solvers can
stay readable.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import NoConvergence


def solve_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    samples: int = 65,
    iters: int = 80,
    zero_tol: float = 1e-12,
) -> float:
    """Leftmost root of f on [lo, hi]: coarse sign scan, then bisection.

    Scanning first keeps the result deterministic when several roots
    exist (we return the smallest one found at scan resolution).
    """
    ts = np.linspace(lo, hi, samples)
    vals = [f(t) for t in ts]
    for i, v in enumerate(vals):
        if abs(v) <= zero_tol:
            return float(ts[i])
        if i and vals[i - 1] * v < 0:
            a, b, fa = ts[i - 1], ts[i], vals[i - 1]
            for _ in range(iters):
                m = 0.5 * (a + b)
                fm = f(m)
                if abs(fm) <= zero_tol:
                    return float(m)
                if fa * fm < 0:
                    b = m
                else:
                    a, fa = m, fm
            return float(0.5 * (a + b))
    best = int(np.argmin(np.abs(vals)))
    raise NoConvergence(
        f"no sign change on [{lo}, {hi}]", residual=float(abs(vals[best]))
    )


def scan_optimize_1d(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    maximize: bool = True,
    samples: int = 129,
    rounds: int = 4,
) -> Tuple[float, float]:
    """Optimize a vectorised scalar function by nested dense scans.

    Returns (argopt, opt). Ties break toward the smaller argument.
    """
    if hi <= lo:
        val = float(np.asarray(f(np.array([lo])))[0])
        return lo, val
    a, b = float(lo), float(hi)
    best_x, best_v = a, None
    for _ in range(rounds):
        xs = np.linspace(a, b, samples)
        vs = np.asarray(f(xs), dtype=float)
        idx = int(np.argmax(vs)) if maximize else int(np.argmin(vs))
        best_x, best_v = float(xs[idx]), float(vs[idx])
        span = (b - a) / (samples - 1)
        a, b = max(lo, best_x - span), min(hi, best_x + span)
    return best_x, best_v


def refine_partition(
    Z: np.ndarray,
    objective: Callable[[np.ndarray], float],
    maximize: bool,
    step0: float,
    step_min: float = 1e-6,
    max_sweeps: int = 4000,
) -> Tuple[np.ndarray, float]:
    """Pattern search over divisions of a bundle.

    Z is an (n, K) matrix of shares with fixed column sums; moves
    transfer `step` units between two shares, either on one coordinate
    or on all coordinates at once (the diagonal move matters for kinked
    utilities like Leontief). The step shrinks when no move improves,
    down to step_min.
    """
    Z = np.array(Z, dtype=float)
    n, K = Z.shape
    sign = 1.0 if maximize else -1.0
    best = sign * objective(Z)
    step = step0
    sweeps = 0
    while step >= step_min and sweeps < max_sweeps:
        improved = False
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for k in list(range(K)) + [None]:
                    if k is None:
                        amt = np.minimum(step, Z[i])
                        if not np.any(amt > 0):
                            continue
                    else:
                        amt = min(step, Z[i, k])
                        if amt <= 0:
                            continue
                    if k is None:
                        Z[i] -= amt
                        Z[j] += amt
                    else:
                        Z[i, k] -= amt
                        Z[j, k] += amt
                    val = sign * objective(Z)
                    if val > best + 1e-15:
                        best = val
                        improved = True
                    elif k is None:
                        Z[i] += amt
                        Z[j] -= amt
                    else:
                        Z[i, k] += amt
                        Z[j, k] -= amt
        # blend toward the centroid division: reaches symmetric optima that
        # pairwise transfers cannot improve strictly (e.g. Leontief kinks)
        centroid = Z.mean(axis=0)
        lam = min(1.0, step / (np.abs(Z - centroid).max() + 1e-30))
        cand = (1.0 - lam) * Z + lam * centroid
        val = sign * objective(cand)
        if val > best + 1e-15:
            Z, best, improved = cand, val, True
        sweeps += 1
        if not improved:
            step *= 0.5
    return Z, sign * best


def refine_vector(
    x: np.ndarray,
    objective: Callable[[np.ndarray], float],
    maximize: bool,
    lo: np.ndarray,
    hi: np.ndarray,
    step0: float,
    step_min: float = 1e-9,
    max_sweeps: int = 4000,
) -> Tuple[np.ndarray, float]:
    """Coordinate pattern search in a box (used for cut vectors)."""
    x = np.array(x, dtype=float)
    sign = 1.0 if maximize else -1.0
    best = sign * objective(x)
    step = step0
    sweeps = 0
    while step >= step_min and sweeps < max_sweeps:
        improved = False
        for k in range(x.size):
            for d in (step, -step):
                cand = min(max(x[k] + d, lo[k]), hi[k])
                if cand == x[k]:
                    continue
                old = x[k]
                x[k] = cand
                val = sign * objective(x)
                if val > best + 1e-15:
                    best = val
                    improved = True
                else:
                    x[k] = old
        sweeps += 1
        if not improved:
            step *= 0.5
    return x, sign * best
