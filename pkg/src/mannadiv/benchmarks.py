"""Worst-case welfare benchmarks: minMax, Maxmin, equipartitions, equal split.

minMax(u;n) is the utility of the best share in the worst n-division of
the manna, Maxmin(u;n) that of the worst share in the best division.
The main solver is an exact dynamic program over a discretized division
lattice followed by continuous pattern-search refinement; additive
utilities take an analytic shortcut.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import NoConvergence, ShapeMismatch, Unsupported
from .model import (
    COMMODITY,
    KNIFE,
    KnifePath,
    MannaSpec,
    Partition,
    Share,
    UtilitySpec,
    eval_commodity,
    eval_commodity_grid,
    eval_utility,
)
from .optimize import refine_partition, refine_vector, solve_root

GRID_RESOLUTION = 0.02
REFINE_STEP_MIN = 1e-6
DEFAULT_TOL = 1e-6
MULTISTART_COUNT = 32
MULTISTART_SEED = 42


@dataclass(frozen=True)
class BenchmarkResult:
    """A benchmark value together with an attaining witness partition."""

    value: float
    witness: Partition
    method: str
    tolerance: float


@dataclass(frozen=True)
class Equipartition:
    """Cuts along a knife path (or a direct partition) with equal utilities."""

    cuts: Optional[tuple]
    common_value: float
    residual: float
    partition: Partition
    method: str


# ---------------------------------------------------------------------------
# equipartitions along a knife path


def _segment_value(u: UtilitySpec, path: KnifePath, a: float, b: float) -> float:
    return eval_utility(u, path.segment(a, b))


def _equipartition_monotone(u, path, n, tol):
    """Bisection on the common value; each cut found by inner bisection."""
    sign = 1.0 if u.monotone_flag == "increasing" else -1.0

    def seg(a, b):
        return sign * _segment_value(u, path, a, b)

    total = seg(0.0, 1.0)

    def march(lam):
        """Place cuts so each of the first n-1 segments is worth lam;
        return the leftover of the last segment relative to lam."""
        cuts = []
        prev = 0.0
        for _ in range(n - 1):
            if seg(prev, 1.0) <= lam:
                cuts.append(1.0)
                prev = 1.0
                continue
            lo, hi = prev, 1.0
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                if seg(prev, mid) < lam:
                    lo = mid
                else:
                    hi = mid
            prev = 0.5 * (lo + hi)
            cuts.append(prev)
        return cuts, seg(prev, 1.0) - lam

    lo, hi = 0.0, max(total, 0.0)
    for _ in range(80):
        lam = 0.5 * (lo + hi)
        _, leftover = march(lam)
        if leftover > 0:
            lo = lam
        else:
            hi = lam
    lam = 0.5 * (lo + hi)
    cuts, _ = march(lam)
    values = _cut_values(u, path, cuts, n)
    return tuple(cuts), values


def _cut_values(u, path, cuts, n):
    pts = [0.0] + list(cuts) + [1.0]
    return [_segment_value(u, path, pts[i], pts[i + 1]) for i in range(n)]


def _spread(values) -> float:
    m = sum(values) / len(values)
    return sum((v - m) ** 2 for v in values)


def equipartition(
    u: UtilitySpec,
    path: KnifePath,
    n: int,
    tol: float = DEFAULT_TOL,
    restarts: int = MULTISTART_COUNT,
    seed: int = MULTISTART_SEED,
) -> Equipartition:
    """Cuts along `path` whose segments are equally valuable under `u`.

    Monotone utilities use nested bisection on the common value; the
    general case minimizes the squared spread with seeded multistart
    pattern search. An equipartition always exists, so exhausting the
    restarts raises NoConvergence instead of returning quietly.
    """
    if n < 2:
        raise Unsupported("equipartition needs n >= 2")
    method = "equalization"
    if u.monotone_flag in ("increasing", "decreasing"):
        cuts, values = _equipartition_monotone(u, path, n, tol)
        residual = max(values) - min(values)
        if residual <= max(tol, 1e-7):
            parts = _cuts_to_partition(path, cuts, n)
            return Equipartition(cuts, float(np.mean(values)), residual, parts, method)
    # general case: multistart spread minimization over the cut vector
    rng = np.random.default_rng(seed)
    lo = np.zeros(n - 1)
    hi = np.ones(n - 1)

    def objective(x):
        cuts = np.sort(np.clip(x, 0.0, 1.0))
        return _spread(_cut_values(u, path, list(cuts), n))

    starts = [np.linspace(0, 1, n + 1)[1:-1]]
    for _ in range(restarts - 1):
        starts.append(np.sort(rng.uniform(0.0, 1.0, n - 1)))
    best_cuts, best_res = None, np.inf
    for x0 in starts:
        x, _ = refine_vector(
            np.array(x0), objective, maximize=False, lo=lo, hi=hi, step0=0.25,
            step_min=1e-9,
        )
        cuts = np.sort(np.clip(x, 0.0, 1.0))
        values = _cut_values(u, path, list(cuts), n)
        residual = max(values) - min(values)
        if residual < best_res:
            best_res, best_cuts = residual, cuts
        if residual <= tol:
            parts = _cuts_to_partition(path, list(cuts), n)
            return Equipartition(
                tuple(cuts), float(np.mean(values)), residual, parts, "multistart"
            )
    raise NoConvergence(
        f"equipartition spread {best_res:.3e} above tol after {restarts} restarts",
        residual=best_res,
    )


def _cuts_to_partition(path: KnifePath, cuts, n) -> Partition:
    pts = [0.0] + list(cuts) + [1.0]
    return Partition([path.segment(pts[i], pts[i + 1]) for i in range(n)])


def commodity_equipartitions(
    u: UtilitySpec,
    manna: MannaSpec,
    n: int,
    tol: float = 1e-9,
    restarts: int = 20,
    seed: int = MULTISTART_SEED,
    extra_starts: Sequence[Partition] = (),
) -> list:
    """Direct commodity equipartitions found by multistart spread descent.

    Returns a list of (Partition, common_value); seeding with benchmark
    witness partitions steers the search to the extremal equipartitions.
    """
    if manna.kind != COMMODITY:
        raise ShapeMismatch("commodity_equipartitions needs a commodity manna")
    omega = manna.omega
    rng = np.random.default_rng(seed)

    def objective(Z):
        return _spread([eval_commodity(u, z) for z in Z])

    starts = [np.tile(omega / n, (n, 1))]
    for part in extra_starts:
        starts.append(np.array([s.z for s in part.shares]))
    while len(starts) < restarts + len(extra_starts) + 1:
        W = rng.uniform(0.0, 1.0, (n, omega.size))
        W = W / W.sum(axis=0, keepdims=True)
        starts.append(W * omega)
    found = []
    step0 = 0.25 * float(omega.max())
    for Z0 in starts:
        Z, res = refine_partition(Z0, objective, maximize=False, step0=step0)
        if res <= max(tol, 1e-10):
            values = [eval_commodity(u, z) for z in Z]
            found.append(
                (Partition([Share.of_commodity(z) for z in Z]), float(np.mean(values)))
            )
    return found


# ---------------------------------------------------------------------------
# minMax / Maxmin


def _is_additive(u: UtilitySpec) -> bool:
    if u.family == "linear":
        return True
    if u.family == "density":
        return True
    if u.family == "negated":
        return _is_additive(u.inner)
    return False


def _lattice_value_grid(u, omega, G):
    axes = [np.arange(G + 1) / G * omega[k] for k in range(omega.size)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return eval_commodity_grid(u, mesh)


def _grid_optimum(u, omega, n, G, maximin):
    """Exact optimum over the lattice by DP over remaining-bundle states.

    V_m[r] = opt over lattice shares z <= r of inner(u(z), V_{m-1}[r-z]),
    where opt/inner are (min, max) for minMax and (max, min) for Maxmin.
    Returns (value, witness shares as an (n, K) array).
    """
    K = omega.size
    ugrid = _lattice_value_grid(u, omega, G)
    outer = np.maximum if maximin else np.minimum
    inner = np.minimum if maximin else np.maximum
    V = ugrid.copy()
    choices = []
    idx_ranges = [range(G + 1)] * K
    for _ in range(n - 1):
        newV = np.full_like(V, -np.inf if maximin else np.inf)
        choice = np.zeros(V.shape, dtype=np.int64)
        for z in itertools.product(*idx_ranges):
            uz = ugrid[z]
            src = V[tuple(slice(None, G + 1 - zi) for zi in z)]
            cand = inner(uz, src)
            dst = tuple(slice(zi, None) for zi in z)
            region = newV[dst]
            better = cand > region if maximin else cand < region
            region[better] = cand[better]
            code = np.ravel_multi_index(z, V.shape)
            choice[dst][better] = code
            newV[dst] = region
        V = newV
        choices.append(choice)
    full = tuple([G] * K)
    value = float(V[full])
    # backtrack the witness
    shares = []
    r = full
    for choice in reversed(choices):
        z = np.unravel_index(choice[r], V.shape)
        shares.append(np.array(z) / G * omega)
        r = tuple(ri - zi for ri, zi in zip(r, z))
    shares.append(np.array(r) / G * omega)
    return value, np.array(shares)


def _polish_epigraph(u, omega, Z0, maximin):
    """SLSQP polish of a grid witness in epigraph form.

    Variables are the first n-1 shares plus the level t; the last share
    is the residual. Returns (value, Z) evaluated on the clipped result,
    so a failed polish can never report an infeasible value.
    """
    from scipy.optimize import minimize as _scipy_minimize

    n, K = Z0.shape
    sign = 1.0 if maximin else -1.0

    def unpack(x):
        Zf = x[:-1].reshape(n - 1, K)
        return np.vstack([Zf, omega - Zf.sum(axis=0)])

    cons = [
        {
            "type": "ineq",
            "fun": (lambda x, i=i: sign * (eval_commodity(u, np.clip(unpack(x)[i], 0.0, None)) - x[-1])),
        }
        for i in range(n)
    ]
    cons.append({"type": "ineq", "fun": lambda x: unpack(x)[-1]})
    vals0 = [eval_commodity(u, z) for z in Z0]
    x0 = np.concatenate([Z0[:-1].ravel(), [min(vals0) if maximin else max(vals0)]])
    bounds = [(0.0, float(omega[k])) for _ in range(n - 1) for k in range(K)]
    bounds.append((None, None))
    try:
        res = _scipy_minimize(
            lambda x: -sign * x[-1],
            x0,
            bounds=bounds,
            constraints=cons,
            method="SLSQP",
            options={"maxiter": 300, "ftol": 1e-12},
        )
        Z = np.clip(unpack(res.x), 0.0, None)
    except Exception:
        return (min(vals0) if maximin else max(vals0)), Z0
    # repair tiny feasibility drift in the residual share
    total = Z.sum(axis=0)
    if np.any(np.abs(total - omega) > 1e-7):
        return (min(vals0) if maximin else max(vals0)), Z0
    Z[-1] = np.clip(omega - Z[:-1].sum(axis=0), 0.0, None)
    vals = [eval_commodity(u, z) for z in Z]
    return (min(vals) if maximin else max(vals)), Z


def _solve_commodity_benchmark(u, manna, n, maximin, resolution, tol):
    omega = manna.omega
    K = omega.size
    if K > 3 or n > 4:
        raise Unsupported(f"grid benchmark solver limited to K<=3, n<=4 (got K={K}, n={n})")
    G = int(round(1.0 / resolution))
    # keep the DP transition count bounded for high dimension
    while (G + 1) ** (2 * K) > 5e7:
        G = G // 2
    _, Z = _grid_optimum(u, omega, n, G, maximin)

    def objective(Z):
        vals = [eval_commodity(u, z) for z in Z]
        return min(vals) if maximin else max(vals)

    Z, value = refine_partition(
        Z, objective, maximize=maximin, step0=float(omega.max()) / G,
        step_min=REFINE_STEP_MIN,
    )
    polished, Zp = _polish_epigraph(u, omega, Z, maximin)
    if (polished > value) == maximin and polished != value:
        value, Z = polished, Zp
        Z, value = refine_partition(
            Z, objective, maximize=maximin, step0=16 * REFINE_STEP_MIN,
            step_min=REFINE_STEP_MIN,
        )
    witness = Partition([Share.of_commodity(z) for z in Z])
    return BenchmarkResult(float(value), witness, "grid", tol)


def _equal_split_partition(manna: MannaSpec, n: int) -> Partition:
    return Partition([Share.of_commodity(manna.omega / n) for _ in range(n)])


def min_max(
    u: UtilitySpec,
    n: int,
    manna: MannaSpec,
    resolution: float = GRID_RESOLUTION,
    tol: float = DEFAULT_TOL,
) -> BenchmarkResult:
    """minMax(u;n): utility of the best share in the worst n-partition."""
    return _benchmark(u, n, manna, maximin=False, resolution=resolution, tol=tol)


def max_min(
    u: UtilitySpec,
    n: int,
    manna: MannaSpec,
    resolution: float = GRID_RESOLUTION,
    tol: float = DEFAULT_TOL,
) -> BenchmarkResult:
    """Maxmin(u;n): utility of the worst share in the best n-partition."""
    return _benchmark(u, n, manna, maximin=True, resolution=resolution, tol=tol)


def _benchmark(u, n, manna, maximin, resolution, tol):
    if n < 1:
        raise Unsupported("need n >= 1")
    if _is_additive(u):
        # additive utilities: minMax = Maxmin = u(manna)/n
        if manna.kind == COMMODITY:
            value = eval_utility(u, manna.whole_share()) / n
            return BenchmarkResult(value, _equal_split_partition(manna, n), "analytic", tol)
        value = eval_utility(u, manna.whole_share()) / n
        eq = equipartition(u, KnifePath.proportional(manna.whole_share()), n, tol)
        return BenchmarkResult(value, eq.partition, "analytic", tol)
    if manna.kind != COMMODITY:
        raise Unsupported("non-additive knife benchmarks are out of the solver's scope")
    return _solve_commodity_benchmark(u, manna, n, maximin, resolution, tol)


def equal_split(u: UtilitySpec, n: int, manna: MannaSpec) -> float:
    """Utility of the proportional bundle omega/n."""
    if manna.kind != COMMODITY:
        raise ShapeMismatch("equal split is a commodity-model benchmark")
    return eval_utility(u, Share.of_commodity(manna.omega / n))


# ---------------------------------------------------------------------------
# brute-force oracle (tests only; independent of the DP solver)


def brute_force_oracle(
    u: UtilitySpec,
    n: int,
    resolution: float,
    manna: MannaSpec,
) -> Tuple[float, float]:
    """Exact (minMax, Maxmin) over the discrete division lattice.

    Pure python enumeration, deliberately independent of the grid DP so
    the two can bound each other in tests. Budget: K <= 2, n <= 3.
    """
    if manna.kind != COMMODITY:
        raise Unsupported("oracle works on commodity manna only")
    omega = manna.omega
    K = omega.size
    if K > 2 or n > 3:
        raise Unsupported("oracle budget is K <= 2, n <= 3")
    G = int(round(1.0 / resolution))
    steps = [omega[k] / G for k in range(K)]

    def share(idx):
        return np.array([idx[k] * steps[k] for k in range(K)])

    lattice = list(itertools.product(range(G + 1), repeat=K))
    minmax, maxmin = np.inf, -np.inf
    for idx1 in lattice:
        if n == 2:
            rest = [tuple(G - idx1[k] for k in range(K))]
            divisions = [(idx1, rest[0])]
        else:
            divisions = (
                (idx1, idx2, tuple(G - idx1[k] - idx2[k] for k in range(K)))
                for idx2 in lattice
                if all(idx1[k] + idx2[k] <= G for k in range(K))
            )
        for div in divisions:
            vals = [eval_commodity(u, share(idx)) for idx in div]
            minmax = min(minmax, max(vals))
            maxmin = max(maxmin, min(vals))
    return float(minmax), float(maxmin)
