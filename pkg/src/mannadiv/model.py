"""Manna, shares, partitions, utilities, benchmark measures and knife paths.

Two concrete manna models are supported: a bundle of divisible commodities
(shares are nonnegative vectors) and the unit interval under a knife
(shares are finite unions of closed subintervals).
"""

from __future__ import annotations

import ast
import json
import math
import operator
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    InvariantViolation,
    NonSegmentShare,
    OutOfRange,
    ShapeMismatch,
)

COMMODITY = "commodity"
KNIFE = "knife"

FEASIBILITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# manna and shares


@dataclass(frozen=True)
class MannaSpec:
    """The divisible resource: a commodity bundle or the unit interval."""

    kind: str
    omega: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == COMMODITY:
            om = np.asarray(self.omega, dtype=float)
            if om.ndim != 1 or om.size < 1:
                raise InvariantViolation("commodity manna needs a 1-d endowment")
            if np.any(om <= 0):
                raise InvariantViolation("every commodity endowment must be positive")
            object.__setattr__(self, "omega", om)
        elif self.kind == KNIFE:
            object.__setattr__(self, "omega", None)
        else:
            raise InvariantViolation(f"unknown manna kind {self.kind!r}")

    @property
    def n_goods(self) -> int:
        return 0 if self.kind == KNIFE else int(self.omega.size)

    def whole_share(self) -> "Share":
        if self.kind == COMMODITY:
            return Share.of_commodity(self.omega)
        return Share.of_knife([(0.0, 1.0)])

    def empty_share(self) -> "Share":
        if self.kind == COMMODITY:
            return Share.of_commodity(np.zeros_like(self.omega))
        return Share.of_knife([])

    def to_json(self) -> dict:
        if self.kind == COMMODITY:
            return {"kind": COMMODITY, "omega": list(map(float, self.omega))}
        return {"kind": KNIFE}

    @staticmethod
    def from_json(d: dict) -> "MannaSpec":
        if d.get("kind") == COMMODITY:
            return MannaSpec(COMMODITY, np.asarray(d["omega"], dtype=float))
        if d.get("kind") == KNIFE:
            return MannaSpec(KNIFE)
        raise InvariantViolation(f"bad manna spec {d!r}")


def _normalize_intervals(intervals) -> tuple:
    ivs = []
    for a, b in intervals:
        a, b = float(a), float(b)
        if b < a - FEASIBILITY_TOL:
            raise InvariantViolation(f"interval ({a}, {b}) is reversed")
        if not (-FEASIBILITY_TOL <= a and b <= 1 + FEASIBILITY_TOL):
            raise InvariantViolation("intervals must lie inside [0, 1]")
        if b - a > FEASIBILITY_TOL:
            ivs.append((max(a, 0.0), min(b, 1.0)))
    ivs.sort()
    merged = []
    for a, b in ivs:
        if merged and a <= merged[-1][1] + FEASIBILITY_TOL:
            if a < merged[-1][1] - FEASIBILITY_TOL:
                raise InvariantViolation("intervals overlap")
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return tuple(merged)


class Share:
    """A portion of the manna: a commodity vector or an interval union."""

    __slots__ = ("kind", "z", "intervals")

    def __init__(self, kind, z=None, intervals=None):
        self.kind = kind
        if kind == COMMODITY:
            z = np.asarray(z, dtype=float)
            if np.any(z < -FEASIBILITY_TOL):
                raise InvariantViolation("commodity share has a negative coordinate")
            self.z = np.maximum(z, 0.0)
            self.intervals = None
        elif kind == KNIFE:
            self.z = None
            self.intervals = _normalize_intervals(intervals or [])
        else:
            raise InvariantViolation(f"unknown share kind {kind!r}")

    @staticmethod
    def of_commodity(z) -> "Share":
        return Share(COMMODITY, z=z)

    @staticmethod
    def of_knife(intervals) -> "Share":
        return Share(KNIFE, intervals=intervals)

    @property
    def is_empty(self) -> bool:
        if self.kind == COMMODITY:
            return bool(np.all(self.z <= FEASIBILITY_TOL))
        return len(self.intervals) == 0

    def length(self) -> float:
        """Lebesgue size: total vector mass or total interval length."""
        if self.kind == COMMODITY:
            return float(self.z.sum())
        return float(sum(b - a for a, b in self.intervals))

    def plus(self, other: "Share") -> "Share":
        _check_same_kind(self, other)
        if self.kind == COMMODITY:
            return Share.of_commodity(self.z + other.z)
        return Share.of_knife(list(self.intervals) + list(other.intervals))

    def to_json(self):
        if self.kind == COMMODITY:
            return {"z": list(map(float, self.z))}
        return {"intervals": [[a, b] for a, b in self.intervals]}

    @staticmethod
    def from_json(d) -> "Share":
        if "z" in d:
            return Share.of_commodity(d["z"])
        return Share.of_knife(d["intervals"])

    def __repr__(self):
        if self.kind == COMMODITY:
            return f"Share({np.array2string(self.z, precision=6)})"
        return f"Share({list(self.intervals)})"

    def __eq__(self, other):
        if not isinstance(other, Share) or other.kind != self.kind:
            return NotImplemented
        if self.kind == COMMODITY:
            return self.z.shape == other.z.shape and bool(np.all(self.z == other.z))
        return self.intervals == other.intervals


def _check_same_kind(a, b):
    if a.kind != b.kind:
        raise ShapeMismatch(f"mixed share kinds {a.kind!r} and {b.kind!r}")


@dataclass(frozen=True)
class Partition:
    """An ordered list of shares exhausting a reference share of the manna."""

    shares: tuple

    def __init__(self, shares: Sequence[Share]):
        object.__setattr__(self, "shares", tuple(shares))
        if not self.shares:
            raise InvariantViolation("a partition needs at least one share")
        kinds = {s.kind for s in self.shares}
        if len(kinds) != 1:
            raise ShapeMismatch("partition mixes share kinds")

    def __len__(self):
        return len(self.shares)

    def __iter__(self):
        return iter(self.shares)

    def __getitem__(self, i):
        return self.shares[i]

    @property
    def kind(self):
        return self.shares[0].kind

    def validate_against(self, whole: Share, tol: float = FEASIBILITY_TOL):
        """Check the shares reassemble `whole` within tolerance."""
        _check_same_kind(self.shares[0], whole)
        if self.kind == COMMODITY:
            total = sum(s.z for s in self.shares)
            if np.any(np.abs(total - whole.z) > max(tol, 1e-9 * (1 + whole.z.max()))):
                raise InvariantViolation(
                    f"partition shares sum to {total}, expected {whole.z}"
                )
        else:
            covered = sum(s.length() for s in self.shares)
            union = _normalize_intervals(
                [iv for s in self.shares for iv in s.intervals]
            )
            union_len = sum(b - a for a, b in union)
            if abs(covered - union_len) > 1e-6:
                raise InvariantViolation("partition intervals overlap")
            if abs(union_len - whole.length()) > 1e-6:
                raise InvariantViolation("partition intervals do not cover the manna")

    def to_json(self):
        return [s.to_json() for s in self.shares]

    @staticmethod
    def from_json(items) -> "Partition":
        return Partition([Share.from_json(d) for d in items])


# ---------------------------------------------------------------------------
# utilities


_EXPR_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}

_EXPR_FUNCS = {"min": min, "max": max, "sqrt": math.sqrt, "abs": abs}

_EXPR_VARS = ("x", "y", "z")


def compile_expression(expr: str) -> Callable:
    """Compile a restricted arithmetic expression over coordinates x, y, z.

    Only +, -, *, /, ** and min/max/sqrt/abs are allowed; everything else
    is rejected at parse time so config files cannot run arbitrary code.
    """
    tree = ast.parse(expr, mode="eval")

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _EXPR_OPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _EXPR_OPS:
            check(node.operand)
        elif isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in _EXPR_FUNCS):
                raise InvariantViolation(f"call not allowed in expression: {expr!r}")
            if node.keywords:
                raise InvariantViolation("keyword arguments not allowed")
            for a in node.args:
                check(a)
        elif isinstance(node, ast.Name):
            if node.id not in _EXPR_VARS:
                raise InvariantViolation(f"unknown variable {node.id!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise InvariantViolation("only numeric constants allowed")
        else:
            raise InvariantViolation(
                f"disallowed syntax {type(node).__name__} in expression {expr!r}"
            )

    check(tree)

    def evaluate(node, env):
        if isinstance(node, ast.Expression):
            return evaluate(node.body, env)
        if isinstance(node, ast.BinOp):
            return _EXPR_OPS[type(node.op)](
                evaluate(node.left, env), evaluate(node.right, env)
            )
        if isinstance(node, ast.UnaryOp):
            return _EXPR_OPS[type(node.op)](evaluate(node.operand, env))
        if isinstance(node, ast.Call):
            args = [evaluate(a, env) for a in node.args]
            return _EXPR_FUNCS[node.func.id](*args)
        if isinstance(node, ast.Name):
            return env[node.id]
        return node.value

    def fn(zvec):
        env = {name: (zvec[i] if i < len(zvec) else 0.0) for i, name in enumerate(_EXPR_VARS)}
        return float(evaluate(tree, env))

    return fn


COMMODITY_FAMILIES = (
    "leontief",
    "anti_leontief",
    "cobb_douglas",
    "ces",
    "linear",
    "quadratic_norm",
    "polynomial",
    "piecewise_two_good",
    "expression",
)

KNIFE_FAMILIES = ("density", "segment")

_INCREASING_BY_DEFAULT = {
    "leontief",
    "anti_leontief",
    "cobb_douglas",
    "ces",
    "linear",
    "quadratic_norm",
    "density",
}


@dataclass(frozen=True)
class UtilitySpec:
    """A utility function over shares: family tag plus parameters.

    The monotone flag is declared, not inferred; `validate_monotone`
    spot-checks it by sampling nested share pairs.
    """

    family: str
    scale: float = 1.0
    weights: Optional[tuple] = None
    rho: Optional[float] = None
    coeffs: Optional[tuple] = None
    variant: int = 1
    expr: Optional[str] = None
    pieces: Optional[tuple] = None
    segment_fn: Optional[Callable] = None
    inner: Optional["UtilitySpec"] = None
    monotone: str = ""
    label: str = ""

    def __post_init__(self):
        if self.family not in COMMODITY_FAMILIES + KNIFE_FAMILIES + ("negated",):
            raise InvariantViolation(f"unknown utility family {self.family!r}")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.coeffs is not None:
            coeffs = tuple(float(c) for c in self.coeffs)
            if self.family == "polynomial" and coeffs and coeffs[0] != 0.0:
                raise InvariantViolation("polynomial utility needs zero constant term")
            object.__setattr__(self, "coeffs", coeffs)
        if self.pieces is not None:
            object.__setattr__(
                self, "pieces", tuple((float(a), float(b), float(v)) for a, b, v in self.pieces)
            )
        if self.family == "expression" and self.expr:
            object.__setattr__(self, "segment_fn", None)
        if not self.monotone:
            default = "increasing" if self.family in _INCREASING_BY_DEFAULT else "none"
            if self.family == "negated":
                flip = {"increasing": "decreasing", "decreasing": "increasing"}
                default = flip.get(self.inner.monotone_flag, "none")
            object.__setattr__(self, "monotone", default)

    @property
    def monotone_flag(self) -> str:
        return self.monotone

    @property
    def manna_kind(self) -> str:
        if self.family in KNIFE_FAMILIES:
            return KNIFE
        if self.family == "negated":
            return self.inner.manna_kind
        return COMMODITY

    def negated(self) -> "UtilitySpec":
        if self.family == "negated":
            return self.inner
        return UtilitySpec("negated", inner=self, label=f"-({self.label or self.family})")

    def to_json(self) -> dict:
        if self.segment_fn is not None:
            raise InvariantViolation("segment utilities are not serializable")
        d = {"family": self.family, "scale": self.scale}
        for key in ("weights", "rho", "coeffs", "expr", "pieces"):
            val = getattr(self, key)
            if val is not None:
                d[key] = list(val) if isinstance(val, tuple) else val
        if self.family == "piecewise_two_good":
            d["variant"] = self.variant
        if self.family == "negated":
            d["inner"] = self.inner.to_json()
        if self.monotone:
            d["monotone"] = self.monotone
        if self.label:
            d["label"] = self.label
        return d

    @staticmethod
    def from_json(d: dict) -> "UtilitySpec":
        d = dict(d)
        inner = d.pop("inner", None)
        return UtilitySpec(
            family=d.pop("family"),
            scale=float(d.pop("scale", 1.0)),
            weights=d.pop("weights", None),
            rho=d.pop("rho", None),
            coeffs=d.pop("coeffs", None),
            variant=int(d.pop("variant", 1)),
            expr=d.pop("expr", None),
            pieces=d.pop("pieces", None),
            inner=UtilitySpec.from_json(inner) if inner else None,
            monotone=d.pop("monotone", ""),
            label=d.pop("label", ""),
        )


def _piecewise_two_good(zvec, variant) -> float:
    x, y = float(zvec[0]), float(zvec[1])
    if x > y:
        x, y = y, x
    if variant == 1:
        if x <= 0.5 <= y:
            return 0.0
        if y <= 0.5:
            return 1.0 - 2.0 * y
        return 2.0 * x - 1.0
    if y <= 0.5 or x >= 0.5:
        return 0.0
    if y <= 1.0 - x:
        return 2.0 * y - 1.0
    return 1.0 - 2.0 * x


def _poly_integral(coeffs, a, b) -> float:
    return sum(c / (i + 1) * (b ** (i + 1) - a ** (i + 1)) for i, c in enumerate(coeffs))


def _density_integral(u: UtilitySpec, intervals) -> float:
    total = 0.0
    if u.pieces is not None:
        for a, b in intervals:
            for pa, pb, v in u.pieces:
                lo, hi = max(a, pa), min(b, pb)
                if hi > lo:
                    total += v * (hi - lo)
    else:
        coeffs = u.coeffs or (1.0,)
        for a, b in intervals:
            total += _poly_integral(coeffs, a, b)
    return u.scale * total


def eval_utility(u: UtilitySpec, s: Share) -> float:
    """Evaluate utility `u` at share `s`."""
    if u.family == "negated":
        return -eval_utility(u.inner, s)
    if s.kind != u.manna_kind:
        raise ShapeMismatch(
            f"utility family {u.family!r} expects a {u.manna_kind} share, got {s.kind}"
        )
    if s.kind == KNIFE:
        if u.family == "segment":
            if s.is_empty:
                return 0.0
            if len(s.intervals) != 1:
                raise NonSegmentShare("segment utility applied to an interval union")
            a, b = s.intervals[0]
            return float(u.scale * u.segment_fn(a, b))
        return float(_density_integral(u, s.intervals))
    return eval_commodity(u, s.z)


def eval_commodity(u: UtilitySpec, z: np.ndarray) -> float:
    """Commodity-family evaluation on a raw vector (fast path for solvers)."""
    if u.family == "negated":
        return -eval_commodity(u.inner, z)
    z = np.asarray(z, dtype=float)
    w = np.asarray(u.weights, dtype=float) if u.weights is not None else np.ones(z.size)
    if u.family == "leontief":
        return float(u.scale * np.min(w * z))
    if u.family == "anti_leontief":
        return float(u.scale * np.max(w * z))
    if u.family == "cobb_douglas":
        expo = w / w.sum()
        return float(u.scale * np.prod(np.maximum(z, 0.0) ** expo))
    if u.family == "ces":
        rho = u.rho if u.rho is not None else 0.5
        return float(u.scale * (np.sum(w * np.maximum(z, 0.0) ** rho)) ** (1.0 / rho))
    if u.family == "linear":
        return float(u.scale * np.sum(w * z))
    if u.family == "quadratic_norm":
        return float(u.scale * math.sqrt(float(np.sum(w * z * z))))
    if u.family == "polynomial":
        s = float(z[0])
        return float(u.scale * sum(c * s ** i for i, c in enumerate(u.coeffs)))
    if u.family == "piecewise_two_good":
        return float(u.scale * _piecewise_two_good(z, u.variant))
    if u.family == "expression":
        if not hasattr(u, "_compiled"):
            object.__setattr__(u, "_compiled", compile_expression(u.expr))
        return float(u.scale * u._compiled(z))
    raise ShapeMismatch(f"family {u.family!r} is not a commodity family")


def eval_commodity_grid(u: UtilitySpec, coords: Sequence[np.ndarray]) -> np.ndarray:
    """Vectorised commodity evaluation on broadcastable coordinate arrays."""
    if u.family == "negated":
        return -eval_commodity_grid(u.inner, coords)
    coords = [np.asarray(c, dtype=float) for c in coords]
    K = len(coords)
    w = np.asarray(u.weights, dtype=float) if u.weights is not None else np.ones(K)
    if u.family == "leontief":
        out = w[0] * coords[0]
        for k in range(1, K):
            out = np.minimum(out, w[k] * coords[k])
        return u.scale * out
    if u.family == "anti_leontief":
        out = w[0] * coords[0]
        for k in range(1, K):
            out = np.maximum(out, w[k] * coords[k])
        return u.scale * out
    if u.family == "cobb_douglas":
        expo = w / w.sum()
        out = np.clip(coords[0], 0.0, None) ** expo[0]
        for k in range(1, K):
            out = out * np.clip(coords[k], 0.0, None) ** expo[k]
        return u.scale * out
    if u.family == "ces":
        rho = u.rho if u.rho is not None else 0.5
        out = sum(w[k] * np.clip(coords[k], 0.0, None) ** rho for k in range(K))
        return u.scale * out ** (1.0 / rho)
    if u.family == "linear":
        return u.scale * sum(w[k] * coords[k] for k in range(K))
    if u.family == "quadratic_norm":
        return u.scale * np.sqrt(sum(w[k] * coords[k] ** 2 for k in range(K)))
    if u.family == "polynomial":
        s = coords[0]
        out = np.zeros_like(s)
        for i, c in enumerate(reversed(u.coeffs)):
            out = out * s + c
        return u.scale * out
    if u.family == "piecewise_two_good":
        x = np.minimum(coords[0], coords[1])
        y = np.maximum(coords[0], coords[1])
        if u.variant == 1:
            out = np.where(
                (x <= 0.5) & (0.5 <= y),
                0.0,
                np.where(y <= 0.5, 1.0 - 2.0 * y, 2.0 * x - 1.0),
            )
        else:
            out = np.where(
                (y <= 0.5) | (x >= 0.5),
                0.0,
                np.where(y <= 1.0 - x, 2.0 * y - 1.0, 1.0 - 2.0 * x),
            )
        return u.scale * out
    # expression and anything exotic: fall back to a python loop
    broad = np.broadcast(*coords)
    out = np.empty(broad.shape)
    flat = out.reshape(-1)
    for i, zs in enumerate(np.broadcast(*coords)):
        flat[i] = eval_commodity(u, np.array(zs))
    return out


def validate_monotone(
    u: UtilitySpec,
    manna: MannaSpec,
    samples: int = 1000,
    rng: Optional[np.random.Generator] = None,
    tol: float = 1e-9,
) -> bool:
    """Spot-check the declared monotone flag on random nested share pairs."""
    if u.monotone_flag == "none":
        return True
    rng = rng or np.random.default_rng(0)
    sign = 1.0 if u.monotone_flag == "increasing" else -1.0
    for _ in range(samples):
        if manna.kind == COMMODITY:
            big = rng.uniform(0.0, 1.0, manna.n_goods) * manna.omega
            small = big * rng.uniform(0.0, 1.0, manna.n_goods)
            us, ub = (
                eval_utility(u, Share.of_commodity(small)),
                eval_utility(u, Share.of_commodity(big)),
            )
        else:
            a, b = sorted(rng.uniform(0.0, 1.0, 2))
            inner = sorted(rng.uniform(a, b, 2))
            us = eval_utility(u, Share.of_knife([tuple(inner)]))
            ub = eval_utility(u, Share.of_knife([(a, b)]))
        if sign * (ub - us) < -tol:
            return False
    return True


# ---------------------------------------------------------------------------
# benchmark measures


@dataclass(frozen=True)
class MeasureSpec:
    """A normalized, inclusion-increasing benchmark measure of shares."""

    kind: str
    price: Optional[np.ndarray] = None
    pieces: Optional[tuple] = None  # knife density, piecewise-constant

    @staticmethod
    def from_price(price, manna: MannaSpec) -> "MeasureSpec":
        p = np.asarray(price, dtype=float)
        if p.shape != manna.omega.shape:
            raise ShapeMismatch("price vector length does not match the endowment")
        if np.any(p < 0) or np.all(p == 0):
            raise InvariantViolation("price must be nonnegative and nonzero")
        if np.any(p == 0):
            warnings.warn("some prices are zero: the measure is not strictly increasing")
        total = float(p @ manna.omega)
        return MeasureSpec(COMMODITY, price=p / total)

    @staticmethod
    def lebesgue() -> "MeasureSpec":
        return MeasureSpec(KNIFE, pieces=((0.0, 1.0, 1.0),))

    @staticmethod
    def from_density(pieces) -> "MeasureSpec":
        pieces = tuple((float(a), float(b), float(v)) for a, b, v in pieces)
        if any(v <= 0 for _, _, v in pieces):
            raise InvariantViolation("measure density must be strictly positive")
        total = sum(v * (b - a) for a, b, v in pieces)
        return MeasureSpec(KNIFE, pieces=tuple((a, b, v / total) for a, b, v in pieces))

    def to_json(self) -> dict:
        if self.kind == COMMODITY:
            return {"price": list(map(float, self.price))}
        return {"density": [[a, b, v] for a, b, v in self.pieces]}


def measure(theta: MeasureSpec, s: Share) -> float:
    """Normalized measure of a share, in [0, 1] for feasible shares."""
    if theta.kind != s.kind:
        raise ShapeMismatch("measure and share live on different manna kinds")
    if s.kind == COMMODITY:
        return float(theta.price @ s.z)
    total = 0.0
    for a, b in s.intervals:
        for pa, pb, v in theta.pieces:
            lo, hi = max(a, pa), min(b, pb)
            if hi > lo:
                total += v * (hi - lo)
    return float(total)


# ---------------------------------------------------------------------------
# knife paths


@dataclass(frozen=True)
class KnifePath:
    """A strictly inclusion-increasing path K(t) from the empty share to `base`."""

    base: Share
    waypoints: Optional[tuple] = None  # commodity only: ((t, vector), ...) from 0 to base

    @staticmethod
    def proportional(base: Share) -> "KnifePath":
        return KnifePath(base=base)

    @staticmethod
    def piecewise_linear(base: Share, waypoints) -> "KnifePath":
        pts = [(float(t), np.asarray(v, dtype=float)) for t, v in waypoints]
        pts.sort(key=lambda p: p[0])
        if pts[0][0] != 0.0 or pts[-1][0] != 1.0:
            raise InvariantViolation("waypoints must span t=0..1")
        if np.any(np.abs(pts[0][1]) > FEASIBILITY_TOL) or np.any(
            np.abs(pts[-1][1] - base.z) > FEASIBILITY_TOL
        ):
            raise InvariantViolation("waypoints must run from 0 to the base share")
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if np.any(v1 < v0 - FEASIBILITY_TOL) or not np.any(v1 > v0 + FEASIBILITY_TOL):
                raise InvariantViolation("waypoints must strictly increase by inclusion")
        return KnifePath(base=base, waypoints=tuple((t, v) for t, v in pts))

    def at(self, t: float) -> Share:
        """The share K(t)."""
        if not (-FEASIBILITY_TOL <= t <= 1 + FEASIBILITY_TOL):
            raise OutOfRange(f"path parameter {t} outside [0, 1]")
        t = min(max(t, 0.0), 1.0)
        if self.base.kind == COMMODITY:
            if self.waypoints is None:
                return Share.of_commodity(t * self.base.z)
            ts = [p[0] for p in self.waypoints]
            i = max(0, min(len(ts) - 2, np.searchsorted(ts, t) - 1))
            t0, v0 = self.waypoints[i]
            t1, v1 = self.waypoints[i + 1]
            lam = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            return Share.of_commodity(v0 + lam * (v1 - v0))
        # knife: prefix of the base intervals holding fraction t of its length
        want = t * self.base.length()
        got, out = 0.0, []
        for a, b in self.base.intervals:
            if got >= want - FEASIBILITY_TOL:
                break
            take = min(b - a, want - got)
            out.append((a, a + take))
            got += take
        return Share.of_knife(out)

    def segment(self, t1: float, t2: float) -> Share:
        """The share K(t2) minus K(t1)."""
        if not (0 - FEASIBILITY_TOL <= t1 <= t2 <= 1 + FEASIBILITY_TOL):
            raise OutOfRange(f"bad segment ({t1}, {t2})")
        lo, hi = self.at(t1), self.at(t2)
        if self.base.kind == COMMODITY:
            return Share.of_commodity(hi.z - lo.z)
        cut = lo.intervals[-1][1] if lo.intervals else (
            self.base.intervals[0][0] if self.base.intervals else 0.0
        )
        out = [(max(a, cut), b) for a, b in hi.intervals if b > cut + FEASIBILITY_TOL]
        return Share.of_knife(out)


def knife_segment(path: KnifePath, t1: float, t2: float) -> Share:
    return path.segment(t1, t2)


# ---------------------------------------------------------------------------
# problems


@dataclass
class Problem:
    """A division problem: manna, named agents with utilities, optional measure."""

    manna: MannaSpec
    agents: list  # list of (name, UtilitySpec)
    theta: Optional[MeasureSpec] = None
    path: Optional[KnifePath] = None

    def __post_init__(self):
        if self.path is None:
            self.path = KnifePath.proportional(self.manna.whole_share())
        if self.theta is None:
            if self.manna.kind == COMMODITY:
                self.theta = MeasureSpec.from_price(
                    np.ones_like(self.manna.omega), self.manna
                )
            else:
                self.theta = MeasureSpec.lebesgue()

    @property
    def n(self) -> int:
        return len(self.agents)

    def names(self):
        return [name for name, _ in self.agents]

    def utilities(self):
        return [u for _, u in self.agents]

    def to_json(self) -> dict:
        d = {
            "manna": self.manna.to_json(),
            "agents": [
                {"name": name, "utility": u.to_json()} for name, u in self.agents
            ],
        }
        if self.theta is not None:
            d["measure"] = self.theta.to_json()
        return d


def load_problem(source) -> Problem:
    """Build a Problem from a dict, JSON string, or file path."""
    if isinstance(source, dict):
        d = source
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        d = json.loads(source)
    else:
        with open(source) as fh:
            d = json.load(fh)
    manna = MannaSpec.from_json(d["manna"])
    agents = [
        (a.get("name", f"agent{i}"), UtilitySpec.from_json(a["utility"]))
        for i, a in enumerate(d["agents"])
    ]
    theta = None
    if "measure" in d:
        m = d["measure"]
        if "price" in m:
            theta = MeasureSpec.from_price(m["price"], manna)
        elif "density" in m:
            theta = MeasureSpec.from_density(m["density"])
    for _, u in agents:
        if u.manna_kind != manna.kind:
            raise ShapeMismatch(
                f"utility family {u.family!r} does not fit {manna.kind} manna"
            )
    return Problem(manna=manna, agents=agents, theta=theta)
