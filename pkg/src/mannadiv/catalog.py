"""The worked examples: six symmetric two-good utilities normalized to
u(omega) = 10, the single-commodity pair, and the degenerate two-good
pair, together with the benchmark table over the catalog.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .benchmarks import equal_split, max_min, min_max
from .guarantees import gamma_theta
from .model import (
    COMMODITY,
    MannaSpec,
    MeasureSpec,
    Problem,
    UtilitySpec,
)


def two_good_manna() -> MannaSpec:
    return MannaSpec(COMMODITY, np.array([1.0, 1.0]))


def uniform_price(manna: MannaSpec) -> MeasureSpec:
    return MeasureSpec.from_price(np.ones_like(manna.omega), manna)


def catalog() -> List[UtilitySpec]:
    """The six symmetric two-good utilities, in table order."""
    return [
        UtilitySpec("leontief", scale=10.0, label="10min(x,y)"),
        UtilitySpec("cobb_douglas", scale=10.0, label="10sqrt(xy)"),
        UtilitySpec("ces", scale=2.5, rho=0.5, label="2.5(sqrt(x)+sqrt(y))^2"),
        UtilitySpec("linear", scale=5.0, label="5(x+y)"),
        UtilitySpec("quadratic_norm", scale=5.0, weights=(2.0, 2.0), label="5sqrt(2(x^2+y^2))"),
        UtilitySpec("anti_leontief", scale=10.0, label="10max(x,y)"),
    ]


# preferences with convex upper contours (guarantee at most equal split)
# versus concave upper contours (guarantee at least equal split)
CONVEX_CONTOUR_LABELS = ("10min(x,y)", "10sqrt(xy)", "2.5(sqrt(x)+sqrt(y))^2", "5(x+y)")
CONCAVE_CONTOUR_LABELS = ("5(x+y)", "5sqrt(2(x^2+y^2))", "10max(x,y)")


def intro_problem() -> Problem:
    """One divisible good, 10 units; one agent values size s at s(12-s),
    the other at s(s-6). Mixed manna: good for the first agent up to
    satiation, bad then good for the second."""
    manna = MannaSpec(COMMODITY, np.array([10.0]))
    u_a = UtilitySpec("polynomial", coeffs=(0.0, 12.0, -1.0), monotone="none", label="s(12-s)")
    u_b = UtilitySpec("polynomial", coeffs=(0.0, -6.0, 1.0), monotone="none", label="s(s-6)")
    return Problem(manna=manna, agents=[("Ann", u_a), ("Bob", u_b)])


def degenerate_problem() -> Problem:
    """The two-good pair whose divisions are all worthless to someone:
    every division gives one of the two agents utility zero, yet each
    has Maxmin equal to one."""
    manna = two_good_manna()
    u1 = UtilitySpec("piecewise_two_good", variant=1, monotone="none", label="w1")
    u2 = UtilitySpec("piecewise_two_good", variant=2, monotone="none", label="w2")
    return Problem(manna=manna, agents=[("P", u1), ("Q", u2)])


def opening_problem() -> Problem:
    """Unit-scale Leontief versus anti-Leontief on omega = (1, 1)."""
    manna = two_good_manna()
    u_min = UtilitySpec("leontief", scale=1.0, label="min(x,y)")
    u_max = UtilitySpec("anti_leontief", scale=1.0, label="max(x,y)")
    return Problem(manna=manna, agents=[("Minnie", u_min), ("Max", u_max)])


@dataclass(frozen=True)
class TableRow:
    """One catalog row: the four benchmark columns at full precision."""

    label: str
    min_max: float
    gamma_p: float
    equal_split: float
    max_min: float

    def rounded(self) -> tuple:
        return tuple(round(v, 1) for v in (self.min_max, self.gamma_p, self.equal_split, self.max_min))

    def to_json(self) -> dict:
        return {
            "utility": self.label,
            "min_max": self.min_max,
            "gamma_p": self.gamma_p,
            "equal_split": self.equal_split,
            "max_min": self.max_min,
        }


def compute_table(n: int) -> List[TableRow]:
    """The four benchmark columns for the six catalog utilities."""
    manna = two_good_manna()
    theta = uniform_price(manna)
    rows = []
    for u in catalog():
        rows.append(
            TableRow(
                label=u.label,
                min_max=min_max(u, n, manna).value,
                gamma_p=gamma_theta(u, theta, manna, n).value,
                equal_split=equal_split(u, n, manna),
                max_min=max_min(u, n, manna).value,
            )
        )
    return rows


def format_table(rows: List[TableRow], n: int, precision: str = "rounded") -> str:
    """Fixed-width text table; `precision` is "rounded" or "full"."""
    out = io.StringIO()
    label_w = max(len(r.label) for r in rows) + 2
    cols = ("minMax", "Gamma_p", "u(w/n)", "Maxmin")
    out.write(f"n={n}\n")
    out.write("utility".ljust(label_w))
    if precision == "rounded":
        out.write("".join(c.rjust(9) for c in cols) + "\n")
        for r in rows:
            out.write(r.label.ljust(label_w))
            out.write("".join(f"{v:9.1f}" for v in r.rounded()) + "\n")
    else:
        out.write("".join(c.rjust(13) for c in cols) + "\n")
        for r in rows:
            out.write(r.label.ljust(label_w))
            vals = (r.min_max, r.gamma_p, r.equal_split, r.max_min)
            out.write("".join(f"{v:13.6f}" for v in vals) + "\n")
    return out.getvalue()
