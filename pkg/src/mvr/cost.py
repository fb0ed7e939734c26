"""
Control-effort, maximum-impulse and window-deferral costs.

The weighted total mixes km/s and rad; the weights absorb the units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .maneuver import ImpulsePlan, detect_collision
from .twobody import GravityModel


@dataclass(frozen=True)
class Weights:
    w_ce: float = 1.0
    w_mi: float = 0.0
    w_v: float = 0.0

    def __post_init__(self):
        vals = (self.w_ce, self.w_mi, self.w_v)
        if any(not (w >= 0 and math.isfinite(w)) for w in vals):
            raise ValueError(f"weights must be finite and non-negative, got {vals}")
        if not any(vals):
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class CostBreakdown:
    j_ce: float
    j_mi: float
    j_v: float
    total: float
    failure: str | None = None

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.total)

    @classmethod
    def infeasible(cls, reason: str) -> "CostBreakdown":
        inf = math.inf
        return cls(inf, inf, inf, inf, reason)

    def as_dict(self) -> dict:
        return {"j_ce": self.j_ce, "j_mi": self.j_mi, "j_v": self.j_v, "total": self.total, "failure": self.failure}


def control_effort(plan: ImpulsePlan) -> float:
    """Sum of impulse magnitudes (km/s)."""
    return float(sum(plan.magnitudes))


def max_impulse(plan: ImpulsePlan) -> float:
    """Largest single impulse magnitude (km/s)."""
    return float(max(plan.magnitudes))


def uncertainty_cost(angles: Sequence[float], window_max: Sequence[float]) -> float:
    """Sum of |theta_i - theta_i^max| over the first n - 1 impulses.

    Impulses placed early in the window leave the estimator less time to
    settle; the final impulse angle is pinned and excluded.
    """
    if len(angles) != len(window_max):
        raise ValueError(f"length mismatch: {len(angles)} angles vs {len(window_max)} bounds")
    return float(sum(abs(a - b) for a, b in zip(angles, window_max)))


def total_cost(
    plan: ImpulsePlan,
    angles: Sequence[float],
    window_max: Sequence[float],
    weights: Weights,
    forbid_collision: bool = False,
    model: GravityModel | None = None,
) -> CostBreakdown:
    """Weighted cost of a plan; collisions map to +inf when forbidden."""
    if forbid_collision:
        if model is None:
            raise ValueError("collision screening needs a gravity model")
        hits = detect_collision(plan, model)
        if hits:
            return CostBreakdown.infeasible(f"collision on arc {hits[0][0]} at t={hits[0][1]:.3f} s")
    j_ce = control_effort(plan)
    j_mi = max_impulse(plan)
    j_v = uncertainty_cost(angles, window_max)
    total = weights.w_ce * j_ce + weights.w_mi * j_mi + weights.w_v * j_v
    return CostBreakdown(j_ce, j_mi, j_v, total)
