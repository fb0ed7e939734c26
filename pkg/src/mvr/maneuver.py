"""
n-impulse plans built by chaining directed Lambert legs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lambert import LambertError, assumption_one_holds, solve_directed
from .twobody import GravityModel, StateVector, cross, orbital_period, propagate


class LegError(LambertError):
    """A Lambert failure on one leg of a plan."""

    def __init__(self, leg: int, cause: Exception):
        super().__init__(f"leg {leg}: {cause}")
        self.leg = leg
        self.cause = cause


@dataclass(frozen=True, eq=False)
class Impulse:
    position: np.ndarray
    epoch: float
    delta_v: np.ndarray

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.delta_v))


@dataclass(frozen=True, eq=False)
class CoastArc:
    """Unpowered arc flown after an impulse.

    ``duration`` is the physical flight time. For a reflected (long-way) leg
    it differs from ``lambert_dt``, the time of the equivalent short-way
    problem: the same conic flown backwards takes ``period - lambert_dt``.
    """

    initial: StateVector
    duration: float
    reflected: bool = False
    lambert_dt: float | None = None


@dataclass(frozen=True, eq=False)
class ImpulsePlan:
    impulses: tuple[Impulse, ...]
    coast_arcs: tuple[CoastArc, ...]
    total_dv: float
    max_dv: float

    @property
    def n(self) -> int:
        return len(self.impulses)

    @property
    def magnitudes(self) -> list[float]:
        return [imp.magnitude for imp in self.impulses]

    @property
    def epochs(self) -> list[float]:
        return [imp.epoch for imp in self.impulses]

    @classmethod
    def from_parts(cls, impulses: Sequence[Impulse], coast_arcs: Sequence[CoastArc]) -> "ImpulsePlan":
        mags = [imp.magnitude for imp in impulses]
        return cls(tuple(impulses), tuple(coast_arcs), float(sum(mags)), float(max(mags)))


def build_plan(
    waypoints: Sequence,
    dts: Sequence[float],
    v_initial,
    v_final,
    model: GravityModel,
    epoch: float = 0.0,
) -> ImpulsePlan:
    """Impulses that fly through ``waypoints`` with Lambert times ``dts``.

    Each leg is solved with the velocity arriving from the previous leg as
    its pre-impulse velocity; the last impulse matches ``v_final``.

    Args:
        waypoints: n >= 2 impulse positions (km).
        dts: n - 1 Lambert transfer times (s), all positive.
        v_initial: velocity on the initial orbit just before the first impulse.
        v_final: velocity on the final orbit just after the last impulse.
        model: central body.
        epoch: epoch of the first impulse.

    Raises:
        ValueError: inconsistent lengths or non-positive times.
        LegError: Lambert failure, with the failing leg index.
    """
    n = len(waypoints)
    if n < 2:
        raise ValueError("a plan needs at least two waypoints")
    if len(dts) != n - 1:
        raise ValueError(f"expected {n - 1} transfer times, got {len(dts)}")
    if any(not (dt > 0) for dt in dts):
        raise ValueError("transfer times must be positive")

    pts = [np.asarray(w, dtype=float) for w in waypoints]
    v_minus = np.asarray(v_initial, dtype=float)
    t = float(epoch)
    impulses: list[Impulse] = []
    arcs: list[CoastArc] = []
    for i in range(n - 1):
        reflected = not assumption_one_holds(pts[i], v_minus, pts[i + 1])
        try:
            dv, v_next = solve_directed(pts[i], pts[i + 1], dts[i], v_minus, model)
        except (LambertError, ValueError) as exc:
            raise LegError(i, exc) from exc
        start = StateVector(pts[i], v_minus + dv, t)
        duration = float(dts[i])
        if reflected:
            period = orbital_period(start, model)
            if not math.isfinite(period):
                raise LegError(i, LambertError("reflected arc is unbound and never reaches the next waypoint"))
            duration = period - duration
            if not duration > 0:
                raise LegError(i, LambertError("reflected arc has no positive flight time"))
        impulses.append(Impulse(pts[i], t, dv))
        arcs.append(CoastArc(start, duration, reflected, float(dts[i])))
        t += duration
        v_minus = v_next
    impulses.append(Impulse(pts[-1], t, np.asarray(v_final, dtype=float) - v_minus))
    return ImpulsePlan.from_parts(impulses, arcs)


def sample_trajectory(plan: ImpulsePlan, samples_per_arc: int, model: GravityModel) -> list[StateVector]:
    """States along every coast arc, endpoints included, in time order."""
    if samples_per_arc < 2:
        raise ValueError("samples_per_arc must be at least 2")
    out = []
    for arc in plan.coast_arcs:
        for tau in np.linspace(0.0, arc.duration, samples_per_arc):
            out.append(propagate(arc.initial, float(tau), model))
    return out


def _time_since_periapsis(nu: float, e: float, p: float, mu: float) -> float:
    if abs(e - 1.0) < 1e-10:
        d = math.tan(0.5 * nu)
        return 0.5 * math.sqrt(p**3 / mu) * (d + d**3 / 3.0)
    a = p / (1.0 - e * e)
    if e < 1.0:
        ecc_anom = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(0.5 * nu), math.sqrt(1.0 + e) * math.cos(0.5 * nu))
        return (ecc_anom - e * math.sin(ecc_anom)) / math.sqrt(mu / a**3)
    hyp_anom = 2.0 * math.atanh(math.sqrt((e - 1.0) / (e + 1.0)) * math.tan(0.5 * nu))
    return (e * math.sinh(hyp_anom) - hyp_anom) / math.sqrt(mu / (-a) ** 3)


def _true_anomaly(state: StateVector, e_vec: np.ndarray, h: np.ndarray) -> float:
    r = state.position
    return math.atan2(float(cross(e_vec, r) @ h) / float(np.linalg.norm(h)), float(e_vec @ r))


def arc_collision(arc: CoastArc, model: GravityModel) -> float | None:
    """Epoch at which ``arc`` first dips below the body surface, or None."""
    mu, body = model.mu, model.body_radius
    st = arc.initial
    if st.radius < body:
        return st.epoch
    r, v = st.position, st.velocity
    h = cross(r, v)
    p = float(h @ h) / mu
    e_vec = ((float(v @ v) - mu / st.radius) * r - float(r @ v) * v) / mu
    e = float(np.linalg.norm(e_vec))
    if p / (1.0 + e) >= body or e < 1e-12:
        return None
    nu_c = math.acos(min(1.0, (p / body - 1.0) / e))
    nu0 = _true_anomaly(st, e_vec, h)
    end = propagate(st, arc.duration, model)
    nu1 = _true_anomaly(end, e_vec, h)
    period = orbital_period(st, model) if e < 1.0 else math.inf
    if math.isfinite(period):
        revs = math.floor(arc.duration / period)
        swept = (nu1 - nu0) % (2.0 * math.pi) + 2.0 * math.pi * revs
        to_entry = (-nu_c - nu0) % (2.0 * math.pi)
        if to_entry > swept:
            return None
        dt = (_time_since_periapsis(nu0 + to_entry, e, p, mu) - _time_since_periapsis(nu0, e, p, mu)) % period
        return st.epoch + dt
    # open conic: anomaly increases monotonically within (-nu_inf, nu_inf)
    if not (nu0 < -nu_c < nu1):
        return None
    return st.epoch + _time_since_periapsis(-nu_c, e, p, mu) - _time_since_periapsis(nu0, e, p, mu)


def detect_collision(plan: ImpulsePlan, model: GravityModel) -> list[tuple[int, float]]:
    """(arc index, entry epoch) for every coast arc that passes below the surface."""
    hits = []
    for i, arc in enumerate(plan.coast_arcs):
        t = arc_collision(arc, model)
        if t is not None:
            hits.append((i, t))
    return hits
