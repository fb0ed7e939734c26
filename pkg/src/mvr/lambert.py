"""
Single-revolution Lambert solver (universal variables, bisection on psi)
and the direction-aware impulse computation that reflects long-way legs
onto an equivalent short-way problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .twobody import GravityModel, cross, stumpff

LAMBERT_TOL = 1e-8
LAMBERT_MAX_ITER = 200
ANGLE_GUARD = 1e-6
_PSI_UPPER = 4.0 * math.pi**2
_PSI_FLOOR = -4.0e5  # cosh overflow beyond this


class LambertError(RuntimeError):
    """No admissible Lambert arc for the requested leg."""


class LambertGeometryError(LambertError):
    """Transfer angle too close to 0 or pi; the transfer plane is undefined."""


class LambertConvergenceError(LambertError):
    pass


@dataclass(frozen=True, eq=False)
class LambertSolution:
    departure_velocity: np.ndarray
    arrival_velocity: np.ndarray
    transfer_angle: float


def transfer_angle(r1: np.ndarray, r2: np.ndarray) -> float:
    """Unsigned angle between two position vectors, in [0, pi]."""
    n = cross(r1, r2)
    return math.atan2(math.sqrt(float(n @ n)), float(np.dot(r1, r2)))


def solve_short_way(r1, r2, dt: float, model: GravityModel) -> LambertSolution:
    """Conic arc from ``r1`` to ``r2`` in time ``dt`` sweeping less than pi.

    Raises:
        ValueError: non-positive ``dt``.
        LambertGeometryError: transfer angle within ``ANGLE_GUARD`` of 0 or pi.
        LambertError: ``dt`` too short to bracket, or no convergence.
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive, got {dt}")
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    mu = model.mu
    r1n = math.sqrt(float(r1 @ r1))
    r2n = math.sqrt(float(r2 @ r2))
    dnu = transfer_angle(r1, r2)
    if dnu < ANGLE_GUARD or abs(dnu - math.pi) < ANGLE_GUARD:
        raise LambertGeometryError(f"singular transfer angle {dnu:.3e} rad")

    a_coef = math.sqrt(r1n * r2n * (1.0 + math.cos(dnu)))
    sqmu = math.sqrt(mu)
    r_sum = r1n + r2n

    def time_of_flight(psi):
        c, s = stumpff(psi)
        y = r_sum + a_coef * (psi * s - 1.0) / math.sqrt(c)
        if y < 0:
            return -1.0, y
        chi = math.sqrt(y / c)
        return (chi**3 * s + a_coef * math.sqrt(y)) / sqmu, y

    lo, hi = -4.0 * math.pi, _PSI_UPPER
    while time_of_flight(lo)[0] > dt:
        if lo <= _PSI_FLOOR:
            raise LambertError(f"dt={dt:.6g} s is below the attainable transfer time")
        hi = lo
        lo = max(2.0 * lo, _PSI_FLOOR)

    y = None
    for _ in range(LAMBERT_MAX_ITER):
        psi = 0.5 * (lo + hi)
        t, y = time_of_flight(psi)
        if abs(t - dt) <= LAMBERT_TOL:
            break
        if t < dt:
            lo = psi
        else:
            hi = psi
        if hi - lo <= 4e-16 * max(1.0, abs(psi)):
            break
    else:
        raise LambertConvergenceError(f"no convergence in {LAMBERT_MAX_ITER} iterations")
    if y is None or y <= 0:
        raise LambertConvergenceError("degenerate Lambert solution")

    f = 1.0 - y / r1n
    g = a_coef * math.sqrt(y / mu)
    gdot = 1.0 - y / r2n
    v1 = (r2 - f * r1) / g
    v2 = (gdot * r2 - r1) / g
    return LambertSolution(v1, v2, dnu)


def assumption_one_holds(r1, v_in, r2) -> bool:
    """True when the coast orbit from (r1, v_in) heads the short way to r2.

    Compares the sense of rotation of the coast orbit with the normal of
    the short-way transfer plane. A radial or zero ``v_in`` counts as
    satisfied.
    """
    return float(cross(r1, v_in) @ cross(r1, r2)) >= 0.0


def solve_directed(r1, r2, dt: float, v_in, model: GravityModel) -> tuple[np.ndarray, np.ndarray]:
    """Impulse at ``r1`` and pre-impulse velocity at ``r2``.

    When the coast motion at ``r1`` does not head the short way toward
    ``r2``, the problem is solved with ``v_in`` negated and both outputs
    negated back. The resulting arc is the short-way conic flown in reverse,
    i.e. the long way round, with the same impulse magnitude.
    """
    r1 = np.asarray(r1, dtype=float)
    v_in = np.asarray(v_in, dtype=float)
    if assumption_one_holds(r1, v_in, r2):
        sol = solve_short_way(r1, r2, dt, model)
        return sol.departure_velocity - v_in, sol.arrival_velocity
    sol = solve_short_way(r1, r2, dt, model)
    impulse = sol.departure_velocity + v_in
    return -impulse, -sol.arrival_velocity
