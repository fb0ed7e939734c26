"""Independent reference computations used by the tests."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp


def hohmann_dv(mu: float, r1: float, r2: float) -> float:
    return math.sqrt(mu / r1) * (math.sqrt(2 * r2 / (r1 + r2)) - 1) + math.sqrt(mu / r2) * (1 - math.sqrt(2 * r1 / (r1 + r2)))


def hohmann_burns(mu: float, r1: float, r2: float) -> tuple[float, float]:
    a = math.sqrt(mu / r1) * (math.sqrt(2 * r2 / (r1 + r2)) - 1)
    b = math.sqrt(mu / r2) * (1 - math.sqrt(2 * r1 / (r1 + r2)))
    return abs(a), abs(b)


def _rotation(rng) -> np.ndarray:
    w, x, y, z = (q := rng.normal(size=4)) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_orbit(rng, mu: float, e_max: float = 0.7, a_range=(7000.0, 40000.0)):
    """Random bound orbit as (position, velocity) with random 3-D orientation."""
    a = rng.uniform(*a_range)
    e = rng.uniform(0.0, e_max)
    p = a * (1 - e * e)
    nu = rng.uniform(0.0, 2 * math.pi)
    r = p / (1 + e * math.cos(nu))
    pos = np.array([r * math.cos(nu), r * math.sin(nu), 0.0])
    vel = math.sqrt(mu / p) * np.array([-math.sin(nu), e + math.cos(nu), 0.0])
    rot = _rotation(rng)
    return rot @ pos, rot @ vel


def integrate_two_body(mu: float, r0, v0, dt: float, rtol: float = 1e-12):
    """Adaptive Runge-Kutta (DOP853) integration of the two-body equations."""
    def rhs(_, y):
        r = y[:3]
        return np.concatenate([y[3:], -mu * r / np.linalg.norm(r) ** 3])

    sol = solve_ivp(rhs, (0.0, dt), np.concatenate([r0, v0]), method="DOP853", rtol=rtol, atol=1e-12)
    return sol.y[:3, -1], sol.y[3:, -1]


def ray_window_angle(alpha: float, body_radius: float, altitude: float) -> float:
    """Polar angle where the station's cone edge meets the orbit circle.

    Station at (R, 0) looking along +x; the edge ray leaves at angle alpha
    from the vertical and is intersected with the circle of radius R + h.
    """
    R, rho = body_radius, body_radius + altitude
    c, s = math.cos(alpha), math.sin(alpha)
    dist = -R * c + math.sqrt(R * R * c * c + rho * rho - R * R)
    return math.atan2(dist * s, R + dist * c)


def sampled_collision(arc, model, step: float = 1.0) -> bool:
    """Dense propagation sampling of a coast arc below the surface."""
    from mvr.twobody import propagate

    ts = np.arange(0.0, arc.duration + step, step)
    ts[-1] = min(ts[-1], arc.duration)
    return any(propagate(arc.initial, float(t), model).radius < model.body_radius for t in ts)
