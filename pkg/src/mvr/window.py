"""
Observation-window geometry for a zenith-pointing station on the surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .twobody import GravityModel

_SLACK = 1e-12


@dataclass(frozen=True)
class WindowSpec:
    """Field-of-view half-angle ``alpha`` (rad) of a window centred at ``center_angle``."""

    alpha: float
    center_angle: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 0.5 * math.pi):
            raise ValueError(f"alpha must lie in [0, pi/2], got {self.alpha}")


def theta_max(alpha: float, altitude: float, model: GravityModel) -> float:
    """Half-width (rad) of the orbit arc seen inside the station's cone.

    The station at radius R looks along the local vertical with half-angle
    ``alpha``; the cone edge meets the orbit of radius R + ``altitude`` at
    polar angle ``theta_max`` from the station.
    """
    if not altitude > 0:
        raise ValueError(f"altitude must be positive, got {altitude}")
    if not (0.0 <= alpha <= 0.5 * math.pi):
        raise ValueError(f"alpha must lie in [0, pi/2], got {alpha}")
    k = model.body_radius / (model.body_radius + altitude)
    s2 = math.sin(alpha) ** 2
    arg = k * s2 + math.cos(alpha) * math.sqrt(max(0.0, 1.0 - k * k * s2))
    if abs(arg) > 1.0 + _SLACK:
        raise ValueError(f"arccos argument {arg} outside [-1, 1]")
    return math.acos(max(-1.0, min(1.0, arg)))


def window_bounds(radius_from_center: float, spec: WindowSpec, model: GravityModel) -> tuple[float, float]:
    """(theta_min, theta_max) for an impulse at the given orbit radius."""
    if not radius_from_center > model.body_radius:
        raise ValueError(f"radius {radius_from_center} km is not above the surface")
    half = theta_max(spec.alpha, radius_from_center - model.body_radius, model)
    return spec.center_angle - half, spec.center_angle + half
