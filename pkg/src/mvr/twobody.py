"""
Exact two-body propagation in universal variables.

All quantities are in km, s and rad.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

KEPLER_TOL = 1e-10
KEPLER_MAX_ITER = 50
_TWO_PI = 2.0 * math.pi


class KeplerError(RuntimeError):
    """Universal Kepler iteration failed (degenerate or rectilinear orbit)."""


class Direction(str, enum.Enum):
    CCW = "ccw"
    CW = "cw"

    @property
    def sign(self) -> float:
        return 1.0 if self is Direction.CCW else -1.0


@dataclass(frozen=True)
class GravityModel:
    """Central body: gravitational parameter (km^3/s^2) and radius (km)."""

    mu: float
    body_radius: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not (self.body_radius > 0 and math.isfinite(self.body_radius)):
            raise ValueError(f"body_radius must be positive, got {self.body_radius}")


MARS = GravityModel(mu=42828.37, body_radius=3389.5)
EARTH = GravityModel(mu=398600.4418, body_radius=6378.137)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Inertial position (km), velocity (km/s) and epoch (s)."""

    position: np.ndarray
    velocity: np.ndarray
    epoch: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.position, dtype=float).reshape(3)
        v = np.asarray(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v)) and math.isfinite(self.epoch)):
            raise ValueError("state components must be finite")
        if not np.any(r):
            raise ValueError("position norm must be positive")
        object.__setattr__(self, "position", r)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "epoch", float(self.epoch))

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.position))

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))

    def energy(self, mu: float) -> float:
        """Specific orbital energy v^2/2 - mu/r."""
        return 0.5 * self.speed**2 - mu / self.radius

    def angular_momentum(self) -> np.ndarray:
        return cross(self.position, self.velocity)


# Taylor coefficients (-1)^k/(2k+2)! and (-1)^k/(2k+3)!, k = 0..7
_C_SERIES = tuple((-1) ** k / math.factorial(2 * k + 2) for k in range(8))
_S_SERIES = tuple((-1) ** k / math.factorial(2 * k + 3) for k in range(8))


def stumpff(z: float) -> tuple[float, float]:
    """Stumpff functions C(z), S(z).

    Series below |z| = 0.1, where the closed forms lose digits.
    """
    if abs(z) < 0.1:
        c = s = 0.0
        for kc, ks in zip(reversed(_C_SERIES), reversed(_S_SERIES)):
            c = c * z + kc
            s = s * z + ks
        return c, s
    if z > 0:
        sz = math.sqrt(z)
        half = math.sin(0.5 * sz)
        return 2.0 * half * half / z, (sz - math.sin(sz)) / (sz * z)
    sz = math.sqrt(-z)
    half = math.sinh(0.5 * sz)
    return -2.0 * half * half / z, (math.sinh(sz) - sz) / (sz * -z)


def cross(a, b) -> np.ndarray:
    """3-vector cross product; np.cross is slow for single vectors."""
    a0, a1, a2 = float(a[0]), float(a[1]), float(a[2])
    b0, b1, b2 = float(b[0]), float(b[1]), float(b[2])
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def _solve_universal_anomaly(r0: float, sigma0: float, alpha: float, mu: float, dt: float) -> float:
    """Safeguarded Newton iteration for the universal anomaly chi.

    ``sigma0`` is r0.v0/sqrt(mu). Time of flight is monotone in chi, so a
    bracket [lo, hi] is maintained and bisection replaces any Newton step
    that leaves it.
    """
    sqmu = math.sqrt(mu)
    target = sqmu * dt
    tol = KEPLER_TOL * sqmu * max(1.0, abs(dt))

    lo, hi = (0.0, math.inf) if dt > 0 else (-math.inf, 0.0)
    if alpha > 1e-12:
        chi = sqmu * dt * alpha
        bound = _TWO_PI / math.sqrt(alpha)
        lo, hi = (0.0, bound) if dt > 0 else (-bound, 0.0)
        chi = min(max(chi, lo), hi)
    elif alpha < -1e-12:
        a = 1.0 / alpha
        sgn = 1.0 if dt > 0 else -1.0
        arg = -2.0 * mu * alpha * dt / (sigma0 * sqmu + sgn * math.sqrt(-mu * a) * (1.0 - r0 * alpha))
        chi = sgn * math.sqrt(-a) * math.log(arg) if arg > 0 else sqmu * dt / r0
    else:
        chi = sqmu * dt / r0

    for _ in range(KEPLER_MAX_ITER):
        z = alpha * chi * chi
        c, s = stumpff(z)
        chi2 = chi * chi
        t_chi = sigma0 * chi2 * c + (1.0 - alpha * r0) * chi2 * chi * s + r0 * chi
        r = chi2 * c + sigma0 * chi * (1.0 - z * s) + r0 * (1.0 - z * c)
        resid = t_chi - target
        if abs(resid) <= tol:
            return chi
        if resid > 0:
            hi = min(hi, chi)
        else:
            lo = max(lo, chi)
        nxt = chi - resid / r
        if not (lo < nxt < hi) or not math.isfinite(nxt):
            if math.isinf(hi):
                nxt = 2.0 * chi if chi > 0 else 1.0
            elif math.isinf(lo):
                nxt = 2.0 * chi if chi < 0 else -1.0
            else:
                nxt = 0.5 * (lo + hi)
        if nxt == chi:
            return chi
        chi = nxt
    raise KeplerError(f"universal Kepler iteration did not converge in {KEPLER_MAX_ITER} steps")


def propagate(state: StateVector, dt: float, model: GravityModel) -> StateVector:
    """Keplerian state at ``state.epoch + dt``.

    Args:
        state: initial state.
        dt: time of flight in seconds, ``dt >= 0``.
        model: central body.

    Returns:
        The propagated state.

    Raises:
        ValueError: negative or non-finite ``dt``.
        KeplerError: rectilinear orbit or failed iteration.
    """
    if not math.isfinite(dt) or dt < 0:
        raise ValueError(f"dt must be finite and non-negative, got {dt}")
    if dt == 0:
        return state
    mu = model.mu
    r0v = state.position
    v0v = state.velocity
    r0 = math.sqrt(float(r0v @ r0v))
    v2 = float(v0v @ v0v)
    h = cross(r0v, v0v)
    if math.sqrt(float(h @ h)) <= 1e-12 * r0 * math.sqrt(v2 + mu / r0):
        raise KeplerError("rectilinear orbit: angular momentum vanishes")
    alpha = 2.0 / r0 - v2 / mu
    sqmu = math.sqrt(mu)
    sigma0 = float(r0v @ v0v) / sqmu

    tof = dt
    if alpha > 1e-12:
        period = _TWO_PI / math.sqrt(mu * alpha**3)
        tof = math.fmod(dt, period)

    if tof == 0.0:
        r_new, v_new = r0v.copy(), v0v.copy()
    else:
        chi = _solve_universal_anomaly(r0, sigma0, alpha, mu, tof)
        z = alpha * chi * chi
        c, s = stumpff(z)
        chi2 = chi * chi
        f = 1.0 - chi2 / r0 * c
        # time actually reached by chi keeps f, g, fdot, gdot mutually consistent
        t_chi = (sigma0 * chi2 * c + (1.0 - alpha * r0) * chi2 * chi * s + r0 * chi) / sqmu
        g = t_chi - chi2 * chi / sqmu * s
        r_new = f * r0v + g * v0v
        r = math.sqrt(float(r_new @ r_new))
        fdot = sqmu / (r * r0) * chi * (z * s - 1.0)
        gdot = 1.0 - chi2 / r * c
        v_new = fdot * r0v + gdot * v0v
    return StateVector(r_new, v_new, state.epoch + dt)


def circular_speed(radius: float, model: GravityModel) -> float:
    return math.sqrt(model.mu / radius)


def circular_state(
    radius: float,
    angle: float,
    direction: Direction | str,
    model: GravityModel,
    epoch: float = 0.0,
) -> StateVector:
    """Equatorial circular-orbit state at polar ``angle``.

    Raises:
        ValueError: if ``radius`` is not positive.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    sign = Direction(direction).sign
    c, s = math.cos(angle), math.sin(angle)
    speed = circular_speed(radius, model)
    return StateVector(
        np.array([radius * c, radius * s, 0.0]),
        np.array([-sign * speed * s, sign * speed * c, 0.0]),
        epoch,
    )


def orbital_period(state: StateVector, model: GravityModel) -> float:
    """Period of the osculating conic; ``inf`` when unbound."""
    alpha = 2.0 / state.radius - state.speed**2 / model.mu
    if alpha <= 0:
        return math.inf
    return _TWO_PI / math.sqrt(model.mu * alpha**3)
