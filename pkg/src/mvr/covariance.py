"""
Polar-coordinate covariance of a near-circular orbit.

State is (r, theta, omega); r and theta are measured inside the
observation window. Inside the window the covariance follows a Riccati
equation; outside it the variances grow linearly with the process noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .twobody import GravityModel


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal process noise ``q`` (r, theta, omega) and measurement noise ``r_meas`` (r, theta)."""

    q: tuple[float, float, float]
    r_meas: tuple[float, float]

    def __post_init__(self):
        q = tuple(float(x) for x in self.q)
        r = tuple(float(x) for x in self.r_meas)
        if len(q) != 3 or len(r) != 2:
            raise ValueError("q needs 3 entries and r_meas needs 2")
        if any(not (x >= 0 and math.isfinite(x)) for x in q + r):
            raise ValueError("noise entries must be finite and non-negative")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r_meas", r)


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    in_window: bool


def riccati_rhs(p: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Time derivative of the 3x3 covariance while measurements are available.

    Drift couples theta to omega through P22 and P23; both measured channels
    subtract their quadratic update term. The omega channel uses the theta
    measurement noise.
    """
    r11, r22 = noise.r_meas
    q1, q2, q3 = noise.q
    p11, p22, p23, p33 = p[0, 0], p[1, 1], p[1, 2], p[2, 2]
    d23 = p22 - p22 * p23 / r22
    return np.array(
        [
            [-p11 * p11 / r11 + q1, 0.0, 0.0],
            [0.0, -p22 * p22 / r22 + q2, d23],
            [0.0, d23, 2.0 * p23 - p33 * p33 / r22 + q3],
        ]
    )


def _fixed_point(r_ii: float, q_ii: float) -> float:
    return math.sqrt(r_ii * q_ii)


def p_closed_form(p0: float, r_ii: float, q_ii: float, t: float) -> float:
    """Rational closed form for a decoupled variance after time ``t`` in window.

    Tends to sqrt(R Q) as t grows; equals ``p0`` at t = 0.

    Raises:
        ValueError: bad inputs, or a non-positive denominator (``p0`` below
            the fixed point for too long).
    """
    if not r_ii > 0 or q_ii < 0 or t < 0:
        raise ValueError("need r_ii > 0, q_ii >= 0, t >= 0")
    s = _fixed_point(r_ii, q_ii)
    den = r_ii + (p0 - s) * t
    if not den > 0:
        raise ValueError(f"closed form invalid at t={t}: denominator {den} <= 0")
    return (r_ii * p0 + s * (p0 - s) * t) / den


def p_of_theta(p0: float, r_ii: float, q_ii: float, orbit_radius: float, theta: float, model: GravityModel) -> float:
    """The same closed form with elapsed time replaced by swept angle on a circular orbit."""
    if not r_ii > 0 or q_ii < 0 or theta < 0 or not orbit_radius > 0:
        raise ValueError("need r_ii > 0, q_ii >= 0, theta >= 0, orbit_radius > 0")
    s = _fixed_point(r_ii, q_ii)
    sqmu = math.sqrt(model.mu)
    r32 = orbit_radius**1.5
    den = sqmu * r_ii + r32 * (p0 - s) * theta
    if not den > 0:
        raise ValueError(f"closed form invalid at theta={theta}: denominator {den} <= 0")
    return (sqmu * r_ii * p0 + r32 * s * (p0 - s) * theta) / den


def p_riccati_exact(p0: float, r_ii: float, q_ii: float, t: float) -> float:
    """Exact solution of dP/dt = -P^2/R + Q (hyperbolic-tangent form)."""
    if q_ii == 0:
        return r_ii * p0 / (r_ii + p0 * t)
    s = _fixed_point(r_ii, q_ii)
    th = math.tanh(s * t / r_ii)
    return s * (p0 + s * th) / (s + p0 * th)


def rk4_riccati(p0: np.ndarray, noise: NoiseModel, duration: float, steps: int) -> np.ndarray:
    """Classical RK4 of the window Riccati equation; returns P at every step (steps + 1, 3, 3)."""
    h = duration / steps
    out = np.empty((steps + 1, 3, 3))
    p = np.array(p0, dtype=float)
    out[0] = p
    for k in range(steps):
        k1 = riccati_rhs(p, noise)
        k2 = riccati_rhs(p + 0.5 * h * k1, noise)
        k3 = riccati_rhs(p + 0.5 * h * k2, noise)
        k4 = riccati_rhs(p + h * k3, noise)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = p
    return out


@dataclass(frozen=True, eq=False)
class CovarianceTrack:
    segments: tuple[Segment, ...]
    times: np.ndarray
    p: np.ndarray  # (len(times), 3, 3)
    angular_rate: float = 0.0
    closed_form_gap: float = 0.0  # max relative gap between RK4 and the closed form, P11/P22
    exits: list = field(default_factory=list)

    def p_diag(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.p[:, i, i]) for i in range(3)])

    def p23(self, t: float) -> float:
        return float(np.interp(t, self.times, self.p[:, 1, 2]))


def _window_step(noise: NoiseModel, p_diag: Sequence[float]) -> float:
    """RK4 step: a hundredth of the fastest time scale in the window equations."""
    scales = []
    for i in (0, 1):
        r, q = noise.r_meas[i], noise.q[i]
        if q > 0:
            scales.append(math.sqrt(r / q))
        if p_diag[i] > 0:
            scales.append(r / p_diag[i])
    if p_diag[2] > 0:
        scales.append(noise.r_meas[1] / p_diag[2])
    return 1e-2 * min(scales) if scales else math.inf


def _integrate_window(p, noise, start, end, max_steps):
    """RK4 over [start, end] in chunks, the step re-derived from the current P."""
    ts, mats = [start], [p]
    t, total = start, 0
    while t < end:
        h = _window_step(noise, np.diag(p))
        remaining = end - t
        if not math.isfinite(h):
            steps, chunk = 16, remaining
        elif remaining > 64 * h:
            steps, chunk = 64, 64 * h
        else:
            steps, chunk = max(1, math.ceil(remaining / h)), remaining
        hist = rk4_riccati(p, noise, chunk, steps)
        if not np.all(np.isfinite(hist)):
            raise ValueError(f"window integration diverged on [{start}, {end}]")
        total += steps
        if total > max_steps:
            raise ValueError(f"window [{start}, {end}] needs more than {max_steps} RK4 steps")
        ts.extend((t + np.linspace(0.0, chunk, steps + 1)[1:]).tolist())
        mats.extend(hist[1:])
        p = hist[-1]
        t = end if chunk == remaining else t + chunk
    ts[-1] = end
    return np.array(ts), np.array(mats)


def propagate_track(
    p0_diag: Sequence[float],
    noise: NoiseModel,
    segments: Sequence[Segment],
    orbit_radius: float,
    model: GravityModel,
    max_steps: int = 2_000_000,
) -> CovarianceTrack:
    """Variance history across alternating in-window and blind segments.

    Blind stretches (including gaps between listed segments) grow each
    variance by q_ii per second from its value at window exit; off-diagonal
    terms are held.

    Raises:
        ValueError: unordered or overlapping segments.
    """
    segs = [s if isinstance(s, Segment) else Segment(*s) for s in segments]
    if not segs:
        raise ValueError("at least one segment is required")
    for a, b in zip(segs, segs[1:]):
        if b.start < a.end:
            raise ValueError("segments overlap or are out of order")
    if any(s.end < s.start for s in segs):
        raise ValueError("segment ends before it starts")

    q = np.array(noise.q)
    p = np.diag(np.asarray(p0_diag, dtype=float))
    times = [segs[0].start]
    mats = [p.copy()]
    exits = []
    gap = 0.0

    def blind(t0, t1, p):
        p = p.copy()
        p[np.diag_indices(3)] += q * (t1 - t0)
        times.append(t1)
        mats.append(p)
        return p

    t = segs[0].start
    for seg in segs:
        if seg.start > t:
            p = blind(t, seg.start, p)
        dur = seg.end - seg.start
        if dur > 0:
            if seg.in_window:
                ts, hist = _integrate_window(p, noise, seg.start, seg.end, max_steps)
                stride = max(1, len(ts) // 64)
                for i in (0, 1):
                    r_ii, q_ii = noise.r_meas[i], noise.q[i]
                    try:
                        ref = np.array([p_closed_form(p[i, i], r_ii, q_ii, tau) for tau in ts[::stride] - seg.start])
                    except ValueError:
                        continue
                    got = hist[::stride, i, i]
                    gap = max(gap, float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300))))
                times.extend(ts[1:].tolist())
                mats.extend(hist[1:])
                p = hist[-1].copy()
                exits.append((seg.end, np.diag(p).copy()))
            else:
                p = blind(seg.start, seg.end, p)
        t = seg.end

    omega = math.sqrt(model.mu / orbit_radius**3)
    return CovarianceTrack(tuple(segs), np.array(times), np.array(mats), omega, gap, exits)


def window_timeline(theta_half: float, orbit_radius: float, model: GravityModel, revolutions: int = 2) -> list[Segment]:
    """Segments for a circular orbit starting at window entry, one window per revolution."""
    omega = math.sqrt(model.mu / orbit_radius**3)
    t_in = 2.0 * theta_half / omega
    t_rev = 2.0 * math.pi / omega
    segs = []
    for k in range(revolutions):
        t0 = k * t_rev
        segs.append(Segment(t0, t0 + t_in, True))
        segs.append(Segment(t0 + t_in, t0 + t_rev, False))
    return segs
