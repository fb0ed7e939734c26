"""
Projected finite-difference gradient descent over impulse radii, impulse
angles and Lambert transfer times.

Design vector layout (length 3n - 4)::

    [r_2 .. r_{n-1}, theta_1 .. theta_{n-1}, dt_1 .. dt_{n-1}]

The last impulse angle is pinned to the window exit of the final orbit.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cost import CostBreakdown, Weights, total_cost
from .lambert import LambertError, transfer_angle
from .maneuver import ImpulsePlan, build_plan
from .twobody import Direction, GravityModel, KeplerError, circular_state, propagate
from .window import WindowSpec, window_bounds


class OptimizationError(RuntimeError):
    pass


class GradientError(OptimizationError):
    """Cost is infinite at the point and at every fallback perturbation."""


@dataclass(frozen=True, eq=False)
class DesignVector:
    radii: np.ndarray
    angles: np.ndarray
    dts: np.ndarray

    def __post_init__(self):
        for name in ("radii", "angles", "dts"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        n = len(self.angles) + 1
        if len(self.dts) != n - 1 or len(self.radii) != n - 2:
            raise ValueError(
                f"inconsistent design: {len(self.radii)} radii, {len(self.angles)} angles, {len(self.dts)} dts"
            )

    @property
    def n(self) -> int:
        return len(self.angles) + 1

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.radii, self.angles, self.dts])

    @classmethod
    def from_array(cls, x, n: int) -> "DesignVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (3 * n - 4,):
            raise ValueError(f"expected a vector of length {3 * n - 4} for n={n}, got shape {x.shape}")
        return cls(x[: n - 2], x[n - 2 : 2 * n - 3], x[2 * n - 3 :])

    def as_dict(self) -> dict:
        return {"radii_km": self.radii.tolist(), "angles_rad": self.angles.tolist(), "dts_s": self.dts.tolist()}


@dataclass(frozen=True)
class OptimizerSettings:
    """Gradient-descent controls.

    With ``adaptive`` and backtracking, each iteration starts from twice
    the last accepted step size instead of ``gamma``.

    ``scaling`` takes steps in canonical units (radii over the initial
    orbit radius, times over its inverse mean motion); without it the raw
    km/rad/s vector is stepped. ``divide_by_epsilon=False`` uses the raw
    cost difference as the gradient component.
    """

    gamma: float = 1e-2
    iterations: int = 500
    fd_epsilon: float = 1e-6
    dt_min: float = 1.0
    backtracking: bool = True
    radius_margin: float = 1.0
    scaling: bool = True
    divide_by_epsilon: bool = True
    max_halvings: int = 30
    adaptive: bool = True

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not self.fd_epsilon > 0:
            raise ValueError("fd_epsilon must be positive")
        if not self.dt_min > 0:
            raise ValueError("dt_min must be positive")


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    best: DesignVector
    best_cost: CostBreakdown
    plan: ImpulsePlan
    cost_history: list[CostBreakdown]
    termination: str  # "max_iters" | "stalled" | "infeasible"
    iterations: int = 0


@dataclass(frozen=True)
class TransferProblem:
    """Circle-to-circle transfer with n impulses inside one observation window.

    ``window=None`` disables the window: every angle is free in [-pi, pi]
    and the last impulse sits at pi.
    """

    model: GravityModel
    r_initial: float
    r_final: float
    n: int
    weights: Weights = field(default_factory=Weights)
    window: WindowSpec | None = None
    direction: Direction = Direction.CCW
    forbid_collision: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def dimension(self) -> int:
        return 3 * self.n - 4

    def bounds(self, radius: float) -> tuple[float, float]:
        if self.window is None:
            return -math.pi, math.pi
        return window_bounds(radius, self.window, self.model)

    def exit_angle(self, radius: float) -> float:
        """Window edge the spacecraft leaves through: the late side of the window."""
        lo, hi = self.bounds(radius)
        return hi if self.direction is Direction.CCW else lo

    @property
    def final_angle(self) -> float:
        return self.exit_angle(self.r_final)

    def radii_full(self, x: DesignVector) -> list[float]:
        return [self.r_initial, *x.radii.tolist(), self.r_final]

    def assemble(self, x: DesignVector):
        """Waypoints, transfer times and boundary velocities for ``build_plan``."""
        radii = self.radii_full(x)
        angles = [*x.angles.tolist(), self.final_angle]
        waypoints = [np.array([r * math.cos(a), r * math.sin(a), 0.0]) for r, a in zip(radii, angles)]
        v_initial = circular_state(self.r_initial, angles[0], self.direction, self.model).velocity
        v_final = circular_state(self.r_final, angles[-1], self.direction, self.model).velocity
        return waypoints, x.dts.tolist(), v_initial, v_final

    def evaluate(self, x: DesignVector) -> tuple[CostBreakdown, ImpulsePlan | None]:
        radii = self.radii_full(x)
        if any(r <= self.model.body_radius for r in radii):
            return CostBreakdown.infeasible("impulse radius at or below the surface"), None
        try:
            plan = build_plan(*self.assemble(x), self.model)
        except (LambertError, KeplerError, ValueError) as exc:
            return CostBreakdown.infeasible(str(exc)), None
        exits = [self.exit_angle(r) for r in radii[:-1]]
        cost = total_cost(plan, x.angles.tolist(), exits, self.weights, self.forbid_collision, self.model)
        return cost, plan

    def cost(self, x) -> float:
        if not isinstance(x, DesignVector):
            x = DesignVector.from_array(x, self.n)
        return self.evaluate(x)[0].total

    def project(self, x: DesignVector, settings: OptimizerSettings | None = None) -> DesignVector:
        """Clip radii above the surface, angles into their windows, times above dt_min."""
        settings = settings or OptimizerSettings()
        floor = self.model.body_radius + settings.radius_margin
        radii = np.maximum(x.radii, floor)
        full = [self.r_initial, *radii.tolist()]
        angles = np.array([min(max(a, lo), hi) for a, (lo, hi) in zip(x.angles, map(self.bounds, full))])
        dts = np.maximum(x.dts, settings.dt_min)
        return DesignVector(radii, angles, dts)

    def scales(self) -> np.ndarray:
        t_ref = math.sqrt(self.r_initial**3 / self.model.mu)
        return np.concatenate([np.full(self.n - 2, self.r_initial), np.ones(self.n - 1), np.full(self.n - 1, t_ref)])

    def coast_time(self, r_a: float, theta_a: float, r_b: float, theta_b: float) -> float:
        """Circular-orbit time over the short-way angle between two waypoints."""
        pa = np.array([math.cos(theta_a), math.sin(theta_a), 0.0])
        pb = np.array([math.cos(theta_b), math.sin(theta_b), 0.0])
        r_mean = 0.5 * (r_a + r_b)
        return transfer_angle(pa, pb) / math.sqrt(self.model.mu / r_mean**3)

    def initial_guess(self) -> DesignVector:
        """Radii interpolated between the boundary orbits, angles spread
        over the half window preceding the final impulse, circular coast times."""
        n = self.n
        radii = [self.r_initial + (self.r_final - self.r_initial) * i / (n - 1) for i in range(1, n - 1)]
        theta_n = self.final_angle
        angles = [0.5 * theta_n * (2.0 * i / (n - 1) - 1.0) for i in range(n - 1)]
        full_r = [self.r_initial, *radii, self.r_final]
        full_a = [*angles, theta_n]
        dts = [self.coast_time(full_r[i], full_a[i], full_r[i + 1], full_a[i + 1]) for i in range(n - 1)]
        return self.project(DesignVector(radii, angles, dts))

    def random_guess(self, rng: np.random.Generator) -> DesignVector:
        n = self.n
        r_lo, r_hi = sorted((self.r_initial, self.r_final))
        radii = rng.uniform(r_lo, r_hi, n - 2) if n > 2 else np.empty(0)
        full_r = [self.r_initial, *radii.tolist()]
        angles = [rng.uniform(*self.bounds(r)) for r in full_r]
        full_r.append(self.r_final)
        full_a = [*angles, self.final_angle]
        dts = [
            self.coast_time(full_r[i], full_a[i], full_r[i + 1], full_a[i + 1]) * rng.uniform(0.5, 2.0)
            for i in range(n - 1)
        ]
        return self.project(DesignVector(radii, angles, dts))


def fd_gradient(
    x: np.ndarray,
    objective: Callable[[np.ndarray], float],
    fd_epsilon: float = 1e-6,
    f0: float | None = None,
    divide: bool = True,
) -> np.ndarray:
    """Forward-difference gradient with per-component step fd_epsilon * max(1, |x_j|).

    A component whose forward point is infeasible falls back to a backward
    difference.

    Raises:
        GradientError: ``objective`` is infinite at ``x`` or on both sides of
            some component.
    """
    x = np.asarray(x, dtype=float)
    if f0 is None:
        f0 = objective(x)
    if not math.isfinite(f0):
        raise GradientError("cost is infinite at the base point")
    grad = np.empty_like(x)
    for j in range(x.size):
        eps = fd_epsilon * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += eps
        fp = objective(xp)
        if math.isfinite(fp):
            diff = fp - f0
        else:
            xp[j] = x[j] - eps
            fm = objective(xp)
            if not math.isfinite(fm):
                raise GradientError(f"component {j}: infeasible on both sides")
            diff = f0 - fm
        grad[j] = diff / eps if divide else diff
    return grad


def optimize(x0: DesignVector, problem: TransferProblem, settings: OptimizerSettings | None = None) -> OptimizationResult:
    """Minimize the weighted cost by projected gradient descent.

    Each iteration forms a finite-difference gradient, steps against it and
    projects back into the box. With backtracking, a step that raises the
    cost is retried with half the step size, up to ``max_halvings`` times.
    The best iterate seen is returned.

    Raises:
        OptimizationError: ``x0`` infeasible after projection.
    """
    settings = settings or OptimizerSettings()
    n = problem.n
    scale2 = problem.scales() ** 2 if settings.scaling else np.ones(problem.dimension)

    def proj(arr):
        return problem.project(DesignVector.from_array(arr, n), settings).to_array()

    def objective(arr):
        return problem.cost(arr)

    x = proj(x0.to_array())
    cost, plan = problem.evaluate(DesignVector.from_array(x, n))
    if not cost.feasible:
        raise OptimizationError(f"initial design is infeasible: {cost.failure}")
    history = [cost]
    best_x, best_cost, best_plan = x, cost, plan
    termination = "max_iters"
    it = 0
    gamma_next = settings.gamma
    for it in range(1, settings.iterations + 1):
        try:
            grad = fd_gradient(x, objective, settings.fd_epsilon, cost.total, settings.divide_by_epsilon)
        except GradientError:
            termination = "infeasible"
            break
        direction = scale2 * grad
        gamma = gamma_next if settings.backtracking else settings.gamma
        accepted = None
        for _ in range(settings.max_halvings + 1 if settings.backtracking else 1):
            x_new = proj(x - gamma * direction)
            c_new, p_new = problem.evaluate(DesignVector.from_array(x_new, n))
            if not settings.backtracking or c_new.total <= cost.total:
                accepted = (x_new, c_new, p_new)
                break
            gamma *= 0.5
        if accepted is None:
            termination = "stalled"
            break
        x_new, c_new, p_new = accepted
        if settings.adaptive and settings.backtracking:
            gamma_next = 2.0 * gamma
        if not c_new.feasible:
            termination = "infeasible"
            break
        moved = np.any(x_new != x)
        x, cost = x_new, c_new
        history.append(cost)
        if cost.total < best_cost.total:
            best_x, best_cost, best_plan = x, cost, p_new
        if not moved and settings.gamma > 0:
            termination = "stalled"
            break
    return OptimizationResult(DesignVector.from_array(best_x, n), best_cost, best_plan, history, termination, it)


def warm_start(problem: TransferProblem, settings: OptimizerSettings) -> DesignVector:
    """Optimized two-impulse design padded with zero impulses up to ``problem.n``.

    Raises:
        OptimizationError: the two-impulse problem or the padding fails.
    """
    small = dataclasses.replace(problem, n=2)
    res = optimize(small.initial_guess(), small, settings)
    return pad_design(res.best, small, problem)


def multistart(
    problem: TransferProblem,
    settings: OptimizerSettings,
    seeds: int = 0,
    x0: DesignVector | None = None,
    warm: bool = True,
) -> OptimizationResult:
    """Best of several descents.

    Starts are the default guess (or ``x0``), the padded two-impulse optimum
    when ``warm`` and n > 2, and ``seeds`` random guesses drawn with
    ``default_rng(0) .. default_rng(seeds - 1)``. Ties keep the earlier start.
    """
    starts = [x0 if x0 is not None else problem.initial_guess()]
    if warm and problem.n > 2:
        try:
            starts.append(warm_start(problem, settings))
        except OptimizationError:
            pass
    for seed in range(seeds):
        starts.append(problem.random_guess(np.random.default_rng(seed)))
    best = None
    for start in starts:
        try:
            res = optimize(start, problem, settings)
        except OptimizationError:
            continue
        if best is None or res.best_cost.total < best.best_cost.total:
            best = res
    if best is None:
        raise OptimizationError("every start point is infeasible")
    return best


def pad_design(x: DesignVector, source: TransferProblem, target: TransferProblem) -> DesignVector:
    """Embed an n-impulse design in an m-impulse problem with zero extra impulses.

    Direct (short-way) legs are split at points on their coast arcs chosen
    inside the local window, so the inserted impulses vanish and the plan
    is unchanged.

    Raises:
        OptimizationError: no admissible split point.
    """
    if target.n < source.n:
        raise ValueError("target must have at least as many impulses")
    _, plan = source.evaluate(x)
    if plan is None:
        raise OptimizationError("source design is infeasible")
    model = source.model
    radii = source.radii_full(x)
    angles = [*x.angles.tolist(), source.final_angle]
    dts = x.dts.tolist()
    arcs = list(plan.coast_arcs)
    fractions = (0.5, 1 / 3, 2 / 3, 0.25, 0.75, 0.1, 0.9, 0.05, 0.95)
    while len(radii) < target.n:
        order = sorted(range(len(arcs)), key=lambda i: -dts[i])
        for leg in order:
            arc = arcs[leg]
            if arc.reflected:
                continue
            split = None
            for f in fractions:
                st = propagate(arc.initial, f * dts[leg], model)
                r = st.radius
                a = math.atan2(st.position[1], st.position[0])
                if r <= model.body_radius:
                    continue
                lo, hi = target.bounds(r)
                if lo <= a <= hi:
                    split = (f, st, r, a)
                    break
            if split is None:
                continue
            f, st, r, a = split
            first = type(arc)(arc.initial, f * dts[leg], False, f * dts[leg])
            second = type(arc)(st, (1 - f) * dts[leg], False, (1 - f) * dts[leg])
            radii.insert(leg + 1, r)
            angles.insert(leg + 1, a)
            dts[leg : leg + 1] = [f * dts[leg], (1 - f) * dts[leg]]
            arcs[leg : leg + 1] = [first, second]
            break
        else:
            raise OptimizationError("no direct leg admits an in-window split point")
    return DesignVector(radii[1:-1], angles[:-1], dts)


def leg_costs(model: GravityModel, r1: float, r2: float, dtheta: float, dt: float, direction=Direction.CCW) -> tuple[float, float]:
    """(J_CE, J_MI) of a two-impulse circle-to-circle leg; NaN when infeasible."""
    sign = Direction(direction).sign
    a2 = sign * dtheta
    w = [np.array([r1, 0.0, 0.0]), np.array([r2 * math.cos(a2), r2 * math.sin(a2), 0.0])]
    v1 = circular_state(r1, 0.0, direction, model).velocity
    v2 = circular_state(r2, a2, direction, model).velocity
    try:
        plan = build_plan(w, [dt], v1, v2, model)
    except (LambertError, KeplerError, ValueError):
        return math.nan, math.nan
    return plan.total_dv, plan.max_dv


def cost_surface(model: GravityModel, r1: float, r2: float, dts: Sequence[float], dthetas: Sequence[float], direction=Direction.CCW):
    """J_CE and J_MI grids of shape (len(dts), len(dthetas))."""
    ce = np.empty((len(dts), len(dthetas)))
    mi = np.empty_like(ce)
    for i, dt in enumerate(dts):
        for j, dth in enumerate(dthetas):
            ce[i, j], mi[i, j] = leg_costs(model, r1, r2, float(dth), float(dt), direction)
    return ce, mi


def derivative_sign_changes(values: Sequence[float]) -> list[str]:
    """Sign changes of the forward differences, as '-+' or '+-' in order."""
    d = np.diff(np.asarray(values, dtype=float))
    signs = np.sign(d[d != 0])
    return ["-+" if a < b else "+-" for a, b in zip(signs, signs[1:]) if a != b]
