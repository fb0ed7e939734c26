"""Planning and optimization of windowed multi-impulse transfers between circular orbits."""

__version__ = "0.1.0"

from .cost import CostBreakdown, Weights
from .lambert import LambertError, LambertSolution, solve_directed, solve_short_way
from .maneuver import ImpulsePlan, LegError, build_plan, detect_collision
from .optimizer import (
    DesignVector,
    OptimizationResult,
    OptimizerSettings,
    TransferProblem,
    multistart,
    optimize,
)
from .scenario import Scenario, ScenarioError, load_scenario
from .twobody import EARTH, MARS, Direction, GravityModel, StateVector, circular_state, propagate
from .window import WindowSpec, theta_max, window_bounds

__all__ = [
    "CostBreakdown", "DesignVector", "Direction", "EARTH", "GravityModel", "ImpulsePlan",
    "LambertError", "LambertSolution", "LegError", "MARS", "OptimizationResult",
    "OptimizerSettings", "Scenario", "ScenarioError", "StateVector", "TransferProblem",
    "WindowSpec", "Weights", "build_plan", "circular_state", "detect_collision",
    "load_scenario", "multistart", "optimize", "propagate", "solve_directed",
    "solve_short_way", "theta_max", "window_bounds",
]
