import math

import numpy as np
import pytest

from mvr.cost import CostBreakdown, Weights, control_effort, max_impulse, total_cost, uncertainty_cost
from mvr.maneuver import CoastArc, Impulse, ImpulsePlan, build_plan
from mvr.twobody import EARTH, Direction, StateVector, circular_state

from oracles import hohmann_burns, hohmann_dv


def _plan_with(mags):
    imps = [Impulse(np.array([7000.0, 0, 0]), float(i), np.array([m, 0.0, 0.0])) for i, m in enumerate(mags)]
    arcs = [CoastArc(StateVector([7000.0, 0, 0], [0, 7.5, 0]), 1.0)] * (len(mags) - 1)
    return ImpulsePlan.from_parts(imps, arcs)


def _hohmann():
    r1, r2 = 6878.0, 7378.0
    half = math.pi * math.sqrt((0.5 * (r1 + r2)) ** 3 / EARTH.mu)
    end = math.pi - 1e-4  # closer to pi the Lambert geometry becomes ill-conditioned
    v1 = circular_state(r1, 0.0, Direction.CCW, EARTH).velocity
    v2 = circular_state(r2, end, Direction.CCW, EARTH).velocity
    return build_plan([[r1, 0, 0], [r2 * math.cos(end), r2 * math.sin(end), 0]], [half], v1, v2, EARTH)


def test_sums_and_maxima():
    plan = _plan_with([0.3, 0.1, 0.2])
    assert control_effort(plan) == pytest.approx(0.6)
    assert max_impulse(plan) == pytest.approx(0.3)


def test_null_maneuver_costs_nothing():
    plan = _plan_with([0.0, 0.0])
    assert control_effort(plan) == 0.0 and max_impulse(plan) == 0.0


def test_hohmann_effort_and_peak():
    plan = _hohmann()
    assert control_effort(plan) == pytest.approx(hohmann_dv(EARTH.mu, 6878.0, 7378.0), abs=1e-6)
    assert max_impulse(plan) == pytest.approx(max(hohmann_burns(EARTH.mu, 6878.0, 7378.0)), abs=1e-6)


def test_uncertainty_cost_examples():
    assert uncertainty_cost([0.1, 0.2], [0.1, 0.2]) == 0.0
    assert uncertainty_cost([0.1, 0.15], [0.19188, 0.19188]) == pytest.approx(0.13376)
    assert uncertainty_cost([-0.19188], [0.19188]) == pytest.approx(2 * 0.19188)


def test_uncertainty_cost_length_mismatch():
    with pytest.raises(ValueError):
        uncertainty_cost([0.1, 0.2], [0.3])


def test_total_cost_weights():
    plan = _hohmann()
    ce, mi = control_effort(plan), max_impulse(plan)
    c = total_cost(plan, [0.0], [0.2], Weights(1, 0, 0))
    assert c.total == c.j_ce == ce
    c = total_cost(plan, [0.2], [0.2], Weights(0, 0, 1))
    assert c.total == 0.0
    c = total_cost(plan, [0.0], [0.2], Weights(1, 5, 0))
    assert c.total == pytest.approx(ce + 5 * mi)


def test_total_cost_monotone_in_each_weight():
    plan = _plan_with([0.3, 0.1, 0.2])
    base = total_cost(plan, [0.0, 0.1], [0.2, 0.2], Weights(1, 1, 1)).total
    for w in (Weights(2, 1, 1), Weights(1, 2, 1), Weights(1, 1, 2)):
        assert total_cost(plan, [0.0, 0.1], [0.2, 0.2], w).total >= base


def test_bounds_between_effort_and_peak():
    plan = _plan_with([0.3, 0.1, 0.2, 0.05])
    c = total_cost(plan, [0, 0, 0], [0, 0, 0], Weights())
    assert c.j_mi <= c.j_ce <= plan.n * c.j_mi


def test_collision_flag_makes_cost_infinite():
    # an arc that dives through the surface
    st = StateVector([7000.0, 0, 0], [0, 3.0, 0])
    imps = [Impulse(st.position, 0.0, np.zeros(3)), Impulse(np.array([-7000.0, 0, 0]), 3000.0, np.zeros(3))]
    plan = ImpulsePlan.from_parts(imps, [CoastArc(st, 3000.0)])
    ok = total_cost(plan, [0.0], [0.0], Weights(), forbid_collision=False)
    assert ok.feasible
    bad = total_cost(plan, [0.0], [0.0], Weights(), forbid_collision=True, model=EARTH)
    assert not bad.feasible and "collision" in bad.failure
    with pytest.raises(ValueError):
        total_cost(plan, [0.0], [0.0], Weights(), forbid_collision=True)


def test_weights_validation():
    with pytest.raises(ValueError):
        Weights(0, 0, 0)
    with pytest.raises(ValueError):
        Weights(-1, 0, 0)


def test_infeasible_breakdown():
    c = CostBreakdown.infeasible("leg 0: no solution")
    assert not c.feasible and c.total == math.inf and c.failure == "leg 0: no solution"
