import math

import numpy as np
import pytest

from mvr.cost import Weights
from mvr.optimizer import (
    DesignVector,
    GradientError,
    OptimizationError,
    OptimizerSettings,
    TransferProblem,
    derivative_sign_changes,
    fd_gradient,
    leg_costs,
    multistart,
    optimize,
    pad_design,
    warm_start,
)
from mvr.twobody import EARTH, MARS, Direction
from mvr.window import WindowSpec, theta_max

from oracles import hohmann_dv

R = MARS.body_radius


def mars(n=4, w=(1, 0, 0), direction=Direction.CCW, window=True):
    spec = WindowSpec(math.radians(60)) if window else None
    return TransferProblem(MARS, R + 500, R + 1000, n, Weights(*w), spec, direction)


@pytest.mark.parametrize("n,dim", [(2, 2), (3, 5), (4, 8), (6, 14)])
def test_dimension(n, dim):
    pb = mars(n)
    x = pb.initial_guess()
    assert pb.dimension == dim == x.to_array().size
    assert DesignVector.from_array(x.to_array(), n).n == n


def test_from_array_rejects_wrong_length():
    with pytest.raises(ValueError):
        DesignVector.from_array(np.zeros(9), 4)


def test_assemble_places_waypoints_on_polar_angles():
    pb = mars(2)
    pts, dts, v1, v2 = pb.assemble(DesignVector([], [0.0], [500.0]))
    np.testing.assert_allclose(pts[0], [R + 500, 0, 0])
    hi = theta_max(math.radians(60), 1000.0, MARS)
    np.testing.assert_allclose(pts[1], [(R + 1000) * math.cos(hi), (R + 1000) * math.sin(hi), 0])
    assert dts == [500.0]
    assert float(v1 @ pts[0]) == pytest.approx(0.0, abs=1e-9)
    assert np.linalg.norm(v2) == pytest.approx(math.sqrt(MARS.mu / (R + 1000)))


def test_clockwise_transfer_exits_through_lower_edge():
    pb = mars(2, direction=Direction.CW)
    assert pb.final_angle == -theta_max(math.radians(60), 1000.0, MARS)


def test_fd_gradient_on_quadratic():
    rng = np.random.default_rng(0)
    target = rng.normal(size=6)
    x = target + rng.uniform(0.5, 2.0, 6) * rng.choice([-1, 1], 6)
    g = fd_gradient(x, lambda z: float(np.sum((z - target) ** 2)))
    np.testing.assert_allclose(g, 2 * (x - target), rtol=1e-5)


def test_fd_gradient_small_at_optimum():
    target = np.array([0.3, -1.2, 4.0])
    g = fd_gradient(target, lambda z: float(np.sum((z - target) ** 2)))
    assert np.linalg.norm(g) < 1e-5


def test_fd_gradient_falls_back_to_backward_difference():
    f = lambda z: float(z[0] ** 2 + z[1] ** 2) if z[0] <= 1.0 else math.inf  # noqa: E731
    g = fd_gradient(np.array([1.0, 2.0]), f)
    np.testing.assert_allclose(g, [2.0, 4.0], rtol=1e-5)


def test_fd_gradient_errors():
    with pytest.raises(GradientError):
        fd_gradient(np.zeros(2), lambda z: math.inf)
    f = lambda z: 0.0 if np.all(z == 0) else math.inf  # noqa: E731
    with pytest.raises(GradientError):
        fd_gradient(np.zeros(2), f)


def test_undivided_gradient_is_raw_difference():
    x = np.array([2.0, 3.0])
    g = fd_gradient(x, lambda z: float(z @ z), fd_epsilon=1e-6, divide=False)
    np.testing.assert_allclose(g, 2 * x * 1e-6 * np.abs(x), rtol=1e-5)


def test_fd_gradient_on_four_impulse_cost_matches_central_differences():
    # forward and central differences differ by the truncation term
    # eps/2 * J''; angle components have J'' ~ 1e4, so the bound carries it
    pb = mars(4, (1, 0.5, 0.2))
    x = pb.initial_guess().to_array()
    f0 = pb.cost(x)
    g = fd_gradient(x, pb.cost, f0=f0)
    for j in range(x.size):
        eps = 1e-6 * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = eps
        fp, fm = pb.cost(x + e), pb.cost(x - e)
        central = (fp - fm) / (2 * eps)
        curvature = abs(fp - 2 * f0 + fm) / eps**2
        assert abs(g[j] - central) <= 10 * eps * max(1.0, curvature)


def test_zero_step_returns_start():
    pb = mars(4)
    x0 = pb.initial_guess()
    res = optimize(x0, pb, OptimizerSettings(gamma=0.0, iterations=1))
    np.testing.assert_array_equal(res.best.to_array(), x0.to_array())
    assert res.best_cost.total == pb.evaluate(x0)[0].total


def test_backtracking_history_non_increasing_and_feasible():
    pb = mars(4, (1, 5, 2))
    res = optimize(pb.initial_guess(), pb, OptimizerSettings(iterations=150))
    totals = [c.total for c in res.cost_history]
    assert all(b <= a for a, b in zip(totals, totals[1:]))
    x = res.best
    assert np.all(x.radii > R) and np.all(x.dts >= 1.0)
    for r, a in zip(pb.radii_full(x), x.angles):
        lo, hi = pb.bounds(r)
        assert lo <= a <= hi


def test_projection_is_idempotent_and_clips():
    pb = mars(4)
    x = DesignVector([R - 100, R + 700], [-1.0, 0.5, 0.0], [-5.0, 0.5, 100.0])
    once = pb.project(x)
    twice = pb.project(once)
    np.testing.assert_array_equal(once.to_array(), twice.to_array())
    assert once.radii[0] == R + 1.0
    assert once.angles[0] == pb.bounds(R + 500)[0]
    assert once.angles[1] == pb.bounds(R + 1.0)[1]
    assert list(once.dts[:2]) == [1.0, 1.0]


def test_infeasible_start_is_rejected():
    pb = mars(2, window=False)
    with pytest.raises(OptimizationError):
        optimize(DesignVector([], [math.pi], [1000.0]), pb)


@pytest.mark.parametrize("model,r1,r2", [(EARTH, 6878.0, 7378.0), (MARS, 3889.5, 4389.5)])
def test_unconstrained_two_impulse_finds_hohmann(model, r1, r2):
    pb = TransferProblem(model, r1, r2, 2, Weights(1, 0, 0), None)
    res = optimize(pb.initial_guess(), pb, OptimizerSettings(iterations=2000))
    ref = hohmann_dv(model.mu, r1, r2)
    assert abs(res.best_cost.j_ce - ref) / ref < 0.01


def test_clockwise_problem_mirrors_counter_clockwise():
    s = OptimizerSettings(iterations=300)
    a = optimize(mars(2).initial_guess(), mars(2), s)
    b = optimize(mars(2, direction="cw").initial_guess(), mars(2, direction="cw"), s)
    assert a.best_cost.total == pytest.approx(b.best_cost.total, rel=1e-9)
    assert a.best.angles[0] == pytest.approx(-b.best.angles[0], abs=1e-9)


def test_padding_keeps_the_plan():
    two, four = mars(2), mars(4)
    x2 = optimize(two.initial_guess(), two, OptimizerSettings(iterations=200)).best
    x4 = pad_design(x2, two, four)
    c2, p2 = two.evaluate(x2)
    c4, p4 = four.evaluate(x4)
    assert x4.n == 4
    assert c4.j_ce == pytest.approx(c2.j_ce, abs=1e-8)
    assert p4.magnitudes[1] < 1e-7 and p4.magnitudes[2] < 1e-7
    assert p4.epochs[-1] == pytest.approx(p2.epochs[-1], rel=1e-9)


def test_warm_start_matches_dimension():
    pb = mars(5)
    assert warm_start(pb, OptimizerSettings(iterations=50)).to_array().size == pb.dimension


def test_multistart_is_deterministic_and_no_worse_than_single_start():
    pb = mars(3, (1, 1, 0))
    s = OptimizerSettings(iterations=100)
    a = multistart(pb, s, seeds=2)
    b = multistart(pb, s, seeds=2)
    np.testing.assert_array_equal(a.best.to_array(), b.best.to_array())
    single = optimize(pb.initial_guess(), pb, s)
    assert a.best_cost.total <= single.best_cost.total


def test_settings_validation():
    with pytest.raises(ValueError):
        OptimizerSettings(iterations=0)
    with pytest.raises(ValueError):
        OptimizerSettings(fd_epsilon=0.0)
    with pytest.raises(ValueError):
        OptimizerSettings(gamma=-1.0)


def test_leg_costs_nan_when_singular():
    assert all(math.isnan(v) for v in leg_costs(MARS, R + 400, R + 500, math.pi, 1000.0))


def test_sign_changes():
    assert derivative_sign_changes([3, 2, 1, 2, 3]) == ["-+"]
    assert derivative_sign_changes([1, 2, 1, 2]) == ["+-", "-+"]
    assert derivative_sign_changes([1, 1, 1]) == []
