import math

import numpy as np
import pytest

import oracles
from conftest import make_planar_2r, make_random_model
from demo_gauge.errors import JointLimitError, ValidationError
from demo_gauge.metrics import (
    METRIC_NAMES,
    GoalSet,
    LegibilityConfig,
    MetricConfig,
    MetricVector,
    compute_metric_vector,
    curvature_metric,
    effort_metric,
    jerk_metric,
    joint_limit_metric,
    legibility_metric,
    manipulability_metric,
    path_length_cartesian,
    path_length_joint,
    path_length_orientation,
)
from demo_gauge.trajectory import (
    DerivativeSet,
    JointTrajectory,
    differentiate,
    edge_margin,
    joint_to_cartesian,
    resample_uniform,
)


def random_trajectory(rng, model, n=10, torque=True):
    times = np.cumsum(rng.uniform(0.015, 0.035, size=n))
    lo, hi = model.q_lower, model.q_upper
    span = hi - lo
    q = lo + span * rng.uniform(0.15, 0.85, size=(n, model.dof))
    tau = rng.normal(scale=2.0, size=(n, model.dof)) if torque else None
    return JointTrajectory(times, q, tau)


# ------------------------------------------------- individual metric oracles


def test_path_lengths_match_oracle():
    rng = np.random.default_rng(0)
    p = rng.normal(size=(12, 3))
    assert abs(path_length_cartesian(p) - oracles.o_path_len(p)) < 1e-12
    q = rng.normal(size=(12, 5))
    assert abs(path_length_joint(q) - oracles.o_path_len(q)) < 1e-12


def test_orientation_length_matches_oracle():
    rng = np.random.default_rng(1)
    from demo_gauge.robot_model import rpy_matrix

    R = np.stack([rpy_matrix(*rng.uniform(-0.5, 0.5, 3)) for _ in range(8)])
    assert abs(path_length_orientation(R) - oracles.o_orient_len(R)) < 1e-12


def test_jerk_metric_matches_oracle():
    rng = np.random.default_rng(2)
    j = rng.normal(size=(15, 3))
    ds = DerivativeSet(np.zeros_like(j), np.zeros_like(j), j)
    assert abs(jerk_metric(ds) - oracles.o_jerk(j)) < 1e-12


def test_manipulability_metric_matches_oracle():
    rng = np.random.default_rng(3)
    model = make_random_model(rng, dof=4)
    Q = rng.uniform(-1.5, 1.5, size=(9, 4))
    got = manipulability_metric(model, Q)
    assert abs(got - oracles.o_manipulability(model, Q)) < 1e-9
    got2 = manipulability_metric(model, Q, rows=(0, 1, 2))
    assert abs(got2 - oracles.o_manipulability(model, Q, rows=(0, 1, 2))) < 1e-9


def test_joint_limit_metric_matches_oracle():
    rng = np.random.default_rng(4)
    model = make_random_model(rng, dof=5)
    Q = rng.uniform(-2.5, 2.5, size=(11, 5))
    assert abs(joint_limit_metric(model, Q) - oracles.o_joint_limits(model, Q)) < 1e-12


def test_effort_metric():
    rng = np.random.default_rng(5)
    tau = rng.normal(size=(10, 4))
    assert abs(effort_metric(tau) - oracles.o_effort(tau)) < 1e-12
    assert effort_metric(None) is None


def test_curvature_metric_matches_oracle_and_skips():
    rng = np.random.default_rng(6)
    v = rng.normal(size=(14, 3))
    a = rng.normal(size=(14, 3))
    v[4] = [1e-6, 0, 0]  # below the floor: must be skipped, not blown up
    ds = DerivativeSet(v, a, np.zeros_like(v))
    got, skipped = curvature_metric(ds, velocity_floor=1e-3)
    want, want_skipped = oracles.o_curvature(v, a, 1e-3)
    assert abs(got - want) < 1e-10
    assert skipped == want_skipped == 1


def test_curvature_on_circle():
    # constant-speed circle of radius R has curvature 1/R everywhere; the
    # sinusoid passes through the central-difference stack exactly, so the
    # interior per-sample curvature is machine-exact without smoothing
    R, omega, dt = 0.4, 1.3, 0.02
    t = np.arange(0.0, 3.0, dt)
    pos = np.column_stack([R * np.cos(omega * t), R * np.sin(omega * t), np.zeros_like(t)])
    ds = differentiate(pos, dt, smoothing_window=1)
    m = edge_margin(1)
    inner = DerivativeSet(ds.velocity[m:-m], ds.acceleration[m:-m], ds.jerk[m:-m])
    value, skipped = curvature_metric(inner, velocity_floor=1e-3)
    n = len(t) - 2 * m
    assert skipped == 0
    assert abs(value - n / R) < 1e-6 * n


def test_legibility_matches_oracle():
    rng = np.random.default_rng(7)
    cfg = LegibilityConfig()
    for _ in range(5):
        pts = np.cumsum(rng.normal(scale=0.04, size=(12, 3)), axis=0)
        goals = GoalSet(rng.uniform(-0.5, 0.5, size=(3, 3)))
        got = legibility_metric(pts, goals, cfg)
        want = oracles.o_legibility(pts, goals.points, cfg)
        assert abs(got - want) < 1e-10


def test_legibility_single_goal_is_zero():
    rng = np.random.default_rng(8)
    pts = np.cumsum(rng.normal(scale=0.05, size=(10, 3)), axis=0)
    goals = GoalSet(np.array([[0.4, 0.1, 0.0]]))
    assert legibility_metric(pts, goals) == 0.0


def test_legibility_perfect_ambiguity_is_ln2():
    # straight line along the perpendicular bisector of two mirrored goals:
    # both costs are identical at every prefix, so the posterior stays
    # uniform and every prefix entropy is exactly ln 2
    t = np.linspace(0.0, 1.0, 15)
    pts = np.column_stack([np.zeros_like(t), t, np.zeros_like(t)])
    goals = GoalSet(np.array([[1.0, 2.0, 0.0], [-1.0, 2.0, 0.0]]))
    got = legibility_metric(pts, goals)
    assert abs(got - math.log(2.0)) < 1e-12


def test_legibility_goal_directed_below_ambiguous():
    t = np.linspace(0.0, 1.0, 15)
    pts = np.column_stack([t, 2.0 * t, np.zeros_like(t)])  # straight at goal 0
    goals = GoalSet(np.array([[1.0, 2.0, 0.0], [-1.0, 2.0, 0.0]]))
    direct = legibility_metric(pts, goals)
    assert direct < math.log(2.0)


def test_goalset_and_config_validation():
    with pytest.raises(ValidationError):
        GoalSet(np.zeros((0, 3)))
    with pytest.raises(ValidationError):
        GoalSet(np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        GoalSet(np.array([[np.nan, 0, 0]]))
    with pytest.raises(ValidationError):
        GoalSet(np.zeros((2, 3)), actual_index=5)
    with pytest.raises(ValidationError):
        LegibilityConfig(weight_early=-1.0)
    with pytest.raises(ValidationError):
        LegibilityConfig(weight_early=0.0, weight_progress=0.0)
    with pytest.raises(ValidationError):
        LegibilityConfig(early_fraction=0.0)
    with pytest.raises(ValidationError):
        LegibilityConfig(temperature=0.0)


def test_metric_vector_requires_all_names():
    with pytest.raises(ValidationError):
        MetricVector("d", {"path_len_cart": 1.0}, {"path_len_cart": "ok"})


# ------------------------------------------------------------ full pipeline


def test_compute_metric_vector_matches_oracle_pipeline():
    rng = np.random.default_rng(100)
    for k in range(20):
        model = make_random_model(rng, dof=4) if k % 2 else make_planar_2r()
        jt = random_trajectory(rng, model, torque=bool(k % 3))
        goals = GoalSet(rng.uniform(-0.6, 0.6, size=(3, 3))) if k % 2 else None
        mv = compute_metric_vector(model, jt, goals=goals, demo_id=f"t{k}")
        want = oracles.o_metric_vector(model, jt, goals=goals)
        for name in METRIC_NAMES:
            if want[name] is None:
                assert mv.values[name] is None
                assert mv.flags[name] == "unavailable"
            else:
                # 1e-9 relative-or-absolute: jerk sums reach 1e9 on rough
                # random trajectories, where 1e-9 absolute would mean 1e-18
                # relative, past what float64 can express
                assert mv.values[name] == pytest.approx(want[name], rel=1e-9, abs=1e-9), name
        if want["curvature_skipped"]:
            assert mv.flags["curvature"] == f"skipped_samples:{want['curvature_skipped']}"
        else:
            assert mv.flags["curvature"] == "ok"


def test_compute_metric_vector_flags():
    rng = np.random.default_rng(101)
    model = make_planar_2r()
    jt = random_trajectory(rng, model, torque=False)
    mv = compute_metric_vector(model, jt)
    assert mv.values["effort"] is None
    assert mv.flags["effort"] == "unavailable"
    assert mv.values["legibility"] is None
    assert mv.flags["legibility"] == "unavailable"
    assert mv.available() == tuple(
        n for n in METRIC_NAMES if n not in ("effort", "legibility")
    )


def test_compute_metric_vector_curvature_skip_flag():
    # a long dwell produces near-zero velocities that must be skipped
    model = make_planar_2r()
    times = np.arange(0.0, 1.0, 0.02)
    q = np.zeros((len(times), 2))
    q[:, 0] = 0.3
    q[-10:, 0] = 0.3 + np.linspace(0.0, 0.2, 10)
    mv = compute_metric_vector(model, JointTrajectory(times, q))
    assert mv.flags["curvature"].startswith("skipped_samples:")
    assert int(mv.flags["curvature"].split(":")[1]) > 0


def test_compute_metric_vector_checks_limits_and_dof():
    model = make_planar_2r()
    times = np.linspace(0.0, 0.5, 12)
    q = np.zeros((12, 2))
    q[5, 0] = 99.0
    with pytest.raises(JointLimitError):
        compute_metric_vector(model, JointTrajectory(times, q))
    with pytest.raises(ValidationError):
        compute_metric_vector(model, JointTrajectory(times, np.zeros((12, 3))))


def test_jerk_of_cubic_trajectory():
    # jerk metric over interior samples of (t^3, 2t^3, 0): ||j||^2 = 36 + 144
    t = np.arange(0.0, 1.0, 0.02)
    pos = np.column_stack([t**3, 2.0 * t**3, np.zeros_like(t)])
    ds = differentiate(pos, 0.02, smoothing_window=5)
    m = edge_margin(5)
    inner = DerivativeSet(ds.velocity[m:-m], ds.acceleration[m:-m], ds.jerk[m:-m])
    n = len(t) - 2 * m
    assert abs(jerk_metric(inner) - 180.0 * n) < 1e-6 * n
