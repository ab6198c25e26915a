"""Per-demonstration quality metrics.

Ten scalar metrics describe one demonstration: squared path lengths in
Cartesian, orientation and joint space, squared jerk in Cartesian and joint
space, manipulability, joint-limit clearance, curvature, control effort and
legibility.  ``compute_metric_vector`` runs the full pipeline (limit check,
resampling, FK, derivatives, all metrics); the individual functions operate
on already-prepared arrays so they can be tested and reused in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ValidationError
from .robot_model import ManipulatorModel
from .trajectory import (
    DEFAULT_DT,
    DEFAULT_SMOOTHING_WINDOW,
    DerivativeSet,
    JointTrajectory,
    differentiate,
    joint_to_cartesian,
    orientation_steps,
    resample_uniform,
)

# canonical metric order; feature matrices, reports and regression term
# numbering (x1..x10) all follow it, with the consistency flag appended last
METRIC_NAMES: tuple[str, ...] = (
    "path_len_cart",
    "path_len_joint",
    "orient_len",
    "jerk_cart",
    "jerk_joint",
    "manipulability",
    "joint_limits",
    "curvature",
    "effort",
    "legibility",
)

FLAG_OK = "ok"
FLAG_UNAVAILABLE = "unavailable"


@dataclass(frozen=True)
class GoalSet:
    """Candidate goal positions for legibility; index of the actual goal optional."""

    points: np.ndarray
    actual_index: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValidationError(f"goal points must be (G, 3) with G >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("goal points contain non-finite values")
        if self.actual_index is not None and not 0 <= self.actual_index < pts.shape[0]:
            raise ValidationError(
                f"actual goal index {self.actual_index} out of range for {pts.shape[0]} goals"
            )

    @property
    def n_goals(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class LegibilityConfig:
    weight_early: float = 0.5
    weight_progress: float = 0.5
    early_fraction: float = 0.5
    temperature: float = 1.0
    eps: float = 1e-9

    def __post_init__(self):
        if self.weight_early < 0.0 or self.weight_progress < 0.0:
            raise ValidationError("legibility weights must be non-negative")
        if self.weight_early + self.weight_progress <= 0.0:
            raise ValidationError("legibility weights must not both be zero")
        if not 0.0 < self.early_fraction <= 1.0:
            raise ValidationError("early_fraction must lie in (0, 1]")
        if not self.temperature > 0.0:
            raise ValidationError("temperature must be positive")


@dataclass(frozen=True)
class MetricConfig:
    """Knobs of the metric pipeline; defaults match the reference protocol."""

    resample_dt: float = DEFAULT_DT
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW
    manipulability_rows: tuple[int, ...] | None = None  # None = all six
    curvature_velocity_floor: float = 1e-3
    legibility: LegibilityConfig = field(default_factory=LegibilityConfig)


@dataclass(frozen=True)
class MetricVector:
    """All metric values for one demonstration plus availability flags.

    ``values`` maps each name in METRIC_NAMES to a float or None;
    ``flags`` carries "ok", "unavailable" or "skipped_samples:<k>".
    Unavailable metrics are flagged, never silently zero.
    """

    demo_id: str
    values: dict[str, float | None]
    flags: dict[str, str]

    def __post_init__(self):
        missing = [n for n in METRIC_NAMES if n not in self.values]
        if missing:
            raise ValidationError(f"metric vector is missing entries: {missing}")

    def available(self) -> tuple[str, ...]:
        return tuple(n for n in METRIC_NAMES if self.values[n] is not None)


def path_length_cartesian(positions: np.ndarray) -> float:
    """Sum of squared straight-line steps between consecutive tool positions."""
    p = np.asarray(positions, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 2:
        raise ValidationError(f"positions must be (T, 3) with T >= 2, got {p.shape}")
    d = np.diff(p, axis=0)
    return float((d * d).sum())


def path_length_orientation(rotations: np.ndarray) -> float:
    """Sum of squared geodesic angles between consecutive rotations."""
    steps = orientation_steps(rotations)
    return float((steps * steps).sum())


def path_length_joint(positions: np.ndarray) -> float:
    """Sum of squared joint-space steps."""
    q = np.asarray(positions, dtype=float)
    if q.ndim != 2 or q.shape[0] < 2:
        raise ValidationError(f"joint positions must be (T, n) with T >= 2, got {q.shape}")
    d = np.diff(q, axis=0)
    return float((d * d).sum())


def jerk_metric(derivs: DerivativeSet) -> float:
    """Sum over samples and components of squared jerk."""
    j = np.asarray(derivs.jerk, dtype=float)
    return float((j * j).sum())


def manipulability_metric(
    model: ManipulatorModel,
    positions: np.ndarray,
    rows: tuple[int, ...] | None = None,
) -> float:
    """Sum over samples of sqrt(det(Jr Jr^T)) along the trajectory."""
    Q = np.asarray(positions, dtype=float)
    a, alpha, d, off = model.dh_arrays()
    J = kernels.jacobian_series(
        a, alpha, d, off, model.base_pose.matrix(), model.tool_transform.matrix(), Q
    )
    idx = np.arange(6, dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
    if idx.size < 1 or idx.min() < 0 or idx.max() > 5:
        raise ValidationError("manipulability rows must be indices in 0..5")
    return float(kernels.manipulability_series(J, idx).sum())


def joint_limit_metric(model: ManipulatorModel, positions: np.ndarray) -> float:
    """Sum over samples of the per-joint clearance product (1 mid-range, 0 at a limit)."""
    Q = np.asarray(positions, dtype=float)
    return float(kernels.limit_clearance_series(Q, model.q_lower, model.q_upper).sum())


def effort_metric(torques: np.ndarray | None) -> float | None:
    """Sum of squared joint torques; None when the torque channel is absent."""
    if torques is None:
        return None
    tau = np.asarray(torques, dtype=float)
    return float((tau * tau).sum())


def curvature_metric(
    derivs: DerivativeSet, velocity_floor: float = 1e-3
) -> tuple[float, int]:
    """Sum of per-sample path curvature ||v x a|| / ||v||^3.

    Samples slower than ``velocity_floor`` are skipped; the count of skipped
    samples is returned alongside the value.
    """
    v = np.asarray(derivs.velocity, dtype=float)
    a = np.asarray(derivs.acceleration, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3:
        raise ValidationError(f"curvature needs Cartesian derivatives (T, 3), got {v.shape}")
    speed = np.linalg.norm(v, axis=1)
    keep = speed >= velocity_floor
    cross = np.cross(v[keep], a[keep])
    kappa = np.linalg.norm(cross, axis=1) / speed[keep] ** 3
    return float(kappa.sum()), int((~keep).sum())


def legibility_metric(
    positions: np.ndarray, goals: GoalSet, config: LegibilityConfig | None = None
) -> float:
    """Mean goal-posterior entropy over trajectory prefixes (nats).

    0 means the goal is unambiguous from every prefix; ln(n_goals) means the
    posterior never leaves uniform.
    """
    cfg = config or LegibilityConfig()
    p = np.asarray(positions, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 2:
        raise ValidationError(f"positions must be (T, 3) with T >= 2, got {p.shape}")
    ent = kernels.legibility_entropies(
        np.ascontiguousarray(p),
        np.ascontiguousarray(goals.points),
        cfg.weight_early,
        cfg.weight_progress,
        cfg.early_fraction,
        cfg.temperature,
        cfg.eps,
    )
    return float(ent.mean())


def compute_metric_vector(
    model: ManipulatorModel,
    jt: JointTrajectory,
    goals: GoalSet | None = None,
    config: MetricConfig | None = None,
    demo_id: str = "",
) -> MetricVector:
    """Full metric pipeline for one demonstration.

    Checks joint limits on the recorded samples, resamples onto a uniform
    grid, recomputes tool poses by forward kinematics on the resampled
    configurations, differentiates both spaces, then evaluates every metric.
    Effort and legibility are flagged unavailable when torques / goals are
    missing.
    """
    cfg = config or MetricConfig()
    if jt.dof != model.dof:
        raise ValidationError(
            f"trajectory has {jt.dof} joints, model {model.name!r} has {model.dof}"
        )
    model.check_limits(jt.positions)
    rs = resample_uniform(jt, cfg.resample_dt)
    cart = joint_to_cartesian(model, rs)
    cart_derivs = differentiate(cart.positions, cfg.resample_dt, cfg.smoothing_window)
    joint_derivs = differentiate(rs.positions, cfg.resample_dt, cfg.smoothing_window)

    values: dict[str, float | None] = {}
    flags: dict[str, str] = {}

    values["path_len_cart"] = path_length_cartesian(cart.positions)
    flags["path_len_cart"] = FLAG_OK
    values["path_len_joint"] = path_length_joint(rs.positions)
    flags["path_len_joint"] = FLAG_OK
    values["orient_len"] = path_length_orientation(cart.rotations)
    flags["orient_len"] = FLAG_OK
    values["jerk_cart"] = jerk_metric(cart_derivs)
    flags["jerk_cart"] = FLAG_OK
    values["jerk_joint"] = jerk_metric(joint_derivs)
    flags["jerk_joint"] = FLAG_OK
    values["manipulability"] = manipulability_metric(
        model, rs.positions, cfg.manipulability_rows
    )
    flags["manipulability"] = FLAG_OK
    values["joint_limits"] = joint_limit_metric(model, rs.positions)
    flags["joint_limits"] = FLAG_OK

    kappa, skipped = curvature_metric(cart_derivs, cfg.curvature_velocity_floor)
    values["curvature"] = kappa
    flags["curvature"] = f"skipped_samples:{skipped}" if skipped else FLAG_OK

    eff = effort_metric(rs.torques)
    values["effort"] = eff
    flags["effort"] = FLAG_OK if eff is not None else FLAG_UNAVAILABLE

    if goals is not None:
        values["legibility"] = legibility_metric(cart.positions, goals, cfg.legibility)
        flags["legibility"] = FLAG_OK
    else:
        values["legibility"] = None
        flags["legibility"] = FLAG_UNAVAILABLE

    return MetricVector(demo_id=demo_id, values=values, flags=flags)
