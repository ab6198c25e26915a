"""Serial manipulator description and differential kinematics.

Models are standard (distal) Denavit-Hartenberg chains of revolute joints
with an optional fixed base pose and tool transform.  The per-sample math
lives in :mod:`demo_gauge.kernels`; this module owns the types, validation
and single-configuration conveniences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ValidationError

_ORTHO_TOL = 1e-9


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation from roll-pitch-yaw (extrinsic x-y-z): Rz(yaw) Ry(pitch) Rx(roll)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def check_rotation(R: np.ndarray, what: str = "rotation") -> None:
    """Raise ValidationError unless R is orthonormal with det +1 (tol 1e-9)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValidationError(f"{what} must be 3x3, got {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValidationError(f"{what} contains non-finite entries")
    err = np.abs(R @ R.T - np.eye(3)).max()
    if err > _ORTHO_TOL:
        raise ValidationError(f"{what} is not orthonormal (max deviation {err:.3e})")
    if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
        raise ValidationError(f"{what} determinant is not +1")


@dataclass(frozen=True)
class Pose:
    """Rigid transform split into position and rotation matrix."""

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        if self.position.shape != (3,):
            raise ValidationError(f"position must have shape (3,), got {self.position.shape}")
        if not np.all(np.isfinite(self.position)):
            raise ValidationError("position contains non-finite entries")
        check_rotation(self.rotation, "pose rotation")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.eye(3))

    @staticmethod
    def from_matrix(M: np.ndarray) -> "Pose":
        M = np.asarray(M, dtype=float)
        if M.shape != (4, 4):
            raise ValidationError(f"homogeneous transform must be 4x4, got {M.shape}")
        return Pose(M[:3, 3], M[:3, :3])

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.position
        return M


@dataclass(frozen=True)
class JointSpec:
    """One revolute joint: DH row plus position limits."""

    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0
    q_min: float = -math.pi
    q_max: float = math.pi

    def __post_init__(self):
        vals = (self.a, self.alpha, self.d, self.theta_offset, self.q_min, self.q_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("joint parameters must be finite")
        if not self.q_min < self.q_max:
            raise ValidationError(
                f"joint limits must satisfy q_min < q_max, got [{self.q_min}, {self.q_max}]"
            )


@dataclass(frozen=True)
class ManipulatorModel:
    """Serial chain of revolute joints in standard DH convention."""

    name: str
    joints: tuple[JointSpec, ...]
    base_pose: Pose = field(default_factory=Pose.identity)
    tool_transform: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if len(self.joints) < 1:
            raise ValidationError("model needs at least one joint")

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def q_lower(self) -> np.ndarray:
        return np.array([j.q_min for j in self.joints])

    @property
    def q_upper(self) -> np.ndarray:
        return np.array([j.q_max for j in self.joints])

    def dh_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(a, alpha, d, theta_offset) as float arrays, for the kernels."""
        a = np.array([j.a for j in self.joints])
        alpha = np.array([j.alpha for j in self.joints])
        d = np.array([j.d for j in self.joints])
        off = np.array([j.theta_offset for j in self.joints])
        return a, alpha, d, off

    def check_limits(self, Q: np.ndarray) -> None:
        """Raise JointLimitError naming the first offending joint/sample."""
        from .errors import JointLimitError

        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        lo, hi = self.q_lower, self.q_upper
        bad = (Q < lo) | (Q > hi)
        if bad.any():
            t, j = np.argwhere(bad)[0]
            raise JointLimitError(int(j), int(t), float(Q[t, j]), float(lo[j]), float(hi[j]))


def _as_config(model: ManipulatorModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.dof,):
        raise ValidationError(
            f"configuration must have shape ({model.dof},), got {q.shape}"
        )
    if not np.all(np.isfinite(q)):
        raise ValidationError("configuration contains non-finite entries")
    return q


def forward_kinematics(model: ManipulatorModel, q) -> Pose:
    """Tool pose at a single configuration."""
    q = _as_config(model, q)
    a, alpha, d, off = model.dh_arrays()
    pos, rot = kernels.fk_series(
        a, alpha, d, off, model.base_pose.matrix(), model.tool_transform.matrix(), q[None, :]
    )
    return Pose(pos[0], rot[0])


def jacobian(model: ManipulatorModel, q) -> np.ndarray:
    """Geometric tool-tip Jacobian (6, dof); rows are linear then angular."""
    q = _as_config(model, q)
    a, alpha, d, off = model.dh_arrays()
    J = kernels.jacobian_series(
        a, alpha, d, off, model.base_pose.matrix(), model.tool_transform.matrix(), q[None, :]
    )
    return J[0]


def manipulability_index(model: ManipulatorModel, q, rows=None) -> float:
    """sqrt(det(Jr Jr^T)) at one configuration.

    ``rows`` selects Jacobian rows (default: all six).  Planar fixtures use
    (0, 1) so the index reduces to the in-plane positional volume.
    """
    J = jacobian(model, q)
    idx = np.arange(6, dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
    if idx.size < 1 or idx.min() < 0 or idx.max() > 5:
        raise ValidationError("manipulability rows must be indices in 0..5")
    return float(kernels.manipulability_series(J[None, :, :], idx)[0])


def joint_limit_proximity(model: ManipulatorModel, q) -> float:
    """Product over joints of 4(q-lo)(hi-q)/(hi-lo)^2; 1 mid-range, 0 at a limit."""
    q = _as_config(model, q)
    return float(
        kernels.limit_clearance_series(q[None, :], model.q_lower, model.q_upper)[0]
    )


def _pose_from_dict(obj, what: str) -> Pose:
    if obj is None:
        return Pose.identity()
    if not isinstance(obj, dict):
        raise ValidationError(f"{what} must be an object with position/rpy")
    pos = obj.get("position", [0.0, 0.0, 0.0])
    rpy = obj.get("rpy", [0.0, 0.0, 0.0])
    if len(pos) != 3 or len(rpy) != 3:
        raise ValidationError(f"{what} position and rpy must each have 3 entries")
    return Pose(np.asarray(pos, dtype=float), rpy_matrix(*[float(v) for v in rpy]))


def model_from_dict(obj: dict) -> ManipulatorModel:
    """Build a model from the JSON description (see README for the schema)."""
    if not isinstance(obj, dict):
        raise ValidationError("robot model must be a JSON object")
    try:
        raw_joints = obj["joints"]
    except KeyError:
        raise ValidationError("robot model is missing the 'joints' list") from None
    if not isinstance(raw_joints, list) or not raw_joints:
        raise ValidationError("robot model 'joints' must be a non-empty list")
    joints = []
    for i, rj in enumerate(raw_joints):
        if not isinstance(rj, dict):
            raise ValidationError(f"joint {i + 1} must be an object")
        try:
            joints.append(
                JointSpec(
                    a=float(rj.get("a", 0.0)),
                    alpha=float(rj.get("alpha", 0.0)),
                    d=float(rj.get("d", 0.0)),
                    theta_offset=float(rj.get("theta_offset", 0.0)),
                    q_min=float(rj.get("q_min", -math.pi)),
                    q_max=float(rj.get("q_max", math.pi)),
                )
            )
        except (TypeError, ValueError) as e:
            raise ValidationError(f"joint {i + 1}: {e}") from None
    return ManipulatorModel(
        name=str(obj.get("name", "robot")),
        joints=tuple(joints),
        base_pose=_pose_from_dict(obj.get("base_pose"), "base_pose"),
        tool_transform=_pose_from_dict(obj.get("tool_transform"), "tool_transform"),
    )


def load_robot_model(path) -> ManipulatorModel:
    """Read a robot model from a JSON file."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as e:
        raise ValidationError(f"cannot read robot model {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"robot model {path} is not valid JSON: {e}") from None
    return model_from_dict(obj)
