"""Joint trajectory containers, CSV parsing, resampling and derivatives."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .robot_model import ManipulatorModel, check_rotation

DEFAULT_DT = 0.02
DEFAULT_SMOOTHING_WINDOW = 5

# three derivative layers of a w-point smoother leave this many edge samples
# of jerk polluted by one-sided differences; metrics use the full series, the
# constant is exposed for tests and documentation
def edge_margin(smoothing_window: int) -> int:
    return smoothing_window // 2 + 3


@dataclass(frozen=True)
class JointTrajectory:
    """Sampled joint-space trajectory with optional torque channel."""

    times: np.ndarray
    positions: np.ndarray
    torques: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        q = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", q)
        if t.ndim != 1 or q.ndim != 2 or q.shape[0] != t.shape[0]:
            raise ValidationError(
                f"times {t.shape} and positions {q.shape} are inconsistent"
            )
        if t.shape[0] < 2:
            raise ValidationError("trajectory needs at least two samples")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(q)):
            raise ValidationError("trajectory contains non-finite values")
        dt = np.diff(t)
        if np.any(dt <= 0.0):
            row = int(np.argmax(dt <= 0.0)) + 1
            raise ValidationError(
                f"timestamps must be strictly increasing; violation at sample {row}"
            )
        if self.torques is not None:
            tau = np.asarray(self.torques, dtype=float)
            object.__setattr__(self, "torques", tau)
            if tau.shape != q.shape:
                raise ValidationError(
                    f"torques {tau.shape} must match positions {q.shape}"
                )
            if not np.all(np.isfinite(tau)):
                raise ValidationError("torques contain non-finite values")

    @property
    def n_samples(self) -> int:
        return int(self.times.shape[0])

    @property
    def dof(self) -> int:
        return int(self.positions.shape[1])


@dataclass(frozen=True)
class CartesianTrajectory:
    """Tool positions and rotation matrices on the same time grid."""

    times: np.ndarray
    positions: np.ndarray
    rotations: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.positions, dtype=float)
        R = np.asarray(self.rotations, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "rotations", R)
        T = t.shape[0]
        if p.shape != (T, 3) or R.shape != (T, 3, 3):
            raise ValidationError(
                f"cartesian trajectory shapes inconsistent: {p.shape}, {R.shape}"
            )

    @property
    def n_samples(self) -> int:
        return int(self.times.shape[0])


@dataclass(frozen=True)
class DerivativeSet:
    """Velocity, acceleration and jerk, each the full length of the input."""

    velocity: np.ndarray
    acceleration: np.ndarray
    jerk: np.ndarray


def _parse_header(fields: list[str], path) -> int:
    """Validate `t,q1..qN[,tau1..tauN]` and return N."""
    if not fields or fields[0] != "t":
        raise ValidationError(f"{path}: first header column must be 't'")
    names = fields[1:]
    n = 0
    while n < len(names) and names[n] == f"q{n + 1}":
        n += 1
    if n == 0:
        raise ValidationError(f"{path}: header must contain q1..qN after 't'")
    rest = names[n:]
    if rest:
        expect = [f"tau{i + 1}" for i in range(n)]
        if rest != expect:
            raise ValidationError(
                f"{path}: trailing columns must be tau1..tau{n}, got {rest}"
            )
    return n


def load_joint_trajectory(path, expected_dof: int | None = None) -> JointTrajectory:
    """Parse a trajectory CSV (`t,q1..qN[,tau1..tauN]`; '#' starts a comment line)."""
    try:
        with open(path, newline="") as fh:
            raw = fh.read()
    except OSError as e:
        raise ValidationError(f"cannot read trajectory {path}: {e}") from None

    header: list[str] | None = None
    dof = 0
    has_tau = False
    times: list[float] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = next(csv.reader(io.StringIO(line)))
        fields = [f.strip() for f in fields]
        if header is None:
            header = fields
            dof = _parse_header(fields, path)
            has_tau = len(fields) == 1 + 2 * dof
            continue
        if len(fields) != len(header):
            raise ValidationError(
                f"{path}: line {lineno} has {len(fields)} fields, expected {len(header)}"
            )
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise ValidationError(f"{path}: line {lineno} has a non-numeric field") from None
        times.append(vals[0])
        rows.append(vals[1:])
    if header is None:
        raise ValidationError(f"{path}: no header row found")
    if len(rows) < 2:
        raise ValidationError(f"{path}: need at least two data rows")
    data = np.asarray(rows)
    q = data[:, :dof]
    tau = data[:, dof:] if has_tau else None
    if expected_dof is not None and dof != expected_dof:
        raise ValidationError(
            f"{path}: trajectory has {dof} joints, robot model expects {expected_dof}"
        )
    return JointTrajectory(np.asarray(times), q, tau)


def save_joint_trajectory(path, jt: JointTrajectory) -> None:
    """Write the CSV format produced/consumed by this package."""
    dof = jt.dof
    cols = ["t"] + [f"q{i + 1}" for i in range(dof)]
    if jt.torques is not None:
        cols += [f"tau{i + 1}" for i in range(dof)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(jt.n_samples):
            vals = [jt.times[i], *jt.positions[i]]
            if jt.torques is not None:
                vals.extend(jt.torques[i])
            fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")


def resample_uniform(jt: JointTrajectory, dt: float = DEFAULT_DT) -> JointTrajectory:
    """Linear interpolation onto the grid t0, t0+dt, ... (last point <= t_end).

    A small relative tolerance keeps the final grid point when (t_end - t0)
    is an exact multiple of dt up to rounding.
    """
    if not dt > 0.0:
        raise ValidationError(f"dt must be positive, got {dt}")
    t0 = float(jt.times[0])
    t_end = float(jt.times[-1])
    n = int(np.floor((t_end - t0) / dt + 1e-9)) + 1
    if n < 2:
        raise ValidationError(
            f"trajectory spans {t_end - t0:.6g}s, too short for dt={dt:.6g}"
        )
    grid = t0 + dt * np.arange(n)
    q = np.column_stack(
        [np.interp(grid, jt.times, jt.positions[:, j]) for j in range(jt.dof)]
    )
    tau = None
    if jt.torques is not None:
        tau = np.column_stack(
            [np.interp(grid, jt.times, jt.torques[:, j]) for j in range(jt.dof)]
        )
    return JointTrajectory(grid, q, tau)


def smooth_moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average whose window shrinks symmetrically at the edges.

    window must be odd; window 1 returns the input unchanged (same values,
    new array).  The operator is linear and preserves constants.
    """
    if window < 1 or window % 2 == 0:
        raise ValidationError(f"smoothing window must be odd and >= 1, got {window}")
    x = np.asarray(x, dtype=float)
    if window == 1:
        return x.copy()
    T = x.shape[0]
    h = window // 2
    idx = np.arange(T)
    half = np.minimum(h, np.minimum(idx, T - 1 - idx))
    lo = idx - half
    hi = idx + half + 1
    csum = np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(x, axis=0)], axis=0)
    width = (hi - lo).astype(float)
    if x.ndim > 1:
        width = width.reshape((T,) + (1,) * (x.ndim - 1))
    return (csum[hi] - csum[lo]) / width


def differentiate(
    x: np.ndarray, dt: float, smoothing_window: int = DEFAULT_SMOOTHING_WINDOW
) -> DerivativeSet:
    """Velocity/acceleration/jerk via repeated central differences.

    The signal is smoothed once with :func:`smooth_moving_average`, then each
    derivative layer applies central differences with first-order one-sided
    stencils at both ends (numpy.gradient).  All three outputs keep the input
    length.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 7:
        raise ValidationError(
            f"need at least 7 samples to estimate jerk, got {x.shape[0]}"
        )
    if not dt > 0.0:
        raise ValidationError(f"dt must be positive, got {dt}")
    y = smooth_moving_average(x, smoothing_window)
    vel = np.gradient(y, dt, axis=0, edge_order=1)
    acc = np.gradient(vel, dt, axis=0, edge_order=1)
    jerk = np.gradient(acc, dt, axis=0, edge_order=1)
    return DerivativeSet(vel, acc, jerk)


def joint_to_cartesian(model: ManipulatorModel, jt: JointTrajectory) -> CartesianTrajectory:
    """Forward kinematics per sample; rotations come out orthonormal by construction."""
    if jt.dof != model.dof:
        raise ValidationError(
            f"trajectory has {jt.dof} joints, model {model.name!r} has {model.dof}"
        )
    a, alpha, d, off = model.dh_arrays()
    pos, rot = kernels.fk_series(
        a, alpha, d, off,
        model.base_pose.matrix(), model.tool_transform.matrix(), jt.positions,
    )
    return CartesianTrajectory(jt.times.copy(), pos, rot)


def orientation_steps(rotations: np.ndarray) -> np.ndarray:
    """Geodesic angle between consecutive rotation matrices.

    Each rotation is checked for orthonormality; the relative angle is
    arccos((trace(R_t R_{t-1}^T) - 1) / 2) with the argument clamped to
    [-1, 1].
    """
    R = np.asarray(rotations, dtype=float)
    if R.ndim != 3 or R.shape[1:] != (3, 3):
        raise ValidationError(f"rotations must be (T, 3, 3), got {R.shape}")
    err = np.abs(R @ np.swapaxes(R, 1, 2) - np.eye(3)).max()
    if err > 1e-9:
        raise ValidationError(f"non-orthonormal rotation in series (max deviation {err:.3e})")
    rel = R[1:] @ np.swapaxes(R[:-1], 1, 2)
    tr = np.trace(rel, axis1=1, axis2=2)
    return np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))
