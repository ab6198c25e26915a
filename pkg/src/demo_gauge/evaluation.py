"""Success scoring of executed rollouts.

Two experiment styles are supported: reach outcomes (binary success per
goal, collision flags) and transport outcomes (pick/place flags plus
spillage proxies).  The transport score blends task completion with
normalized peak jerk, acceleration and orientation deviation; a rollout
that never picked the object scores zero outright.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .trajectory import CartesianTrajectory, DerivativeSet

REACH_HEADER = ["goal_id", "phase", "reached", "self_collision", "environment_collision"]
TRANSPORT_HEADER = [
    "location_id",
    "phase",
    "picked",
    "placed",
    "jerk_raw",
    "accel_raw",
    "orientation_dev_raw",
]
PHASES = ("task", "generalized")


@dataclass(frozen=True)
class ReachOutcome:
    goal_id: str
    reached: bool
    self_collision: bool = False
    environment_collision: bool = False
    phase: str = "task"

    @property
    def success(self) -> bool:
        return self.reached and not self.self_collision and not self.environment_collision


@dataclass(frozen=True)
class TransportOutcome:
    """One pick-and-place rollout: completion flags plus peak spillage proxies."""

    picked: bool
    placed: bool
    jerk_raw: float
    accel_raw: float
    orientation_dev_raw: float
    location_id: str = ""
    phase: str = "task"

    def __post_init__(self):
        if self.placed and not self.picked:
            raise ValidationError("placed implies picked")
        for name in ("jerk_raw", "accel_raw", "orientation_dev_raw"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class ProxyBounds:
    """Reference (lo, hi) per proxy for min-max normalization.

    The defaults are documented conventions, not measured truth: jerk in
    m/s^3, acceleration in m/s^2, orientation deviation in rad.
    """

    jerk: tuple[float, float] = (0.0, 200.0)
    accel: tuple[float, float] = (0.0, 5.0)
    orientation: tuple[float, float] = (0.0, 0.35)

    def __post_init__(self):
        for name in ("jerk", "accel", "orientation"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValidationError(f"proxy bounds for {name} need lo < hi, got ({lo}, {hi})")


@dataclass(frozen=True)
class PickPlaceEvents:
    """Pick/place completion flags and the transport window timestamps."""

    picked: bool
    placed: bool
    pick_time: float
    place_time: float

    def __post_init__(self):
        if self.pick_time > self.place_time:
            raise ValidationError(
                f"pick timestamp {self.pick_time} is after place timestamp {self.place_time}"
            )


def reach_success_rate(outcomes: list[ReachOutcome]) -> float:
    """Fraction of outcomes that reached the goal without any collision."""
    if not outcomes:
        raise ValidationError("cannot compute a success rate from zero outcomes")
    return sum(1 for o in outcomes if o.success) / len(outcomes)


def normalize_proxy(raw: float, bounds: tuple[float, float]) -> float:
    """clamp((raw - lo)/(hi - lo), 0, 1)."""
    lo, hi = bounds
    return min(1.0, max(0.0, (raw - lo) / (hi - lo)))


def overall_success(o: TransportOutcome, bounds: ProxyBounds | None = None) -> float:
    """Weighted pick-and-place score in [0, 1].

    0 when the object was never picked.  Otherwise completion contributes
    0.5 * (0.5 + 0.5*placed) and the proxy block contributes
    0.5 * mean(1 - normalized proxy).
    """
    if not o.picked:
        return 0.0
    b = bounds or ProxyBounds()
    s_pick = 0.5
    s_place = 0.5 if o.placed else 0.0
    j_n = normalize_proxy(o.jerk_raw, b.jerk)
    a_n = normalize_proxy(o.accel_raw, b.accel)
    o_n = normalize_proxy(o.orientation_dev_raw, b.orientation)
    return 0.5 * (s_pick + s_place) + 0.5 * (((1.0 - j_n) + (1.0 - a_n) + (1.0 - o_n)) / 3.0)


def phase_success(scores: list[float]) -> float:
    """Mean score across tested locations of one phase."""
    if len(scores) == 0:
        raise ValidationError("phase_success needs at least one score")
    return float(np.mean(scores))


def transport_outcome_from_trajectory(
    ct: CartesianTrajectory,
    derivs: DerivativeSet,
    events: PickPlaceEvents,
    up_axis=(0.0, 0.0, 1.0),
    location_id: str = "",
    phase: str = "task",
) -> TransportOutcome:
    """Measure peak proxies over the transport window of a rollout.

    jerk/accel are peak Euclidean magnitudes of the Cartesian derivatives;
    orientation deviation is the peak angle between the tool frame's local z
    axis (mapped through each rotation) and ``up_axis``.
    """
    up = np.asarray(up_axis, dtype=float)
    nrm = np.linalg.norm(up)
    if not nrm > 0.0:
        raise ValidationError("up_axis must be a nonzero vector")
    up = up / nrm
    mask = (ct.times >= events.pick_time) & (ct.times <= events.place_time)
    if not mask.any():
        raise ValidationError(
            f"no samples inside the transport window "
            f"[{events.pick_time}, {events.place_time}]"
        )
    acc = np.asarray(derivs.acceleration, dtype=float)[mask]
    jerk = np.asarray(derivs.jerk, dtype=float)[mask]
    tool_up = ct.rotations[mask][:, :, 2]  # local z mapped to world
    cosang = np.clip(tool_up @ up, -1.0, 1.0)
    return TransportOutcome(
        picked=events.picked,
        placed=events.placed,
        jerk_raw=float(np.linalg.norm(jerk, axis=1).max()),
        accel_raw=float(np.linalg.norm(acc, axis=1).max()),
        orientation_dev_raw=float(np.arccos(cosang).max()),
        location_id=location_id,
        phase=phase,
    )


def group_mean_se(values) -> tuple[float, float | None]:
    """Mean and standard error (sample SD / sqrt(n)); SE is None for n < 2."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValidationError("cannot summarize an empty group")
    if v.size < 2:
        return float(v.mean()), None
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _parse_bool(s: str, path, lineno: int) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes"):
        return True
    if v in ("0", "false", "no"):
        return False
    raise ValidationError(f"{path}: line {lineno}: expected boolean, got {s!r}")


def load_outcomes(path) -> list[ReachOutcome] | list[TransportOutcome]:
    """Parse an outcome CSV; the header decides the experiment style."""
    try:
        with open(path, newline="") as fh:
            raw = fh.read()
    except OSError as e:
        raise ValidationError(f"cannot read outcomes {path}: {e}") from None
    header: list[str] | None = None
    style = ""
    out: list = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader(io.StringIO(line)))]
        if header is None:
            header = fields
            if fields == REACH_HEADER:
                style = "reach"
            elif fields == TRANSPORT_HEADER:
                style = "transport"
            else:
                raise ValidationError(
                    f"{path}: unrecognized outcome header {fields}; expected "
                    f"{REACH_HEADER} or {TRANSPORT_HEADER}"
                )
            continue
        if len(fields) != len(header):
            raise ValidationError(
                f"{path}: line {lineno} has {len(fields)} fields, expected {len(header)}"
            )
        phase = fields[1]
        if phase not in PHASES:
            raise ValidationError(
                f"{path}: line {lineno}: phase must be one of {PHASES}, got {phase!r}"
            )
        if style == "reach":
            out.append(
                ReachOutcome(
                    goal_id=fields[0],
                    phase=phase,
                    reached=_parse_bool(fields[2], path, lineno),
                    self_collision=_parse_bool(fields[3], path, lineno),
                    environment_collision=_parse_bool(fields[4], path, lineno),
                )
            )
        else:
            try:
                jerk_raw = float(fields[4])
                accel_raw = float(fields[5])
                orient_raw = float(fields[6])
            except ValueError:
                raise ValidationError(
                    f"{path}: line {lineno} has a non-numeric proxy field"
                ) from None
            out.append(
                TransportOutcome(
                    location_id=fields[0],
                    phase=phase,
                    picked=_parse_bool(fields[2], path, lineno),
                    placed=_parse_bool(fields[3], path, lineno),
                    jerk_raw=jerk_raw,
                    accel_raw=accel_raw,
                    orientation_dev_raw=orient_raw,
                )
            )
    if header is None:
        raise ValidationError(f"{path}: no header row found")
    if not out:
        raise ValidationError(f"{path}: no outcome rows found")
    return out


def save_outcomes(path, outcomes) -> None:
    """Write the CSV format accepted by load_outcomes."""
    if not outcomes:
        raise ValidationError("no outcomes to write")
    first = outcomes[0]
    with open(path, "w", newline="") as fh:
        if isinstance(first, ReachOutcome):
            fh.write(",".join(REACH_HEADER) + "\n")
            for o in outcomes:
                fh.write(
                    f"{o.goal_id},{o.phase},{int(o.reached)},"
                    f"{int(o.self_collision)},{int(o.environment_collision)}\n"
                )
        else:
            fh.write(",".join(TRANSPORT_HEADER) + "\n")
            for o in outcomes:
                fh.write(
                    f"{o.location_id},{o.phase},{int(o.picked)},{int(o.placed)},"
                    f"{o.jerk_raw:.17g},{o.accel_raw:.17g},{o.orientation_dev_raw:.17g}\n"
                )
