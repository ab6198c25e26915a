"""Deterministic synthetic demonstration datasets with known consistency regimes.

Real human demonstration recordings are not shippable, so tests and examples
run on generated datasets: per set, a minimum-jerk joint-space base motion between
sampled start/goal configurations, perturbed per demo in duration, via-point
offset and smoothed additive joint noise, all scaled by the regime sigma.
Each set also gets pick-and-place style outcome rows whose spillage proxies
are measured on generated rollouts, so noisier regimes really do score worse
downstream.

Every random draw comes from a counter-based stream keyed by (seed, set
index), which makes the generator deterministic regardless of scheduling.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .evaluation import PickPlaceEvents, TransportOutcome, transport_outcome_from_trajectory
from .metrics import GoalSet
from .robot_model import JointSpec, ManipulatorModel, forward_kinematics
from .trajectory import JointTrajectory, differentiate, joint_to_cartesian

REGIMES = ("consistent", "inconsistent")


@dataclass(frozen=True)
class RegimeConfig:
    """Knobs of the generator; defaults give a 24-set benchmark."""

    n_users: int = 24
    demos_per_set: int = 4
    dof: int = 7
    regimes: tuple[str, ...] | None = None  # per set; default first half consistent
    sigma_consistent: float = 0.05
    sigma_inconsistent: float = 0.5
    seed: int = 0
    duration: float = 3.0
    sample_rate: float = 50.0
    n_goals: int = 0  # candidate goals incl. the actual one; 0 disables legibility
    generalization_rollouts: int = 8
    spill_threshold: float = 0.35
    max_retries: int = 25
    phase_label: str = "synthetic"

    def __post_init__(self):
        if self.n_users < 1 or self.demos_per_set < 1 or self.dof < 1:
            raise ValidationError("counts must be >= 1")
        if not 0.0 <= self.sigma_consistent < self.sigma_inconsistent:
            raise ValidationError("need 0 <= sigma_consistent < sigma_inconsistent")
        if self.regimes is not None:
            object.__setattr__(self, "regimes", tuple(self.regimes))
            if len(self.regimes) != self.n_users:
                raise ValidationError("regimes must list one entry per set")
            for r in self.regimes:
                if r not in REGIMES:
                    raise ValidationError(f"unknown regime {r!r}")
        if self.sample_rate <= 0 or self.duration <= 0:
            raise ValidationError("duration and sample_rate must be positive")

    def regime_of(self, set_index: int) -> str:
        if self.regimes is not None:
            return self.regimes[set_index]
        return "consistent" if set_index < (self.n_users + 1) // 2 else "inconsistent"

    def sigma_of(self, regime: str) -> float:
        return self.sigma_consistent if regime == "consistent" else self.sigma_inconsistent


@dataclass(frozen=True)
class SyntheticSet:
    set_id: str
    user_id: str
    phase_label: str
    regime: str
    demos: tuple[JointTrajectory, ...]
    outcomes: tuple[TransportOutcome, ...]
    goals: GoalSet | None = None


@dataclass(frozen=True)
class SyntheticDataset:
    config: RegimeConfig
    model: ManipulatorModel
    sets: tuple[SyntheticSet, ...]

    def true_labels(self) -> dict[str, str]:
        return {s.set_id: s.regime for s in self.sets}


def default_model(dof: int = 7) -> ManipulatorModel:
    """A plausible serial arm for synthetic data: alternating twists, shrinking links."""
    if dof < 1:
        raise ValidationError("dof must be >= 1")
    joints = []
    for i in range(dof):
        if i == dof - 1:
            alpha, d, a = 0.0, 0.12, 0.0
        elif i % 2 == 0:
            alpha, d, a = math.pi / 2, 0.30 - 0.02 * i, 0.05
        else:
            alpha, d, a = -math.pi / 2, 0.0, 0.28 - 0.02 * i
        joints.append(JointSpec(a=a, alpha=alpha, d=d, q_min=-2.8, q_max=2.8))
    return ManipulatorModel(name=f"synthetic-{dof}dof", joints=tuple(joints))


def min_jerk_profile(
    q_start: np.ndarray, q_goal: np.ndarray, times: np.ndarray, duration: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-jerk interpolation with analytic velocity and acceleration.

    Endpoint velocity and acceleration are exactly zero by construction.
    """
    u = np.clip(times / duration, 0.0, 1.0)[:, None]
    s = 10.0 * u**3 - 15.0 * u**4 + 6.0 * u**5
    ds = (30.0 * u**2 - 60.0 * u**3 + 30.0 * u**4) / duration
    dds = (60.0 * u - 180.0 * u**2 + 120.0 * u**3) / duration**2
    delta = (q_goal - q_start)[None, :]
    return q_start[None, :] + delta * s, delta * ds, delta * dds


def _smooth_noise(rng: np.random.Generator, shape: tuple[int, int], window: int) -> np.ndarray:
    """White noise convolved with a normalized Hann window (unit peak std-ish)."""
    white = rng.normal(size=shape)
    if window < 3:
        return white
    win = np.hanning(window)
    win /= win.sum()
    out = np.empty_like(white)
    for j in range(shape[1]):
        out[:, j] = np.convolve(white[:, j], win, mode="same")
    # rescale so the smoothed noise keeps roughly unit standard deviation
    return out / math.sqrt((win**2).sum())


def _set_rng(seed: int, set_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(set_index,)))
    )


def _sample_trajectory(
    cfg: RegimeConfig,
    model: ManipulatorModel,
    rng: np.random.Generator,
    sigma: float,
    q_start: np.ndarray,
    q_goal: np.ndarray,
    base_via: np.ndarray,
    with_torque: bool,
) -> JointTrajectory:
    """One perturbed demo/rollout; retries until the samples respect limits."""
    lo, hi = model.q_lower, model.q_upper
    span = hi - lo
    dt = 1.0 / cfg.sample_rate
    noise_window = max(3, int(round(0.3 * cfg.sample_rate)) | 1)
    for _ in range(cfg.max_retries):
        eps_d = float(np.clip(rng.normal(), -2.0, 2.0))
        duration = max(cfg.duration * (1.0 + sigma * 0.3 * eps_d), 1.0)
        n = int(math.floor(duration / dt + 1e-9)) + 1
        times = dt * np.arange(n)
        q, _, _ = min_jerk_profile(q_start, q_goal, times, duration)
        via_amp = base_via + sigma * 0.12 * span * rng.normal(size=cfg.dof)
        bump = np.sin(np.pi * np.clip(times / duration, 0.0, 1.0))[:, None] ** 3
        q = q + via_amp[None, :] * bump
        q = q + sigma * 0.015 * span[None, :] * _smooth_noise(rng, (n, cfg.dof), noise_window)
        if np.all(q > lo) and np.all(q < hi):
            tau = None
            if with_torque:
                qd = np.gradient(q, dt, axis=0, edge_order=1)
                qdd = np.gradient(qd, dt, axis=0, edge_order=1)
                scales = np.linspace(2.0, 0.4, cfg.dof)
                tau = qdd * scales[None, :]
                tau = tau + sigma * 1.5 * _smooth_noise(rng, (n, cfg.dof), noise_window)
            return JointTrajectory(times, q, tau)
    raise ValidationError(
        f"could not sample an in-limits trajectory after {cfg.max_retries} retries"
    )


def _base_profile_configs(
    times: np.ndarray,
    duration: float,
    q_start: np.ndarray,
    q_goal: np.ndarray,
    base_via: np.ndarray,
) -> np.ndarray:
    """The set's noiseless nominal joint path evaluated at given times."""
    u = np.clip(times / duration, 0.0, 1.0)
    q, _, _ = min_jerk_profile(q_start, q_goal, times, duration)
    return q + base_via[None, :] * np.sin(np.pi * u)[:, None] ** 3


def _outcome_from_rollout(
    cfg: RegimeConfig,
    model: ManipulatorModel,
    jt: JointTrajectory,
    base: tuple[np.ndarray, np.ndarray, np.ndarray],
    location_id: str,
    phase: str,
) -> TransportOutcome:
    """Score one rollout: proxies measured on its middle transport segment.

    Jerk and acceleration peaks come from the standard transport-outcome
    path.  Orientation deviation is measured against the set's noiseless
    base profile at the same motion phase (the generator's stand-in for "the
    tool stayed level"): zero for a noiseless rollout, growing with the
    regime sigma.
    """
    q_start, q_goal, base_via = base
    ct = joint_to_cartesian(model, jt)
    dt = float(jt.times[1] - jt.times[0])
    derivs = differentiate(ct.positions, dt)
    t0, t1 = jt.times[0], jt.times[-1]
    events = PickPlaceEvents(
        picked=True, placed=True,
        pick_time=float(t0 + 0.2 * (t1 - t0)),
        place_time=float(t0 + 0.8 * (t1 - t0)),
    )
    out = transport_outcome_from_trajectory(
        ct, derivs, events, location_id=location_id, phase=phase
    )
    duration = float(t1 - t0)
    q_base = _base_profile_configs(jt.times, duration, q_start, q_goal, base_via)
    base_ct = joint_to_cartesian(model, JointTrajectory(jt.times, q_base))
    mask = (jt.times >= events.pick_time) & (jt.times <= events.place_time)
    z_roll = ct.rotations[mask][:, :, 2]
    z_base = base_ct.rotations[mask][:, :, 2]
    cosang = np.clip((z_roll * z_base).sum(axis=1), -1.0, 1.0)
    orient_dev = float(np.arccos(cosang).max())
    placed = orient_dev < cfg.spill_threshold
    return dataclasses.replace(
        out, placed=placed, orientation_dev_raw=orient_dev
    )


def generate_dataset(
    cfg: RegimeConfig,
    model: ManipulatorModel | None = None,
    with_outcomes: bool = True,
) -> SyntheticDataset:
    """Generate all sets: demos, optional goals, optional outcome rows.

    Task-phase outcomes score the demos themselves (one location per demo);
    generalization-phase outcomes score extra rollouts drawn from the same
    per-set distribution.
    """
    model = model or default_model(cfg.dof)
    if model.dof != cfg.dof:
        raise ValidationError(f"model has {model.dof} joints, config says {cfg.dof}")
    lo, hi = model.q_lower, model.q_upper
    span = hi - lo
    sets = []
    for s in range(cfg.n_users):
        rng = _set_rng(cfg.seed, s)
        regime = cfg.regime_of(s)
        sigma = cfg.sigma_of(regime)
        q_start = lo + span * rng.uniform(0.20, 0.40, size=cfg.dof)
        q_goal = lo + span * rng.uniform(0.60, 0.80, size=cfg.dof)
        base_via = 0.08 * span * rng.normal(size=cfg.dof)

        goals = None
        if cfg.n_goals > 0:
            pts = [forward_kinematics(model, q_goal).position]
            for _ in range(cfg.n_goals - 1):
                decoy = lo + span * rng.uniform(0.15, 0.85, size=cfg.dof)
                pts.append(forward_kinematics(model, decoy).position)
            goals = GoalSet(np.asarray(pts), actual_index=0)

        demos = tuple(
            _sample_trajectory(cfg, model, rng, sigma, q_start, q_goal, base_via, True)
            for _ in range(cfg.demos_per_set)
        )
        outcomes: tuple[TransportOutcome, ...] = ()
        if with_outcomes:
            base = (q_start, q_goal, base_via)
            rows = [
                _outcome_from_rollout(cfg, model, jt, base, f"loc{k + 1:02d}", "task")
                for k, jt in enumerate(demos)
            ]
            for k in range(cfg.generalization_rollouts):
                jt = _sample_trajectory(
                    cfg, model, rng, sigma, q_start, q_goal, base_via, False
                )
                rows.append(
                    _outcome_from_rollout(cfg, model, jt, base, f"gen{k + 1:02d}", "generalized")
                )
            outcomes = tuple(rows)
        sets.append(
            SyntheticSet(
                set_id=f"u{s + 1:02d}",
                user_id=f"user{s + 1:02d}",
                phase_label=cfg.phase_label,
                regime=regime,
                demos=demos,
                outcomes=outcomes,
                goals=goals,
            )
        )
    return SyntheticDataset(config=cfg, model=model, sets=tuple(sets))
