"""Dataset manifest: file references plus pipeline configuration.

A manifest JSON names the robot model, the demonstration sets (with their
demo CSVs, optional goal sets and optional outcome CSVs) and a config block.
Paths are resolved relative to the manifest file's directory.  Command-line
flags override config values; the fully resolved config is embedded in every
report.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .consistency import DEFAULT_MAX_ITER, DEFAULT_RESTARTS, DEFAULT_TOL
from .errors import ValidationError
from .evaluation import ProxyBounds
from .metrics import LegibilityConfig, MetricConfig, GoalSet


@dataclass(frozen=True)
class ClusteringConfig:
    seed: int = 0
    restarts: int = DEFAULT_RESTARTS
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL


@dataclass(frozen=True)
class RegressionConfig:
    candidates: str | tuple[str, ...] = "full"  # "full" or explicit term strings
    p_enter: float = 0.05
    p_remove: float = 0.10


@dataclass(frozen=True)
class PipelineConfig:
    metric: MetricConfig = field(default_factory=MetricConfig)
    proxy_bounds: ProxyBounds = field(default_factory=ProxyBounds)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    regression: RegressionConfig = field(default_factory=RegressionConfig)

    def to_dict(self) -> dict:
        m = self.metric
        return {
            "resample_dt": m.resample_dt,
            "smoothing_window": m.smoothing_window,
            "manipulability_rows": (
                list(m.manipulability_rows) if m.manipulability_rows is not None else None
            ),
            "curvature_velocity_floor": m.curvature_velocity_floor,
            "legibility": {
                "weight_early": m.legibility.weight_early,
                "weight_progress": m.legibility.weight_progress,
                "early_fraction": m.legibility.early_fraction,
                "temperature": m.legibility.temperature,
            },
            "proxy_bounds": {
                "jerk": list(self.proxy_bounds.jerk),
                "accel": list(self.proxy_bounds.accel),
                "orientation": list(self.proxy_bounds.orientation),
            },
            "clustering": {
                "seed": self.clustering.seed,
                "restarts": self.clustering.restarts,
                "max_iter": self.clustering.max_iter,
                "tol": self.clustering.tol,
            },
            "regression": {
                "candidates": (
                    self.regression.candidates
                    if isinstance(self.regression.candidates, str)
                    else list(self.regression.candidates)
                ),
                "p_enter": self.regression.p_enter,
                "p_remove": self.regression.p_remove,
            },
        }


@dataclass(frozen=True)
class ManifestSet:
    set_id: str
    user_id: str
    phase_label: str
    demo_paths: tuple[str, ...]
    goals: GoalSet | None = None
    outcome_path: str | None = None


@dataclass(frozen=True)
class Manifest:
    path: str
    robot_model_path: str
    sets: tuple[ManifestSet, ...]
    config: PipelineConfig


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _parse_pair(obj, what: str) -> tuple[float, float]:
    _require(
        isinstance(obj, (list, tuple)) and len(obj) == 2,
        f"{what} must be a [lo, hi] pair",
    )
    return float(obj[0]), float(obj[1])


def parse_config(obj: dict | None) -> PipelineConfig:
    obj = obj or {}
    _require(isinstance(obj, dict), "config must be an object")
    leg = obj.get("legibility") or {}
    _require(isinstance(leg, dict), "config.legibility must be an object")
    legibility = LegibilityConfig(
        weight_early=float(leg.get("weight_early", 0.5)),
        weight_progress=float(leg.get("weight_progress", 0.5)),
        early_fraction=float(leg.get("early_fraction", 0.5)),
        temperature=float(leg.get("temperature", 1.0)),
    )
    rows = obj.get("manipulability_rows")
    if rows is not None:
        _require(isinstance(rows, (list, tuple)), "manipulability_rows must be a list")
        rows = tuple(int(r) for r in rows)
    metric = MetricConfig(
        resample_dt=float(obj.get("resample_dt", MetricConfig.resample_dt)),
        smoothing_window=int(obj.get("smoothing_window", MetricConfig.smoothing_window)),
        manipulability_rows=rows,
        curvature_velocity_floor=float(
            obj.get("curvature_velocity_floor", MetricConfig.curvature_velocity_floor)
        ),
        legibility=legibility,
    )
    pb = obj.get("proxy_bounds") or {}
    _require(isinstance(pb, dict), "config.proxy_bounds must be an object")
    defaults = ProxyBounds()
    proxy_bounds = ProxyBounds(
        jerk=_parse_pair(pb.get("jerk", list(defaults.jerk)), "proxy_bounds.jerk"),
        accel=_parse_pair(pb.get("accel", list(defaults.accel)), "proxy_bounds.accel"),
        orientation=_parse_pair(
            pb.get("orientation", list(defaults.orientation)), "proxy_bounds.orientation"
        ),
    )
    cl = obj.get("clustering") or {}
    _require(isinstance(cl, dict), "config.clustering must be an object")
    clustering = ClusteringConfig(
        seed=int(cl.get("seed", 0)),
        restarts=int(cl.get("restarts", DEFAULT_RESTARTS)),
        max_iter=int(cl.get("max_iter", DEFAULT_MAX_ITER)),
        tol=float(cl.get("tol", DEFAULT_TOL)),
    )
    rg = obj.get("regression") or {}
    _require(isinstance(rg, dict), "config.regression must be an object")
    cands = rg.get("candidates", "full")
    if isinstance(cands, str):
        _require(cands == "full", "regression.candidates must be 'full' or a term list")
    else:
        _require(isinstance(cands, (list, tuple)), "regression.candidates must be a list")
        cands = tuple(str(c) for c in cands)
    regression = RegressionConfig(
        candidates=cands,
        p_enter=float(rg.get("p_enter", 0.05)),
        p_remove=float(rg.get("p_remove", 0.10)),
    )
    return PipelineConfig(
        metric=metric, proxy_bounds=proxy_bounds, clustering=clustering, regression=regression
    )


def load_manifest(path) -> Manifest:
    """Read and validate a manifest; every referenced file must exist."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as e:
        raise ValidationError(f"cannot read manifest {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"manifest {path} is not valid JSON: {e}") from None
    _require(isinstance(obj, dict), "manifest must be a JSON object")
    root = os.path.dirname(os.path.abspath(path))

    def resolve(rel: str, what: str) -> str:
        p = rel if os.path.isabs(rel) else os.path.join(root, rel)
        _require(os.path.isfile(p), f"{what} not found: {p}")
        return p

    _require("robot_model" in obj, "manifest is missing 'robot_model'")
    robot = resolve(str(obj["robot_model"]), "robot model")
    raw_sets = obj.get("sets")
    _require(isinstance(raw_sets, list) and raw_sets, "manifest needs a non-empty 'sets' list")
    sets = []
    seen = set()
    for i, rs in enumerate(raw_sets):
        _require(isinstance(rs, dict), f"set {i} must be an object")
        _require("set_id" in rs, f"set {i} is missing set_id")
        sid = str(rs["set_id"])
        _require(sid not in seen, f"duplicate set_id {sid!r}")
        seen.add(sid)
        demos = rs.get("demos")
        _require(isinstance(demos, list) and demos, f"set {sid!r} needs a non-empty 'demos' list")
        demo_paths = tuple(resolve(str(d), f"demo of set {sid!r}") for d in demos)
        goals = None
        if rs.get("goals") is not None:
            g = rs["goals"]
            _require(isinstance(g, dict) and "points" in g, f"set {sid!r}: goals needs 'points'")
            pts = np.asarray(g["points"], dtype=float)
            idx = g.get("actual_index")
            goals = GoalSet(pts, None if idx is None else int(idx))
        outcome_path = None
        if rs.get("outcomes") is not None:
            outcome_path = resolve(str(rs["outcomes"]), f"outcomes of set {sid!r}")
        sets.append(
            ManifestSet(
                set_id=sid,
                user_id=str(rs.get("user_id", sid)),
                phase_label=str(rs.get("phase_label", "default")),
                demo_paths=demo_paths,
                goals=goals,
                outcome_path=outcome_path,
            )
        )
    config = parse_config(obj.get("config"))
    return Manifest(
        path=os.path.abspath(path),
        robot_model_path=robot,
        sets=tuple(sets),
        config=config,
    )
