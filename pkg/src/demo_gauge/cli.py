"""Command-line pipeline driver.

Subcommands mirror the pipeline stages: ``metrics`` scores every demo,
``cluster`` groups demonstration sets by metric-range consistency,
``evaluate`` turns outcome logs into success rates, ``regress`` fits the
success-vs-quality models, ``synth`` writes a self-contained synthetic
dataset, and ``report`` runs the whole chain and bundles one report.json.

Exit codes: 0 on success, 2 on validation failure (bad manifest, missing
prerequisite artifacts, malformed inputs), 3 when some demos failed but the
run produced partial results.  Config precedence is manifest < flags.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .analysis import (
    Dataset,
    TermSpec,
    full_candidate_terms,
    parse_term,
    pearson_matrix,
    stepwise_fit,
)
from .consistency import DemonstrationSet, cluster_sets
from .errors import DemoGaugeError, ValidationError
from .evaluation import (
    ReachOutcome,
    group_mean_se,
    load_outcomes,
    overall_success,
    phase_success,
    reach_success_rate,
    save_outcomes,
)
from .manifest import Manifest, ManifestSet, PipelineConfig, load_manifest
from .metrics import MetricVector, compute_metric_vector
from .report import (
    correlation_rows,
    model_to_dict,
    sha256_file,
    timestamp,
    write_csv,
    write_json,
)
from .robot_model import load_robot_model
from .synthetic import RegimeConfig, generate_dataset
from .trajectory import load_joint_trajectory, save_joint_trajectory

log = logging.getLogger("demo_gauge.cli")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


def demo_id_for(set_id: str, index: int) -> str:
    return f"{set_id}_d{index + 1:02d}"


def _resolved_config(manifest: Manifest, args) -> PipelineConfig:
    cfg = manifest.config
    if getattr(args, "dt", None) is not None:
        cfg = dataclasses.replace(cfg, metric=dataclasses.replace(cfg.metric, resample_dt=args.dt))
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg, clustering=dataclasses.replace(cfg.clustering, seed=args.seed)
        )
    return cfg


def _outdir(args) -> str:
    out = os.path.abspath(args.out)
    os.makedirs(out, exist_ok=True)
    return out


def _rel_to_manifest(manifest: Manifest, path: str) -> str:
    root = os.path.dirname(manifest.path)
    try:
        return os.path.relpath(path, root)
    except ValueError:
        return path


# ---------------------------------------------------------------- metrics

def _score_one(model, cfg, ms: ManifestSet, k: int):
    jt = load_joint_trajectory(ms.demo_paths[k], expected_dof=model.dof)
    return compute_metric_vector(
        model, jt, goals=ms.goals, config=cfg.metric, demo_id=demo_id_for(ms.set_id, k)
    )


def cmd_metrics(args) -> int:
    manifest = load_manifest(args.manifest)
    cfg = _resolved_config(manifest, args)
    model = load_robot_model(manifest.robot_model_path)
    out = _outdir(args)
    mdir = os.path.join(out, "metrics")
    os.makedirs(mdir, exist_ok=True)

    work = [(ms, k) for ms in manifest.sets for k in range(len(ms.demo_paths))]
    jobs = max(1, args.jobs or 1)

    def run(item):
        ms, k = item
        try:
            return ms, k, _score_one(model, cfg, ms, k), None
        except DemoGaugeError as e:
            return ms, k, None, str(e)

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(run, work))
    else:
        results = [run(item) for item in work]

    errors = []
    demo_ids = []
    for ms, k, mv, err in results:
        did = demo_id_for(ms.set_id, k)
        rel = _rel_to_manifest(manifest, ms.demo_paths[k])
        if err is not None:
            log.error("demo %s failed: %s", did, err)
            errors.append({"demo_id": did, "source": rel, "error": err})
            continue
        demo_ids.append(did)
        write_json(
            os.path.join(mdir, f"{did}.json"),
            {
                "demo_id": did,
                "set_id": ms.set_id,
                "user_id": ms.user_id,
                "phase_label": ms.phase_label,
                "source": rel,
                "sha256": sha256_file(ms.demo_paths[k]),
                "values": mv.values,
                "flags": mv.flags,
            },
        )
    write_json(
        os.path.join(mdir, "summary.json"),
        {"n_ok": len(demo_ids), "n_failed": len(errors), "demo_ids": demo_ids, "errors": errors},
    )
    if errors:
        log.warning("%d of %d demos failed", len(errors), len(work))
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------- cluster

def _read_metric_vectors(manifest: Manifest, out: str) -> dict[str, list[MetricVector]]:
    """Reload per-demo metric files.

    A demo the metrics summary records as failed drops its whole set (a
    partially measured set would skew the range statistics); a missing file
    the summary does not explain is an error.
    """
    mdir = os.path.join(out, "metrics")
    spath = os.path.join(mdir, "summary.json")
    if not os.path.isfile(spath):
        raise ValidationError("metrics summary not found; run the metrics command first")
    with open(spath) as fh:
        failed = {e["demo_id"] for e in json.load(fh)["errors"]}
    per_set: dict[str, list[MetricVector]] = {}
    for ms in manifest.sets:
        dids = [demo_id_for(ms.set_id, k) for k in range(len(ms.demo_paths))]
        bad = [d for d in dids if d in failed]
        if bad:
            log.warning(
                "set %s excluded: metric extraction failed for %s", ms.set_id, ", ".join(bad)
            )
            continue
        vecs = []
        for did in dids:
            path = os.path.join(mdir, f"{did}.json")
            if not os.path.isfile(path):
                raise ValidationError(
                    f"metric file missing for demo {did!r} ({path}); run the metrics command first"
                )
            with open(path) as fh:
                obj = json.load(fh)
            vecs.append(MetricVector(demo_id=did, values=obj["values"], flags=obj["flags"]))
        per_set[ms.set_id] = vecs
    return per_set


def _sets_by_phase(manifest: Manifest) -> dict[str, list[ManifestSet]]:
    phases: dict[str, list[ManifestSet]] = {}
    for ms in manifest.sets:
        phases.setdefault(ms.phase_label, []).append(ms)
    return phases


def cmd_cluster(args) -> int:
    manifest = load_manifest(args.manifest)
    cfg = _resolved_config(manifest, args)
    out = _outdir(args)
    per_set = _read_metric_vectors(manifest, out)

    skipped = [ms.set_id for ms in manifest.sets if ms.set_id not in per_set]
    phases_out = {}
    csv_rows = []
    by_phase = _sets_by_phase(manifest)
    for phase in sorted(by_phase):
        members = [ms for ms in by_phase[phase] if ms.set_id in per_set]
        if len(members) < 2:
            raise ValidationError(
                f"phase {phase!r} has {len(members)} usable set(s); clustering needs at least 2"
            )
        dsets = [
            DemonstrationSet(ms.set_id, ms.user_id, ms.phase_label, tuple(per_set[ms.set_id]))
            for ms in members
        ]
        fm, Z, mean, sigma, zero_cols, assignment, flags = cluster_sets(
            dsets,
            seed=cfg.clustering.seed,
            restarts=cfg.clustering.restarts,
            max_iter=cfg.clustering.max_iter,
            tol=cfg.clustering.tol,
        )
        phases_out[phase] = {
            "set_ids": list(fm.set_ids),
            "feature_names": list(fm.feature_names),
            "dropped_metrics": list(fm.dropped),
            "ranges": fm.values,
            "standardized": Z,
            "feature_mean": mean,
            "feature_sigma": sigma,
            "zero_variance_features": [fm.feature_names[i] for i in zero_cols],
            "labels": assignment.labels,
            "centroids": assignment.centroids,
            "inertia": assignment.inertia,
            "n_iter": assignment.n_iter,
            "best_restart": assignment.best_restart,
            "consistent_cluster": assignment.consistent_cluster,
            "consistent": {sid: bool(f) for sid, f in zip(fm.set_ids, flags)},
        }
        for si, sid in enumerate(fm.set_ids):
            for fi, fname in enumerate(fm.feature_names):
                csv_rows.append(
                    (
                        phase,
                        sid,
                        int(assignment.labels[si]),
                        int(flags[si]),
                        fname,
                        Z[si, fi],
                    )
                )

    write_json(
        os.path.join(out, "clustering.json"),
        {
            "phases": phases_out,
            "skipped_sets": skipped,
            "config": {
                "seed": cfg.clustering.seed,
                "restarts": cfg.clustering.restarts,
                "max_iter": cfg.clustering.max_iter,
                "tol": cfg.clustering.tol,
            },
        },
    )
    write_csv(
        os.path.join(out, "cluster_features.csv"),
        ["phase", "set_id", "cluster", "consistent", "feature", "standardized_value"],
        csv_rows,
    )
    return EXIT_OK


# ---------------------------------------------------------------- evaluate

def _score_outcomes(outcomes, bounds):
    """Per-phase summaries for one set's outcome rows."""
    styles = {type(o).__name__ for o in outcomes}
    if len(styles) != 1:
        raise ValidationError(f"mixed outcome styles in one file: {sorted(styles)}")
    summary = {}
    if isinstance(outcomes[0], ReachOutcome):
        summary["style"] = "reach"
        for phase in ("task", "generalized"):
            rows = [o for o in outcomes if o.phase == phase]
            if rows:
                summary[phase] = {
                    "rate": reach_success_rate(rows),
                    "n": len(rows),
                }
    else:
        summary["style"] = "transport"
        for phase in ("task", "generalized"):
            rows = [o for o in outcomes if o.phase == phase]
            if rows:
                scores = [overall_success(o, bounds) for o in rows]
                summary[phase] = {
                    "scores": [[o.location_id, s] for o, s in zip(rows, scores)],
                    "rate": phase_success(scores),
                    "n": len(rows),
                }
    return summary


def _load_clustering(out: str) -> dict | None:
    path = os.path.join(out, "clustering.json")
    if not os.path.isfile(path):
        return None
    with open(path) as fh:
        return json.load(fh)


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    cfg = _resolved_config(manifest, args)
    out = _outdir(args)

    sets_out = {}
    skipped = []
    for ms in manifest.sets:
        if ms.outcome_path is None:
            skipped.append(ms.set_id)
            continue
        outcomes = load_outcomes(ms.outcome_path)
        if not outcomes:
            raise ValidationError(f"outcome file of set {ms.set_id!r} has no rows")
        summary = _score_outcomes(outcomes, cfg.proxy_bounds)
        summary["source"] = _rel_to_manifest(manifest, ms.outcome_path)
        summary["sha256"] = sha256_file(ms.outcome_path)
        sets_out[ms.set_id] = summary
    if not sets_out:
        raise ValidationError("no set in the manifest has an outcome file")
    if skipped:
        log.warning("sets without outcome files: %s", ", ".join(skipped))

    clustering = _load_clustering(out)
    groups = None
    note = None
    bar_rows = []
    if clustering is None:
        note = "clustering report not found; group summaries omitted"
    else:
        groups = {}
        for phase, pdata in sorted(clustering["phases"].items()):
            flags = pdata["consistent"]
            gsum = {}
            for gname, want in (("consistent", True), ("inconsistent", False)):
                member_ids = [s for s in pdata["set_ids"] if flags[s] == want]
                stats = {}
                for okey in ("task", "generalized"):
                    vals = [
                        sets_out[s][okey]["rate"]
                        for s in member_ids
                        if s in sets_out and okey in sets_out[s]
                    ]
                    if vals:
                        m, se = group_mean_se(vals)
                        stats[okey] = {"mean": m, "se": se, "n": len(vals)}
                        bar_rows.append((phase, okey, gname, m, se, len(vals)))
                gsum[gname] = {"set_ids": member_ids, **stats}
            groups[phase] = gsum

    write_json(
        os.path.join(out, "success.json"),
        {
            "sets": sets_out,
            "groups": groups,
            "sets_without_outcomes": skipped,
            "note": note,
            "proxy_bounds": {
                "jerk": list(cfg.proxy_bounds.jerk),
                "accel": list(cfg.proxy_bounds.accel),
                "orientation": list(cfg.proxy_bounds.orientation),
            },
        },
    )
    write_csv(
        os.path.join(out, "success_bars.csv"),
        ["phase", "outcome", "group", "mean", "se", "n"],
        bar_rows,
    )
    return EXIT_OK


# ---------------------------------------------------------------- regress

def _regression_dataset(manifest: Manifest, out: str) -> tuple[Dataset, dict[str, str]]:
    """Join clustering features and success rates into one Dataset.

    Predictor columns are the per-set metric ranges in their canonical order
    followed by the binary consistency flag; outcomes are the task-phase and
    (when every set has one) generalized-phase success rates.
    """
    clustering = _load_clustering(out)
    if clustering is None:
        raise ValidationError("clustering.json not found; run the cluster command first")
    spath = os.path.join(out, "success.json")
    if not os.path.isfile(spath):
        raise ValidationError("success.json not found; run the evaluate command first")
    with open(spath) as fh:
        success = json.load(fh)

    feature_names = None
    set_ids = []
    rows = []
    flags = []
    for phase, pdata in sorted(clustering["phases"].items()):
        if feature_names is None:
            feature_names = list(pdata["feature_names"])
        elif feature_names != list(pdata["feature_names"]):
            raise ValidationError(
                "phases expose different feature sets "
                f"({feature_names} vs {pdata['feature_names']}); cannot pool for regression"
            )
        for si, sid in enumerate(pdata["set_ids"]):
            if sid not in success["sets"] or "task" not in success["sets"][sid]:
                raise ValidationError(f"set {sid!r} has no task-phase success rate")
            set_ids.append(sid)
            rows.append(pdata["ranges"][si])
            flags.append(1.0 if pdata["consistent"][sid] else 0.0)

    predictors = np.column_stack([np.asarray(rows, dtype=float), np.asarray(flags)])
    predictor_names = feature_names + ["consistency"]
    outcome_names = ["task_rate"]
    cols = [np.array([success["sets"][s]["task"]["rate"] for s in set_ids])]
    if all("generalized" in success["sets"][s] for s in set_ids):
        outcome_names.append("generalized_rate")
        cols.append(np.array([success["sets"][s]["generalized"]["rate"] for s in set_ids]))
    d = Dataset(
        set_ids=tuple(set_ids),
        predictor_names=tuple(predictor_names),
        predictors=predictors,
        outcome_names=tuple(outcome_names),
        outcomes=np.column_stack(cols),
    )
    x_key = {d.x_label(i): name for i, name in enumerate(predictor_names)}
    return d, x_key


def cmd_regress(args) -> int:
    manifest = load_manifest(args.manifest)
    cfg = _resolved_config(manifest, args)
    out = _outdir(args)
    d, x_key = _regression_dataset(manifest, out)

    if isinstance(cfg.regression.candidates, str):
        terms: tuple[TermSpec, ...] = full_candidate_terms(d)
        restricted = False
    else:
        terms = tuple(
            parse_term(t, len(d.predictor_names)) for t in cfg.regression.candidates
        )
        restricted = True

    cm = pearson_matrix(d)
    write_csv(os.path.join(out, "correlation.csv"), ["row", "col", "r"], correlation_rows(cm))

    for outcome in d.outcome_names:
        fitted = stepwise_fit(
            d,
            terms,
            p_enter=cfg.regression.p_enter,
            p_remove=cfg.regression.p_remove,
            outcome=outcome,
        )
        if restricted:
            extra = (
                f"candidates restricted to {len(terms)} term(s); "
                "R^2 reflects only this subset and understates the full model"
            )
            fitted = dataclasses.replace(
                fitted, note=f"{fitted.note}; {extra}" if fitted.note else extra
            )
        write_json(os.path.join(out, f"model_{outcome}.json"), model_to_dict(fitted, x_key))
    return EXIT_OK


# ---------------------------------------------------------------- synth

def _robot_to_dict(model) -> dict:
    return {
        "name": model.name,
        "joints": [
            {
                "a": j.a,
                "alpha": j.alpha,
                "d": j.d,
                "theta_offset": j.theta_offset,
                "q_min": j.q_min,
                "q_max": j.q_max,
            }
            for j in model.joints
        ],
    }


# Proxy bounds matched to the synthetic generator's raw peak scales so that
# scores spread over (0, 1) instead of clamping at the ends.
SYNTH_PROXY_BOUNDS = {"jerk": [0.0, 600.0], "accel": [0.0, 35.0], "orientation": [0.0, 1.0]}


def cmd_synth(args) -> int:
    cfg = RegimeConfig(
        n_users=args.sets,
        demos_per_set=args.demos,
        dof=args.dof,
        seed=args.seed if args.seed is not None else 0,
        n_goals=args.goals,
    )
    ds = generate_dataset(cfg)
    out = _outdir(args)
    os.makedirs(os.path.join(out, "demos"), exist_ok=True)
    os.makedirs(os.path.join(out, "outcomes"), exist_ok=True)

    write_json(os.path.join(out, "robot.json"), _robot_to_dict(ds.model))
    sets_json = []
    truth = {}
    for st in ds.sets:
        demo_rels = []
        for k, jt in enumerate(st.demos):
            rel = os.path.join("demos", f"{demo_id_for(st.set_id, k)}.csv")
            save_joint_trajectory(os.path.join(out, rel), jt)
            demo_rels.append(rel)
        orel = os.path.join("outcomes", f"{st.set_id}.csv")
        save_outcomes(os.path.join(out, orel), list(st.outcomes))
        entry = {
            "set_id": st.set_id,
            "user_id": st.user_id,
            "phase_label": st.phase_label,
            "demos": demo_rels,
            "outcomes": orel,
        }
        if st.goals is not None:
            entry["goals"] = {
                "points": st.goals.points,
                "actual_index": st.goals.actual_index,
            }
        sets_json.append(entry)
        truth[st.set_id] = st.regime

    write_json(
        os.path.join(out, "manifest.json"),
        {
            "robot_model": "robot.json",
            "sets": sets_json,
            "config": {
                "resample_dt": 1.0 / cfg.sample_rate,
                "proxy_bounds": SYNTH_PROXY_BOUNDS,
                "clustering": {"seed": cfg.seed},
            },
        },
    )
    write_json(
        os.path.join(out, "ground_truth.json"),
        {"seed": cfg.seed, "set_regimes": truth},
    )
    log.info("wrote synthetic dataset with %d sets to %s", len(ds.sets), out)
    return EXIT_OK


# ---------------------------------------------------------------- report

def cmd_report(args) -> int:
    out = _outdir(args)
    code = cmd_metrics(args)
    if code == EXIT_VALIDATION:
        return code
    cmd_cluster(args)
    cmd_evaluate(args)
    cmd_regress(args)

    manifest = load_manifest(args.manifest)
    cfg = _resolved_config(manifest, args)

    def read(name):
        path = os.path.join(out, name)
        if not os.path.isfile(path):
            return None
        with open(path) as fh:
            return json.load(fh)

    inputs = {"manifest.json": sha256_file(manifest.path)}
    inputs[_rel_to_manifest(manifest, manifest.robot_model_path)] = sha256_file(
        manifest.robot_model_path
    )
    for ms in manifest.sets:
        for p in ms.demo_paths:
            inputs[_rel_to_manifest(manifest, p)] = sha256_file(p)
        if ms.outcome_path is not None:
            inputs[_rel_to_manifest(manifest, ms.outcome_path)] = sha256_file(ms.outcome_path)

    metrics_summary = read(os.path.join("metrics", "summary.json"))
    per_demo = {}
    for did in metrics_summary["demo_ids"]:
        obj = read(os.path.join("metrics", f"{did}.json"))
        per_demo[did] = {"values": obj["values"], "flags": obj["flags"], "set_id": obj["set_id"]}

    models = {}
    for name in ("task_rate", "generalized_rate"):
        obj = read(f"model_{name}.json")
        if obj is not None:
            models[name] = obj

    write_json(
        os.path.join(out, "report.json"),
        {
            "tool": "demo-gauge",
            "version": __version__,
            "generated_at": timestamp(),
            "config": cfg.to_dict(),
            "inputs": inputs,
            "metrics": per_demo,
            "metric_errors": metrics_summary["errors"],
            "clustering": read("clustering.json"),
            "success": read("success.json"),
            "models": models,
        },
    )
    return code


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="demo-gauge",
        description="Quality and consistency analytics for robot demonstration datasets.",
    )
    p.add_argument("--version", action="version", version=f"demo-gauge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, manifest=True):
        if manifest:
            sp.add_argument("--manifest", required=True, help="dataset manifest JSON")
        sp.add_argument("--out", required=True, help="output directory for artifacts")
        sp.add_argument("--seed", type=int, default=None, help="override clustering seed")
        sp.add_argument("--dt", type=float, default=None, help="override resampling step [s]")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads for per-demo work")

    sp = sub.add_parser("metrics", help="compute per-demo quality metrics")
    common(sp)
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("cluster", help="cluster sets into consistent/inconsistent")
    common(sp)
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("evaluate", help="score task outcomes into success rates")
    common(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("regress", help="fit success-vs-quality regression models")
    common(sp)
    sp.set_defaults(func=cmd_regress)

    sp = sub.add_parser("synth", help="write a synthetic benchmark dataset")
    common(sp, manifest=False)
    sp.add_argument("--sets", type=int, default=24, help="number of demonstration sets")
    sp.add_argument("--demos", type=int, default=4, help="demos per set")
    sp.add_argument("--dof", type=int, default=7, help="joints of the synthetic arm")
    sp.add_argument("--goals", type=int, default=2, help="candidate goals per set (0 disables)")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("report", help="run the full pipeline and bundle report.json")
    common(sp)
    sp.set_defaults(func=cmd_report)

    return p


def main(argv=None) -> int:
    level = os.environ.get("DEMO_GAUGE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DemoGaugeError as e:
        log.debug("traceback", exc_info=True)
        print(f"demo-gauge: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
