import json
import os

import pytest

from demo_gauge.cli import demo_id_for, main


def run(*argv):
    return main([str(a) for a in argv])


def tree_digest(root, skip_substring=None):
    """Map of relative path -> bytes for every file under root."""
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in sorted(files):
            p = os.path.join(dirpath, f)
            data = open(p, "rb").read()
            if skip_substring is not None:
                data = b"\n".join(
                    ln for ln in data.split(b"\n") if skip_substring not in ln
                )
            out[os.path.relpath(p, root)] = data
    return out


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert run("synth", "--out", d, "--seed", 7, "--sets", 6, "--demos", 3, "--dof", 4) == 0
    return d


def test_demo_id_format():
    assert demo_id_for("u03", 0) == "u03_d01"
    assert demo_id_for("u03", 11) == "u03_d12"


def test_synth_writes_expected_tree(synth_dir):
    names = set(os.listdir(synth_dir))
    assert {"manifest.json", "robot.json", "ground_truth.json", "demos", "outcomes"} <= names
    man = json.load(open(synth_dir / "manifest.json"))
    assert len(man["sets"]) == 6
    assert all(len(s["demos"]) == 3 for s in man["sets"])
    assert all("goals" in s for s in man["sets"])  # default --goals 2
    truth = json.load(open(synth_dir / "ground_truth.json"))
    assert set(truth["set_regimes"].values()) == {"consistent", "inconsistent"}


def test_synth_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        assert run("synth", "--out", d, "--seed", 3, "--sets", 2, "--demos", 2, "--dof", 3) == 0
    assert tree_digest(a) == tree_digest(b)


def test_full_chain_and_determinism(synth_dir, tmp_path):
    r1 = tmp_path / "r1"
    r2 = tmp_path / "r2"
    for r in (r1, r2):
        assert run("metrics", "--manifest", synth_dir / "manifest.json", "--out", r) == 0
        assert run("cluster", "--manifest", synth_dir / "manifest.json", "--out", r) == 0
        assert run("evaluate", "--manifest", synth_dir / "manifest.json", "--out", r) == 0
        assert run("regress", "--manifest", synth_dir / "manifest.json", "--out", r) == 0
    assert tree_digest(r1) == tree_digest(r2)

    summary = json.load(open(r1 / "metrics" / "summary.json"))
    assert summary["n_ok"] == 18 and summary["n_failed"] == 0

    clustering = json.load(open(r1 / "clustering.json"))
    phase = clustering["phases"]["synthetic"]
    assert len(phase["labels"]) == 6
    assert set(phase["consistent"]) == {f"u{i:02d}" for i in range(1, 7)}
    # all ten metrics are live on synthetic data (torque + goals present)
    assert len(phase["feature_names"]) == 10
    assert phase["dropped_metrics"] == []

    success = json.load(open(r1 / "success.json"))
    assert set(success["sets"]) == set(phase["consistent"])
    assert success["groups"] is not None

    model = json.load(open(r1 / "model_task_rate.json"))
    assert model["outcome_name"] == "task_rate"
    assert model["x_key"]["x11"] == "consistency"
    assert os.path.isfile(r1 / "model_generalized_rate.json")
    assert os.path.isfile(r1 / "correlation.csv")


def test_metrics_jobs_parallel_identical(synth_dir, tmp_path):
    serial = tmp_path / "serial"
    par = tmp_path / "par"
    assert run("metrics", "--manifest", synth_dir / "manifest.json", "--out", serial) == 0
    assert run("metrics", "--manifest", synth_dir / "manifest.json", "--out", par, "--jobs", 4) == 0
    assert tree_digest(serial) == tree_digest(par)


def test_seed_override_recorded(synth_dir, tmp_path):
    r = tmp_path / "r"
    assert run("metrics", "--manifest", synth_dir / "manifest.json", "--out", r) == 0
    assert run("cluster", "--manifest", synth_dir / "manifest.json", "--out", r, "--seed", 99) == 0
    clustering = json.load(open(r / "clustering.json"))
    assert clustering["config"]["seed"] == 99


def test_metrics_partial_failure_exit_code(synth_dir, tmp_path):
    import shutil

    broken = tmp_path / "broken"
    shutil.copytree(synth_dir, broken)
    victim = broken / "demos" / "u02_d01.csv"
    victim.write_text("t,q1\nnot,numeric\n")
    r = tmp_path / "out"
    assert run("metrics", "--manifest", broken / "manifest.json", "--out", r) == 3
    summary = json.load(open(r / "metrics" / "summary.json"))
    assert summary["n_failed"] == 1
    (err,) = summary["errors"]
    assert err["demo_id"] == "u02_d01"
    # the per-demo file for the failed one is absent, the others exist
    assert not os.path.isfile(r / "metrics" / "u02_d01.json")
    assert os.path.isfile(r / "metrics" / "u01_d01.json")
    # report propagates the partial exit code and drops the broken set
    # from clustering while still covering the healthy ones
    r2 = tmp_path / "out2"
    assert run("report", "--manifest", broken / "manifest.json", "--out", r2) == 3
    rep = json.load(open(r2 / "report.json"))
    assert [e["demo_id"] for e in rep["metric_errors"]] == ["u02_d01"]
    assert rep["clustering"]["skipped_sets"] == ["u02"]
    assert "u02" not in rep["clustering"]["phases"]["synthetic"]["set_ids"]
    assert len(rep["clustering"]["phases"]["synthetic"]["set_ids"]) == 5
    # its outcome file is intact, so success still covers it
    assert "u02" in rep["success"]["sets"]


def test_prerequisite_errors(synth_dir, tmp_path, capsys):
    r = tmp_path / "r"
    os.makedirs(r)
    assert run("cluster", "--manifest", synth_dir / "manifest.json", "--out", r) == 2
    assert "metrics" in capsys.readouterr().err
    assert run("regress", "--manifest", synth_dir / "manifest.json", "--out", r) == 2


def test_missing_manifest_is_validation_error(tmp_path, capsys):
    assert run("metrics", "--manifest", tmp_path / "nope.json", "--out", tmp_path) == 2
    assert "demo-gauge: error:" in capsys.readouterr().err


def test_evaluate_without_clustering_notes_it(synth_dir, tmp_path):
    r = tmp_path / "r"
    assert run("metrics", "--manifest", synth_dir / "manifest.json", "--out", r) == 0
    assert run("evaluate", "--manifest", synth_dir / "manifest.json", "--out", r) == 0
    success = json.load(open(r / "success.json"))
    assert success["groups"] is None
    assert "clustering" in success["note"]


def test_restricted_candidates_note(synth_dir, tmp_path):
    man = json.load(open(synth_dir / "manifest.json"))
    man["config"]["regression"] = {"candidates": ["x11"]}
    man2 = tmp_path / "manifest.json"
    # keep relative paths valid by pointing them back at the synth tree
    man["robot_model"] = str(synth_dir / "robot.json")
    for s in man["sets"]:
        s["demos"] = [str(synth_dir / d) for d in s["demos"]]
        s["outcomes"] = str(synth_dir / s["outcomes"])
    man2.write_text(json.dumps(man))
    r = tmp_path / "r"
    for cmd in ("metrics", "cluster", "evaluate", "regress"):
        assert run(cmd, "--manifest", man2, "--out", r) == 0
    model = json.load(open(r / "model_task_rate.json"))
    assert "restricted" in model["note"]


def test_report_bundle_shape(synth_dir, tmp_path):
    r = tmp_path / "r"
    assert run("report", "--manifest", synth_dir / "manifest.json", "--out", r) == 0
    rep = json.load(open(r / "report.json"))
    assert rep["tool"] == "demo-gauge"
    assert set(rep["models"]) == {"task_rate", "generalized_rate"}
    assert len(rep["metrics"]) == 18
    assert rep["metric_errors"] == []
    assert "manifest.json" in rep["inputs"]
    assert "robot.json" in rep["inputs"]
    assert rep["clustering"]["phases"]["synthetic"]["consistent"]
    assert rep["config"]["resample_dt"] == pytest.approx(0.02)


def test_version_and_bad_usage(capsys):
    with pytest.raises(SystemExit) as ei:
        run("--version")
    assert ei.value.code == 0
    assert "demo-gauge" in capsys.readouterr().out
    with pytest.raises(SystemExit) as ei:
        run("metrics", "--out", "x")  # missing --manifest
    assert ei.value.code == 2
