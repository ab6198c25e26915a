import numpy as np
import pytest

from demo_gauge.consistency import (
    ClusterAssignment,
    DemonstrationSet,
    build_feature_matrix,
    cluster_sets,
    consistency_flags,
    kmeans2,
    label_consistent,
    metric_ranges,
    standardize,
)
from demo_gauge.errors import ValidationError
from demo_gauge.metrics import METRIC_NAMES, MetricVector


def mv(demo_id, base, effort=True, legibility=True, bump=0.0):
    values = {}
    flags = {}
    for i, name in enumerate(METRIC_NAMES):
        values[name] = base + 0.1 * i + bump
        flags[name] = "ok"
    if not effort:
        values["effort"] = None
        flags["effort"] = "unavailable"
    if not legibility:
        values["legibility"] = None
        flags["legibility"] = "unavailable"
    return MetricVector(demo_id, values, flags)


def make_set(set_id, spread, rng, n_demos=4, **kw):
    demos = tuple(
        mv(f"{set_id}_d{k}", base=1.0, bump=float(rng.uniform(0, spread)), **kw)
        for k in range(n_demos)
    )
    return DemonstrationSet(set_id, f"user_{set_id}", "phase", demos)


def test_demonstration_set_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValidationError):
        DemonstrationSet("s", "u", "p", (mv("a", 1.0),))  # one demo
    # availability pattern must match across demos of a set
    with pytest.raises(ValidationError):
        DemonstrationSet("s", "u", "p", (mv("a", 1.0, effort=True), mv("b", 1.0, effort=False)))
    make_set("ok", 0.1, rng)  # no raise


def test_metric_ranges_hand_case():
    demos = (mv("a", 1.0, bump=0.0), mv("b", 1.0, bump=0.25))
    s = DemonstrationSet("s", "u", "p", demos)
    r = metric_ranges(s)
    for name in METRIC_NAMES:
        assert abs(r[name] - 0.25) < 1e-12


def test_build_feature_matrix_drops_unshared_metrics():
    rng = np.random.default_rng(1)
    s1 = make_set("s1", 0.1, rng, effort=False)
    s2 = make_set("s2", 0.5, rng)
    fm = build_feature_matrix([s1, s2])
    assert "effort" not in fm.feature_names
    assert fm.dropped == ("effort",)
    assert fm.feature_names == tuple(n for n in METRIC_NAMES if n != "effort")
    assert fm.values.shape == (2, 9)


def test_build_feature_matrix_validation():
    rng = np.random.default_rng(2)
    with pytest.raises(ValidationError):
        build_feature_matrix([])
    s = make_set("dup", 0.1, rng)
    with pytest.raises(ValidationError):
        build_feature_matrix([s, s])


def test_standardize_hand_case_and_zero_variance():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    Z, mean, sigma, zero = standardize(X)
    np.testing.assert_allclose(mean, [2.0, 5.0])
    np.testing.assert_allclose(sigma, [1.0, 0.0])  # population std
    np.testing.assert_allclose(Z[:, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(Z[:, 1], [0.0, 0.0])
    assert zero == (1,)
    with pytest.raises(ValidationError):
        standardize(np.array([1.0, 2.0]))


def test_kmeans2_deterministic_and_separates():
    rng = np.random.default_rng(3)
    Z = np.vstack([rng.normal(0, 0.1, (6, 4)), rng.normal(3, 0.1, (6, 4))])
    a1 = kmeans2(Z, seed=5)
    a2 = kmeans2(Z, seed=5)
    np.testing.assert_array_equal(a1.labels, a2.labels)
    assert a1.inertia == a2.inertia
    assert a1.best_restart == a2.best_restart
    assert len(set(a1.labels[:6])) == 1 and len(set(a1.labels[6:])) == 1
    assert a1.labels[0] != a1.labels[6]


def test_kmeans2_more_restarts_never_worse():
    rng = np.random.default_rng(4)
    Z = rng.normal(size=(14, 3))
    one = kmeans2(Z, seed=0, restarts=1)
    many = kmeans2(Z, seed=0, restarts=32)
    assert many.inertia <= one.inertia + 1e-12


def test_kmeans2_inertia_consistent_with_centroids():
    rng = np.random.default_rng(5)
    Z = rng.normal(size=(10, 2))
    a = kmeans2(Z, seed=1)
    D = ((Z[:, None, :] - a.centroids[None, :, :]) ** 2).sum(axis=2)
    assert abs(a.inertia - D.min(axis=1).sum()) < 1e-10
    np.testing.assert_array_equal(a.labels, D.argmin(axis=1))


def test_kmeans2_validation():
    with pytest.raises(ValidationError):
        kmeans2(np.zeros((1, 2)))
    with pytest.raises(ValidationError):
        kmeans2(np.zeros((4, 2)), restarts=0)


def test_label_consistent_smaller_mean_and_tie():
    Z = np.array([[-1.0], [1.0]])
    a = label_consistent(kmeans2(Z, seed=0), Z)
    # centroid means are -1 and 1; the lower one is the consistent side
    assert a.consistent_cluster == int(a.centroids.mean(axis=1).argmin())
    flags = consistency_flags(a)
    assert flags[int(np.argmin(Z[:, 0]))] == 1
    assert flags.sum() == 1

    # symmetric case: both centroid means are 0, tie resolves to cluster 0
    Zt = np.array([[1.0, -1.0], [-1.0, 1.0]])
    at = label_consistent(kmeans2(Zt, seed=0), Zt)
    assert at.consistent_cluster == 0


def test_consistency_flags_requires_labeling():
    a = kmeans2(np.array([[-1.0], [1.0]]), seed=0)
    with pytest.raises(ValidationError):
        consistency_flags(a)


def test_cluster_sets_end_to_end():
    rng = np.random.default_rng(6)
    tight = [make_set(f"t{i}", 0.05, rng) for i in range(4)]
    wide = [make_set(f"w{i}", 2.0, rng) for i in range(4)]
    fm, Z, mean, sigma, zero, assignment, flags = cluster_sets(tight + wide, seed=0)
    assert fm.set_ids == tuple(f"t{i}" for i in range(4)) + tuple(f"w{i}" for i in range(4))
    assert flags[:4].all() and not flags[4:].any()


def test_cluster_labels_affine_invariant():
    rng = np.random.default_rng(7)
    tight = [make_set(f"t{i}", 0.05, rng) for i in range(3)]
    wide = [make_set(f"w{i}", 2.0, rng) for i in range(3)]
    fm = build_feature_matrix(tight + wide)
    Z, *_ = standardize(fm.values)
    base = label_consistent(kmeans2(Z, seed=0), Z)
    scale = rng.uniform(0.5, 20.0, size=fm.values.shape[1])
    offset = rng.uniform(-5.0, 5.0, size=fm.values.shape[1])
    Z2, *_ = standardize(fm.values * scale + offset)
    again = label_consistent(kmeans2(Z2, seed=0), Z2)
    np.testing.assert_array_equal(base.labels, again.labels)
    assert base.consistent_cluster == again.consistent_cluster
