"""Set-level consistency: range features, standardization, k=2 clustering.

A demonstration set is one user's demonstrations within one phase.  The
spread (max - min) of each quality metric across the set's demos forms the
feature row; rows are z-scored per column and clustered with k-means into a
consistent and an inconsistent group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .metrics import METRIC_NAMES, MetricVector

DEFAULT_RESTARTS = 32
DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class DemonstrationSet:
    """All demonstrations from one user within one phase, as metric vectors."""

    set_id: str
    user_id: str
    phase_label: str
    demos: tuple[MetricVector, ...]

    def __post_init__(self):
        object.__setattr__(self, "demos", tuple(self.demos))
        if len(self.demos) < 2:
            raise ValidationError(
                f"set {self.set_id!r} has {len(self.demos)} demos; need at least 2"
            )
        pattern = self.demos[0].available()
        for mv in self.demos[1:]:
            if mv.available() != pattern:
                raise ValidationError(
                    f"set {self.set_id!r}: demos disagree on available metrics "
                    f"({mv.demo_id!r} vs {self.demos[0].demo_id!r})"
                )

    def available(self) -> tuple[str, ...]:
        return self.demos[0].available()


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-set range features; one row per set, one column per metric."""

    set_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray
    dropped: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", X)
        object.__setattr__(self, "set_ids", tuple(self.set_ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "dropped", tuple(self.dropped))
        if X.shape != (len(self.set_ids), len(self.feature_names)):
            raise ValidationError(
                f"feature matrix shape {X.shape} does not match "
                f"{len(self.set_ids)} sets x {len(self.feature_names)} features"
            )
        if not np.all(np.isfinite(X)):
            raise ValidationError("feature matrix contains non-finite values")
        if X.size and X.min() < 0.0:
            raise ValidationError("range features must be non-negative")


@dataclass(frozen=True)
class ClusterAssignment:
    """k=2 clustering result in standardized feature space."""

    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    seed: int
    restarts: int
    n_iter: int
    best_restart: int
    consistent_cluster: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "centroids", np.asarray(self.centroids, dtype=float))
        if self.centroids.shape[0] != 2:
            raise ValidationError("expected exactly 2 centroids")
        if self.consistent_cluster is not None and self.consistent_cluster not in (0, 1):
            raise ValidationError("consistent_cluster must be 0 or 1")


def metric_ranges(demo_set: DemonstrationSet) -> dict[str, float]:
    """max - min per available metric across the set's demos."""
    out: dict[str, float] = {}
    for name in demo_set.available():
        vals = np.array([mv.values[name] for mv in demo_set.demos], dtype=float)
        out[name] = float(vals.max() - vals.min())
    return out


def build_feature_matrix(sets: list[DemonstrationSet]) -> FeatureMatrix:
    """Assemble range rows, keeping only metrics available in every set.

    Columns missing from any set are dropped for all sets (recorded in
    ``dropped``) so the matrix has no holes.
    """
    if not sets:
        raise ValidationError("no demonstration sets given")
    ids = [s.set_id for s in sets]
    if len(set(ids)) != len(ids):
        raise ValidationError("set_ids must be unique")
    common = set(METRIC_NAMES)
    for s in sets:
        common &= set(s.available())
    names = tuple(n for n in METRIC_NAMES if n in common)
    dropped = tuple(n for n in METRIC_NAMES if n not in common)
    if not names:
        raise ValidationError("no metric is available in every set")
    rows = []
    for s in sets:
        r = metric_ranges(s)
        rows.append([r[n] for n in names])
    return FeatureMatrix(tuple(ids), names, np.asarray(rows), dropped)


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[int, ...]]:
    """Z-score columns with the population standard deviation.

    Returns (Z, mean, sigma, zero_variance_columns).  Zero-variance columns
    come out as all zeros and are flagged by index; their sigma is reported
    as 0.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError(f"standardize needs a 2-D matrix with >= 2 rows, got {X.shape}")
    mean = X.mean(axis=0)
    sigma = X.std(axis=0)  # population (ddof=0)
    zero = sigma == 0.0
    safe = np.where(zero, 1.0, sigma)
    Z = (X - mean) / safe
    Z[:, zero] = 0.0
    return Z, mean, sigma, tuple(int(i) for i in np.flatnonzero(zero))


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, then distance-weighted."""
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = X[first]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = X[idx]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    # counter-based streams so restarts are independent of execution order
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(restart,)))
    )


def kmeans2(
    Z: np.ndarray,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> ClusterAssignment:
    """k=2 Lloyd clustering with k-means++ restarts.

    Deterministic for a given seed: each restart draws from its own
    counter-based stream and the best result is picked by (inertia, restart
    index), so concurrent execution of restarts could never change the
    answer.
    """
    Z = np.ascontiguousarray(np.asarray(Z, dtype=float))
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise ValidationError(f"kmeans2 needs at least 2 rows, got shape {Z.shape}")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    best: tuple[float, int] | None = None
    best_out = None
    for r in range(restarts):
        rng = _restart_rng(seed, r)
        C0 = _kmeanspp_init(Z, 2, rng)
        labels, C, inertia, n_iter = kernels.lloyd(Z, C0, max_iter, tol)
        if best is None or inertia < best[0]:
            best = (inertia, r)
            best_out = (labels, C, inertia, n_iter, r)
    labels, C, inertia, n_iter, r = best_out
    return ClusterAssignment(
        labels=labels,
        centroids=C,
        inertia=float(inertia),
        seed=int(seed),
        restarts=int(restarts),
        n_iter=int(n_iter),
        best_restart=int(r),
    )


def label_consistent(assignment: ClusterAssignment, Z: np.ndarray) -> ClusterAssignment:
    """Identify the consistent cluster: smaller centroid mean over features.

    Ties break toward cluster 0.  The matrix argument is accepted for
    interface symmetry with the pipeline; the decision uses the stored
    centroids, which live in the same standardized space.
    """
    means = assignment.centroids.mean(axis=1)
    consistent = 0 if means[0] <= means[1] else 1
    return ClusterAssignment(
        labels=assignment.labels,
        centroids=assignment.centroids,
        inertia=assignment.inertia,
        seed=assignment.seed,
        restarts=assignment.restarts,
        n_iter=assignment.n_iter,
        best_restart=assignment.best_restart,
        consistent_cluster=consistent,
    )


def consistency_flags(assignment: ClusterAssignment) -> np.ndarray:
    """1 for sets in the consistent cluster, 0 otherwise."""
    if assignment.consistent_cluster is None:
        raise ValidationError("assignment has no consistent_cluster; run label_consistent")
    return (assignment.labels == assignment.consistent_cluster).astype(np.int64)


def cluster_sets(
    sets: list[DemonstrationSet],
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
):
    """Range features -> standardize -> kmeans2 -> label_consistent.

    Returns (FeatureMatrix, standardized matrix, column mean, column sigma,
    labeled ClusterAssignment, flags).
    """
    fm = build_feature_matrix(sets)
    Z, mean, sigma, zero_cols = standardize(fm.values)
    assignment = kmeans2(Z, seed=seed, restarts=restarts, max_iter=max_iter, tol=tol)
    assignment = label_consistent(assignment, Z)
    flags = consistency_flags(assignment)
    return fm, Z, mean, sigma, zero_cols, assignment, flags
