"""Backend agreement and kernel-level behavior.

The numba and numpy implementations must be interchangeable; these tests run
both on identical inputs.  If numba is not installed the agreement tests
skip and the numpy path is still exercised through the rest of the suite.
"""

import numpy as np
import pytest

from conftest import make_random_model
from demo_gauge.kernels import numpy_impl, resolve_backend
from oracles import o_best_two_partition_inertia

try:
    from demo_gauge.kernels import numba_impl

    HAVE_NUMBA = True
except ImportError:
    numba_impl = None
    HAVE_NUMBA = False

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def _model_arrays(model):
    a, alpha, d, off = model.dh_arrays()
    return a, alpha, d, off, model.base_pose.matrix(), model.tool_transform.matrix()


@needs_numba
def test_fk_series_backends_agree():
    rng = np.random.default_rng(11)
    model = make_random_model(rng, dof=5)
    Q = rng.uniform(-1.5, 1.5, size=(40, 5))
    args = _model_arrays(model)
    p1, r1 = numpy_impl.fk_series(*args, Q)
    p2, r2 = numba_impl.fk_series(*args, Q)
    np.testing.assert_allclose(p1, p2, atol=1e-13)
    np.testing.assert_allclose(r1, r2, atol=1e-13)


@needs_numba
def test_jacobian_and_manipulability_backends_agree():
    rng = np.random.default_rng(12)
    model = make_random_model(rng, dof=6)
    Q = rng.uniform(-1.5, 1.5, size=(25, 6))
    args = _model_arrays(model)
    J1 = numpy_impl.jacobian_series(*args, Q)
    J2 = numba_impl.jacobian_series(*args, Q)
    np.testing.assert_allclose(J1, J2, atol=1e-12)
    rows = np.array([0, 1, 2], dtype=np.int64)
    np.testing.assert_allclose(
        numpy_impl.manipulability_series(J1, rows),
        numba_impl.manipulability_series(J1, rows),
        atol=1e-12,
    )


@needs_numba
def test_limit_clearance_backends_agree():
    rng = np.random.default_rng(13)
    lo = np.full(4, -2.0)
    hi = np.full(4, 2.5)
    Q = rng.uniform(-1.9, 2.4, size=(30, 4))
    np.testing.assert_allclose(
        numpy_impl.limit_clearance_series(Q, lo, hi),
        numba_impl.limit_clearance_series(Q, lo, hi),
        atol=1e-14,
    )


@needs_numba
def test_legibility_backends_agree():
    rng = np.random.default_rng(14)
    pts = np.cumsum(rng.normal(scale=0.05, size=(20, 3)), axis=0)
    goals = rng.uniform(-1, 1, size=(4, 3))
    args = (0.5, 0.5, 0.5, 1.0, 1e-9)
    e1 = numpy_impl.legibility_entropies(pts, goals, *args)
    e2 = numba_impl.legibility_entropies(pts, goals, *args)
    assert e1.shape == (19,)
    np.testing.assert_allclose(e1, e2, atol=1e-12)


@needs_numba
def test_lloyd_backends_agree():
    rng = np.random.default_rng(15)
    X = np.vstack([rng.normal(0, 0.2, (10, 3)), rng.normal(4, 0.2, (12, 3))])
    C0 = X[[0, -1]].copy()
    l1, c1, i1, n1 = numpy_impl.lloyd(X, C0, 100, 1e-8)
    l2, c2, i2, n2 = numba_impl.lloyd(X, C0, 100, 1e-8)
    np.testing.assert_array_equal(l1, l2)
    np.testing.assert_allclose(c1, c2, atol=1e-12)
    assert abs(i1 - i2) < 1e-10
    assert n1 == n2


def test_lloyd_separated_blobs():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(0, 0.1, (8, 2)), rng.normal(5, 0.1, (8, 2))])
    labels, C, inertia, _ = numpy_impl.lloyd(X, X[[0, 8]].copy(), 100, 1e-10)
    assert len(set(labels[:8])) == 1
    assert len(set(labels[8:])) == 1
    assert labels[0] != labels[8]
    # inertia is recomputed from the final centroids
    D = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    assert abs(inertia - D.min(axis=1).sum()) < 1e-12


def test_lloyd_tie_goes_to_lower_index():
    X = np.array([[0.0, 0.0], [0.0, 0.0]])
    labels, _, _, _ = numpy_impl.lloyd(X, np.array([[1.0, 0.0], [-1.0, 0.0]]), 5, 1e-12)
    assert list(labels) == [0, 0]


def test_lloyd_reseeds_empty_cluster():
    # both initial centroids identical: one cluster starts empty and must be
    # reseeded to the farthest point instead of dividing by zero
    X = np.array([[0.0], [0.1], [5.0], [5.1]])
    C0 = np.array([[0.0], [0.0]])
    labels, C, inertia, _ = numpy_impl.lloyd(X, C0, 100, 1e-12)
    assert set(labels.tolist()) == {0, 1}
    assert inertia < 0.5


def test_lloyd_matches_exhaustive_1d_partition():
    rng = np.random.default_rng(21)
    from demo_gauge.consistency import kmeans2

    for n in range(4, 13):
        x = rng.normal(size=n)
        Z = x[:, None]
        best = o_best_two_partition_inertia(x)
        got = kmeans2(Z, seed=0, restarts=32).inertia
        assert got <= best + 1e-10, f"n={n}: kmeans inertia {got} worse than exhaustive {best}"
        assert got >= best - 1e-10, f"n={n}: impossible inertia {got} below optimum {best}"


def test_resolve_backend_choices():
    impl, name = resolve_backend("numpy")
    assert name == "numpy" and impl is numpy_impl
    with pytest.raises(ValueError):
        resolve_backend("cupy")
    impl, name = resolve_backend("auto")
    assert name in ("numba", "numpy")
