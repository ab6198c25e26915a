"""Vectorized numpy implementations of the numerical kernels.

Every function here has a numba twin in :mod:`demo_gauge.kernels.numba_impl`
with the same signature and semantics.  The numpy versions batch over the
sample axis instead of looping per sample; both are kept because numba is an
optional dependency and because the pair gives a cheap cross-check of the
hot numeric paths.
"""

from __future__ import annotations

import numpy as np


def _dh_batch(a: float, alpha: float, d: float, theta: np.ndarray) -> np.ndarray:
    """Stack of standard (distal) DH transforms, one per element of theta."""
    ct = np.cos(theta)
    st = np.sin(theta)
    ca = np.cos(alpha)
    sa = np.sin(alpha)
    T = theta.shape[0]
    A = np.zeros((T, 4, 4))
    A[:, 0, 0] = ct
    A[:, 0, 1] = -st * ca
    A[:, 0, 2] = st * sa
    A[:, 0, 3] = a * ct
    A[:, 1, 0] = st
    A[:, 1, 1] = ct * ca
    A[:, 1, 2] = -ct * sa
    A[:, 1, 3] = a * st
    A[:, 2, 1] = sa
    A[:, 2, 2] = ca
    A[:, 2, 3] = d
    A[:, 3, 3] = 1.0
    return A


def fk_series(
    a: np.ndarray,
    alpha: np.ndarray,
    d: np.ndarray,
    theta_off: np.ndarray,
    base: np.ndarray,
    tool: np.ndarray,
    Q: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Tool-frame forward kinematics for every row of ``Q``.

    Parameters
    ----------
    a, alpha, d, theta_off : (n,) arrays
        Standard DH parameters; ``theta_off`` is added to each joint value.
    base, tool : (4, 4) arrays
        Fixed transforms applied before the first joint and after the last.
    Q : (T, n) array
        Joint configurations, one row per sample.

    Returns
    -------
    positions : (T, 3) array
    rotations : (T, 3, 3) array
    """
    T = Q.shape[0]
    n = Q.shape[1]
    M = np.broadcast_to(base, (T, 4, 4))
    for j in range(n):
        M = M @ _dh_batch(a[j], alpha[j], d[j], Q[:, j] + theta_off[j])
    M = M @ tool
    return np.ascontiguousarray(M[:, :3, 3]), np.ascontiguousarray(M[:, :3, :3])


def jacobian_series(
    a: np.ndarray,
    alpha: np.ndarray,
    d: np.ndarray,
    theta_off: np.ndarray,
    base: np.ndarray,
    tool: np.ndarray,
    Q: np.ndarray,
) -> np.ndarray:
    """Geometric tool-tip Jacobians, shape (T, 6, n); rows are (v, w)."""
    T = Q.shape[0]
    n = Q.shape[1]
    origins = np.empty((T, n + 1, 3))
    zaxes = np.empty((T, n + 1, 3))
    M = np.broadcast_to(base, (T, 4, 4))
    origins[:, 0] = base[:3, 3]
    zaxes[:, 0] = base[:3, 2]
    for j in range(n):
        M = M @ _dh_batch(a[j], alpha[j], d[j], Q[:, j] + theta_off[j])
        origins[:, j + 1] = M[:, :3, 3]
        zaxes[:, j + 1] = M[:, :3, 2]
    tip = (M @ tool)[:, :3, 3]
    J = np.empty((T, 6, n))
    for j in range(n):
        J[:, :3, j] = np.cross(zaxes[:, j], tip - origins[:, j])
        J[:, 3:, j] = zaxes[:, j]
    return J


def manipulability_series(J: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """sqrt(det(Jr Jr^T)) per sample on the selected Jacobian rows.

    Negative determinants (numerical noise near singularities) clamp to zero.
    """
    Jr = J[:, rows, :]
    G = Jr @ np.swapaxes(Jr, 1, 2)
    det = np.linalg.det(G)
    return np.sqrt(np.clip(det, 0.0, None))


def limit_clearance_series(Q: np.ndarray, q_lo: np.ndarray, q_hi: np.ndarray) -> np.ndarray:
    """Per-sample product over joints of 4(q-lo)(hi-q)/(hi-lo)^2.

    The factor is 1 at mid-range and 0 at either limit.
    """
    span = q_hi - q_lo
    f = 4.0 * (Q - q_lo) * (q_hi - Q) / (span * span)
    return np.prod(f, axis=1)


def legibility_entropies(
    pts: np.ndarray,
    goals: np.ndarray,
    w1: float,
    w2: float,
    early_fraction: float,
    temperature: float,
    eps: float,
) -> np.ndarray:
    """Goal-posterior entropy for every prefix of a Cartesian path.

    For prefix length t (t = 2..T samples) each goal is scored by a cost
    mixing closeness of the early portion of the prefix to the goal and
    accumulated forward progress toward it; a softmax over negated costs
    gives the posterior, whose entropy (nats) is returned per prefix.

    Returns an array of length T-1, entry i corresponding to prefix length
    i + 2.
    """
    T = pts.shape[0]
    diff = goals[None, :, :] - pts[:, None, :]
    dist = np.sqrt((diff * diff).sum(axis=2))  # (T, G): ||g - p_t||
    cum_dist = np.cumsum(dist, axis=0)

    t_vals = np.arange(2, T + 1)
    early = np.ceil(early_fraction * t_vals).astype(np.int64)
    early = np.clip(early, 1, t_vals)
    d_early = cum_dist[early - 1, :] / early[:, None].astype(np.float64)

    seg = pts[1:] - pts[:-1]  # (T-1, 3)
    gd = dist[:-1, :]  # distance from segment start to each goal
    safe = np.where(gd > eps, gd, 1.0)
    unit = diff[:-1] / safe[:, :, None]
    proj = np.einsum("ik,igk->ig", seg, unit)
    proj[gd <= eps] = 0.0
    cum_prog = np.cumsum(np.maximum(proj, 0.0), axis=0)  # (T-1, G)
    progress = cum_prog / np.maximum(dist[0, :], eps)[None, :]

    cost = w1 / np.maximum(d_early, eps) + w2 / np.maximum(progress, eps)
    logits = -cost / temperature
    logits -= logits.max(axis=1, keepdims=True)
    ex = np.exp(logits)
    p = ex / ex.sum(axis=1, keepdims=True)
    plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return -plogp.sum(axis=1)


def lloyd(
    X: np.ndarray, C0: np.ndarray, max_iter: int, tol: float
) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Lloyd iterations from the given initial centroids.

    Assignment ties go to the lower centroid index.  A cluster left empty is
    reseeded to the sample farthest from its assigned centroid.  Stops when
    the squared Frobenius norm of the centroid shift drops to ``tol`` or
    after ``max_iter`` sweeps; labels and inertia are recomputed against the
    final centroids.
    """
    N = X.shape[0]
    k = C0.shape[0]
    C = C0.copy()
    n_iter = 0
    for _ in range(max_iter):
        n_iter += 1
        D = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(D, axis=1)
        d_assigned = D[np.arange(N), labels]
        newC = np.empty_like(C)
        for j in range(k):
            mask = labels == j
            if mask.any():
                newC[j] = X[mask].mean(axis=0)
            else:
                far = int(np.argmax(d_assigned))
                newC[j] = X[far]
                d_assigned[far] = -1.0
        shift = float(((newC - C) ** 2).sum())
        C = newC
        if shift <= tol:
            break
    D = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(D, axis=1)
    inertia = float(D[np.arange(N), labels].sum())
    return labels, C, inertia, n_iter
