"""Numba twins of the kernels in :mod:`demo_gauge.kernels.numpy_impl`.

Same signatures, per-sample loops instead of batched array ops.  Compiled
lazily with on-disk caching, so the first call in a fresh environment pays
the JIT cost once.
"""

from __future__ import annotations

import math

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _dh(a, alpha, d, theta):
    ct = math.cos(theta)
    st = math.sin(theta)
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    A = np.zeros((4, 4))
    A[0, 0] = ct
    A[0, 1] = -st * ca
    A[0, 2] = st * sa
    A[0, 3] = a * ct
    A[1, 0] = st
    A[1, 1] = ct * ca
    A[1, 2] = -ct * sa
    A[1, 3] = a * st
    A[2, 1] = sa
    A[2, 2] = ca
    A[2, 3] = d
    A[3, 3] = 1.0
    return A


@numba.njit(cache=True, nogil=True)
def _matmul4(M, A):
    out = np.empty((4, 4))
    for i in range(4):
        for j in range(4):
            s = 0.0
            for k in range(4):
                s += M[i, k] * A[k, j]
            out[i, j] = s
    return out


@numba.njit(cache=True, nogil=True)
def fk_series(a, alpha, d, theta_off, base, tool, Q):
    T, n = Q.shape
    pos = np.empty((T, 3))
    rot = np.empty((T, 3, 3))
    for t in range(T):
        M = base.copy()
        for j in range(n):
            M = _matmul4(M, _dh(a[j], alpha[j], d[j], Q[t, j] + theta_off[j]))
        M = _matmul4(M, tool)
        for r in range(3):
            pos[t, r] = M[r, 3]
            for c in range(3):
                rot[t, r, c] = M[r, c]
    return pos, rot


@numba.njit(cache=True, nogil=True)
def jacobian_series(a, alpha, d, theta_off, base, tool, Q):
    T, n = Q.shape
    J = np.empty((T, 6, n))
    origins = np.empty((n + 1, 3))
    zaxes = np.empty((n + 1, 3))
    for t in range(T):
        M = base.copy()
        for r in range(3):
            origins[0, r] = M[r, 3]
            zaxes[0, r] = M[r, 2]
        for j in range(n):
            M = _matmul4(M, _dh(a[j], alpha[j], d[j], Q[t, j] + theta_off[j]))
            for r in range(3):
                origins[j + 1, r] = M[r, 3]
                zaxes[j + 1, r] = M[r, 2]
        Mt = _matmul4(M, tool)
        tx = Mt[0, 3]
        ty = Mt[1, 3]
        tz = Mt[2, 3]
        for j in range(n):
            rx = tx - origins[j, 0]
            ry = ty - origins[j, 1]
            rz = tz - origins[j, 2]
            zx = zaxes[j, 0]
            zy = zaxes[j, 1]
            zz = zaxes[j, 2]
            J[t, 0, j] = zy * rz - zz * ry
            J[t, 1, j] = zz * rx - zx * rz
            J[t, 2, j] = zx * ry - zy * rx
            J[t, 3, j] = zx
            J[t, 4, j] = zy
            J[t, 5, j] = zz
    return J


@numba.njit(cache=True, nogil=True)
def manipulability_series(J, rows):
    T = J.shape[0]
    n = J.shape[2]
    r = rows.shape[0]
    out = np.empty(T)
    G = np.empty((r, r))
    for t in range(T):
        for i in range(r):
            for j in range(r):
                s = 0.0
                for c in range(n):
                    s += J[t, rows[i], c] * J[t, rows[j], c]
                G[i, j] = s
        det = np.linalg.det(G)
        if det < 0.0:
            det = 0.0
        out[t] = math.sqrt(det)
    return out


@numba.njit(cache=True, nogil=True)
def limit_clearance_series(Q, q_lo, q_hi):
    T, n = Q.shape
    out = np.empty(T)
    for t in range(T):
        prod = 1.0
        for j in range(n):
            span = q_hi[j] - q_lo[j]
            prod *= 4.0 * (Q[t, j] - q_lo[j]) * (q_hi[j] - Q[t, j]) / (span * span)
        out[t] = prod
    return out


@numba.njit(cache=True, nogil=True)
def legibility_entropies(pts, goals, w1, w2, early_fraction, temperature, eps):
    T = pts.shape[0]
    G = goals.shape[0]
    dist = np.empty((T, G))
    for t in range(T):
        for g in range(G):
            dx = goals[g, 0] - pts[t, 0]
            dy = goals[g, 1] - pts[t, 1]
            dz = goals[g, 2] - pts[t, 2]
            dist[t, g] = math.sqrt(dx * dx + dy * dy + dz * dz)
    cum_dist = np.empty((T, G))
    for g in range(G):
        acc = 0.0
        for t in range(T):
            acc += dist[t, g]
            cum_dist[t, g] = acc

    # cumulative positive progress along segments, per goal
    cum_prog = np.empty((T - 1, G))
    for g in range(G):
        acc = 0.0
        for i in range(T - 1):
            gd = dist[i, g]
            if gd > eps:
                sx = pts[i + 1, 0] - pts[i, 0]
                sy = pts[i + 1, 1] - pts[i, 1]
                sz = pts[i + 1, 2] - pts[i, 2]
                proj = (
                    sx * (goals[g, 0] - pts[i, 0])
                    + sy * (goals[g, 1] - pts[i, 1])
                    + sz * (goals[g, 2] - pts[i, 2])
                ) / gd
                if proj > 0.0:
                    acc += proj
            cum_prog[i, g] = acc

    out = np.empty(T - 1)
    cost = np.empty(G)
    p = np.empty(G)
    for idx in range(T - 1):
        t = idx + 2
        early = int(math.ceil(early_fraction * t))
        if early < 1:
            early = 1
        if early > t:
            early = t
        for g in range(G):
            d_early = cum_dist[early - 1, g] / early
            denom = dist[0, g]
            if denom < eps:
                denom = eps
            progress = cum_prog[idx, g] / denom
            if d_early < eps:
                d_early = eps
            if progress < eps:
                progress = eps
            cost[g] = w1 / d_early + w2 / progress
        m = -cost[0] / temperature
        for g in range(1, G):
            v = -cost[g] / temperature
            if v > m:
                m = v
        z = 0.0
        for g in range(G):
            p[g] = math.exp(-cost[g] / temperature - m)
            z += p[g]
        h = 0.0
        for g in range(G):
            pg = p[g] / z
            if pg > 0.0:
                h -= pg * math.log(pg)
        out[idx] = h
    return out


@numba.njit(cache=True, nogil=True)
def lloyd(X, C0, max_iter, tol):
    N, D = X.shape
    k = C0.shape[0]
    C = C0.copy()
    newC = np.empty((k, D))
    counts = np.empty(k, np.int64)
    labels = np.empty(N, np.int64)
    d_assigned = np.empty(N)
    n_iter = 0
    for _ in range(max_iter):
        n_iter += 1
        for i in range(N):
            best = np.inf
            bj = 0
            for j in range(k):
                s = 0.0
                for c in range(D):
                    diff = X[i, c] - C[j, c]
                    s += diff * diff
                if s < best:
                    best = s
                    bj = j
            labels[i] = bj
            d_assigned[i] = best
        for j in range(k):
            counts[j] = 0
            for c in range(D):
                newC[j, c] = 0.0
        for i in range(N):
            j = labels[i]
            counts[j] += 1
            for c in range(D):
                newC[j, c] += X[i, c]
        for j in range(k):
            if counts[j] == 0:
                far = 0
                fd = -1.0
                for i in range(N):
                    if d_assigned[i] > fd:
                        fd = d_assigned[i]
                        far = i
                for c in range(D):
                    newC[j, c] = X[far, c]
                d_assigned[far] = -1.0
            else:
                for c in range(D):
                    newC[j, c] /= counts[j]
        shift = 0.0
        for j in range(k):
            for c in range(D):
                diff = newC[j, c] - C[j, c]
                shift += diff * diff
        for j in range(k):
            for c in range(D):
                C[j, c] = newC[j, c]
        if shift <= tol:
            break
    inertia = 0.0
    for i in range(N):
        best = np.inf
        bj = 0
        for j in range(k):
            s = 0.0
            for c in range(D):
                diff = X[i, c] - C[j, c]
                s += diff * diff
            if s < best:
                best = s
                bj = j
        labels[i] = bj
        inertia += best
    return labels, C, inertia, n_iter
