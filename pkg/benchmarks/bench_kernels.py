"""Time the numba kernels against the pure numpy fallback.

Every hot path in demo_gauge.kernels exists in both implementations; this
script runs each on a representative workload, reports best-of-N wall times,
and cross-checks that the two backends agree numerically.  The numba side is
called once before timing so JIT compilation stays out of the numbers.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --samples 20000 --repeats 9
"""

import argparse
import time

import numpy as np

from demo_gauge.kernels import resolve_backend
from demo_gauge.metrics import LegibilityConfig
from demo_gauge.synthetic import default_model


def build_workloads(samples: int, sets: int, seed: int):
    """Return {kernel_name: args tuple} sized for a noticeable runtime."""
    rng = np.random.default_rng(seed)
    model = default_model(dof=7)
    a, alpha, d, off = model.dh_arrays()
    base = model.base_pose.matrix()
    tool = model.tool_transform.matrix()

    lo, hi = model.q_lower, model.q_upper
    Q = lo + (hi - lo) * rng.uniform(0.1, 0.9, size=(samples, 7))

    # jacobians for the manipulability workload, from either backend (equal)
    impl, _ = resolve_backend("numpy")
    J = impl.jacobian_series(a, alpha, d, off, base, tool, Q)

    pts = np.cumsum(rng.normal(scale=0.01, size=(samples, 3)), axis=0)
    goals = rng.uniform(-1.0, 1.0, size=(4, 3))
    leg = LegibilityConfig()

    X = rng.normal(size=(sets, 10))
    X[: sets // 2] += 3.0
    C0 = np.ascontiguousarray(X[:2])

    return {
        "fk_series": (a, alpha, d, off, base, tool, Q),
        "jacobian_series": (a, alpha, d, off, base, tool, Q),
        "manipulability_series": (J, np.arange(6, dtype=np.int64)),
        "limit_clearance_series": (Q, lo, hi),
        "legibility_entropies": (
            pts,
            goals,
            leg.weight_early,
            leg.weight_progress,
            leg.early_fraction,
            leg.temperature,
            leg.eps,
        ),
        "lloyd": (X, C0, 300, 0.0),
    }


def best_of(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def flatten(result):
    if isinstance(result, tuple):
        return [np.asarray(r, dtype=float) for r in result]
    return [np.asarray(result, dtype=float)]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=8000, help="trajectory samples (default 8000)")
    ap.add_argument("--sets", type=int, default=512, help="rows for the k-means workload")
    ap.add_argument("--repeats", type=int, default=5, help="timing repeats, best is kept")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    np_impl, _ = resolve_backend("numpy")
    try:
        nb_impl, _ = resolve_backend("numba")
    except ImportError:
        nb_impl = None
        print("numba not importable; timing the numpy backend only\n")

    work = build_workloads(args.samples, args.sets, args.seed)

    print(f"{args.samples} samples, {args.sets} k-means rows, best of {args.repeats}\n")
    header = f"{'kernel':<24}{'numpy':>10}{'numba':>10}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, wargs in work.items():
        np_fn = getattr(np_impl, name)
        t_np = best_of(np_fn, wargs, args.repeats)
        if nb_impl is None:
            print(f"{name:<24}{t_np * 1e3:>8.2f}ms{'-':>10}{'-':>9}")
            continue
        nb_fn = getattr(nb_impl, name)
        nb_fn(*wargs)  # compile
        t_nb = best_of(nb_fn, wargs, args.repeats)
        for got, want in zip(flatten(nb_fn(*wargs)), flatten(np_fn(*wargs))):
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-12)
        print(f"{name:<24}{t_np * 1e3:>8.2f}ms{t_nb * 1e3:>8.2f}ms{t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
