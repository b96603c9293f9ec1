"""Compare the compiled and fallback evaluation backends.

Runs the same reconstruction workload once per backend in a subprocess
(the backend is fixed at import time by ``MIXREC_BACKEND``), reports
build and evaluation timings, and checks that both backends return
identical values.

Usage::

    python3 benchmarks/bench_backends.py [--r 6] [--points 200000]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
from math import inf
from time import perf_counter


def run_worker(backend: str, r: int, n_points: int, out: str) -> None:
    env = dict(os.environ, MIXREC_BACKEND=backend)
    cmd = [
        sys.executable, os.path.abspath(__file__),
        "--worker", "--r", str(r), "--points", str(n_points), "--out", out,
    ]
    subprocess.run(cmd, check=True, env=env)


def worker(r: int, n_points: int, out: str) -> None:
    import numpy as np

    from mixrec._kernels import active_backend
    from mixrec.domain import make_domain
    from mixrec.indexkit import derive_rate_params
    from mixrec.multiscale import build_reconstruction
    from mixrec.recovery import get_function

    params = derive_rate_params(2, (2.0, 2.0), 2.0, inf, 2.0, (0, 0), (3, 3))
    dom = make_domain("cube", 2, (3, 3))
    fn = get_function("prod_sin", 2)

    t0 = perf_counter()
    rec = build_reconstruction(dom, params, r, fn.value)
    build_s = perf_counter() - t0

    rng = np.random.default_rng(42)
    pts = rng.uniform(0.0, 1.0, size=(n_points, 2))
    rec.eval_deriv((0, 0), pts[:64])  # warm-up triggers any JIT compilation
    rec.eval_deriv((1, 1), pts[:64])

    timings = {}
    values = {}
    for lam in ((0, 0), (1, 1)):
        best = inf
        for _ in range(3):
            t0 = perf_counter()
            vals = rec.eval_deriv(lam, pts)
            best = min(best, perf_counter() - t0)
        timings[lam] = best
        values[lam] = vals

    np.savez(
        out,
        backend=active_backend(),
        build_s=build_s,
        eval_value_s=timings[(0, 0)],
        eval_deriv_s=timings[(1, 1)],
        value=values[(0, 0)],
        deriv=values[(1, 1)],
    )


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=int, default=6, help="reconstruction level")
    ap.add_argument("--points", type=int, default=200_000, help="evaluation batch size")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    ap.add_argument("--out", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        worker(args.r, args.points, args.out)
        return 0

    import numpy as np

    results = {}
    with tempfile.TemporaryDirectory() as tmp:
        for backend in ("numba", "numpy"):
            out = os.path.join(tmp, f"{backend}.npz")
            run_worker(backend, args.r, args.points, out)
            results[backend] = np.load(out)

    print(f"reconstruction r={args.r}, prod_sin, {args.points} evaluation points")
    print(f"{'backend':<8} {'active':<8} {'build (s)':>10} {'value (s)':>10} "
          f"{'deriv (s)':>10} {'value pts/s':>12}")
    for backend, data in results.items():
        rate = args.points / float(data["eval_value_s"])
        print(f"{backend:<8} {str(data['backend']):<8} {float(data['build_s']):>10.3f} "
              f"{float(data['eval_value_s']):>10.4f} {float(data['eval_deriv_s']):>10.4f} "
              f"{rate:>12.0f}")

    diff_value = float(np.abs(results["numba"]["value"] - results["numpy"]["value"]).max())
    diff_deriv = float(np.abs(results["numba"]["deriv"] - results["numpy"]["deriv"]).max())
    print(f"max |numba - numpy|: value {diff_value:.3e}, deriv {diff_deriv:.3e}")
    if diff_value > 1e-12 or diff_deriv > 1e-9:
        print("BACKEND MISMATCH")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
