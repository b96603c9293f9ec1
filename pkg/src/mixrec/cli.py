"""Command-line front end: plans, recovery runs, sweeps, lower bounds, self-tests.

Commands read ``key = value`` config files, with flags overriding file
values (keys and flag names coincide).  All outputs are deterministic
under fixed seeds: CSV bodies are written with ``\\n`` newlines and
shortest round-trip float formatting, so reruns are byte-identical
regardless of thread count.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from itertools import product
from math import inf

import numpy as np

from . import _kernels
from .adversarial import build_fooling
from .bspline import bspline_eval
from .domain import make_domain
from .indexkit import RecoveryParams, derive_rate_params, refinement_coeff
from .multiscale import prolong_H, quasi_interp_R, telescoped_V
from .polylag import interpolate_cell, nodes_float, poly_eval
from .recovery import (
    QuadSpec,
    build_sample_plan,
    convergence_sweep,
    get_function,
    lq_error,
    recover,
)

__all__ = ["main", "cmd_selftest", "cmd_plan", "cmd_recover", "cmd_sweep", "cmd_adversarial"]


# -- formatting -------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: str, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _summary(params: RecoveryParams, extra: str = "") -> str:
    line = (
        f"mrate={params.mrate!r} crate={params.crate} "
        f"beta=({', '.join(repr(b) for b in params.beta)}) logexp={params.logexp!r}"
    )
    return line + (" " + extra if extra else "")


# -- configuration ----------------------------------------------------------


def _read_config(path: str) -> dict[str, str]:
    conf: dict[str, str] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw.strip()!r}")
            key, _, value = line.partition("=")
            conf[key.strip()] = value.strip()
    return conf


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(inf) if t.strip() == "inf" else float(t) for t in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(","))


def _scalar(text: str) -> float:
    return inf if text.strip() == "inf" else float(text)


def _merged(args: argparse.Namespace, key: str, default=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    conf = getattr(args, "_config", {})
    if key in conf:
        return conf[key]
    return default


def _build_params(args: argparse.Namespace) -> RecoveryParams:
    d = _merged(args, "d")
    if d is None:
        raise ValueError("missing required option: d")
    d = int(d)
    alpha = _merged(args, "alpha")
    if alpha is None:
        raise ValueError("missing required option: alpha")
    alpha = _floats(alpha) if isinstance(alpha, str) else alpha
    p = _scalar(str(_merged(args, "p", 2.0)))
    q = _scalar(str(_merged(args, "q", 2.0)))
    theta = _scalar(str(_merged(args, "theta", inf)))
    lam_raw = getattr(args, "lam", None)
    if lam_raw is None:
        lam_raw = getattr(args, "_config", {}).get("lambda", ",".join(["0"] * d))
    lam = _ints(lam_raw) if isinstance(lam_raw, str) else lam_raw
    m_raw = _merged(args, "m")
    m = _ints(m_raw) if isinstance(m_raw, str) else m_raw
    return derive_rate_params(d=d, alpha=alpha, p=p, theta=theta, q=q, lam=lam, m=m)


def _build_domain(args: argparse.Namespace, params: RecoveryParams):
    kind = str(_merged(args, "domain", "cube"))
    return make_domain(kind, params.d, params.m)


def _quad_from(args: argparse.Namespace, params: RecoveryParams, r: int) -> QuadSpec:
    mode = str(_merged(args, "quad", "auto"))
    seed = int(_merged(args, "seed", 0))
    G = int(_merged(args, "G", 3))
    N = int(_merged(args, "N", 200_000))
    L_raw = _merged(args, "L")
    if mode == "auto":
        mode = "panels" if params.d <= 2 else "montecarlo"
    if mode == "panels":
        L = int(L_raw) if L_raw is not None else r + 2
        return QuadSpec(mode="panels", L=L, G=G, q=params.q, seed=seed)
    return QuadSpec(mode="montecarlo", N=N, q=params.q, seed=seed)


# -- selftest ---------------------------------------------------------------


def _check_refinement() -> float:
    rng = np.random.default_rng(7)
    fault = os.environ.get("MIXREC_SELFTEST_FAULT", "") == "refinement"
    worst = 0.0
    for m in range(1, 5):
        x = rng.uniform(-1.0, m + 2.0, size=250)
        lhs = bspline_eval(m, x)
        rhs = np.zeros_like(x)
        for mu in range(m + 2):
            w = float(refinement_coeff(m, mu))
            if fault and mu == 0:
                w += 2.0**-10
            rhs += w * bspline_eval(m, 2.0 * x - mu)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def _check_coefficient_sums() -> float:
    for m in range(1, 9):
        for parity in (0, 1):
            s = sum(refinement_coeff(m, mu) for mu in range(parity, m + 2, 2))
            if s != 1:
                return 1.0
    return 0.0


def _check_partition_of_unity() -> float:
    rng = np.random.default_rng(11)
    worst = 0.0
    for kappa, m in (((2,), (3,)), ((2, 1), (3, 2))):
        d = len(kappa)
        x = rng.uniform(0.0, 1.0, size=(200, d))
        total = np.zeros(x.shape[0])
        base = [np.floor(np.ldexp(x[:, j], kappa[j])).astype(int) for j in range(d)]
        for offs in product(*(range(-(mj), 1) for mj in m)):
            term = np.ones(x.shape[0])
            for j in range(d):
                t = np.ldexp(x[:, j], kappa[j]) - (base[j] + offs[j])
                term *= bspline_eval(m[j], t)
            total += term
        worst = max(worst, float(np.abs(total - 1.0).max()))
    return worst


def _check_duality() -> float:
    worst = 0.0
    for l in range(1, 5):
        nodes = nodes_float(l)
        V = np.vander(nodes, l, increasing=True)
        anchor = (Fraction(0),)
        scale = (Fraction(1),)
        for col in range(l):
            vals = V[:, col]
            poly = interpolate_cell(anchor, scale, vals)
            coeffs = np.zeros(l)
            coeffs[: poly.coeffs.shape[0]] = poly.coeffs
            target = np.zeros(l)
            target[col] = 1.0
            worst = max(worst, float(np.abs(coeffs - target).max()))
    return worst


def _check_reproduction() -> float:
    rng = np.random.default_rng(13)
    worst = 0.0
    for d, l in ((1, (3,)), (2, (3, 2))):
        anchor = tuple(Fraction(0) for _ in range(d))
        scale = tuple(Fraction(1, 2) for _ in range(d))
        coeffs = rng.standard_normal(l)
        nodes_axes = [nodes_float(lj) for lj in l]
        grids = np.meshgrid(*nodes_axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        pts = pts * np.array([float(s) for s in scale]) + np.array(
            [float(a) for a in anchor]
        )
        ref = np.zeros(pts.shape[0])
        for idx in product(*(range(lj) for lj in l)):
            term = coeffs[idx] * np.ones(pts.shape[0])
            for j in range(d):
                local = (pts[:, j] - float(anchor[j])) / float(scale[j])
                term *= local ** idx[j]
            ref += term
        poly = interpolate_cell(anchor, scale, ref.reshape(l))
        x = rng.uniform(0.0, 0.5, size=(50, d))
        direct = np.zeros(x.shape[0])
        for idx in product(*(range(lj) for lj in l)):
            term = coeffs[idx] * np.ones(x.shape[0])
            for j in range(d):
                local = (x[:, j] - float(anchor[j])) / float(scale[j])
                term *= local ** idx[j]
            direct += term
        worst = max(worst, float(np.abs(poly_eval(poly, x) - direct).max()))
    return worst


def _check_prolongation() -> float:
    rng = np.random.default_rng(17)
    dom = make_domain("cube", 2, (2, 2))
    params = derive_rate_params(
        d=2, alpha=(2.0, 2.0), p=2.0, theta=inf, q=2.0, lam=(0, 0), m=(2, 2)
    )

    def f(x):
        x = np.atleast_2d(x)
        return np.sin(2.0 * x[:, 0]) + x[:, 1] ** 2

    worst = 0.0
    layer = quasi_interp_R(dom, (1, 1), f, params.l)
    x = rng.uniform(0.05, 0.95, size=(100, 2))
    base = layer.eval_deriv((0, 0), x)
    for eps in ((0, 1), (1, 0), (1, 1)):
        fine = prolong_H(layer, eps)
        worst = max(worst, float(np.abs(fine.eval_deriv((0, 0), x) - base).max()))
    return worst


def _check_telescoping() -> float:
    dom = make_domain("cube", 2, (3, 3))
    params = derive_rate_params(
        d=2, alpha=(2.0, 2.0), p=2.0, theta=inf, q=2.0, lam=(0, 0), m=(3, 3)
    )

    def f(x):
        x = np.atleast_2d(x)
        return 1.0 + x[:, 0] ** 2 - 0.5 * x[:, 0] * x[:, 1] ** 2

    rng = np.random.default_rng(19)
    worst = 0.0
    for kappa in ((1, 0), (1, 1), (2, 1)):
        for nu in list(dom.enumerate_N(kappa))[:6]:
            poly = telescoped_V(dom, kappa, nu, f, params.l)
            anchor = np.array([float(a) for a in poly.anchor])
            scale = np.array([float(s) for s in poly.scale])
            local = anchor + scale * rng.uniform(0.0, 1.0, size=(20, 2))
            worst = max(worst, float(np.abs(poly_eval(poly, local)).max()))
    return worst


def _check_domains() -> float:
    for kind in ("cube", "lshape"):
        dom = make_domain(kind, 2, (2, 2))
        report = dom.validate_mtype(3)
        if not report.ok:
            return 1.0
    return 0.0


_SELFTEST_CHECKS = [
    ("refinement identity", _check_refinement, 1e-12),
    ("coefficient sums", _check_coefficient_sums, 0.5),
    ("partition of unity", _check_partition_of_unity, 1e-12),
    ("interpolation duality", _check_duality, 1e-12),
    ("polynomial reproduction", _check_reproduction, 1e-10),
    ("prolongation identity", _check_prolongation, 1e-11),
    ("telescoping nullity", _check_telescoping, 1e-9),
    ("domain validation", _check_domains, 0.5),
]


def cmd_selftest(args: argparse.Namespace) -> int:
    for name, check, tol in _SELFTEST_CHECKS:
        residual = check()
        if residual > tol:
            print(f"FAIL {name}: max residual {residual:.3e} exceeds {tol:.1e}")
            return 1
        print(f"ok {name}: max residual {residual:.3e}")
    print("selftest passed")
    return 0


# -- pipeline commands ------------------------------------------------------


def cmd_plan(args: argparse.Namespace) -> int:
    params = _build_params(args)
    dom = _build_domain(args, params)
    r = int(_merged(args, "r", 3))
    plan = build_sample_plan(dom, params, r)
    out = str(_merged(args, "out", "plan.csv"))
    header = [f"x{j + 1}" for j in range(params.d)]
    rows = [tuple(float(c) for c in p) for p in plan.points]
    _write_csv(out, header, rows)
    print(_summary(params, f"r={r} n={plan.n} out={out}"))
    return 0


def cmd_recover(args: argparse.Namespace) -> int:
    params = _build_params(args)
    dom = _build_domain(args, params)
    r = int(_merged(args, "r", 3))
    fn = get_function(str(_merged(args, "function", "prod_sin")), params.d)
    plan = build_sample_plan(dom, params, r)
    rec = recover(dom, params, plan, fn.value)
    quad = _quad_from(args, params, r)
    est = lq_error(rec, fn.deriv(params.lam), quad, dom)
    out = str(_merged(args, "out", "recover.csv"))
    _write_csv(
        out,
        ["r", "n", "error", "stderr", "quad_mode", "seed"],
        [(r, plan.n, est.error, est.stderr, est.mode, quad.seed)],
    )
    if est.warning:
        print(f"warning: {est.warning}")
    print(_summary(params, f"r={r} n={plan.n} error={est.error!r} out={out}"))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    params = _build_params(args)
    dom = _build_domain(args, params)
    rmin = int(_merged(args, "rmin", 3))
    rmax = int(_merged(args, "rmax", 6))
    if rmax < rmin:
        raise ValueError("rmax must be at least rmin")
    mode = str(_merged(args, "quad", "auto"))
    if mode == "auto":
        quad = None
    else:
        quad = _quad_from(args, params, rmin)
        if quad.mode == "panels" and _merged(args, "L") is None:
            quad = QuadSpec(mode="panels", L=None, G=quad.G, q=quad.q, seed=quad.seed)
    fn = get_function(str(_merged(args, "function", "prod_sin")), params.d)
    rows = convergence_sweep(dom, params, range(rmin, rmax + 1), fn, quad)
    out = str(_merged(args, "out", "sweep.csv"))
    _write_csv(
        out,
        ["r", "n", "error", "stderr", "quad_mode", "seed"],
        [(w.r, w.n, w.error, w.stderr, w.quad_mode, w.seed) for w in rows],
    )
    print(_summary(params, f"rows={len(rows)} out={out}"))
    return 0


def _read_points_csv(path: str) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    data = [tuple(float(v) for v in ln.split(",")) for ln in lines[1:]]
    return np.asarray(data, dtype=np.float64)


def cmd_adversarial(args: argparse.Namespace) -> int:
    params = _build_params(args)
    dom = _build_domain(args, params)
    seed = int(_merged(args, "seed", 0))
    gauge_n = int(_merged(args, "gauge-n", 3000))
    points_path = _merged(args, "points")
    rows = []
    if points_path is not None:
        pts = _read_points_csv(str(points_path))
        result = build_fooling(pts, params, dom, mc_n=gauge_n, seed=seed)
        rows.append(result)
    else:
        rmin = int(_merged(args, "rmin", 3))
        rmax = int(_merged(args, "rmax", 6))
        for r in range(rmin, rmax + 1):
            plan = build_sample_plan(dom, params, r)
            rows.append(build_fooling(plan.points, params, dom, mc_n=gauge_n, seed=seed))
    out = str(_merged(args, "out", "adversarial.csv"))
    _write_csv(
        out,
        ["r", "n", "empty_cells", "gauge", "lower_bound", "seed"],
        [
            (w.r, w.n_points, w.empty_cells, w.gauge, w.lower_bound, w.seed)
            for w in rows
        ],
    )
    for w in rows:
        if w.message != "ok":
            print(f"note: r={w.r}: {w.message}")
    print(_summary(params, f"rows={len(rows)} out={out}"))
    return 0


# -- entry point ------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value config file")
    sub.add_argument("--d", type=int)
    sub.add_argument("--alpha", help="comma list, e.g. 2,2")
    sub.add_argument("--p")
    sub.add_argument("--q")
    sub.add_argument("--theta", help="real or literal inf")
    sub.add_argument("--lambda", dest="lam", help="comma list of derivative orders")
    sub.add_argument("--m", help="comma list of spline orders")
    sub.add_argument("--domain", choices=("cube", "lshape"))
    sub.add_argument("--threads", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mixrec",
        description="Mixed-derivative recovery from point samples: plans, sweeps, lower bounds.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    subs.add_parser("selftest", help="run the built-in identity checks")

    sp = subs.add_parser("plan", help="emit the sample points for one level")
    _add_common(sp)
    sp.add_argument("--r", type=int)

    sr = subs.add_parser("recover", help="recover one registry function and report the error")
    _add_common(sr)
    sr.add_argument("--r", type=int)
    sr.add_argument("--function")
    sr.add_argument("--quad", choices=("auto", "panels", "montecarlo"))
    sr.add_argument("--L", type=int)
    sr.add_argument("--G", type=int)
    sr.add_argument("--N", type=int)

    sw = subs.add_parser("sweep", help="convergence sweep over a range of levels")
    _add_common(sw)
    sw.add_argument("--rmin", type=int)
    sw.add_argument("--rmax", type=int)
    sw.add_argument("--function")
    sw.add_argument("--quad", choices=("auto", "panels", "montecarlo"))
    sw.add_argument("--L", type=int)
    sw.add_argument("--G", type=int)
    sw.add_argument("--N", type=int)

    sa = subs.add_parser("adversarial", help="lower bounds from fooling functions")
    _add_common(sa)
    sa.add_argument("--points", help="CSV of sample points (header x1,...,xd)")
    sa.add_argument("--rmin", type=int)
    sa.add_argument("--rmax", type=int)
    sa.add_argument("--gauge-n", dest="gauge_n", type=int)

    args = parser.parse_args(argv)

    if args.command == "selftest":
        return cmd_selftest(args)

    try:
        if getattr(args, "config", None):
            args._config = _read_config(args.config)
        else:
            args._config = {}
        threads = getattr(args, "threads", None)
        if threads is None and os.environ.get("MIXREC_THREADS"):
            threads = int(os.environ["MIXREC_THREADS"])
        if threads is not None:
            _kernels.set_threads(int(threads))
        handler = {
            "plan": cmd_plan,
            "recover": cmd_recover,
            "sweep": cmd_sweep,
            "adversarial": cmd_adversarial,
        }[args.command]
        return handler(args)
    except (ValueError, OSError) as exc:
        parser.exit(2, f"{parser.prog}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
