"""Sample plans, end-to-end recovery, error quadrature, and rate fitting.

The pipeline splits the recovery operator into the information map
(evaluate the oracle at the plan's points, nothing else) and the
reconstruction map (assemble the telescoped layers from those values
alone).  A plan enumerates every sub-cell referenced by the operator
over the hyperbolic cross and deduplicates the tensor nodes globally,
so the number of distinct oracle evaluations equals the plan size.

Error measurement offers composite tensor Gauss quadrature on dyadic
panels (exact panel classification against the domain) and seeded Monte
Carlo with standard errors; ``fit_rate`` extracts empirical decay
exponents from sweep tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isinf, pi
from typing import Callable

import numpy as np

from .domain import MTypeDomain
from .indexkit import RecoveryParams, child_maps, hyperbolic_cross, support_subsets
from .bspline import MAX_ORDER, bspline_eval
from .multiscale import (
    Reconstruction,
    _build_from_source,
    _InterpSource,
    cell_nodes,
)

__all__ = [
    "SamplePlan",
    "QuadSpec",
    "ErrorEstimate",
    "SweepRow",
    "RateFit",
    "RegistryFunction",
    "build_sample_plan",
    "recover",
    "lq_error",
    "default_quad",
    "convergence_sweep",
    "fit_rate",
    "get_function",
]


@dataclass(eq=False)
class SamplePlan:
    """Deduplicated sample points plus per-cell node references.

    ``refs`` maps every referenced ``(level, cell)`` pair to the tensor
    of indices (shape ``l``) of its nodes inside ``points``; the cell
    reached from a cross term ``(kappa, nu, eps, offset)`` is recovered
    through the same selection maps the operator uses, so the per-term
    association resolves through this table.
    """

    r: int
    cross: list[tuple[int, ...]]
    points: np.ndarray
    points_exact: list[tuple[Fraction, ...]]
    refs: dict[tuple[tuple[int, ...], tuple[int, ...]], np.ndarray] = field(repr=False)
    l: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.points.shape[0]

    def cell_ref(self, level: tuple[int, ...], cell: tuple[int, ...]) -> np.ndarray:
        """Node indices of one referenced cell, shape ``l``."""
        try:
            return self.refs[(level, cell)]
        except KeyError:
            raise KeyError(
                f"plan does not cover cell {cell} at level {level}"
            ) from None


def _referenced_cells(dom: MTypeDomain, params: RecoveryParams, r: int):
    """Yield every (level, selected cell) pair the operator interpolates on.

    Iteration order is deterministic: levels in lexicographic cross
    order, indices lexicographically, coarsening patterns by ascending
    bitmask, offsets lexicographically.  Duplicates are yielded; the
    caller deduplicates.
    """
    cross = hyperbolic_cross(params.beta, r)
    for kappa in cross:
        for nu in dom.enumerate_N(kappa):
            for eps in support_subsets(kappa):
                level_c = tuple(k - e for k, e in zip(kappa, eps))
                for _offsets, parent, _w in child_maps(nu, dom.m, eps):
                    yield level_c, dom.cell_map_nu(level_c, parent)


def build_sample_plan(dom: MTypeDomain, params: RecoveryParams, r: int) -> SamplePlan:
    """Enumerate and deduplicate all tensor nodes the operator reads.

    Nodes are compared as exact rationals; distinct cells at one level
    have disjoint open cells and nodes of different levels differ by the
    parity of their reduced numerators, so deduplication only merges
    repeat visits to the same cell.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    l = params.l
    index_of: dict[tuple[Fraction, ...], int] = {}
    exact_points: list[tuple[Fraction, ...]] = []
    refs: dict[tuple[tuple[int, ...], tuple[int, ...]], np.ndarray] = {}
    for level, cell in _referenced_cells(dom, params, r):
        key = (level, cell)
        if key in refs:
            continue
        exact, _pts = cell_nodes(level, cell, l)
        idx = np.empty(len(exact), dtype=np.int64)
        for i, node in enumerate(exact):
            j = index_of.get(node)
            if j is None:
                j = len(exact_points)
                index_of[node] = j
                exact_points.append(node)
            idx[i] = j
        refs[key] = idx.reshape(l)
    pts = np.array([[float(c) for c in p] for p in exact_points], dtype=np.float64)
    cross = hyperbolic_cross(params.beta, r)
    return SamplePlan(
        r=r, cross=cross, points=pts, points_exact=exact_points, refs=refs, l=l
    )


def recover(dom: MTypeDomain, params: RecoveryParams, plan: SamplePlan, f) -> Reconstruction:
    """Run the full recovery operator from one batched oracle call.

    The oracle is evaluated exactly once, on ``plan.points``; assembly
    consumes only those values (linearly), so the result is a function
    of the information map alone.
    """
    pts = plan.points
    try:
        values = np.asarray(f(pts), dtype=np.float64).reshape(-1)
    except Exception as exc:
        for i in range(pts.shape[0]):
            try:
                f(pts[i : i + 1])
            except Exception:
                raise RuntimeError(
                    f"oracle failed at plan point {tuple(pts[i])}"
                ) from exc
        raise
    if values.shape[0] != pts.shape[0]:
        raise ValueError(
            f"oracle returned {values.shape[0]} values for {pts.shape[0]} points"
        )
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.argmax(bad))
        raise RuntimeError(
            f"oracle returned a non-finite value at plan point {tuple(pts[i])}"
        )

    def value_fn(level, cell):
        return values[plan.cell_ref(level, cell)]

    src = _InterpSource(params.l, value_fn)
    return _build_from_source(dom, params, plan.r, src)


# -- error quadrature -----------------------------------------------------


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature request: dyadic Gauss panels or seeded Monte Carlo.

    ``L`` panels of side ``2**-L`` with ``G`` Gauss points per axis, or
    ``N`` Monte Carlo samples.  ``q`` is the error norm, in ``(1, inf)``
    or infinity.  Panel mode should satisfy ``L >= r + 1`` against a
    level-``r`` reconstruction; coarser panels trigger a warning.
    """

    mode: str = "panels"
    L: int | None = None
    G: int = 3
    N: int = 200_000
    seed: int = 0
    q: float = 2.0

    def __post_init__(self):
        if self.mode not in ("panels", "montecarlo"):
            raise ValueError("quadrature mode must be panels or montecarlo")
        if not (self.q > 1.0):
            raise ValueError("q must lie in (1, inf) or be inf")
        if self.mode == "panels" and self.G < 1:
            raise ValueError("panel mode needs at least one Gauss point per axis")
        if self.mode == "montecarlo" and self.N < 2:
            raise ValueError("montecarlo mode needs at least two samples")


@dataclass(frozen=True)
class ErrorEstimate:
    """An error norm estimate with provenance."""

    error: float
    stderr: float
    mode: str
    warning: str | None = None


def default_quad(r: int, d: int, q: float = 2.0, seed: int = 0) -> QuadSpec:
    """Default quadrature: Gauss panels in low dimension, Monte Carlo above."""
    if d <= 2:
        return QuadSpec(mode="panels", L=r + 2, G=3, q=q, seed=seed)
    return QuadSpec(mode="montecarlo", N=200_000, q=q, seed=seed)


def _iter_panels(dom: MTypeDomain, L: int, chunk: int):
    """Yield int panel-origin arrays (chunk, d) in lexicographic order."""
    per_axis = dom.width << L
    half = 1 << L
    d = dom.d
    if d > 1:
        grids = np.meshgrid(*([np.arange(per_axis)] * (d - 1)), indexing="ij")
        rest = np.stack([g.ravel() for g in grids], axis=1)
    else:
        rest = np.zeros((1, 0), dtype=np.int64)
    buf = []
    size = 0
    for v0 in range(per_axis):
        rows = np.concatenate(
            [np.full((rest.shape[0], 1), v0, dtype=np.int64), rest], axis=1
        )
        if dom.kind == "lshape":
            rows = rows[(rows + 1 <= half).any(axis=1)]
        if rows.size == 0:
            continue
        buf.append(rows)
        size += rows.shape[0]
        while size >= chunk:
            stacked = np.concatenate(buf, axis=0)
            yield stacked[:chunk]
            rem = stacked[chunk:]
            buf = [rem] if rem.size else []
            size = rem.shape[0]
    if size:
        yield np.concatenate(buf, axis=0)


def _gauss_grid(d: int, L: int, G: int):
    nodes, weights = np.polynomial.legendre.leggauss(G)
    offs_1d = (nodes + 1.0) / (1 << (L + 1))
    w_1d = weights / (1 << (L + 1))
    offs = np.stack(
        [g.ravel() for g in np.meshgrid(*([offs_1d] * d), indexing="ij")], axis=1
    )
    wts = np.ones(1)
    for _ in range(d):
        wts = np.multiply.outer(wts, w_1d).ravel()
    return offs, wts


def lq_error(
    rec: Reconstruction | None,
    reference: Callable[[np.ndarray], np.ndarray],
    quad: QuadSpec,
    dom: MTypeDomain,
    lam: tuple[int, ...] | None = None,
) -> ErrorEstimate:
    """``L_q`` norm of ``reference - D^lam rec`` over the domain.

    ``rec`` may be ``None`` to measure the reference alone.  Panel mode
    classifies panels against the domain exactly and is deterministic;
    Monte Carlo mode reports a delta-method standard error.  ``q = inf``
    takes the max over panel Gauss points plus a seeded random cloud.
    """
    if lam is None:
        lam = rec.params.lam if rec is not None else None
    d = dom.d

    def gap(pts: np.ndarray) -> np.ndarray:
        vals = np.asarray(reference(pts), dtype=np.float64)
        if rec is not None:
            vals = vals - rec.eval_deriv(lam, pts)
        return vals

    q = quad.q
    if quad.mode == "montecarlo":
        rng = np.random.default_rng(quad.seed)
        pts = rng.uniform(0.0, float(dom.width), size=(quad.N, d))
        inside = dom.contains_points_float(pts)
        vals = np.zeros(quad.N)
        if inside.any():
            vals[inside] = gap(pts[inside])
        if isinf(q):
            err = float(np.abs(vals).max())
            return ErrorEstimate(err, 0.0, "montecarlo")
        box_vol = float(dom.width) ** d
        contrib = np.where(inside, np.abs(vals) ** q, 0.0)
        mean = float(contrib.mean())
        se_mean = float(contrib.std(ddof=1) / np.sqrt(quad.N))
        integral = box_vol * mean
        err = integral ** (1.0 / q) if integral > 0 else 0.0
        se = (
            box_vol * se_mean * integral ** (1.0 / q - 1.0) / q if integral > 0 else 0.0
        )
        return ErrorEstimate(err, se, "montecarlo")

    L = quad.L if quad.L is not None else (rec.r + 2 if rec is not None else 8)
    warning = None
    if rec is not None and L <= rec.r:
        warning = (
            f"panel level {L} does not refine past the reconstruction level {rec.r}"
        )
    offs, wts = _gauss_grid(d, L, quad.G)
    chunk = max(1, 200_000 // max(1, quad.G**d))
    total = 0.0
    best = 0.0
    for panels in _iter_panels(dom, L, chunk):
        origins = panels.astype(np.float64) / (1 << L)
        pts = (origins[:, None, :] + offs[None, :, :]).reshape(-1, d)
        vals = gap(pts)
        if isinf(q):
            best = max(best, float(np.abs(vals).max()))
        else:
            per_panel = np.abs(vals).reshape(panels.shape[0], -1) ** q @ wts
            total += float(per_panel.sum())
    if isinf(q):
        rng = np.random.default_rng(quad.seed)
        cloud = rng.uniform(0.0, float(dom.width), size=(4096, d))
        cloud = cloud[dom.contains_points_float(cloud)]
        if cloud.shape[0]:
            best = max(best, float(np.abs(gap(cloud)).max()))
        return ErrorEstimate(best, 0.0, "panels", warning)
    err = total ** (1.0 / q) if total > 0 else 0.0
    return ErrorEstimate(err, 0.0, "panels", warning)


# -- sweeps and rate fitting ----------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    """One convergence-sweep measurement."""

    r: int
    n: int
    error: float
    stderr: float
    quad_mode: str
    seed: int


def convergence_sweep(
    dom: MTypeDomain,
    params: RecoveryParams,
    r_range,
    function_id,
    quad: QuadSpec | None = None,
) -> list[SweepRow]:
    """Measure the recovery error of a registry function across levels.

    For each ``r`` the plan is built, the function recovered from its
    plan points, and ``|D^lam f - D^lam(rec)|_q`` measured with the
    requested (or default) quadrature.  Deterministic given seeds.
    """
    fn = function_id if isinstance(function_id, RegistryFunction) else get_function(
        str(function_id), params.d
    )
    reference = fn.deriv(params.lam)
    rows: list[SweepRow] = []
    for r in r_range:
        plan = build_sample_plan(dom, params, int(r))
        rec = recover(dom, params, plan, fn.value)
        row_quad = quad
        if row_quad is None:
            row_quad = default_quad(int(r), params.d, q=params.q)
        elif row_quad.mode == "panels" and row_quad.L is None:
            row_quad = QuadSpec(
                mode="panels", L=int(r) + 2, G=row_quad.G, q=row_quad.q, seed=row_quad.seed
            )
        est = lq_error(rec, reference, row_quad, dom)
        rows.append(
            SweepRow(
                r=int(r),
                n=plan.n,
                error=est.error,
                stderr=est.stderr,
                quad_mode=est.mode,
                seed=row_quad.seed,
            )
        )
    return rows


@dataclass(frozen=True)
class RateFit:
    """Log-log least-squares fits of an error table.

    The free fit regresses ``ln e`` on ``ln n`` and ``ln ln n``; the
    fixed fit pins the ``ln ln n`` coefficient (default 0) and refits
    the slope.  Residuals are root mean square in log space.
    """

    slope: float
    logexp: float
    residual: float
    slope_fixed: float
    logexp_fixed: float
    residual_fixed: float


def _table_columns(table) -> tuple[np.ndarray, np.ndarray]:
    ns, es = [], []
    for row in table:
        if isinstance(row, SweepRow):
            ns.append(row.n)
            es.append(row.error)
        elif isinstance(row, dict):
            ns.append(row["n"])
            es.append(row["error"])
        else:
            seq = tuple(row)
            if len(seq) >= 3:
                ns.append(seq[1])
                es.append(seq[2])
            else:
                ns.append(seq[0])
                es.append(seq[1])
    return np.asarray(ns, dtype=np.float64), np.asarray(es, dtype=np.float64)


def fit_rate(table, logexp_fixed: float = 0.0) -> RateFit:
    """Fit ``ln e = a + s ln n + E ln ln n`` to a sweep table.

    Returns both the free fit and the fit with ``E`` pinned to
    ``logexp_fixed``.  Rows with nonpositive error are dropped; fewer
    than 4 usable rows or a rank-deficient design is an error.
    """
    ns, es = _table_columns(table)
    keep = (es > 0) & (ns > 1)
    ns, es = ns[keep], es[keep]
    if ns.size < 4:
        raise ValueError("rate fit needs at least 4 rows with positive error")
    ln_n = np.log(ns)
    ln_ln = np.log(np.log(ns))
    ln_e = np.log(es)
    A = np.stack([np.ones_like(ln_n), ln_n, ln_ln], axis=1)
    if np.linalg.matrix_rank(A) < 3:
        raise ValueError("degenerate sweep table: design matrix is rank deficient")
    coef, _, _, _ = np.linalg.lstsq(A, ln_e, rcond=None)
    res = ln_e - A @ coef
    A2 = A[:, :2]
    rhs = ln_e - logexp_fixed * ln_ln
    coef2, _, _, _ = np.linalg.lstsq(A2, rhs, rcond=None)
    res2 = rhs - A2 @ coef2
    return RateFit(
        slope=float(coef[1]),
        logexp=float(coef[2]),
        residual=float(np.sqrt(np.mean(res**2))),
        slope_fixed=float(coef2[1]),
        logexp_fixed=float(logexp_fixed),
        residual_fixed=float(np.sqrt(np.mean(res2**2))),
    )


# -- registry of test functions with closed-form mixed derivatives --------


@dataclass(frozen=True)
class RegistryFunction:
    """A test function together with its analytic mixed derivatives."""

    name: str
    d: int
    value: Callable[[np.ndarray], np.ndarray]
    deriv_factory: Callable[[tuple[int, ...]], Callable[[np.ndarray], np.ndarray]]

    def deriv(self, lam) -> Callable[[np.ndarray], np.ndarray]:
        return self.deriv_factory(tuple(int(v) for v in lam))


def _prod_sin(d: int) -> RegistryFunction:
    def make(lam):
        def fn(x):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            out = np.ones(x.shape[0])
            for j in range(d):
                out *= pi ** lam[j] * np.sin(pi * x[:, j] + lam[j] * pi / 2.0)
            return out

        return fn

    return RegistryFunction(
        name="prod_sin", d=d, value=make((0,) * d), deriv_factory=make
    )


def _poly(d: int, exps: tuple[int, ...]) -> RegistryFunction:
    def make(lam):
        if any(lj > ej for lj, ej in zip(lam, exps)):
            return lambda x: np.zeros(np.atleast_2d(x).shape[0])

        def fn(x):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            out = np.ones(x.shape[0])
            for j in range(d):
                c = 1.0
                for i in range(lam[j]):
                    c *= exps[j] - i
                out *= c * x[:, j] ** (exps[j] - lam[j])
            return out

        return fn

    name = "poly:" + ",".join(str(e) for e in exps)
    return RegistryFunction(name=name, d=d, value=make((0,) * d), deriv_factory=make)


def _gauss_bump(d: int, center: tuple[float, ...], width: float) -> RegistryFunction:
    from numpy.polynomial.hermite import hermval

    def make(lam):
        def fn(x):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            out = np.ones(x.shape[0])
            for j in range(d):
                u = (x[:, j] - center[j]) / width
                gauss = np.exp(-(u**2))
                if lam[j] == 0:
                    out *= gauss
                else:
                    herm = hermval(u, [0.0] * lam[j] + [1.0])
                    out *= (-1.0 / width) ** lam[j] * herm * gauss
            return out

        return fn

    name = f"gauss_bump:{','.join(repr(c) for c in center)},{width!r}"
    return RegistryFunction(name=name, d=d, value=make((0,) * d), deriv_factory=make)


def _tensor_bspline(
    d: int, kappa: tuple[int, ...], nu: tuple[int, ...], order: tuple[int, ...]
) -> RegistryFunction:
    def make(lam):
        def fn(x):
            x = np.atleast_2d(np.asarray(x, dtype=np.float64))
            out = np.ones(x.shape[0])
            for j in range(d):
                t = np.ldexp(x[:, j], kappa[j]) - nu[j]
                out *= float(1 << kappa[j]) ** lam[j] * bspline_eval(
                    order[j], t, deriv=lam[j]
                )
            return out

        return fn

    name = (
        "tensor_bspline:"
        + ",".join(map(str, kappa))
        + ":"
        + ",".join(map(str, nu))
        + ":"
        + ",".join(map(str, order))
    )
    return RegistryFunction(name=name, d=d, value=make((0,) * d), deriv_factory=make)


def get_function(spec: str, d: int) -> RegistryFunction:
    """Resolve a registry function id.

    Formats: ``prod_sin``; ``poly:e1,...,ed`` (monomial exponents);
    ``gauss_bump:center,width`` (scalar center broadcast, or d centers
    then a width); ``tensor_bspline:k1,..,kd:n1,..,nd:o1,..,od``.
    """
    spec = spec.strip()
    name, _, rest = spec.partition(":")
    if name == "prod_sin":
        return _prod_sin(d)
    if name == "poly":
        try:
            exps = tuple(int(v) for v in rest.split(","))
        except ValueError:
            raise ValueError(f"malformed poly exponents: {rest!r}") from None
        if len(exps) != d or any(e < 0 for e in exps):
            raise ValueError("poly needs one nonnegative exponent per axis")
        return _poly(d, exps)
    if name == "gauss_bump":
        try:
            vals = tuple(float(v) for v in rest.split(","))
        except ValueError:
            raise ValueError(f"malformed gauss_bump arguments: {rest!r}") from None
        if len(vals) == 2:
            center = (vals[0],) * d
            width = vals[1]
        elif len(vals) == d + 1:
            center = vals[:d]
            width = vals[d]
        else:
            raise ValueError("gauss_bump needs center,width or d centers and a width")
        if width <= 0:
            raise ValueError("gauss_bump width must be positive")
        return _gauss_bump(d, center, width)
    if name == "tensor_bspline":
        parts = rest.split(":")
        if len(parts) != 3:
            raise ValueError("tensor_bspline needs level:index:order groups")
        try:
            kappa = tuple(int(v) for v in parts[0].split(","))
            nu = tuple(int(v) for v in parts[1].split(","))
            order = tuple(int(v) for v in parts[2].split(","))
        except ValueError:
            raise ValueError(f"malformed tensor_bspline arguments: {rest!r}") from None
        if not (len(kappa) == len(nu) == len(order) == d):
            raise ValueError("tensor_bspline groups must each have d entries")
        if any(k < 0 for k in kappa) or any(o < 1 or o > MAX_ORDER for o in order):
            raise ValueError("tensor_bspline levels must be >= 0 and orders in [1, 8]")
        return _tensor_bspline(d, kappa, nu, order)
    raise ValueError(f"unknown registry function: {name!r}")
