"""Constructive lower bounds: fooling functions that vanish at sample points.

Given any finite point set, pick the dyadic level just fine enough that
cells outnumber points, place one compactly supported tensor B-spline
bump in every cell no point touches, and normalize the sum by an
estimate of its smoothness-class gauge.  Any recovery map fed those
points reconstructs the zero function, so the derivative norm of the
normalized sum bounds the worst-case recovery error from below.

Bumps are squeezed into single open cells, so both the function and all
its tracked derivatives are exactly zero at every sample point and on
every cell boundary (the spline tables have no constant term on their
first piece, so the float evaluation is exact there).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor

import numpy as np

from .bspline import MAX_ORDER, bspline_eval
from .domain import MTypeDomain
from .indexkit import RecoveryParams
from .recovery import ErrorEstimate, QuadSpec, lq_error
from .smoothness import seminorm_estimate

__all__ = [
    "FoolingFunction",
    "FoolingResult",
    "choose_level",
    "find_empty_cells",
    "build_fooling",
]


def choose_level(n: int, params: RecoveryParams) -> tuple[int, tuple[int, ...]]:
    """Level budget and its balanced split over the critical axes.

    Returns ``r`` with ``2**(r-1) < 2n <= 2**r`` and the level vector
    ``kappa_star`` supported on the argmin axes, entries differing by at
    most one, earlier axes taking the remainder.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    r = (2 * n - 1).bit_length()
    jset = params.jset
    base, rem = divmod(r, len(jset))
    kappa = [0] * params.d
    for i, j in enumerate(jset):
        kappa[j] = base + (1 if i < rem else 0)
    return r, tuple(kappa)


def find_empty_cells(
    points, kappa_star: tuple[int, ...], dom: MTypeDomain
) -> list[tuple[int, ...]]:
    """Cells inside the domain whose open interior contains no point.

    Membership is decided in exact rational arithmetic; a point lying on
    a cell boundary occupies no open cell at this level.
    """
    occupied: set[tuple[int, ...]] = set()
    for p in points:
        cell = []
        for x, k in zip(p, kappa_star):
            t = Fraction(x) * (1 << k)
            f = floor(t)
            if f == t:
                cell = None
                break
            cell.append(f)
        if cell is not None:
            occupied.add(tuple(cell))
    return [nu for nu in dom.inside_cells(kappa_star) if nu not in occupied]


@dataclass(eq=False)
class FoolingFunction:
    """Sum of equal-coefficient single-cell bumps, gauge-normalized.

    Each bump is ``prod_j psi^{m'_j}((m'_j + 1) (2^{kappa*_j} x_j - nu_j))``
    with ``m' = m + lam + 1`` per axis, supported exactly on the open
    cell ``nu``.  ``u`` is the raw coefficient; evaluation divides by the
    recorded ``gauge`` so the function sits on the class boundary.
    """

    dom: MTypeDomain
    kappa_star: tuple[int, ...]
    cells: list[tuple[int, ...]]
    order: tuple[int, ...]
    u: float
    gauge: float

    def __post_init__(self):
        d = self.dom.d
        dims = tuple(self.dom.width << k for k in self.kappa_star)
        strides = [1] * d
        for j in range(d - 2, -1, -1):
            strides[j] = strides[j + 1] * dims[j + 1]
        mask = np.zeros(int(np.prod(dims)), dtype=bool)
        for nu in self.cells:
            mask[sum(v * s for v, s in zip(nu, strides))] = True
        self._dims = np.asarray(dims, dtype=np.int64)
        self._strides = np.asarray(strides, dtype=np.int64)
        self._mask = mask

    def _eval(self, lam: tuple[int, ...], x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        d = self.dom.d
        out = np.ones(pts.shape[0])
        nu = np.empty(pts.shape, dtype=np.int64)
        for j in range(d):
            t = np.ldexp(pts[:, j], self.kappa_star[j])
            nu_j = np.floor(t).astype(np.int64)
            np.clip(nu_j, 0, self._dims[j] - 1, out=nu_j)
            nu[:, j] = nu_j
            mj = self.order[j]
            s = (mj + 1.0) * (t - nu_j)
            factor = ((mj + 1.0) * float(1 << self.kappa_star[j])) ** lam[j]
            out *= factor * bspline_eval(mj, s, deriv=lam[j])
        flat = (nu * self._strides).sum(axis=1)
        ok = (
            np.all(pts >= 0.0, axis=1)
            & np.all(pts < float(self.dom.width), axis=1)
            & self._mask[flat]
        )
        out = np.where(ok, out * (self.u / self.gauge), 0.0)
        if np.asarray(x).ndim == 1:
            return float(out[0])
        return out

    def value(self, x) -> np.ndarray:
        """Normalized fooling function values."""
        return self._eval((0,) * self.dom.d, x)

    def deriv(self, lam):
        """Callable for the exact mixed derivative ``D^lam``."""
        lam = tuple(int(v) for v in lam)
        if any(lj > mj for lj, mj in zip(lam, self.order)):
            raise ValueError("derivative order exceeds the bump spline order")
        return lambda x: self._eval(lam, x)

    def max_abs_at(self, points) -> float:
        """Largest |f| over the given points; zero certifies vanishing."""
        vals = self.value(np.atleast_2d(np.asarray(points, dtype=np.float64)))
        return float(np.abs(vals).max()) if vals.size else 0.0


@dataclass(frozen=True)
class FoolingResult:
    """Outcome of a fooling construction against one point set."""

    function: FoolingFunction | None
    lower_bound: float
    r: int
    kappa_star: tuple[int, ...]
    n_points: int
    empty_cells: int
    gauge: float
    seed: int
    message: str
    estimate: ErrorEstimate | None = None


def build_fooling(
    points,
    params: RecoveryParams,
    dom: MTypeDomain,
    imax: int | None = None,
    mc_n: int = 3000,
    seed: int = 0,
    quad: QuadSpec | None = None,
) -> FoolingResult:
    """Build the normalized fooling function for a point set.

    Coefficients follow the critical single-level profile
    ``u = 2**-(kappa*, alpha) * 2**((kappa*, 1)/p)``; the gauge is the
    estimated class seminorm of the raw sum, and the reported lower
    bound is ``|D^lam (sum/gauge)|_q`` from the error quadrature (Monte
    Carlo by default: bump cells are far below any affordable panel
    size).  With no empty cell the result records that no fooling is
    possible at this level.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = pts.shape[0]
    r, kappa_star = choose_level(n, params)
    empty = find_empty_cells(points, kappa_star, dom)
    if not empty:
        return FoolingResult(
            function=None,
            lower_bound=0.0,
            r=r,
            kappa_star=kappa_star,
            n_points=n,
            empty_cells=0,
            gauge=float("nan"),
            seed=seed,
            message="no fooling possible at this level",
        )
    order = tuple(mj + lj + 1 for mj, lj in zip(params.m, params.lam))
    if any(o > MAX_ORDER for o in order):
        raise ValueError(
            "bump spline order m + lam + 1 exceeds the supported maximum of 8"
        )
    ka = sum(k * a for k, a in zip(kappa_star, params.alpha))
    k1 = sum(kappa_star)
    u = 2.0**-ka * 2.0 ** (k1 / params.p)
    raw = FoolingFunction(
        dom=dom, kappa_star=kappa_star, cells=empty, order=order, u=u, gauge=1.0
    )
    if imax is None:
        imax = min(max(kappa_star) + 2, 16)
    gauge = seminorm_estimate(raw.value, params, dom, imax=imax, mc_n=mc_n, seed=seed)
    if not (gauge > 0.0):
        return FoolingResult(
            function=None,
            lower_bound=0.0,
            r=r,
            kappa_star=kappa_star,
            n_points=n,
            empty_cells=len(empty),
            gauge=gauge,
            seed=seed,
            message="gauge estimate vanished; cannot normalize",
        )
    fool = FoolingFunction(
        dom=dom, kappa_star=kappa_star, cells=empty, order=order, u=u, gauge=gauge
    )
    if quad is None:
        quad = QuadSpec(mode="montecarlo", N=200_000, seed=seed, q=params.q)
    est = lq_error(None, fool.deriv(params.lam), quad, dom, lam=params.lam)
    return FoolingResult(
        function=fool,
        lower_bound=est.error,
        r=r,
        kappa_star=kappa_star,
        n_points=n,
        empty_cells=len(empty),
        gauge=gauge,
        seed=seed,
        message="ok",
        estimate=est,
    )
