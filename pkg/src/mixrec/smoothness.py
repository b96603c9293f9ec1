"""Mixed differences, moduli of smoothness, and class-gauge estimators.

The mixed difference of order ``l`` applies the one-dimensional
``l_j``-th difference along every axis in its support; it is admissible
at ``x`` only when the whole stepped box stays inside the domain.  Two
moduli are estimated: the sup modulus (largest difference norm over
shifts up to ``t``) and the averaged modulus (the ``L_p`` mean over the
shift box), which never exceeds the sup modulus.  On top of these sits
a seminorm estimator for the mixed-smoothness class gauge used to
normalize fooling functions.

All estimators are Monte Carlo or grid based, deterministic under a
fixed seed, and biased low for suprema; callers compare ratios or
orderings, never absolute constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb, isinf, log

import numpy as np

from .domain import MTypeDomain
from .indexkit import RecoveryParams

__all__ = [
    "ModulusRequest",
    "EstimateResult",
    "mixed_diff",
    "mixed_diff_batch",
    "modulus_avg",
    "modulus_sup",
    "seminorm_estimate",
]


@dataclass(frozen=True)
class ModulusRequest:
    """A modulus query: axes ``J``, difference orders ``l``, radii ``t``, norm ``p``.

    ``t`` is aligned with ``J``; axes outside ``J`` take zero shift and
    order zero.
    """

    J: tuple[int, ...]
    l: tuple[int, ...]
    t: tuple[float, ...]
    p: float

    def __post_init__(self):
        if not self.J:
            raise ValueError("J must be nonempty")
        if len(self.t) != len(self.J):
            raise ValueError("t must align with J")
        if any(v <= 0 for v in self.t):
            raise ValueError("shift radii must be positive")


@dataclass(frozen=True)
class EstimateResult:
    """Monte Carlo estimate with its standard error and rejection rate."""

    value: float
    stderr: float
    rejected: float
    n: int


def _diff_orders(l: tuple[int, ...], J: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(lj if j in J else 0 for j, lj in enumerate(l))


def mixed_diff_batch(
    f,
    l: tuple[int, ...],
    h: np.ndarray,
    x: np.ndarray,
    dom: MTypeDomain,
) -> tuple[np.ndarray, np.ndarray]:
    """Mixed differences at a batch of points and steps.

    Parameters
    ----------
    f : callable
        Oracle ``(n, d) -> (n,)``.
    l : tuple of int
        Difference orders per axis (zero skips the axis).
    h, x : ndarray
        Steps and base points, each ``(n, d)``.
    dom : MTypeDomain
        Admissibility geometry.

    Returns
    -------
    (values, valid)
        ``values[i]`` is the difference where ``valid[i]``; points whose
        stepped box leaves the domain are marked invalid and zeroed.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    total_step = h * np.asarray(l, dtype=np.float64)
    lo = np.minimum(x, x + total_step)
    hi = np.maximum(x, x + total_step)
    valid = dom.boxes_inside_float(lo, hi)
    vals = np.zeros(x.shape[0])
    if valid.any():
        xs = x[valid]
        hs = h[valid]
        acc = np.zeros(xs.shape[0])
        for k in product(*(range(lj + 1) for lj in l)):
            sign = (-1.0) ** (sum(l) - sum(k))
            w = 1.0
            for lj, kj in zip(l, k):
                w *= comb(lj, kj)
            pts = xs + hs * np.asarray(k, dtype=np.float64)
            acc += sign * w * np.asarray(f(pts), dtype=np.float64)
        vals[valid] = acc
    return vals, valid


def mixed_diff(f, l: tuple[int, ...], h, x, dom: MTypeDomain) -> float | None:
    """Single-point mixed difference; ``None`` when ``x`` is inadmissible."""
    vals, valid = mixed_diff_batch(f, l, np.asarray(h)[None, :], np.asarray(x)[None, :], dom)
    if not valid[0]:
        return None
    return float(vals[0])


def modulus_avg(
    f,
    req: ModulusRequest,
    dom: MTypeDomain,
    mc: tuple[int, int] = (4000, 0),
) -> EstimateResult:
    """Averaged modulus of smoothness, Monte Carlo over shifts and points.

    Estimates ``((2t)^{-1} int_{|xi|<=t} int_{D_xi} |Delta^l_xi f|^p)^{1/p}``
    by sampling the shift uniformly on its box and the point uniformly
    on the domain's bounding box with admissibility rejection.

    Parameters
    ----------
    mc : (N, seed)
        Sample count (at least 100) and RNG seed.
    """
    n, seed = mc
    if n < 100:
        raise ValueError("modulus_avg needs at least 100 samples")
    if isinf(req.p):
        return modulus_sup(f, req, dom, seed=seed)
    rng = np.random.default_rng(seed)
    d = dom.d
    orders = _diff_orders(req.l, req.J)
    xs = rng.uniform(0.0, float(dom.width), size=(n, d))
    hs = np.zeros((n, d))
    for t_val, j in zip(req.t, req.J):
        hs[:, j] = rng.uniform(-t_val, t_val, size=n)
    vals, valid = mixed_diff_batch(f, orders, hs, xs, dom)
    box_vol = float(dom.width) ** d
    contrib = np.where(valid, np.abs(vals) ** req.p, 0.0)
    mean = float(contrib.mean())
    se_mean = float(contrib.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    integral = box_vol * mean
    value = integral ** (1.0 / req.p) if integral > 0 else 0.0
    stderr = (
        value * se_mean / (req.p * mean) if mean > 0 else box_vol ** (1.0 / req.p) * se_mean
    )
    rejected = 1.0 - float(valid.mean())
    return EstimateResult(value=value, stderr=stderr, rejected=rejected, n=n)


def modulus_sup(
    f,
    req: ModulusRequest,
    dom: MTypeDomain,
    shifts_per_axis: int = 7,
    extra_random: int = 8,
    n_x: int = 2000,
    seed: int = 0,
) -> EstimateResult:
    """Sup modulus of smoothness over a deterministic shift family.

    Takes the maximum, over a per-axis grid of shifts up to ``t`` plus a
    few seeded random shifts, of the estimated ``L_p`` norm of the
    mixed difference.  A lower bound of the true supremum.
    """
    rng = np.random.default_rng(seed)
    d = dom.d
    orders = _diff_orders(req.l, req.J)
    xs = rng.uniform(0.0, float(dom.width), size=(n_x, d))
    box_vol = float(dom.width) ** d

    grids = []
    for t_val in req.t:
        g = np.linspace(-t_val, t_val, shifts_per_axis)
        g = g[g != 0.0]
        grids.append(g)
    shift_list = [np.array(combo) for combo in product(*grids)]
    for _ in range(extra_random):
        shift_list.append(
            np.array([rng.uniform(-t_val, t_val) for t_val in req.t])
        )

    best = 0.0
    for shift in shift_list:
        hs = np.zeros((n_x, d))
        for idx, j in enumerate(req.J):
            hs[:, j] = shift[idx]
        vals, valid = mixed_diff_batch(f, orders, hs, xs, dom)
        if not valid.any():
            continue
        if isinf(req.p):
            cur = float(np.abs(vals[valid]).max())
        else:
            contrib = np.where(valid, np.abs(vals) ** req.p, 0.0)
            cur = float((box_vol * contrib.mean()) ** (1.0 / req.p))
        best = max(best, cur)
    return EstimateResult(value=best, stderr=0.0, rejected=0.0, n=n_x * len(shift_list))


def _lp_norm_estimate(f, p: float, dom: MTypeDomain, n: int, rng) -> float:
    xs = rng.uniform(0.0, float(dom.width), size=(n, dom.d))
    inside = dom.contains_points_float(xs)
    vals = np.zeros(n)
    if inside.any():
        vals[inside] = np.asarray(f(xs[inside]), dtype=np.float64)
    box_vol = float(dom.width) ** dom.d
    if isinf(p):
        return float(np.abs(vals).max())
    return float((box_vol * np.mean(np.where(inside, np.abs(vals) ** p, 0.0))) ** (1.0 / p))


def seminorm_estimate(
    f,
    params: RecoveryParams,
    dom: MTypeDomain,
    imax: int = 10,
    mc_n: int = 4000,
    seed: int = 0,
    include_norm: bool = True,
) -> float:
    """Estimated class gauge: ``L_p`` norm plus the smoothness seminorm.

    For every nonempty axis subset ``J`` the averaged modulus is scanned
    over a geometric grid of radii ``t_j = 2**-i``; the Nikolskii form
    takes the maximum of ``t^{-alpha} Omega'`` over the grid, the Besov
    form integrates its ``theta``-th power in log scale (trapezoid).
    Subsets of more than two axes use a shared (diagonal) radius to keep
    the grid tractable.

    Deterministic for a fixed seed; sub-seeds are drawn per grid node in
    a fixed order.
    """
    d = params.d
    rng = np.random.default_rng(seed)
    gauge = _lp_norm_estimate(f, params.p, dom, mc_n, rng) if include_norm else 0.0

    subsets = []
    for mask in range(1, 1 << d):
        subsets.append(tuple(j for j in range(d) if mask >> j & 1))

    ln2 = log(2.0)
    for J in subsets:
        if len(J) <= 2:
            grids = list(product(range(imax + 1), repeat=len(J)))
        else:
            grids = [(i,) * len(J) for i in range(imax + 1)]
        best = 0.0
        theta_acc = 0.0
        for idx in grids:
            t = tuple(2.0 ** -i for i in idx)
            req = ModulusRequest(J=J, l=params.l, t=t, p=params.p)
            sub_seed = int(rng.integers(0, 2**31 - 1))
            est = modulus_avg(f, req, dom, mc=(mc_n, sub_seed))
            weight_alpha = 1.0
            for i, j in zip(idx, J):
                weight_alpha *= 2.0 ** (i * params.alpha[j])
            scaled = weight_alpha * est.value
            if isinf(params.theta):
                best = max(best, scaled)
            else:
                w = 1.0
                for i in idx:
                    w *= ln2 * (0.5 if i in (0, imax) else 1.0)
                theta_acc += w * scaled**params.theta
        if isinf(params.theta):
            gauge += best
        else:
            gauge += theta_acc ** (1.0 / params.theta)
    return gauge
