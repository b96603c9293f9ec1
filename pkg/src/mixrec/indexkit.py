"""Multi-index combinatorics and rate parameters.

Vectors of nonnegative integers (levels, offsets, derivative orders)
are plain tuples throughout the package.  This module collects the
small exact-arithmetic helpers everything else is built on: subdivision
coefficients of cardinal B-splines, parent/child cell maps, hyperbolic
cross enumeration, and the derived convergence-rate parameters of a
recovery problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb, floor, isinf

__all__ = [
    "smoothness_order",
    "refinement_coeff",
    "refinement_coeffs",
    "child_offsets",
    "child_maps",
    "support",
    "support_subsets",
    "hyperbolic_cross",
    "cross_cardinality_1",
    "RecoveryParams",
    "derive_rate_params",
]

# Membership in a hyperbolic cross is decided up to this slack so that
# float dot products cannot drop a boundary index.
_CROSS_TOL = 1e-9

_TIE_TOL = 1e-12


def smoothness_order(alpha: tuple[float, ...]) -> tuple[int, ...]:
    """Componentwise least integer strictly above each smoothness index.

    Parameters
    ----------
    alpha : tuple of float
        Positive smoothness indices.

    Returns
    -------
    tuple of int
        ``l`` with ``l[j] = floor(alpha[j]) + 1``, the smallest integer
        order whose differences resolve smoothness ``alpha[j]``.
    """
    if any(a <= 0 for a in alpha):
        raise ValueError("smoothness indices must be positive")
    return tuple(floor(a) + 1 for a in alpha)


def refinement_coeff(m: int, mu: int) -> Fraction:
    """Subdivision weight of an order-``m`` cardinal B-spline.

    The two-scale relation expands a B-spline of order ``m`` over its
    half-scale translates with weights ``binom(m+1, mu) / 2**m`` for
    ``0 <= mu <= m + 1`` and zero otherwise.
    """
    if m < 0:
        raise ValueError("spline order must be nonnegative")
    if mu < 0 or mu > m + 1:
        return Fraction(0)
    return Fraction(comb(m + 1, mu), 2**m)


def refinement_coeffs(m: int) -> tuple[Fraction, ...]:
    """All subdivision weights ``(a_0, ..., a_{m+1})`` of order ``m``."""
    return tuple(refinement_coeff(m, mu) for mu in range(m + 2))


def child_offsets(nu_j: int, eps_active: bool, m_j: int) -> list[tuple[int | None, int]]:
    """Admissible one-axis offsets linking index ``nu_j`` to a coarser level.

    On an active axis returns the pairs ``(mu, parent)`` with
    ``0 <= mu <= m_j + 1``, ``mu`` of the same parity as ``nu_j`` and
    ``parent = (nu_j - mu) // 2``, in ascending ``mu`` order; the
    subdivision weights of the returned offsets sum to one exactly.
    On an inactive axis the index passes through as ``[(None, nu_j)]``.
    """
    if not eps_active:
        return [(None, nu_j)]
    return [(mu, (nu_j - mu) // 2) for mu in range(m_j + 2) if (nu_j - mu) % 2 == 0]


def child_maps(
    nu: tuple[int, ...],
    m: tuple[int, ...],
    eps: tuple[int, ...],
) -> list[tuple[tuple[int, ...], tuple[int, ...], Fraction]]:
    """Coarsening maps of a cell index along the active axes of ``eps``.

    Parameters
    ----------
    nu : tuple of int
        Cell index on the fine level.
    m : tuple of int
        Spline orders per axis.
    eps : tuple of int
        0/1 vector; axes with ``eps[j] == 1`` are coarsened by one level.

    Returns
    -------
    list of (offsets, parent, weight)
        ``offsets`` holds the chosen offset for each active axis in
        ascending axis order, ``parent`` is the full coarse index
        (inactive axes keep ``nu[j]``), and ``weight`` is the exact
        product of the one-axis subdivision weights.  The weights over
        the whole list sum to one.  Order is lexicographic in
        ``offsets``.
    """
    active = [j for j, e in enumerate(eps) if e]
    per_axis = [child_offsets(nu[j], True, m[j]) for j in active]
    out = []
    for combo in product(*per_axis):
        parent = list(nu)
        weight = Fraction(1)
        for j, (mu, par) in zip(active, combo):
            parent[j] = par
            weight *= refinement_coeff(m[j], mu)
        out.append((tuple(mu for mu, _ in combo), tuple(parent), weight))
    return out


def support(idx: tuple[int, ...]) -> tuple[int, ...]:
    """Axes on which a multi-index is nonzero."""
    return tuple(j for j, v in enumerate(idx) if v != 0)


def support_subsets(idx: tuple[int, ...]) -> list[tuple[int, ...]]:
    """All 0/1 vectors supported inside the support of ``idx``.

    Enumeration order is fixed: subsets of the support axes by
    increasing bitmask, so the zero vector comes first.
    """
    d = len(idx)
    axes = support(idx)
    out = []
    for mask in range(1 << len(axes)):
        eps = [0] * d
        for i, j in enumerate(axes):
            if mask >> i & 1:
                eps[j] = 1
        out.append(tuple(eps))
    return out


def hyperbolic_cross(beta: tuple[float, ...], r: int) -> list[tuple[int, ...]]:
    """Indices ``kappa >= 0`` with weighted sum ``(kappa, beta) <= r``.

    Parameters
    ----------
    beta : tuple of float
        Axis weights, all at least 1.
    r : int
        Nonnegative budget.

    Returns
    -------
    list of tuple of int
        All admissible indices in lexicographic order.
    """
    if any(b < 1 for b in beta):
        raise ValueError("cross weights must be at least 1")
    if r < 0:
        raise ValueError("cross radius must be nonnegative")
    d = len(beta)
    out: list[tuple[int, ...]] = []
    idx = [0] * d

    def walk(j: int, budget: float) -> None:
        if j == d:
            out.append(tuple(idx))
            return
        k = 0
        while k * beta[j] <= budget + _CROSS_TOL:
            idx[j] = k
            walk(j + 1, budget - k * beta[j])
            k += 1
        idx[j] = 0

    walk(0, float(r))
    return out


def cross_cardinality_1(d: int, r: int) -> int:
    """Exact size of the unit-weight cross, ``sum_{s<=r} binom(s+d-1, d-1)``."""
    return sum(comb(s + d - 1, d - 1) for s in range(r + 1))


@dataclass(frozen=True)
class RecoveryParams:
    """Problem description together with its derived rate quantities.

    Attributes
    ----------
    d : int
        Dimension.
    alpha : tuple of float
        Mixed-smoothness indices, ``alpha[j] > 1/p``.
    p : float
        Integrability of the smoothness class, ``1 <= p < inf``.
    theta : float
        Summability across scales, ``1 <= theta <= inf``.
    q : float
        Target integrability of the error norm, ``1 <= q <= inf``.
    lam : tuple of int
        Orders of the mixed derivative to recover.
    m : tuple of int
        B-spline orders per axis.
    l : tuple of int
        Interpolation node counts per axis, one above the polynomial
        degree used in each cell.
    a : tuple of float
        Per-axis rate gaps ``alpha[j] - lam[j] - (1/p - 1/q)_+``.
    mrate : float
        Main convergence rate, ``min(a)``.
    jset : tuple of int
        Axes attaining the minimum.
    crate : int
        Size of ``jset``; drives the logarithm exponent.
    beta : tuple of float
        Cross weights: 1 on ``jset``, else the midpoint
        ``(1 + a[j]/mrate) / 2``.
    logexp : float
        Exponent of the logarithmic factor in the error rate,
        ``(mrate + 1 - 1/max(p, theta)) * (crate - 1)``.
    """

    d: int
    alpha: tuple[float, ...]
    p: float
    theta: float
    q: float
    lam: tuple[int, ...]
    m: tuple[int, ...]
    l: tuple[int, ...]
    a: tuple[float, ...]
    mrate: float
    jset: tuple[int, ...]
    crate: int
    beta: tuple[float, ...]
    logexp: float


def derive_rate_params(
    d: int,
    alpha: tuple[float, ...],
    p: float,
    theta: float,
    q: float,
    lam: tuple[int, ...],
    m: tuple[int, ...] | None = None,
) -> RecoveryParams:
    """Validate a recovery problem and derive its rate parameters.

    Raises
    ------
    ValueError
        If a shape or range constraint fails, or if one of the
        admissibility conditions ``alpha[j] > 1/p`` or
        ``alpha[j] - lam[j] - (1/p - 1/q)_+ > 0`` is violated.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    alpha = tuple(float(x) for x in alpha)
    lam = tuple(int(x) for x in lam)
    if len(alpha) != d or len(lam) != d:
        raise ValueError("alpha and lam must have length d")
    if not 1 <= p or isinf(p):
        raise ValueError("p must satisfy 1 <= p < inf")
    if not 1 <= theta:
        raise ValueError("theta must satisfy 1 <= theta <= inf")
    if not 1 <= q:
        raise ValueError("q must satisfy 1 <= q <= inf")
    if any(x < 0 for x in lam):
        raise ValueError("derivative orders must be nonnegative")

    if any(a - 1.0 / p <= 0 for a in alpha):
        raise ValueError("embedding into continuous functions fails: need alpha[j] > 1/p on every axis")

    l = smoothness_order(alpha)
    if m is None:
        m = l
    m = tuple(int(x) for x in m)
    if len(m) != d:
        raise ValueError("m must have length d")
    if any(x < 1 for x in m):
        raise ValueError("spline orders must be at least 1")
    if any(x > 8 for x in m):
        raise ValueError("spline orders above 8 are not supported")
    if any(lj > mj for lj, mj in zip(lam, m)):
        raise ValueError("spline order m[j] must be at least the derivative order lam[j]")

    gap = max(1.0 / p - (0.0 if isinf(q) else 1.0 / q), 0.0)
    a = tuple(alpha[j] - lam[j] - gap for j in range(d))
    if any(x <= 0 for x in a):
        raise ValueError(
            "recovery rate is not positive: need alpha[j] - lam[j] - (1/p - 1/q)_+ > 0 on every axis"
        )

    mrate = min(a)
    jset = tuple(j for j in range(d) if a[j] <= mrate + _TIE_TOL)
    crate = len(jset)
    beta = tuple(1.0 if j in jset else (1.0 + a[j] / mrate) / 2.0 for j in range(d))
    pt = max(p, theta)
    logexp = (mrate + 1.0 - (0.0 if isinf(pt) else 1.0 / pt)) * (crate - 1)
    return RecoveryParams(
        d=d,
        alpha=alpha,
        p=float(p),
        theta=float(theta),
        q=float(q),
        lam=lam,
        m=m,
        l=l,
        a=a,
        mrate=mrate,
        jset=jset,
        crate=crate,
        beta=beta,
        logexp=logexp,
    )
