"""Cardinal B-splines as exact piecewise polynomials.

The order-``m`` cardinal B-spline is the ``m``-fold running average of
the characteristic function of the unit interval; it is supported on
``(0, m + 1)`` and polynomial of degree ``m`` between consecutive
integers.  Tables of exact rational coefficients are built once per
order by symbolic integration and reused for evaluation, derivatives,
and the tensor-product translates on dyadic grids.

Evaluation is right-continuous: at a knot the piece to the right
decides the value, which pins down derivatives of the top order on the
knot set of measure zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import floor

import numpy as np

__all__ = [
    "MAX_ORDER",
    "ScaledTranslate",
    "piecewise_table",
    "deriv_table",
    "table_floats",
    "bspline_eval",
    "bspline_deriv",
    "bspline_eval_exact",
    "g_eval",
]

MAX_ORDER = 8

Piece = tuple[Fraction, ...]


def _check_order(m: int) -> None:
    if m < 0:
        raise ValueError("spline order must be nonnegative")
    if m > MAX_ORDER:
        raise ValueError(f"spline orders above {MAX_ORDER} are not supported")


@lru_cache(maxsize=None)
def piecewise_table(m: int) -> tuple[Piece, ...]:
    """Exact coefficient pieces of the order-``m`` B-spline.

    Parameters
    ----------
    m : int
        Spline order, ``0 <= m <= 8``.

    Returns
    -------
    tuple of pieces
        ``m + 1`` pieces; piece ``k`` holds the coefficients
        ``(c_0, ..., c_m)`` of the polynomial in the local coordinate
        ``u = x - k``, valid on ``[k, k + 1)``.
    """
    _check_order(m)
    if m == 0:
        return ((Fraction(1),),)
    prev = piecewise_table(m - 1)
    # Antiderivative pieces of the previous order, each in its own
    # local coordinate, with the running constant carried across knots.
    anti: list[Piece] = []
    run = Fraction(0)
    for piece in prev:
        cur = [run] + [c / (i + 1) for i, c in enumerate(piece)]
        anti.append(tuple(cur))
        run = sum(cur)
    # run == 1 here: the spline has unit mass.
    pieces: list[Piece] = []
    for k in range(m + 1):
        hi = anti[k] if k < m else (run,)
        lo = anti[k - 1] if k >= 1 else (Fraction(0),)
        width = max(len(hi), len(lo))
        coeffs = tuple(
            (hi[i] if i < len(hi) else Fraction(0)) - (lo[i] if i < len(lo) else Fraction(0))
            for i in range(width)
        )
        pieces.append(coeffs + (Fraction(0),) * (m + 1 - len(coeffs)))
    return tuple(pieces)


@lru_cache(maxsize=None)
def deriv_table(m: int, k: int) -> tuple[Piece, ...]:
    """Exact pieces of the ``k``-th derivative of the order-``m`` spline.

    Derivatives beyond order ``m`` vanish off the knots and come back
    as all-zero pieces.
    """
    _check_order(m)
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    if k == 0:
        return piecewise_table(m)
    if k > m:
        return tuple((Fraction(0),) for _ in range(m + 1))
    prev = deriv_table(m, k - 1)
    return tuple(tuple(c * i for i, c in enumerate(piece))[1:] or (Fraction(0),) for piece in prev)


@lru_cache(maxsize=None)
def table_floats(m: int, k: int = 0) -> np.ndarray:
    """Float coefficient matrix of ``deriv_table(m, k)``.

    Row ``i`` holds the coefficients of piece ``i`` padded to a common
    width, ready for vectorized Horner evaluation.
    """
    table = deriv_table(m, k)
    width = max(len(p) for p in table)
    out = np.zeros((m + 1, width))
    for i, piece in enumerate(table):
        for j, c in enumerate(piece):
            out[i, j] = float(c)
    out.setflags(write=False)
    return out


def _eval_table(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    npieces = coeffs.shape[0]
    k = np.floor(x)
    inside = (k >= 0) & (k < npieces)
    ki = np.where(inside, k, 0).astype(np.int64)
    u = x - k
    rows = coeffs[ki]
    val = rows[..., -1]
    for j in range(coeffs.shape[1] - 2, -1, -1):
        val = val * u + rows[..., j]
    return np.where(inside, val, 0.0)


def bspline_eval(m: int, x, deriv: int = 0):
    """Evaluate the order-``m`` B-spline (or a derivative) at ``x``.

    Parameters
    ----------
    m : int
        Spline order.
    x : float or array_like
        Evaluation points.
    deriv : int, optional
        Derivative order; defaults to the spline itself.

    Returns
    -------
    float or ndarray
        Values, zero outside ``[0, m + 1)``.
    """
    coeffs = table_floats(m, deriv)
    arr = np.asarray(x, dtype=np.float64)
    out = _eval_table(coeffs, arr)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def bspline_deriv(m: int, k: int, x):
    """``k``-th derivative of the order-``m`` B-spline at ``x``.

    Raises
    ------
    ValueError
        If ``k`` is negative or exceeds ``m``: derivatives are only
        essentially bounded up to order ``m``.
    """
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    if k > m:
        raise ValueError("derivative order exceeds the spline order")
    return bspline_eval(m, x, deriv=k)


def bspline_eval_exact(m: int, x: Fraction, deriv: int = 0) -> Fraction:
    """Exact rational value of the spline or one of its derivatives."""
    table = deriv_table(m, deriv)
    k = floor(x)
    if k < 0 or k > m:
        return Fraction(0)
    u = x - k
    val = Fraction(0)
    for c in reversed(table[k]):
        val = val * u + c
    return val


@dataclass(frozen=True)
class ScaledTranslate:
    """A dyadic scaled translate of the tensor B-spline.

    Represents ``g(x) = prod_j psi_{m[j]}(2**kappa[j] * x_j - nu[j])``,
    supported on the closed box ``2**-kappa nu + 2**-kappa (m+1) [0,1]^d``.
    """

    kappa: tuple[int, ...]
    nu: tuple[int, ...]
    m: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.kappa) == len(self.nu) == len(self.m)):
            raise ValueError("kappa, nu, m must share one length")
        if any(k < 0 for k in self.kappa):
            raise ValueError("levels must be nonnegative")
        for mj in self.m:
            _check_order(mj)

    @property
    def d(self) -> int:
        return len(self.kappa)

    def support(self) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
        """Exact closed support box as (lower, upper) corner tuples."""
        lo = tuple(Fraction(n, 1 << k) for n, k in zip(self.nu, self.kappa))
        hi = tuple(
            Fraction(n + m + 1, 1 << k)
            for n, m, k in zip(self.nu, self.m, self.kappa)
        )
        return lo, hi


def g_eval(t: ScaledTranslate, mu: tuple[int, ...], x) -> np.ndarray:
    """Mixed derivative of a dyadic translate of the tensor B-spline.

    Evaluates ``D^mu`` of ``t``; differentiating the dilated argument
    scales each axis factor by ``2**(kappa[j] * mu[j])``.

    Parameters
    ----------
    t : ScaledTranslate
        Level, translate index, and spline orders.
    mu : tuple of int
        Derivative orders per axis, each at most the spline order.
    x : array_like
        Points of shape ``(n, d)`` or ``(d,)``.

    Returns
    -------
    ndarray or float
        Values of shape ``(n,)``, or a scalar for a single point.
    """
    if any(muj > mj for muj, mj in zip(mu, t.m)):
        raise ValueError("derivative order exceeds the spline order")
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    val = np.ones(pts.shape[0])
    for j, (kj, nj, mj, muj) in enumerate(zip(t.kappa, t.nu, t.m, mu)):
        arg = np.ldexp(pts[:, j], kj) - nj
        val *= bspline_eval(mj, arg, deriv=muj) * float(2 ** (kj * muj))
    if np.asarray(x).ndim == 1:
        return float(val[0])
    return val
