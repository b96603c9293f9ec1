"""Tensor Lagrange interpolation and cell-local polynomials.

Polynomials are stored in cell-local scaled monomials: the coefficient
tensor of a ``LocalPoly`` represents ``x -> sum_rho c[rho] * prod_j
((x_j - anchor_j) / scale_j)**rho_j``.  Anchors and scales are exact
rationals so frames compare exactly; coefficients are floats.  Keeping
the frame local avoids the ``2**(level * degree)`` blow-up that global
monomial coefficients would suffer at deep levels.

Interpolation nodes are the per-axis midpoints ``(2i + 1) / (2 count)``;
they are strictly interior, symmetric, and distinct, and the inverse of
the small Vandermonde system is precomputed exactly in rational
arithmetic once per node count, so the solve has no pivoting
nondeterminism.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

__all__ = [
    "nodes_1d",
    "nodes_float",
    "LocalPoly",
    "interpolate_cell",
    "poly_eval",
    "poly_eval_deriv",
    "poly_axpy",
    "poly_reframe",
]


def nodes_1d(count: int) -> tuple[Fraction, ...]:
    """Midpoint interpolation nodes ``(2i + 1) / (2 count)`` in (0, 1)."""
    if count < 1:
        raise ValueError("node count must be at least 1")
    return tuple(Fraction(2 * i + 1, 2 * count) for i in range(count))


@lru_cache(maxsize=None)
def nodes_float(count: int) -> np.ndarray:
    out = np.array([float(t) for t in nodes_1d(count)])
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _inv_vandermonde(count: int) -> tuple[tuple[Fraction, ...], ...]:
    """Exact inverse of the midpoint-node Vandermonde matrix.

    Row ``i`` of the Vandermonde matrix holds the powers of node ``i``;
    the inverse maps node values to monomial coefficients.  Computed by
    Gauss-Jordan elimination over rationals; the principal minors are
    nonsingular, so no pivoting is needed.
    """
    nodes = nodes_1d(count)
    aug = [
        [t**j for j in range(count)] + [Fraction(int(i == k)) for k in range(count)]
        for i, t in enumerate(nodes)
    ]
    n = count
    for col in range(n):
        piv = aug[col][col]
        aug[col] = [v / piv for v in aug[col]]
        for row in range(n):
            if row != col and aug[row][col] != 0:
                f = aug[row][col]
                aug[row] = [a - f * b for a, b in zip(aug[row], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


@lru_cache(maxsize=None)
def _inv_vandermonde_float(count: int) -> np.ndarray:
    inv = _inv_vandermonde(count)
    out = np.array([[float(v) for v in row] for row in inv])
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class LocalPoly:
    """Tensor polynomial in cell-local scaled coordinates.

    Attributes
    ----------
    anchor : tuple of Fraction
        Cell corner.
    scale : tuple of Fraction
        Cell widths, positive.
    coeffs : ndarray
        Coefficient tensor; axis ``j`` indexes the power of
        ``(x_j - anchor_j) / scale_j``.
    """

    anchor: tuple[Fraction, ...]
    scale: tuple[Fraction, ...]
    coeffs: np.ndarray

    def __post_init__(self):
        if len(self.anchor) != len(self.scale):
            raise ValueError("anchor and scale must have equal length")
        if any(s <= 0 for s in self.scale):
            raise ValueError("scales must be positive")
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != len(self.anchor):
            raise ValueError("coefficient tensor rank must equal the dimension")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_anchor_f", np.array([float(a) for a in self.anchor]))
        object.__setattr__(self, "_scale_f", np.array([float(s) for s in self.scale]))

    @property
    def d(self) -> int:
        return len(self.anchor)

    def same_frame(self, other: "LocalPoly") -> bool:
        return self.anchor == other.anchor and self.scale == other.scale


def _apply_axis(mat: np.ndarray, tensor: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(mat, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def interpolate_cell(
    anchor: tuple[Fraction, ...],
    scale: tuple[Fraction, ...],
    values: np.ndarray,
) -> LocalPoly:
    """Tensor Lagrange interpolant of node values on a box.

    Parameters
    ----------
    anchor, scale : tuple of Fraction
        The box; nodes sit at ``anchor + scale * nodes_1d(l_j)`` per axis.
    values : ndarray
        Samples at the tensor nodes, shape ``(l_1, ..., l_d)`` in the
        natural node order.

    Returns
    -------
    LocalPoly
        Polynomial of coordinate degree ``l_j - 1`` matching every node
        value.
    """
    values = np.asarray(values, dtype=np.float64)
    coeffs = values
    for axis, lj in enumerate(values.shape):
        coeffs = _apply_axis(_inv_vandermonde_float(lj), coeffs, axis)
    return LocalPoly(tuple(anchor), tuple(scale), coeffs)


def _local_coords(p: LocalPoly, x: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return (pts - p._anchor_f) / p._scale_f


def _eval_powers(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    val = coeffs
    for axis in range(t.shape[1]):
        lj = val.shape[1] if axis else val.shape[0]
        pw = np.vander(t[:, axis], N=lj, increasing=True)
        if axis == 0:
            val = np.tensordot(pw, val, axes=([1], [0]))
        else:
            val = np.einsum("nj,nj...->n...", pw, val)
    return val


def poly_eval(p: LocalPoly, x) -> np.ndarray | float:
    """Evaluate the polynomial at one point ``(d,)`` or a batch ``(n, d)``."""
    t = _local_coords(p, x)
    val = _eval_powers(p.coeffs, t)
    if np.asarray(x).ndim == 1:
        return float(val[0])
    return val


def poly_eval_deriv(p: LocalPoly, mu: tuple[int, ...], x) -> np.ndarray | float:
    """Evaluate the mixed derivative ``D^mu`` of the polynomial.

    Differentiation acts on the coefficient tensor per axis and brings
    in the chain factor ``scale_j**(-mu_j)``; orders at or above the
    coordinate degree give zero.
    """
    coeffs = p.coeffs
    factor = 1.0
    for axis, muj in enumerate(mu):
        if muj == 0:
            continue
        lj = coeffs.shape[axis]
        if muj >= lj:
            coeffs = None
            break
        mat = np.zeros((lj - muj, lj))
        for k in range(muj, lj):
            fall = 1.0
            for i in range(muj):
                fall *= k - i
            mat[k - muj, k] = fall
        coeffs = _apply_axis(mat, coeffs, axis)
        factor /= float(p.scale[axis]) ** muj
    if coeffs is None:
        scalar = np.asarray(x).ndim == 1
        n = 1 if scalar else np.atleast_2d(x).shape[0]
        return 0.0 if scalar else np.zeros(n)
    t = _local_coords(p, x)
    val = factor * _eval_powers(coeffs, t)
    if np.asarray(x).ndim == 1:
        return float(val[0])
    return val


def poly_axpy(dst: LocalPoly, coeff: float, src: LocalPoly) -> LocalPoly:
    """Return ``dst + coeff * src``; both must share the exact frame."""
    if not dst.same_frame(src):
        raise ValueError("frame mismatch: reframe operands before combining")
    shape = tuple(max(a, b) for a, b in zip(dst.coeffs.shape, src.coeffs.shape))
    out = np.zeros(shape)
    out[tuple(slice(0, s) for s in dst.coeffs.shape)] = dst.coeffs
    out[tuple(slice(0, s) for s in src.coeffs.shape)] += coeff * src.coeffs
    return LocalPoly(dst.anchor, dst.scale, out)


def poly_reframe(
    p: LocalPoly,
    new_anchor: tuple[Fraction, ...],
    new_scale: tuple[Fraction, ...],
) -> LocalPoly:
    """Express the same polynomial in a different cell frame.

    The per-axis substitution ``t_old = u + v * t_new`` has exact
    rational ``u, v``; the binomial substitution matrices are built in
    rational arithmetic and applied in floats, so the reframe is exact
    up to one rounding per coefficient.
    """
    coeffs = p.coeffs
    for axis in range(p.d):
        u = (Fraction(new_anchor[axis]) - p.anchor[axis]) / p.scale[axis]
        v = Fraction(new_scale[axis]) / p.scale[axis]
        if u == 0 and v == 1:
            continue
        lj = coeffs.shape[axis]
        mat = np.zeros((lj, lj))
        for k in range(lj):
            for i in range(k + 1):
                mat[i, k] = float(comb(k, i) * u ** (k - i) * v**i)
        coeffs = _apply_axis(mat, coeffs, axis)
    return LocalPoly(tuple(new_anchor), tuple(new_scale), coeffs)
