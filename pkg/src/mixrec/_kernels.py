"""Point-evaluation kernels for compiled per-cell polynomial tables.

A reconstruction layer restricted to one dyadic cell is a single tensor
polynomial; after the tables are compiled, evaluating a layer at a
point is a cell lookup plus one tensor Horner pass.  This module holds
that inner loop in two interchangeable forms: numba-compiled kernels
(parallel over points) and a pure-numpy fallback.

Backend selection: the environment variable ``MIXREC_BACKEND`` may be
``auto`` (default: numba when importable), ``numba`` (require it), or
``numpy`` (force the fallback).  Results are independent of the choice
and of the thread count: every point is computed independently with an
identical operation order, and reductions happen outside the kernels
in a fixed order.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["HAS_NUMBA", "active_backend", "set_threads", "eval_table"]

_REQUESTED = os.environ.get("MIXREC_BACKEND", "auto").strip().lower()
if _REQUESTED not in {"auto", "numba", "numpy"}:
    raise ValueError(
        f"MIXREC_BACKEND must be auto, numba, or numpy, got {_REQUESTED!r}"
    )

HAS_NUMBA = False
if _REQUESTED in {"auto", "numba"}:
    try:
        import numba
        from numba import njit, prange

        HAS_NUMBA = True
    except ImportError:
        if _REQUESTED == "numba":
            raise RuntimeError("MIXREC_BACKEND=numba but numba is not importable")


def active_backend() -> str:
    """Name of the backend actually in use."""
    return "numba" if HAS_NUMBA else "numpy"


def set_threads(count: int | None) -> None:
    """Cap kernel worker threads; no-op on the numpy backend.

    The cap is clamped to the runtime's legal range, so asking for more
    threads than the machine provides silently uses what is available.
    """
    if HAS_NUMBA and count:
        limit = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(min(max(1, int(count)), limit))


if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _eval_1d_nb(pts, pow0, lo0, n0, index_map, coeffs, L0, out):  # pragma: no cover
        for i in prange(pts.shape[0]):
            x0 = pts[i, 0] * pow0
            c0 = int(np.floor(x0))
            j0 = c0 - lo0
            val = 0.0
            if 0 <= j0 < n0:
                row = index_map[j0]
                if row >= 0:
                    t0 = x0 - c0
                    for a in range(L0 - 1, -1, -1):
                        val = val * t0 + coeffs[row, a]
            out[i] = val

    @njit(cache=True, parallel=True)
    def _eval_2d_nb(pts, pow0, pow1, lo0, lo1, n0, n1, index_map, coeffs, L0, L1, out):  # pragma: no cover
        for i in prange(pts.shape[0]):
            x0 = pts[i, 0] * pow0
            x1 = pts[i, 1] * pow1
            c0 = int(np.floor(x0))
            c1 = int(np.floor(x1))
            j0 = c0 - lo0
            j1 = c1 - lo1
            val = 0.0
            if 0 <= j0 < n0 and 0 <= j1 < n1:
                row = index_map[j0 * n1 + j1]
                if row >= 0:
                    t0 = x0 - c0
                    t1 = x1 - c1
                    for a in range(L0 - 1, -1, -1):
                        inner = 0.0
                        for b in range(L1 - 1, -1, -1):
                            inner = inner * t1 + coeffs[row, a * L1 + b]
                        val = val * t0 + inner
            out[i] = val


def _eval_np(pts, pow2, lo, dims, index_map, coeffs, degs):
    n, d = pts.shape
    x = pts * pow2
    c = np.floor(x)
    t = x - c
    ci = c.astype(np.int64) - lo
    ok = np.all((ci >= 0) & (ci < dims), axis=1)
    out = np.zeros(n)
    if not ok.any():
        return out
    strides = np.ones(d, dtype=np.int64)
    for j in range(d - 2, -1, -1):
        strides[j] = strides[j + 1] * dims[j + 1]
    flat = (ci[ok] * strides).sum(axis=1)
    rows = index_map[flat]
    hit = rows >= 0
    if not hit.any():
        return out
    sel = np.flatnonzero(ok)[hit]
    tensors = coeffs[rows[hit]].reshape((-1,) + tuple(degs))
    ts = t[sel]
    val = tensors
    for axis in range(d - 1, -1, -1):
        tj = ts[:, axis].reshape((-1,) + (1,) * axis)
        res = val[..., -1]
        for b in range(val.shape[-1] - 2, -1, -1):
            res = res * tj + val[..., b]
        val = res
    out[sel] = val
    return out


def eval_table(
    pts: np.ndarray,
    pow2: np.ndarray,
    lo: np.ndarray,
    dims: np.ndarray,
    index_map: np.ndarray,
    coeffs: np.ndarray,
    degs: tuple[int, ...],
) -> np.ndarray:
    """Evaluate a compiled per-cell polynomial table at points.

    Parameters
    ----------
    pts : ndarray
        Points, shape ``(n, d)``.
    pow2 : ndarray
        Per-axis scale ``2**kappa[j]`` as floats.
    lo, dims : ndarray
        Integer cell-index window covered by ``index_map``.
    index_map : ndarray
        Row index into ``coeffs`` per cell in the window (C order),
        ``-1`` for cells without a table.
    coeffs : ndarray
        Row-major coefficient rows, one per occupied cell, length
        ``prod(degs)``.
    degs : tuple of int
        Coefficient counts per axis.

    Returns
    -------
    ndarray
        Values, zero outside the window and on absent cells.
    """
    d = pts.shape[1]
    if HAS_NUMBA and d <= 2:
        out = np.empty(len(pts))
        if d == 1:
            _eval_1d_nb(pts, float(pow2[0]), int(lo[0]), int(dims[0]),
                        index_map, coeffs, int(degs[0]), out)
        else:
            _eval_2d_nb(pts, float(pow2[0]), float(pow2[1]), int(lo[0]), int(lo[1]),
                        int(dims[0]), int(dims[1]), index_map, coeffs,
                        int(degs[0]), int(degs[1]), out)
        return out
    return _eval_np(pts, pow2, lo, dims, index_map, coeffs, degs)
