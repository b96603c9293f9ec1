"""Box-type domains with exact dyadic cell geometry.

Two bounded domains ship: the open unit cube and the L-shape, i.e. the
doubled cube with its closed far corner removed.  Both are unions of
finitely many open boxes with small-integer corners, so every geometric
predicate the multiscale operators need (does a spline support meet the
domain, is a dyadic cell inside, is a bounding rectangle inside) is
decided in exact integer arithmetic: boundary cells classify
deterministically at every level.

For both domains the cell-selection maps clamp negative index entries
to zero, and the locality radius ``Gamma0 = m + 2`` per axis covers the
clamp at every level; ``validate_mtype`` checks all of this
exhaustively up to a requested level.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .indexkit import child_maps, support_subsets

__all__ = ["MTypeDomain", "MTypeReport", "make_domain"]


@dataclass(frozen=True)
class MTypeReport:
    """Outcome of the exhaustive cell-map validation.

    ``ok`` is False as soon as one tuple fails; ``message`` then names
    the level, index, coarsening pattern, offsets, and the violated
    condition.
    """

    ok: bool
    levels_checked: int
    cells_checked: int
    tuples_checked: int
    message: str


@dataclass(frozen=True)
class MTypeDomain:
    """Bounded union of open boxes, closed under the dyadic cell maps.

    Attributes
    ----------
    kind : str
        ``"cube"`` or ``"lshape"``.
    d : int
        Dimension.
    m : tuple of int
        Spline orders the geometry is validated against.
    kappa0 : tuple of int
        Base level offset; zero for both built-ins.
    gamma0 : tuple of int
        Locality radius per axis for the cell-selection maps.
    width : int
        Side length of the bounding box ``(0, width)^d``.
    """

    kind: str
    d: int
    m: tuple[int, ...]
    kappa0: tuple[int, ...]
    gamma0: tuple[int, ...]
    width: int

    # -- exact point and box predicates -------------------------------

    def contains_point(self, x) -> bool:
        """Exact membership of a rational point in the open domain."""
        if self.kind == "cube":
            return all(0 < t < 1 for t in x)
        return all(0 < t < 2 for t in x) and any(t < 1 for t in x)

    def box_inside(self, lo, hi) -> bool:
        """Whether the open box ``(lo, hi)`` lies inside the domain.

        Exact for rational corners; the L-shape needs one axis to stay
        below the notch in addition to the bounding box.
        """
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("box must have positive extent")
        if self.kind == "cube":
            return all(a >= 0 for a in lo) and all(b <= 1 for b in hi)
        return (
            all(a >= 0 for a in lo)
            and all(b <= 2 for b in hi)
            and any(b <= 1 for b in hi)
        )

    def cell_inside(self, kappa: tuple[int, ...], nu: tuple[int, ...]) -> bool:
        """Whether the open dyadic cell at ``(kappa, nu)`` lies inside."""
        scale = [1 << k for k in kappa]
        if any(v < 0 or v + 1 > self.width * s for v, s in zip(nu, scale)):
            return False
        if self.kind == "cube":
            return True
        return any(v + 1 <= s for v, s in zip(nu, scale))

    def support_meets(self, kappa: tuple[int, ...], nu: tuple[int, ...]) -> bool:
        """Whether the closed spline support at ``(kappa, nu)`` meets the domain.

        The support spans ``m + 1`` cells per axis; a closed box meets
        the open domain exactly when it overlaps one of the component
        boxes with positive extent on every axis.
        """
        for lo, hi in self._component_corners():
            if all(
                v < h * (1 << k) and v + mj + 1 > lw * (1 << k)
                for v, mj, k, lw, h in zip(nu, self.m, kappa, lo, hi)
            ):
                return True
        return False

    def _component_corners(self) -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
        if self.kind == "cube":
            return (((0,) * self.d, (1,) * self.d),)
        comps = []
        for i in range(self.d):
            hi = tuple(1 if j == i else 2 for j in range(self.d))
            comps.append(((0,) * self.d, hi))
        return tuple(comps)

    # -- index enumeration and cell maps ------------------------------

    def enumerate_N(self, kappa: tuple[int, ...]) -> list[tuple[int, ...]]:
        """Indices whose spline support meets the domain, in lex order."""
        ranges = [
            range(-mj, self.width * (1 << k))
            for mj, k in zip(self.m, kappa)
        ]
        return [nu for nu in product(*ranges) if self.support_meets(kappa, nu)]

    def inside_cells(self, kappa: tuple[int, ...]) -> list[tuple[int, ...]]:
        """Indices of cells fully inside the domain, in lex order."""
        ranges = [range(self.width * (1 << k)) for k in kappa]
        return [nu for nu in product(*ranges) if self.cell_inside(kappa, nu)]

    def _clamp(self, nu: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(max(v, 0) for v in nu)

    def cell_map_nu(self, kappa: tuple[int, ...], nu: tuple[int, ...]) -> tuple[int, ...]:
        """Selected interior cell for an active index (clamp to zero).

        Raises a domain-model error when the selected cell is not
        inside the domain, which would invalidate the instance.
        """
        out = self._clamp(nu)
        if not self.cell_inside(kappa, out):
            raise ValueError(
                f"domain model broken: selected cell {out} at level {kappa} "
                f"for index {nu} is not inside the domain"
            )
        return out

    def cell_map_n(self, kappa: tuple[int, ...], nu: tuple[int, ...]) -> tuple[int, ...]:
        """Companion interior-cell map; coincides with the clamp here."""
        return self.cell_map_nu(kappa, nu)

    # -- validation ----------------------------------------------------

    def validate_mtype(self, kappa_max: int) -> MTypeReport:
        """Exhaustively check the cell-map conditions up to a level cap.

        For every level ``kappa`` with entries at most ``kappa_max``,
        every active index, every coarsening pattern and admissible
        offset combination, this verifies that the selected cells are
        inside the domain and within the locality radius, that the
        coarse child index stays active, that coordinates untouched by
        the pattern are preserved, and that the bounding rectangle of
        the paired cells stays inside the domain.
        """
        if kappa_max < 0 or kappa_max > 8:
            raise ValueError("kappa_max must be in [0, 8] for exhaustive checking")
        levels = cells = tuples = 0
        for kappa in product(range(kappa_max + 1), repeat=self.d):
            levels += 1
            scale = tuple(1 << k for k in kappa)
            for nu in self.enumerate_N(kappa):
                cells += 1
                sel = self._clamp(nu)
                if not self.cell_inside(kappa, sel):
                    return self._fail(levels, cells, tuples, kappa, nu, None, None,
                                      "selected cell is not inside the domain")
                if any(
                    s < v - g or s + 1 > v + g
                    for s, v, g in zip(sel, nu, self.gamma0)
                ):
                    return self._fail(levels, cells, tuples, kappa, nu, None, None,
                                      "selected cell leaves the locality ball")
                for eps in support_subsets(kappa):
                    for offsets, parent, _w in child_maps(nu, self.m, eps):
                        tuples += 1
                        level_c = tuple(k - e for k, e in zip(kappa, eps))
                        if not self.support_meets(level_c, parent):
                            return self._fail(levels, cells, tuples, kappa, nu, eps, offsets,
                                              "coarse child index leaves the active set")
                        selc = self._clamp(parent)
                        if not self.cell_inside(level_c, selc):
                            return self._fail(levels, cells, tuples, kappa, nu, eps, offsets,
                                              "selected coarse cell is not inside the domain")
                        if any(
                            e == 0 and a != b
                            for e, a, b in zip(eps, selc, sel)
                        ):
                            return self._fail(levels, cells, tuples, kappa, nu, eps, offsets,
                                              "inactive coordinate is not preserved")
                        # Bounding rectangle of the fine and coarse selected
                        # cells, compared in integers at the fine scale.
                        ok = True
                        for j in range(self.d):
                            f = 1 << eps[j]
                            lo = min(sel[j], selc[j] * f)
                            hi = max(sel[j] + 1, (selc[j] + 1) * f)
                            if lo < 0 or hi > self.width * scale[j]:
                                ok = False
                                break
                        if ok and self.kind == "lshape":
                            ok = any(
                                max(sel[j] + 1, (selc[j] + 1) << eps[j]) <= scale[j]
                                for j in range(self.d)
                            )
                        if not ok:
                            return self._fail(levels, cells, tuples, kappa, nu, eps, offsets,
                                              "bounding rectangle leaves the domain")
        return MTypeReport(True, levels, cells, tuples,
                           f"all checks passed for kind={self.kind}, m={self.m}")

    def _fail(self, levels, cells, tuples, kappa, nu, eps, offsets, why) -> MTypeReport:
        where = f"level {kappa}, index {nu}"
        if eps is not None:
            where += f", pattern {eps}, offsets {offsets}"
        return MTypeReport(False, levels, cells, tuples, f"{why} at {where}")

    # -- measure and float-side helpers --------------------------------

    def volume(self) -> Fraction:
        """Exact volume of the domain."""
        if self.kind == "cube":
            return Fraction(1)
        return Fraction(2**self.d - 1)

    def contains_points_float(self, x: np.ndarray) -> np.ndarray:
        """Vectorized open-domain membership for float points ``(n, d)``."""
        x = np.atleast_2d(x)
        if self.kind == "cube":
            return np.all((x > 0) & (x < 1), axis=1)
        return np.all((x > 0) & (x < 2), axis=1) & np.any(x < 1, axis=1)

    def boxes_inside_float(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Vectorized test that closed boxes ``[lo, hi]`` lie inside.

        Used by the difference operators: a mixed difference at ``x``
        with step ``h`` is admissible when the whole spanned box stays
        in the domain.
        """
        lo = np.atleast_2d(lo)
        hi = np.atleast_2d(hi)
        if self.kind == "cube":
            return np.all(lo >= 0, axis=1) & np.all(hi <= 1, axis=1)
        return (
            np.all(lo >= 0, axis=1)
            & np.all(hi <= 2, axis=1)
            & np.any(hi <= 1, axis=1)
        )

    def sample_interior(self, rng: np.random.Generator, count: int) -> tuple[np.ndarray, int]:
        """Rejection-sample ``count`` interior points; also return draws tried."""
        got: list[np.ndarray] = []
        total = tried = 0
        while total < count:
            batch = max(count - total, 64)
            x = rng.uniform(0.0, float(self.width), size=(batch, self.d))
            tried += batch
            keep = x[self.contains_points_float(x)]
            got.append(keep)
            total += len(keep)
        return np.concatenate(got)[:count], tried


def make_domain(kind: str, d: int, m: tuple[int, ...]) -> MTypeDomain:
    """Construct a built-in domain.

    Parameters
    ----------
    kind : str
        ``"cube"`` for the open unit cube, ``"lshape"`` for the doubled
        cube with the closed far corner removed (needs ``d >= 2``).
    d : int
        Dimension, at least 1.
    m : tuple of int
        Spline orders per axis; they size the active index sets and the
        locality radius.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    m = tuple(int(v) for v in m)
    if len(m) != d:
        raise ValueError("m must have length d")
    if any(v < 1 for v in m):
        raise ValueError("spline orders must be at least 1")
    if kind == "cube":
        width = 1
    elif kind == "lshape":
        if d < 2:
            raise ValueError("the l-shaped domain needs dimension at least 2")
        width = 2
    else:
        raise ValueError(f"unknown domain kind: {kind!r}")
    gamma0 = tuple(v + 2 for v in m)
    return MTypeDomain(kind=kind, d=d, m=m, kappa0=(0,) * d, gamma0=gamma0, width=width)
