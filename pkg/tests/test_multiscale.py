"""Tests for multiscale layers, prolongation, and reconstructions."""

import os
import subprocess
import sys
from fractions import Fraction
from itertools import product
from math import inf

import numpy as np
import pytest

from mixrec.domain import make_domain
from mixrec.indexkit import derive_rate_params, support_subsets
from mixrec.multiscale import (
    build_reconstruction,
    cell_frame,
    cell_nodes,
    prolong_H,
    quasi_interp_R,
    telescoped_V,
)
from mixrec.polylag import poly_eval


def poly2(x):
    return 1.5 - x[:, 0] + 0.25 * x[:, 0] ** 2 + x[:, 1] * (2.0 - x[:, 0] ** 2)


def prod_sin(x):
    return np.prod(np.sin(np.pi * np.asarray(x)), axis=-1)


class TestCellGeometryHelpers:
    def test_cell_frame_is_exact(self):
        anchor, scale = cell_frame((2, 0), (3, 1))
        assert anchor == (Fraction(3, 4), Fraction(1))
        assert scale == (Fraction(1, 4), Fraction(1))

    def test_cell_nodes_formula(self):
        # Node rho of cell nu at level kappa: (2 nu l + 2 rho + 1) / (2^(kappa+1) l).
        exact, pts = cell_nodes((1,), (1,), (3,))
        want = [Fraction(2 * 3 + 2 * r + 1, 4 * 3) for r in range(3)]
        assert [e[0] for e in exact] == want
        assert pts[:, 0].tolist() == [float(v) for v in want]

    def test_cell_nodes_c_order(self):
        exact, pts = cell_nodes((1, 1), (0, 0), (2, 3))
        # Last axis varies fastest.
        assert exact[0][0] == exact[1][0] == exact[2][0]
        assert len(exact) == 6
        assert pts.shape == (6, 2)

    def test_nodes_interior_to_cell(self):
        exact, _ = cell_nodes((3, 2), (5, 1), (3, 3))
        (alo, blo), (asc, bsc) = cell_frame((3, 2), (5, 1))
        for p in exact:
            assert alo < p[0] < alo + asc
            assert blo < p[1] < blo + bsc


class TestQuasiInterp:
    def test_reproduces_low_degree_polynomials(self, rng):
        dom = make_domain("cube", 2, (3, 3))
        layer = quasi_interp_R(dom, (1, 2), poly2, (3, 3))
        x = rng.uniform(0, 1, size=(200, 2))
        got = layer.eval_deriv((0, 0), x)
        assert np.max(np.abs(got - poly2(x))) < 1e-11

    def test_reproduces_constants_on_lshape(self, rng):
        dom = make_domain("lshape", 2, (2, 2))
        layer = quasi_interp_R(dom, (2, 1), lambda x: np.ones(len(x)), (3, 3))
        pts, _ = dom.sample_interior(rng, 150)
        got = layer.eval_deriv((0, 0), pts)
        assert np.max(np.abs(got - 1.0)) < 1e-12


class TestProlongation:
    @pytest.mark.parametrize("kappa", [(0, 0), (2, 1), (4, 4)])
    def test_identity_on_the_domain(self, kappa, rng):
        dom = make_domain("cube", 2, (2, 2))
        layer = quasi_interp_R(dom, kappa, poly2, (3, 3))
        x = rng.uniform(0, 1, size=(200, 2))
        base = layer.eval_deriv((0, 0), x)
        for eps in product((0, 1), repeat=2):
            fine = prolong_H(layer, eps)
            assert fine.level == tuple(k + e for k, e in zip(kappa, eps))
            got = fine.eval_deriv((0, 0), x)
            assert np.max(np.abs(got - base)) < 1e-11

    def test_identity_on_lshape(self, rng):
        dom = make_domain("lshape", 2, (1, 1))
        layer = quasi_interp_R(dom, (1, 2), prod_sin, (3, 3))
        pts, _ = dom.sample_interior(rng, 150)
        base = layer.eval_deriv((0, 0), pts)
        fine = prolong_H(layer, (1, 1))
        assert np.max(np.abs(fine.eval_deriv((0, 0), pts) - base)) < 1e-11


class TestTelescopedV:
    def test_zero_level_is_plain_interpolant(self, rng):
        dom = make_domain("cube", 2, (3, 3))
        poly = telescoped_V(dom, (0, 0), (0, 0), poly2, (3, 3))
        x = rng.uniform(0, 1, size=(50, 2))
        assert np.max(np.abs(poly_eval(poly, x) - poly2(x))) < 1e-12

    @pytest.mark.parametrize("kappa", [(1, 0), (1, 1), (2, 1)])
    def test_annihilates_low_degree_polynomials(self, kappa, rng):
        dom = make_domain("cube", 2, (3, 3))
        x = rng.uniform(0, 1, size=(30, 2))
        for nu in dom.enumerate_N(kappa)[:6]:
            poly = telescoped_V(dom, kappa, nu, poly2, (3, 3))
            assert np.max(np.abs(poly_eval(poly, x))) < 1e-10

    def test_annihilates_constants(self, rng):
        dom = make_domain("lshape", 2, (2, 2))
        x = rng.uniform(0, 2, size=(20, 2))
        ones = lambda p: np.ones(len(p))
        for nu in dom.enumerate_N((1, 1))[:4]:
            poly = telescoped_V(dom, (1, 1), nu, ones, (3, 3))
            assert np.max(np.abs(poly_eval(poly, x))) < 1e-12


def base_params(lam=(0, 0)):
    return derive_rate_params(2, (2.0, 2.0), 2.0, inf, 2.0, lam, (3, 3))


class TestReconstruction:
    def test_polynomial_inputs_are_exact(self, rng):
        params = base_params()
        dom = make_domain("cube", 2, params.m)
        rec = build_reconstruction(dom, params, 3, poly2)
        x = rng.uniform(0, 1, size=(300, 2))
        assert np.max(np.abs(rec.eval_deriv((0, 0), x) - poly2(x))) < 1e-9

    def test_compiled_path_matches_reference(self, rng):
        params = base_params()
        dom = make_domain("cube", 2, params.m)
        rec = build_reconstruction(dom, params, 3, prod_sin)
        x = rng.uniform(0, 1, size=(120, 2))
        for lam in [(0, 0), (1, 0), (1, 1)]:
            fast = rec.eval_deriv(lam, x)
            slow = rec.eval_deriv_direct(lam, x)
            scale = 1.0 + np.max(np.abs(slow))
            assert np.max(np.abs(fast - slow)) / scale < 1e-12

    def test_layers_cover_the_cross(self):
        params = base_params()
        dom = make_domain("cube", 2, params.m)
        rec = build_reconstruction(dom, params, 2, prod_sin)
        assert set(rec.layers) == set(rec.cross)
        assert set(rec.cross) == {
            (0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0),
        }

    def test_error_decays_with_depth(self, rng):
        params = base_params()
        dom = make_domain("cube", 2, params.m)
        x = rng.uniform(0, 1, size=(400, 2))
        errs = []
        for r in (1, 3, 5):
            rec = build_reconstruction(dom, params, r, prod_sin)
            errs.append(np.max(np.abs(rec.eval_deriv((0, 0), x) - prod_sin(x))))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 0.1

    def test_oracle_sees_each_point_once(self):
        params = base_params()
        dom = make_domain("cube", 2, params.m)
        seen = []

        def counting(x):
            seen.append(np.asarray(x))
            return prod_sin(x)

        build_reconstruction(dom, params, 2, counting)
        rows = np.concatenate(seen)
        distinct = np.unique(rows, axis=0)
        assert len(distinct) == len(rows)

    def test_rejects_negative_depth(self):
        params = base_params()
        dom = make_domain("cube", 2, params.m)
        with pytest.raises(ValueError):
            build_reconstruction(dom, params, -1, prod_sin)


class TestBackendParity:
    def test_numpy_backend_matches_numba(self, tmp_path):
        script = (
            "import numpy as np\n"
            "from math import inf\n"
            "from mixrec import derive_rate_params, make_domain, build_reconstruction\n"
            "from mixrec._kernels import active_backend\n"
            "import sys\n"
            "f = lambda x: np.prod(np.sin(np.pi * x), axis=-1)\n"
            "params = derive_rate_params(2, (2.0, 2.0), 2.0, inf, 2.0, (0, 0), (3, 3))\n"
            "dom = make_domain('cube', 2, params.m)\n"
            "rec = build_reconstruction(dom, params, 3, f)\n"
            "rng = np.random.default_rng(11)\n"
            "x = rng.uniform(0, 1, size=(200, 2))\n"
            "out = np.stack([rec.eval_deriv((0, 0), x), rec.eval_deriv((1, 0), x)])\n"
            "np.save(sys.argv[1], out)\n"
            "print(active_backend())\n"
        )
        results = {}
        for backend in ("numpy", "auto"):
            out = tmp_path / f"{backend}.npy"
            env = dict(os.environ, MIXREC_BACKEND=backend)
            proc = subprocess.run(
                [sys.executable, "-c", script, str(out)],
                env=env,
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            results[backend] = np.load(out)
        diff = np.max(np.abs(results["numpy"] - results["auto"]))
        assert diff < 1e-12
