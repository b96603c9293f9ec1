"""Tests for local tensor polynomials and Lagrange interpolation."""

from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixrec.polylag import (
    LocalPoly,
    interpolate_cell,
    nodes_1d,
    nodes_float,
    poly_axpy,
    poly_eval,
    poly_eval_deriv,
    poly_reframe,
)


def tensor_nodes(anchor, scale, shape):
    axes = [
        [float(a + s * t) for t in nodes_1d(lj)]
        for a, s, lj in zip(anchor, scale, shape)
    ]
    return np.array(list(product(*axes)))


class TestNodes:
    def test_midpoint_triple(self):
        assert nodes_1d(3) == (Fraction(1, 6), Fraction(1, 2), Fraction(5, 6))

    def test_single_node_is_center(self):
        assert nodes_1d(1) == (Fraction(1, 2),)

    def test_rejects_zero_count(self):
        with pytest.raises(ValueError):
            nodes_1d(0)

    def test_floats_match_exact(self):
        assert nodes_float(4).tolist() == [float(t) for t in nodes_1d(4)]


class TestLocalPoly:
    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            LocalPoly((Fraction(0),), (Fraction(1), Fraction(1)), np.zeros(2))

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            LocalPoly((Fraction(0),), (Fraction(0),), np.zeros(2))

    def test_rejects_rank_mismatch(self):
        with pytest.raises(ValueError):
            LocalPoly((Fraction(0),), (Fraction(1),), np.zeros((2, 2)))

    def test_same_frame(self):
        a = LocalPoly((Fraction(0),), (Fraction(1, 2),), np.ones(2))
        b = LocalPoly((Fraction(0),), (Fraction(1, 2),), np.zeros(3))
        c = LocalPoly((Fraction(1, 2),), (Fraction(1, 2),), np.ones(2))
        assert a.same_frame(b)
        assert not a.same_frame(c)


class TestInterpolation:
    @given(
        shape=st.tuples(st.integers(1, 5)),
        seed=st.integers(0, 2**31 - 1),
    )
    @settings(max_examples=40, deadline=None)
    def test_matches_node_values_1d(self, shape, seed):
        rng = np.random.default_rng(seed)
        values = rng.standard_normal(shape)
        anchor, scale = (Fraction(1, 4),), (Fraction(1, 2),)
        p = interpolate_cell(anchor, scale, values)
        pts = tensor_nodes(anchor, scale, shape)
        got = poly_eval(p, pts)
        assert np.max(np.abs(got - values.ravel())) < 1e-12

    @given(
        shape=st.tuples(st.integers(1, 4), st.integers(1, 4)),
        seed=st.integers(0, 2**31 - 1),
    )
    @settings(max_examples=40, deadline=None)
    def test_matches_node_values_2d(self, shape, seed):
        rng = np.random.default_rng(seed)
        values = rng.standard_normal(shape)
        anchor = (Fraction(0), Fraction(1, 8))
        scale = (Fraction(1, 4), Fraction(1, 8))
        p = interpolate_cell(anchor, scale, values)
        pts = tensor_nodes(anchor, scale, shape)
        got = poly_eval(p, pts)
        assert np.max(np.abs(got - values.ravel())) < 1e-12

    def test_reproduces_polynomials_exactly(self, rng):
        # Degree below the node count per axis interpolates exactly.
        def f(x):
            return 2.0 + x[:, 0] - 0.5 * x[:, 0] ** 2 + x[:, 1] * (1 + x[:, 0])

        anchor = (Fraction(1, 2), Fraction(0))
        scale = (Fraction(1, 4), Fraction(1, 2))
        nodes = tensor_nodes(anchor, scale, (3, 2))
        p = interpolate_cell(anchor, scale, f(nodes).reshape(3, 2))
        x = np.column_stack(
            [rng.uniform(0, 2, size=100), rng.uniform(-1, 1, size=100)]
        )
        assert np.max(np.abs(poly_eval(p, x) - f(x))) < 1e-12


class TestEvalDeriv:
    def test_zero_order_matches_eval(self, rng):
        p = LocalPoly(
            (Fraction(0), Fraction(0)),
            (Fraction(1), Fraction(1)),
            rng.standard_normal((3, 3)),
        )
        x = rng.uniform(-1, 2, size=(50, 2))
        assert np.array_equal(poly_eval_deriv(p, (0, 0), x), poly_eval(p, x))

    def test_known_cubic_derivative(self):
        # p(t) = t^3 on unit frame: dp/dx = 3 t^2 / scale.
        p = LocalPoly((Fraction(0),), (Fraction(1, 2),), np.array([0.0, 0.0, 0.0, 1.0]))
        x = np.array([[0.25]])
        got = poly_eval_deriv(p, (1,), x)
        assert got == pytest.approx(3 * 0.5**2 / 0.5, abs=1e-14)

    def test_matches_central_differences(self, rng):
        p = LocalPoly(
            (Fraction(1, 4), Fraction(1, 8)),
            (Fraction(1, 2), Fraction(1, 4)),
            rng.standard_normal((4, 3)),
        )
        x = rng.uniform(0, 1, size=(30, 2))
        h = 1e-6
        for axis, mu in [(0, (1, 0)), (1, (0, 1))]:
            xp = x.copy()
            xm = x.copy()
            xp[:, axis] += h
            xm[:, axis] -= h
            fd = (poly_eval(p, xp) - poly_eval(p, xm)) / (2 * h)
            got = poly_eval_deriv(p, mu, x)
            assert np.max(np.abs(fd - got)) < 1e-6

    def test_order_beyond_degree_vanishes(self, rng):
        p = LocalPoly((Fraction(0),), (Fraction(1),), np.array([1.0, 2.0]))
        x = rng.uniform(size=(10, 1))
        assert np.all(poly_eval_deriv(p, (2,), x) == 0.0)


class TestAxpy:
    def test_accumulates_in_place_semantics(self, rng):
        frame = ((Fraction(0),), (Fraction(1),))
        a = LocalPoly(*frame, np.array([1.0, 0.0, 2.0]))
        b = LocalPoly(*frame, np.array([0.0, 3.0]))
        out = poly_axpy(a, 2.0, b)
        x = rng.uniform(size=(20, 1))
        want = poly_eval(a, x) + 2.0 * poly_eval(b, x)
        assert np.max(np.abs(poly_eval(out, x) - want)) < 1e-14

    def test_rejects_frame_mismatch(self):
        a = LocalPoly((Fraction(0),), (Fraction(1),), np.ones(2))
        b = LocalPoly((Fraction(1),), (Fraction(1),), np.ones(2))
        with pytest.raises(ValueError):
            poly_axpy(a, 1.0, b)


class TestReframe:
    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_evaluation_is_invariant(self, seed):
        rng = np.random.default_rng(seed)
        p = LocalPoly(
            (Fraction(1, 4), Fraction(-1, 2)),
            (Fraction(1, 2), Fraction(2)),
            rng.standard_normal((3, 4)),
        )
        q = poly_reframe(p, (Fraction(0), Fraction(0)), (Fraction(1, 8), Fraction(1, 2)))
        x = rng.uniform(-1, 2, size=(60, 2))
        assert np.max(np.abs(poly_eval(p, x) - poly_eval(q, x))) < 1e-10

    def test_round_trip_recovers_coefficients(self, rng):
        frame_a = ((Fraction(0),), (Fraction(1),))
        frame_b = ((Fraction(3, 8),), (Fraction(1, 4),))
        p = LocalPoly(*frame_a, rng.standard_normal(4))
        back = poly_reframe(poly_reframe(p, *frame_b), *frame_a)
        assert np.max(np.abs(back.coeffs - p.coeffs)) < 1e-12

    def test_identity_reframe_is_exact(self, rng):
        p = LocalPoly((Fraction(1, 2),), (Fraction(1, 4),), rng.standard_normal(5))
        q = poly_reframe(p, (Fraction(1, 2),), (Fraction(1, 4),))
        assert np.array_equal(q.coeffs, p.coeffs)
