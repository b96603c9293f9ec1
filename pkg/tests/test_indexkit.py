"""Tests for multi-index utilities and rate-parameter derivation."""

from fractions import Fraction
from math import comb, inf

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixrec.indexkit import (
    child_maps,
    child_offsets,
    cross_cardinality_1,
    derive_rate_params,
    hyperbolic_cross,
    refinement_coeff,
    refinement_coeffs,
    smoothness_order,
    support,
    support_subsets,
)


class TestSmoothnessOrder:
    def test_integer_alpha_rounds_up(self):
        assert smoothness_order((2.0, 2.0)) == (3, 3)
        assert smoothness_order((1.0,)) == (2,)

    def test_fractional_alpha(self):
        assert smoothness_order((1.5,)) == (2,)
        assert smoothness_order((0.7, 2.3)) == (1, 3)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            smoothness_order((0.0,))


class TestRefinementCoeffs:
    def test_hat_coefficients(self):
        assert refinement_coeffs(1) == (Fraction(1, 2), Fraction(1), Fraction(1, 2))

    def test_quadratic_coefficients(self):
        assert refinement_coeffs(2) == (
            Fraction(1, 4),
            Fraction(3, 4),
            Fraction(3, 4),
            Fraction(1, 4),
        )

    @pytest.mark.parametrize("m", range(1, 9))
    def test_total_sum_is_two(self, m):
        assert sum(refinement_coeffs(m)) == Fraction(2)

    @pytest.mark.parametrize("m", range(1, 9))
    def test_parity_sums_are_one(self, m):
        coeffs = refinement_coeffs(m)
        assert sum(coeffs[0::2]) == Fraction(1)
        assert sum(coeffs[1::2]) == Fraction(1)

    @pytest.mark.parametrize("m", range(1, 9))
    def test_binomial_form(self, m):
        for mu in range(m + 2):
            assert refinement_coeff(m, mu) == Fraction(comb(m + 1, mu), 2**m)


class TestChildOffsets:
    def test_even_index(self):
        assert child_offsets(4, True, 1) == [(0, 2), (2, 1)]

    def test_odd_index(self):
        assert child_offsets(3, True, 1) == [(1, 1)]

    def test_inactive_axis_passes_through(self):
        assert child_offsets(5, False, 2) == [(None, 5)]

    @given(nu=st.integers(-20, 20), m=st.integers(1, 8))
    def test_offsets_reconstruct_index(self, nu, m):
        for mu, parent in child_offsets(nu, True, m):
            assert nu == 2 * parent + mu
            assert 0 <= mu <= m + 1


class TestChildMaps:
    @given(
        nu=st.tuples(st.integers(-8, 8), st.integers(-8, 8)),
        m=st.tuples(st.integers(1, 4), st.integers(1, 4)),
        eps=st.tuples(st.integers(0, 1), st.integers(0, 1)),
    )
    def test_weights_sum_to_one(self, nu, m, eps):
        maps = child_maps(nu, m, eps)
        assert sum(w for _, _, w in maps) == Fraction(1)

    def test_inactive_axes_keep_index(self):
        maps = child_maps((5, 3), (2, 2), (0, 1))
        for _, parent, _ in maps:
            assert parent[0] == 5

    def test_offsets_in_lexicographic_order(self):
        maps = child_maps((4, 6), (3, 3), (1, 1))
        offsets = [off for off, _, _ in maps]
        assert offsets == sorted(offsets)

    def test_no_active_axes_is_identity(self):
        assert child_maps((2, 7), (1, 1), (0, 0)) == [((), (2, 7), Fraction(1))]


class TestSupport:
    def test_axes_of_nonzero_entries(self):
        assert support((2, 0)) == (0,)
        assert support((0, 0, 3)) == (2,)

    def test_subsets_of_full_support(self):
        subs = support_subsets((1, 1))
        assert set(subs) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_subsets_respect_support(self):
        for eps in support_subsets((3, 0, 2)):
            assert eps[1] == 0

    def test_zero_level_has_single_subset(self):
        assert support_subsets((0, 0)) == [(0, 0)]


class TestHyperbolicCross:
    def test_small_isotropic_cross(self):
        got = hyperbolic_cross((1.0, 1.0), 2)
        assert set(got) == {(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)}

    def test_one_dimensional_count(self):
        assert len(hyperbolic_cross((1.0,), 3)) == 4

    def test_lexicographic_order(self):
        got = hyperbolic_cross((1.0, 1.5), 6)
        assert got == sorted(got)

    def test_boundary_index_included(self):
        assert (0, 2) in hyperbolic_cross((1.0, 1.5), 3)

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("r", [0, 1, 4, 9])
    def test_unit_weight_cardinality_is_binomial(self, d, r):
        got = hyperbolic_cross((1.0,) * d, r)
        assert len(got) == comb(r + d, d)
        if d == 1:
            assert len(got) == cross_cardinality_1(d, r)

    def test_cardinality_tracks_rate_model(self):
        # |cross| / (2^r r^(d-1)) stays bounded above and below, d=2.
        ratios = []
        for r in range(4, 13):
            n = sum(1 << k[0] for k in hyperbolic_cross((1.0, 1.0), r))
            ratios.append(n / (2**r * r))
        assert max(ratios) / min(ratios) < 30

    @given(
        beta1=st.sampled_from([1.0, 1.25, 1.5, 2.0]),
        r=st.integers(0, 8),
    )
    def test_membership_is_exact(self, beta1, r):
        beta = (1.0, beta1)
        got = set(hyperbolic_cross(beta, r))
        for k0 in range(r + 2):
            for k1 in range(int(r / beta1) + 2):
                expect = k0 * 1.0 + k1 * beta1 <= r + 1e-9
                assert ((k0, k1) in got) == expect


class TestDeriveRateParams:
    def test_symmetric_base_case(self):
        params = derive_rate_params(2, (2.0, 2.0), 2.0, inf, 2.0, (0, 0))
        assert params.l == (3, 3)
        assert params.m == (3, 3)
        assert params.mrate == 2.0
        assert params.crate == 2
        assert params.jset == (0, 1)
        assert params.beta == (1.0, 1.0)
        assert params.logexp == 3.0

    def test_anisotropic_smoothness(self):
        params = derive_rate_params(2, (1.0, 2.0), 2.0, inf, 2.0, (0, 0))
        assert params.mrate == 1.0
        assert params.crate == 1
        assert params.jset == (0,)
        assert params.beta == (1.0, 1.5)
        assert params.logexp == 0.0

    def test_derivative_shifts_the_gap(self):
        params = derive_rate_params(2, (2.0, 2.0), 2.0, inf, 2.0, (1, 0), (3, 3))
        assert params.a == (1.0, 2.0)
        assert params.mrate == 1.0
        assert params.jset == (0,)
        assert params.beta == (1.0, 1.5)
        assert params.logexp == 0.0

    def test_norm_gap_enters_rate(self):
        params = derive_rate_params(2, (2.0, 2.0), 2.0, inf, inf, (0, 0))
        assert params.a == (1.5, 1.5)
        assert params.mrate == 1.5
        assert params.crate == 2

    def test_finite_theta_enters_log_exponent(self):
        params = derive_rate_params(2, (2.0, 2.0), 2.0, 2.0, 2.0, (0, 0))
        assert params.logexp == pytest.approx(2.5)

    def test_weaker_target_norms_do_not_pay(self):
        # q <= p leaves the integrability gap at zero.
        params = derive_rate_params(1, (1.5,), 2.0, inf, 1.5, (0,))
        assert params.a == (1.5,)

    def test_stronger_target_norms_pay_the_gap(self):
        params = derive_rate_params(1, (1.5,), 2.0, inf, 4.0, (0,))
        assert params.a == (1.25,)

    def test_near_ties_share_the_argmin(self):
        params = derive_rate_params(2, (2.0, 2.0 + 1e-13), 2.0, inf, 2.0, (0, 0))
        assert params.jset == (0, 1)

    def test_rejects_infinite_p(self):
        with pytest.raises(ValueError, match="p must"):
            derive_rate_params(1, (2.0,), inf, inf, 2.0, (0,))

    def test_rejects_small_alpha(self):
        with pytest.raises(ValueError, match="alpha"):
            derive_rate_params(1, (0.4,), 2.0, inf, 2.0, (0,))

    def test_rejects_exhausted_smoothness(self):
        with pytest.raises(ValueError, match="alpha"):
            derive_rate_params(2, (1.0, 1.0), 2.0, inf, 2.0, (1, 0), (2, 2))

    def test_rejects_derivative_above_spline_order(self):
        with pytest.raises(ValueError, match="spline order"):
            derive_rate_params(1, (3.5,), 2.0, inf, 2.0, (3,), (2,))

    def test_rejects_large_spline_orders(self):
        with pytest.raises(ValueError, match="spline orders above"):
            derive_rate_params(1, (2.0,), 2.0, inf, 2.0, (0,), (9,))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            derive_rate_params(2, (2.0,), 2.0, inf, 2.0, (0, 0))
