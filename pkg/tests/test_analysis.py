"""Closed-form analysis module against hand values and enumeration oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from racsim import analysis
from racsim.analysis import (BlindingReport, ConditioningImpossibleError,
                             alpha_mms, alpha_sets, blinding_check,
                             clustering_deception, lemma1_h, mms_coefficients,
                             p2_max, theory_point)

from oracles import oracle_alpha_mms, oracle_alpha_sets

probabilities = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestMmsCoefficients:
    def test_no_flipping_always_matches(self):
        c = mms_coefficients(0.0, 0.0)
        assert c.f_bb[0] == 1.0 and c.f_bh[0] == 1.0 and c.f_hb[0] == 1.0
        # every mismatch case is impossible for every role pairing
        for m in (2, 3, 4):
            assert c.f_bb[m - 1] == 0.0
            assert c.f_bh[m - 1] == 0.0
            assert c.f_hb[m - 1] == 0.0

    def test_deterministic_double_flip_self_consistent(self):
        # p1=1 flips both copies with certainty, so they still agree
        c = mms_coefficients(1.0, 0.0)
        assert c.f_bb[0] == 1.0 and c.f_bh[0] == 1.0

    def test_hand_values_p1_half(self):
        c = mms_coefficients(0.5, 0.0)
        assert c.f_bb[0] == pytest.approx(0.25, abs=1e-15)
        assert c.f_bh[0] == pytest.approx(0.5, abs=1e-15)

    @given(probabilities, probabilities)
    @settings(max_examples=200, deadline=None)
    def test_cases_sum_to_one_per_role_pair(self, p1, p2):
        c = mms_coefficients(p1, p2)
        for coeffs in (c.f_bb, c.f_bh, c.f_hb, c.f_hh):
            assert sum(coeffs) == pytest.approx(1.0, abs=1e-12)

    @given(probabilities, probabilities)
    @settings(max_examples=100, deadline=None)
    def test_matches_enumeration_oracle(self, p1, p2):
        c = mms_coefficients(p1, p2)
        from oracles import enumerate_pair_cases
        for roles, coeffs in (((1, 1), c.f_bb), ((0, 1), c.f_hb),
                              ((1, 0), c.f_bh), ((0, 0), c.f_hh)):
            expected = enumerate_pair_cases(roles[0], roles[1], p1, p2)
            for m in range(4):
                assert coeffs[m] == pytest.approx(expected[m], abs=1e-12)

    def test_flip_symmetry_p1_to_one_minus_p1(self):
        # coefficients built from p1(1-p1) are invariant under p1 -> 1-p1
        for p1, p2 in ((0.2, 0.3), (0.4, 0.9), (0.05, 0.6)):
            a = mms_coefficients(p1, p2)
            b = mms_coefficients(1.0 - p1, p2)
            assert a.f_bb[0] == pytest.approx(b.f_bb[0], abs=1e-14)
            assert a.f_bh[0] == pytest.approx(b.f_bh[0], abs=1e-14)
            assert a.f_hb[1] == pytest.approx(b.f_hb[1], abs=1e-14)
            assert a.f_bh[3] == pytest.approx(b.f_bh[3], abs=1e-14)


class TestAlphaMms:
    def test_no_byzantines(self):
        # honest networks never mismatch, so only the both-match conditional
        # is defined (and zero); the strict op refuses the impossible cases
        with pytest.raises(ConditioningImpossibleError):
            alpha_mms(0.0, 0.3, 0.4)
        tp = theory_point(0.0, 0.3, 0.4)
        assert tp.alpha_mms[0] == 0.0
        assert all(math.isnan(a) for a in tp.alpha_mms[1:])

    def test_hand_value_alpha1(self):
        a1, _, _, _ = alpha_mms(0.5, 0.5, 0.0)
        assert a1 == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_impossible_conditioning_raises(self):
        with pytest.raises(ConditioningImpossibleError):
            alpha_mms(0.5, 0.0, 0.0)  # nobody ever mismatches

    def test_oracle_equivalence_random_triples(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a0, p1, p2 = rng.uniform(0.02, 0.98, 3)
            got = alpha_mms(a0, p1, p2)
            expected = oracle_alpha_mms(a0, p1, p2)
            for g, e in zip(got, expected):
                assert g == pytest.approx(e, abs=1e-12)


class TestAlphaSets:
    def test_no_byzantines(self):
        assert alpha_sets(0.0, 0.3, 0.4) == (0.0, 0.0, 1.0, 0.0)

    def test_hand_point(self):
        a_u, a_o, p_u, p_o = alpha_sets(0.5, 0.5, 0.0)
        assert a_u == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert p_u == pytest.approx(0.5625, abs=1e-15)
        # recover the complement fraction from total probability
        assert a_o == pytest.approx((0.5 - a_u * p_u) / p_o, abs=1e-15)

    @given(st.floats(0.0, 1.0), probabilities, probabilities)
    @settings(max_examples=300, deadline=None)
    def test_total_probability_identity(self, a0, p1, p2):
        a_u, a_o, p_u, p_o = alpha_sets(a0, p1, p2)
        assert a_u * p_u + a_o * p_o == pytest.approx(a0, abs=1e-12)

    def test_trust_ordering_below_cutoff(self):
        # the all-match set is cleaner, its complement dirtier
        for a0 in (0.1, 0.3, 0.5, 0.65, 0.8):
            for p1 in np.linspace(0, 1, 11):
                for p2 in np.linspace(0, 1, 11):
                    a_u, a_o, p_u, p_o = alpha_sets(a0, float(p1), float(p2))
                    assert a_u <= a0 + 1e-12
                    if p_o > 0:
                        assert a_o >= a0 - 1e-12

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            a0, p1, p2 = rng.uniform(0.02, 0.98, 3)
            got = alpha_sets(a0, p1, p2)
            expected = oracle_alpha_sets(a0, p1, p2)
            for g, e in zip(got, expected):
                assert g == pytest.approx(e, abs=1e-12)


class TestBlinding:
    def test_honest_network_not_blind(self):
        rep = blinding_check(0.0, 0.5, 0.5, 0.9, 0.1)
        assert rep.pi_under[0] == pytest.approx(0.9)
        assert rep.kld_under > 0.1
        assert not rep.blind

    def test_blind_exactly_on_half_flip_locus(self):
        # construct alpha0 so that alpha_under * p1 = 1/2, then D must vanish
        for p1 in (0.6, 0.75, 0.9, 1.0):
            for p2 in (0.0, 0.4, 0.8):
                target = 0.5 / p1
                lo, hi = 0.0, 1.0
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if alpha_sets(mid, p1, p2)[0] < target:
                        lo = mid
                    else:
                        hi = mid
                a0 = 0.5 * (lo + hi)
                rep = blinding_check(a0, p1, p2, 0.9, 0.1)
                assert rep.kld_under < 1e-12

    def test_corner_attack_blinds_both_sets(self):
        rep = blinding_check(0.5, 1.0, 0.0, 0.9, 0.1)
        assert rep.kld_under == 0.0
        assert rep.kld_over == 0.0
        assert rep.blind

    def test_grid_minimum_sits_at_corner(self):
        # numerical grid minimization of max(kld_under, kld_over) at alpha0=0.5
        grid = np.linspace(0.0, 1.0, 21)
        best, best_pt = None, None
        for p1 in grid:
            for p2 in grid:
                rep = blinding_check(0.5, float(p1), float(p2), 0.9, 0.1)
                val = max(rep.kld_under, rep.kld_over)
                if best is None or val < best:
                    best, best_pt = val, (float(p1), float(p2))
        assert best < 1e-12
        assert best_pt == (1.0, 0.0)

    @given(probabilities, probabilities, probabilities)
    @settings(max_examples=200, deadline=None)
    def test_kld_nonnegative_and_pi_complement(self, a0, p1, p2):
        rep = blinding_check(a0, p1, p2, 0.9, 0.1)
        assert rep.kld_under >= 0.0 and rep.kld_over >= 0.0
        assert rep.pi_under[2] == pytest.approx(1.0 - rep.pi_under[0], abs=1e-12)
        assert rep.pi_under[3] == pytest.approx(1.0 - rep.pi_under[1], abs=1e-12)
        assert rep.pi_over[2] == pytest.approx(1.0 - rep.pi_over[0], abs=1e-12)


class TestClusteringDeception:
    def test_silent_attacker_hides(self):
        p_hh, p_bh, kld = clustering_deception(0.0, 0.9, 0.1)
        assert p_bh == pytest.approx(p_hh, abs=1e-15)
        assert kld == pytest.approx(0.0, abs=1e-15)

    def test_uninformative_sensors_hide_everything(self):
        for p1 in (0.2, 0.5, 0.9):
            _, _, kld = clustering_deception(p1, 0.5, 0.5)
            assert kld == pytest.approx(0.0, abs=1e-12)

    def test_hand_values(self):
        p_hh, p_bh, kld = clustering_deception(0.5, 0.9, 0.1, 0.5)
        assert p_hh == pytest.approx(0.18, abs=1e-15)
        assert p_bh == pytest.approx(0.5, abs=1e-15)
        assert kld > 0.0

    @given(probabilities)
    @settings(max_examples=100, deadline=None)
    def test_kld_nonnegative(self, p1):
        _, _, kld = clustering_deception(p1, 0.9, 0.1)
        assert kld >= 0.0


class TestLemma1:
    def test_degenerate_populations(self):
        for p1, p2 in ((0.3, 0.6), (0.9, 0.2)):
            assert lemma1_h(0.0, p1, p2) == pytest.approx(0.0, abs=1e-15)
            assert lemma1_h(1.0, p1, p2) == pytest.approx(0.0, abs=1e-12)

    def test_p2_max_at_cutoff(self):
        assert p2_max(0.8) == pytest.approx(1.0, abs=1e-12)
        assert p2_max(0.3) == 1.0
        assert p2_max(0.7) == 1.0          # (0.7-2)/(2(1-1.4)) = 1.625, clamped
        assert p2_max(0.9) < 1.0

    def test_stationary_point_at_half(self):
        # central finite difference of alpha_under in p1 vanishes at p1 = 1/2
        eps = 1e-6
        for a0 in (0.2, 0.5, 0.8):
            for p2 in np.linspace(0.0, 1.0, 6):
                up = alpha_sets(a0, 0.5 + eps, float(p2))[0]
                dn = alpha_sets(a0, 0.5 - eps, float(p2))[0]
                assert abs(up - dn) / (2 * eps) < 1e-6


class TestTheoryPoint:
    def test_bundle_consistency(self):
        tp = theory_point(0.35, 0.6, 0.4)
        assert tp.h == pytest.approx(tp.alpha_under - 0.35, abs=1e-15)
        assert tp.alpha_mms[0] == pytest.approx(tp.alpha_under, abs=1e-15)
        assert tp.scalar("alpha1") == tp.alpha_mms[0]
        assert tp.scalar("pi_under_11") == tp.pi_under[0]

    def test_impossible_cases_become_nan(self):
        tp = theory_point(0.5, 0.0, 0.0)
        assert math.isnan(tp.alpha_mms[1])
        assert tp.alpha_mms[0] == pytest.approx(0.5, abs=1e-15)
