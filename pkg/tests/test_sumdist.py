"""Weighted-sum distributions: recursion vs convolution, the conditioning
probability identities, conditional laws, and the joint (count, weight) pmf."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hs

from combstruct import structures as st
from combstruct import sumdist as sd
from combstruct import oracle as orc
from combstruct.errors import NumericGuardError, ParameterDomainError
from combstruct.indep_process import TiltedParams, choose_x, z_law

PERM = st.permutations()
INTPART = st.integer_partitions()
DISTINCT = st.distinct_partitions()


class TestWeightedSumPmf:
    def test_single_index_poisson(self):
        pv = sd.weighted_sum_pmf(PERM, [1], 12, TiltedParams(1, 1))
        for k in range(13):
            assert pv.p[k] == pytest.approx(math.exp(-1) / math.factorial(k),
                                            rel=1e-12)

    def test_full_set_hits_prob_T(self):
        pv = sd.weighted_sum_pmf(PERM, [1, 2, 3], 3, TiltedParams(1, 1))
        assert pv.p[3] == pytest.approx(math.exp(-11 / 6), rel=1e-12)

    def test_empty_set(self):
        pv = sd.weighted_sum_pmf(PERM, [], 5, TiltedParams(1, 1))
        assert pv.p[0] == 1.0 and pv.tail == 0.0

    def test_index_above_truncation_feeds_tail(self):
        # B = {5} truncated at 3: only the zero draw stays in the body
        pv = sd.weighted_sum_pmf(PERM, [5], 3, TiltedParams(1, 1))
        lam = 1 / 5
        assert pv.p[0] == pytest.approx(math.exp(-lam), rel=1e-12)
        assert pv.p[1:].sum() == 0.0
        assert pv.tail == pytest.approx(1 - math.exp(-lam), rel=1e-12)

    def test_scaled_index_support(self):
        # R_{3} = 3 Z_3 lives on multiples of 3
        pv = sd.weighted_sum_pmf(INTPART, [3], 10, TiltedParams(0.5, 1))
        assert pv.p[1] == 0.0 and pv.p[2] == 0.0
        law = z_law(INTPART, 3, TiltedParams(0.5, 1))
        for k in range(4):
            assert pv.p[3 * k] == pytest.approx(law.pmf(k), rel=1e-13)

    @pytest.mark.parametrize("spec,x", [(PERM, 1.0), (INTPART, 0.6),
                                        (DISTINCT, 1.0)])
    def test_recursion_vs_convolution_random_B(self, spec, x):
        rng = random.Random(hash(spec.name) & 0xFFFF)
        params = TiltedParams(x, 1)
        for trial in range(4):
            n = 60
            B = sorted(rng.sample(range(1, n + 1), rng.randint(1, 20)))
            pr = sd.weighted_sum_pmf(spec, B, n, params, method="recursion")
            pc = sd.weighted_sum_pmf(spec, B, n, params, method="convolution")
            assert float(np.max(np.abs(pr.p - pc.p))) < 1e-10
            assert abs(pr.tail - pc.tail) < 1e-10

    @pytest.mark.parametrize("theta", [0.5, 2.0])
    def test_tilted_recursion_vs_convolution(self, theta):
        params = TiltedParams(0.45, theta)
        B = [1, 2, 5, 9, 13]
        pr = sd.weighted_sum_pmf(st.polynomials(2), B, 40, params, "recursion")
        pc = sd.weighted_sum_pmf(st.polynomials(2), B, 40, params, "convolution")
        assert float(np.max(np.abs(pr.p - pc.p))) < 1e-10

    def test_selection_signed_recursion_guarded(self):
        params = TiltedParams(1.0, 1)
        pv = sd.weighted_sum_pmf(DISTINCT, [1, 3, 4, 7], 30, params,
                                 method="recursion")
        pc = sd.weighted_sum_pmf(DISTINCT, [1, 3, 4, 7], 30, params,
                                 method="convolution")
        assert float(np.max(np.abs(pv.p - pc.p))) < 1e-8

    def test_rescaling_large_n(self):
        # set partitions at n = 1200: coefficients overflow a double by far,
        # exercising the shared base-2 exponent; check the local-limit value
        spec = st.set_partitions()
        from combstruct.indep_process import solve_xex, sum_moments
        n = 1200
        params = TiltedParams(solve_xex(n), 1)
        pv = sd.weighted_sum_pmf(spec, range(1, n + 1), n, params)
        sigma = math.sqrt(sum_moments(spec, n, params).variance)
        assert abs(pv.p[n] * math.sqrt(2 * math.pi) * sigma - 1) < 0.01

    @settings(max_examples=25, deadline=None)
    @given(hs.sets(hs.integers(min_value=1, max_value=24), max_size=10))
    def test_recursion_vs_convolution_property(self, B):
        params = TiltedParams(0.7, 1)
        pr = sd.weighted_sum_pmf(INTPART, B, 24, params, method="recursion")
        pc = sd.weighted_sum_pmf(INTPART, B, 24, params, method="convolution")
        assert float(np.max(np.abs(pr.p - pc.p))) < 1e-11


class TestProbT:
    def test_permutations_closed_value(self):
        p = sd.prob_T_eq_n(PERM, 3, TiltedParams(1, 1))
        assert p == pytest.approx(math.exp(-(1 + 1 / 2 + 1 / 3)), rel=1e-12)

    def test_set_partition_moser_wyman(self):
        from combstruct.indep_process import solve_xex
        n = 50
        params = TiltedParams(solve_xex(n), 1)
        p = sd.prob_T_eq_n(st.set_partitions(), n, params)
        assert abs(p / (1 / math.sqrt(2 * math.pi * n * math.log(n))) - 1) < 0.15

    @pytest.mark.parametrize("nn", [50, 200])
    def test_identity_all_builtins(self, nn):
        for spec in (st.permutations(), st.mappings(), st.set_partitions(),
                     st.two_regular_graphs(), st.esf(2),
                     st.integer_partitions(), st.polynomials(2),
                     st.distinct_partitions(), st.distinct_odd_partitions(),
                     st.squarefree_polynomials(2)):
            x1 = choose_x(spec, nn, 1)
            for x in (x1, 0.9 * x1):
                params = TiltedParams(x, 1)
                rec = sd.prob_T_eq_n(spec, nn, params, method="recursion")
                clo = sd.prob_T_eq_n(spec, nn, params, method="closed_form")
                assert abs(rec - clo) <= 1e-9 * clo, (spec.name, nn, x)

    def test_conditional_law_invariant_under_x(self):
        # Different x changes P(T_n = n) but not the conditional law
        n = 30
        for x1, x2 in ((1.0, 0.8),):
            c1 = sd.conditioned_R_pmf(PERM, [2, 5], n, TiltedParams(x1, 1))
            c2 = sd.conditioned_R_pmf(PERM, [2, 5], n, TiltedParams(x2, 1))
            assert float(np.max(np.abs(c1.p - c2.p))) < 1e-9
            p1 = sd.prob_T_eq_n(PERM, n, TiltedParams(x1, 1))
            p2 = sd.prob_T_eq_n(PERM, n, TiltedParams(x2, 1))
            assert abs(p1 - p2) > 1e-6  # the unconditioned probability does move


class TestConditionedR:
    def test_full_set_point_mass(self):
        pv = sd.conditioned_R_pmf(PERM, range(1, 8), 7, TiltedParams(1, 1))
        assert pv.p[7] == pytest.approx(1.0, abs=1e-12)

    def test_empty_set_point_mass_zero(self):
        pv = sd.conditioned_R_pmf(PERM, [], 7, TiltedParams(1, 1))
        assert pv.p[0] == pytest.approx(1.0, abs=1e-15)

    def test_against_oracle(self):
        n, B = 4, (3, 4)
        law = orc.exact_joint_law(PERM, n, 1)
        proj = orc.exact_functional_law(
            law, lambda a: 3 * a[2] + 4 * a[3])
        pv = sd.conditioned_R_pmf(PERM, B, n, TiltedParams(1, 1))
        for r in range(n + 1):
            assert pv.p[r] == pytest.approx(float(proj.prob(r)), abs=1e-12)

    def test_zero_probability_raises(self):
        spec = st.two_regular_graphs()  # no structures of weight 2
        with pytest.raises(ParameterDomainError):
            sd.conditioned_R_pmf(spec, [1], 2, TiltedParams(1, 1))


class TestJointPmf:
    def test_single_index_diagonal(self):
        jp = sd.joint_sum_pmf(PERM, [1], 6, 6, TiltedParams(1, 1))
        for u in range(7):
            for r in range(7):
                if u != r:
                    assert jp.p[u, r] == 0.0

    def test_marginal_matches_weighted_sum(self):
        B = [1, 3, 4]
        jp = sd.joint_sum_pmf(PERM, B, 12, 12, TiltedParams(1, 1))
        pv = sd.weighted_sum_pmf(PERM, B, 12, TiltedParams(1, 1))
        assert float(np.max(np.abs(jp.marginal_weight().p - pv.p))) < 1e-12

    def test_conditioned_count_law_vs_oracle(self):
        # P(U = k | T_4 = 4) is the number-of-cycles law of a random permutation
        n = 4
        jp = sd.joint_sum_pmf(PERM, range(1, n + 1), n, n, TiltedParams(1, 1))
        cond = jp.p[:, n] / jp.p[:, n].sum()
        law = orc.exact_joint_law(PERM, n, 1)
        counts = orc.exact_functional_law(law, lambda a: sum(a))
        for k in range(n + 1):
            assert cond[k] == pytest.approx(float(counts.prob(k)), abs=1e-12)


class TestPmfVectorValidation:
    def test_rejects_bad_mass(self):
        with pytest.raises(NumericGuardError):
            sd.PmfVector(p=np.array([0.5, 0.2]), tail=0.0, n_max=1)

    def test_clamps_dust(self):
        pv = sd.PmfVector(p=np.array([1.0, -5e-14]), tail=0.0, n_max=1)
        assert pv.p[1] == 0.0

    def test_rejects_negative_mass(self):
        with pytest.raises(NumericGuardError):
            sd.PmfVector(p=np.array([1.0, -1e-6]), tail=0.0, n_max=1)
