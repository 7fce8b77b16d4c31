"""The enumeration oracle itself: counts, exactness, pushforwards, and the
refined enumeration."""

from fractions import Fraction

import pytest

from combstruct import structures as st
from combstruct import oracle as orc
from combstruct.errors import ParameterDomainError


def partition_numbers(n):
    p = [1] + [0] * n
    for m in range(1, n + 1):
        total, k = 0, 1
        while True:
            g1 = k * (3 * k - 1) // 2
            g2 = k * (3 * k + 1) // 2
            if g1 > m and g2 > m:
                break
            sign = 1 if k % 2 == 1 else -1
            if g1 <= m:
                total += sign * p[m - g1]
            if g2 <= m:
                total += sign * p[m - g2]
            k += 1
        p[m] = total
    return p


class TestEnumeration:
    def test_counts_match_partition_numbers(self):
        p = partition_numbers(14)
        for n in range(1, 15):
            assert sum(1 for _ in orc.enumerate_complete(n)) == p[n]

    def test_small_cases(self):
        assert [v.a for v in orc.enumerate_complete(1)] == [(1,)]
        assert sum(1 for _ in orc.enumerate_complete(4)) == 5
        assert sum(1 for _ in orc.enumerate_complete(5)) == 7

    def test_lexicographic_and_complete(self):
        vecs = [v.a for v in orc.enumerate_complete(7)]
        assert vecs == sorted(vecs)
        assert len(set(vecs)) == len(vecs)
        for a in vecs:
            assert sum((i + 1) * ai for i, ai in enumerate(a)) == 7

    def test_cap(self):
        with pytest.raises(ParameterDomainError):
            list(orc.enumerate_complete(26))
        assert sum(1 for _ in orc.enumerate_complete(26, cap=26)) == \
            partition_numbers(26)[26]


class TestExactJointLaw:
    def test_permutations_n3(self):
        law = orc.exact_joint_law(st.permutations(), 3)
        assert law.entries == {(3, 0, 0): Fraction(1, 6),
                               (1, 1, 0): Fraction(1, 2),
                               (0, 0, 1): Fraction(1, 3)}

    def test_integer_partitions_uniform(self):
        law = orc.exact_joint_law(st.integer_partitions(), 3)
        assert all(p == Fraction(1, 3) for p in law.entries.values())

    def test_theta_bias_definition(self):
        spec = st.permutations()
        base = orc.exact_joint_law(spec, 4, 1)
        tilted = orc.exact_joint_law(spec, 4, 3)
        norm = sum(base.prob(a) * 3 ** sum(a) for a in base.entries)
        for a in base.entries:
            assert tilted.prob(a) == base.prob(a) * 3 ** sum(a) / norm

    def test_mass_exactly_one(self):
        law = orc.exact_joint_law(st.mappings(), 8, Fraction(1, 2))
        assert sum(law.entries.values()) == 1

    def test_counts_by_components_match_p_total(self):
        # sum_k p(n,k) theta^k = p_theta(n), exactly
        for spec in (st.permutations(), st.distinct_partitions(),
                     st.polynomials(2)):
            for n in (6, 12):
                by_k = {}
                for v in orc.enumerate_complete(n):
                    nn = st.count_N(spec, v)
                    if nn:
                        k = v.num_components
                        by_k[k] = by_k.get(k, 0) + nn
                for theta in (Fraction(1, 2), 1, 2):
                    total = sum(cnt * Fraction(theta) ** k
                                for k, cnt in by_k.items())
                    assert total == st.p_total(spec, n, theta)


class TestFunctionalLaw:
    def test_identity(self):
        law = orc.exact_joint_law(st.permutations(), 4)
        assert orc.exact_functional_law(law, lambda a: a).entries == law.entries

    def test_restriction(self):
        law = orc.exact_joint_law(st.permutations(), 4)
        marg = orc.restrict_law(law, [2])
        # C_2(4): P(0) from types with no 2-cycle, etc.
        assert marg.prob((0,)) + marg.prob((1,)) + marg.prob((2,)) == 1
        assert marg.prob((2,)) == Fraction(3, 24)

    def test_exact_tv_self_zero(self):
        law = orc.exact_joint_law(st.permutations(), 5)
        assert orc.exact_tv(law, law) == 0

    def test_exact_tv_symmetric_rational(self):
        a = orc.exact_joint_law(st.permutations(), 5, 1)
        b = orc.exact_joint_law(st.permutations(), 5, 2)
        d = orc.exact_tv(a, b)
        assert d == orc.exact_tv(b, a)
        assert isinstance(d, Fraction) and 0 < d < 1


class TestRefinedOracle:
    def test_unrefines_to_joint_law(self):
        spec = st.from_m_list("multiset", [2, 1, 1, 1, 1], name="m21111")
        n = 5
        refined = orc.exact_refined_law(spec, n)
        K = orc.refined_index_set(spec, range(1, n + 1))
        law = orc.exact_joint_law(spec, n)

        def unrefine(b):
            a = [0] * n
            for (i, _), k in zip(K, b):
                a[i - 1] += k
            return tuple(a)

        assert orc.exact_functional_law(refined, unrefine).entries == law.entries

    def test_refined_split_is_uniform_for_multisets(self):
        # given C_1 = 2 with m_1 = 2, the (D_11, D_12) split is uniform over
        # the three compositions
        spec = st.from_m_list("multiset", [2], name="m2")
        refined = orc.exact_refined_law(spec, 2)
        splits = {b: p for b, p in refined.entries.items()}
        assert splits[(2, 0)] == splits[(1, 1)] == splits[(0, 2)] == Fraction(1, 3)

    def test_refined_split_multinomial_for_assemblies(self):
        # assembly with m_1 = 2: split of C_1 = 2 is Binomial(2, 1/2)
        spec = st.from_m_list("assembly", [2], name="a2")
        refined = orc.exact_refined_law(spec, 2)
        probs = {b: p for b, p in refined.entries.items()}
        total_two = sum(p for b, p in probs.items() if sum(b) == 2)
        assert probs[(1, 1)] / total_two == Fraction(1, 2)
        assert probs[(2, 0)] / total_two == Fraction(1, 4)

    def test_selection_zero_one(self):
        spec = st.from_m_list("selection", [2, 2], name="s22")
        refined = orc.exact_refined_law(spec, 2)
        assert all(max(b) <= 1 for b in refined.entries)
