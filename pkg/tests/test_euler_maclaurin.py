"""Tests for the accelerated-summation machinery.

Oracles: exact Bernoulli rationals against the even-zeta identity,
closed-form tail integrals, symbolic odd derivatives of 1/z^2, the Basel
sum, and float brute-force sums (a million terms plus an integral tail
bracket) for three rational summand families.
"""

import math
import time
from fractions import Fraction

import gmpy2
import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gasketdim import euler_maclaurin as em
from gasketdim.rigor import IntervalComplex, IntervalScalar, ParameterError

EPS60 = Fraction(1, 2**60)

ONE_C = IntervalComplex.point(1)
TWO_C = IntervalComplex.point(2)


def overlap(a, b):
    return a.lo <= b.hi and b.lo <= a.hi


def basel_psi(z):
    """psi(n) = 1/(n+1)^2, the Basel summand."""
    w = z.add(ONE_C)
    return w.mul(w).recip()


def basel_tilde(w):
    """phi(w) = 1/(1+w)^2, the 1/z rescaling of the Basel summand."""
    u = w.add(ONE_C)
    return u.mul(u).recip()


class TestBernoulliTable:
    def test_low_order_values(self):
        table = em.BernoulliTable.up_to(4)
        assert table.b(1) == Fraction(1, 6)
        assert table.b(2) == Fraction(-1, 30)
        assert table.b(3) == Fraction(1, 42)
        assert table.b(4) == Fraction(-1, 30)

    def test_even_zeta_identity(self):
        # |B_2l| / (2l)! == 2 zeta(2l) / (2 pi)^(2l)
        table = em.BernoulliTable.up_to(12)
        with mpmath.workdps(60):
            for l in range(1, 13):
                lhs = mpmath.mpf(abs(table.b(l)).numerator) / math.factorial(2 * l)
                lhs /= abs(table.b(l)).denominator
                rhs = 2 * mpmath.zeta(2 * l) / (2 * mpmath.pi) ** (2 * l)
                assert abs(lhs - rhs) < mpmath.mpf(10) ** -45 * rhs

    def test_rejects_empty_table(self):
        with pytest.raises(ParameterError):
            em.BernoulliTable.up_to(0)

    def test_rejects_out_of_range_index(self):
        table = em.BernoulliTable.up_to(3)
        with pytest.raises(ParameterError):
            table.b(4)


class TestMakePlan:
    def test_parameters_at_desk_tolerance(self):
        plan = em.make_plan(EPS60, 10, 1)
        assert (plan.N, plan.L, plan.M, plan.Mp) == (17, 21, 42, 80)

    def test_parameters_at_deep_tolerance(self):
        plan = em.make_plan(Fraction(1, 2**447), 10, Fraction(13, 10))
        assert (plan.N, plan.Mp) == (60, 174)
        assert (plan.L, plan.M) == (156, 312)

    def test_derivative_nodes_on_circle(self):
        plan = em.make_plan(EPS60, 10, 1)
        center = IntervalComplex.point(plan.N)
        for z in plan.z_m:
            assert overlap(z.sub(center).abs(), plan.tau)

    def test_integral_nodes_on_circle(self):
        plan = em.make_plan(EPS60, 10, 1)
        for zp, w in zip(plan.zp_k, plan.w_k):
            assert zp.abs().contains(plan.N)
            product = zp.mul(w)
            assert product.re.contains(1) and product.im.contains(0)

    def test_nodes_come_in_conjugate_pairs(self):
        plan = em.make_plan(EPS60, 10, 1)
        for seq in (plan.z_m, plan.c_m):
            for i, v in enumerate(seq):
                mirror = seq[len(seq) - 1 - i].conj()
                assert overlap(v.re, mirror.re) and overlap(v.im, mirror.im)
        for seq in (plan.zp_k, plan.w_k, plan.cp_k):
            for i, v in enumerate(seq):
                mirror = seq[len(seq) - 1 - i].conj()
                assert overlap(v.re, mirror.re) and overlap(v.im, mirror.im)

    def test_tau_matches_gap_over_e(self):
        plan = em.make_plan(EPS60, 10, 1)
        ref = IntervalScalar.point(plan.N - 10).div(IntervalScalar.point(1).exp())
        assert overlap(plan.tau, ref)

    def test_unit_error_budget_at_desk_tolerance(self):
        plan = em.make_plan(EPS60, 10, 1)
        assert plan.err_budget < gmpy2.mpfr(2) ** -50
        assert plan.err_budget > gmpy2.mpfr(2) ** -65

    def test_budget_scales_with_target(self):
        budgets = {}
        for bits in range(30, 101, 10):
            plan = em.make_plan(Fraction(1, 2**bits), 10, 1)
            budgets[bits] = plan.err_budget
            assert plan.err_budget <= gmpy2.mpfr(2) ** (12 - bits)
        for bits in range(30, 91, 10):
            assert budgets[bits + 10] <= budgets[bits] / 2

    def test_rejects_bad_parameters(self):
        with pytest.raises(ParameterError):
            em.make_plan(Fraction(1, 2**10), 10, 1)  # epsilon too coarse
        with pytest.raises(ParameterError):
            em.make_plan(EPS60, Fraction(1, 2), 1)  # nu < 1
        with pytest.raises(ParameterError):
            em.make_plan(EPS60, 10, Fraction(1, 2))  # s not > 1/2
        with pytest.raises(ParameterError):
            em.make_plan(EPS60, 10, 1, N=10)  # N == nu
        with pytest.raises(ParameterError):
            em.make_plan(EPS60, 10, 1, L=0)
        with pytest.raises(ParameterError):
            em.make_plan(EPS60, 10, 1, L=200)  # breaks 2L-1 < 2 e pi (N-nu)
        with pytest.raises(ParameterError):
            em.make_plan(EPS60, 10, 1, M=10)  # M < 2L
        with pytest.raises(ParameterError):
            em.make_plan(EPS60, 10, 1, Mp=0)


class TestRemainderBound:
    def test_direct_substitution(self):
        bound = em.remainder_bound(1, 11, 10, 1)
        ref = IntervalScalar.point(6).div(IntervalScalar.pi().scale2(1).pow_int(3))
        assert overlap(bound, ref)

    def test_power_law_in_gap(self):
        # doubling N - nu with L fixed divides the bound by 2^(2L)
        ratio = em.remainder_bound(4, 12, 10, 1).div(em.remainder_bound(4, 11, 10, 1))
        assert ratio.contains(Fraction(1, 2**8))

    def test_linear_in_summand_bound(self):
        ratio = em.remainder_bound(3, 13, 10, 5).div(em.remainder_bound(3, 13, 10, 1))
        assert ratio.contains(5)

    def test_chosen_order_is_near_optimal(self):
        # at N - nu = 50 the plan picks L = 156; pushing L three steps
        # either way only makes the remainder worse
        best = em.remainder_bound(156, 60, 10, 1)
        assert best.hi < em.remainder_bound(153, 60, 10, 1).lo
        assert best.hi < em.remainder_bound(159, 60, 10, 1).lo

    def test_rejects_bad_parameters(self):
        with pytest.raises(ParameterError):
            em.remainder_bound(0, 11, 10, 1)
        with pytest.raises(ParameterError):
            em.remainder_bound(1, 10, 10, 1)


class TestTaylorDerivativeEstimate:
    def test_exponential_third_derivative(self):
        est = em.taylor_derivative_estimate(lambda z: z.exp(), 0, Fraction(1, 2), 3, 16, 8, 2)
        assert est.re.contains(1) and est.im.contains(0)

    def test_geometric_fourth_derivative(self):
        # 1/(1-z) has Taylor coefficients 1, so the 4th derivative is 4!
        psi = lambda z: ONE_C.sub(z).recip()
        est = em.taylor_derivative_estimate(
            psi, 0, Fraction(9, 20), 4, 16, 10, Fraction(9, 10)
        )
        assert est.re.contains(24) and est.im.contains(0)

    def test_monomial_reproduces_alias_error(self):
        # z^M aliases onto the constant coefficient: the node sum is
        # exactly -tau^M, and the alias padding (just barely) recovers
        # the true value 0
        def mono(z):
            w = z
            for _ in range(7):
                w = w.mul(z)
            return w

        est = em.taylor_derivative_estimate(mono, 0, Fraction(1, 2), 0, 8, 256, 2)
        assert est.re.contains(0)
        assert est.re.contains(Fraction(-1, 256))
        assert not est.re.contains(Fraction(-3, 256))

    def test_rejects_bad_parameters(self):
        psi = lambda z: z.exp()
        with pytest.raises(ParameterError):
            em.taylor_derivative_estimate(psi, 0, 2, 1, 8, 8, 1)  # tau >= sigma
        with pytest.raises(ParameterError):
            em.taylor_derivative_estimate(psi, 0, Fraction(1, 2), 9, 8, 8, 2)  # M <= k

    @settings(max_examples=25, deadline=None)
    @given(
        st.integers(min_value=0, max_value=4),
        st.fractions(min_value=Fraction(-2), max_value=Fraction(2)),
    )
    def test_scaled_exponential_derivatives(self, k, c):
        # d^k/dz^k exp(cz) at 0 is c^k; |exp(cz)| <= e^(2|c|) on |z| < 2
        c_iv = IntervalScalar.point(c)
        psi = lambda z: z.mul_real(c_iv).exp()
        bound = c_iv.abs().scale2(1).exp()
        est = em.taylor_derivative_estimate(psi, 0, Fraction(1, 2), k, 12, bound, 2)
        assert est.re.contains(c**k) and est.im.contains(0)


class TestDerivativeTerm:
    def test_inverse_square_against_symbolic_derivatives(self):
        # for psi = 1/z^2 the Bernoulli correction telescopes to
        # sum_l B_2l / N^(2l+1) (as added in the accelerated sum)
        plan = em.make_plan(EPS60, 10, 1, N=20)
        result = em.derivative_term(lambda z: z.mul(z).recip(), plan, Fraction(1, 100))
        expected = sum(
            plan.bernoulli.b(l) / Fraction(20) ** (2 * l + 1) for l in range(1, plan.L + 1)
        )
        assert result.re.contains(expected)
        assert result.im.contains(0)

    def test_constant_summand_gives_zero(self):
        plan = em.make_plan(EPS60, 10, 1)
        result = em.derivative_term(lambda z: ONE_C, plan, 1)
        assert result.re.contains(0) and result.im.contains(0)

    def test_error_bound_decays_exponentially_in_M(self):
        small = em.derivative_error_bound(21, 17, 10, 47, 1)
        large = em.derivative_error_bound(21, 17, 10, 42, 1)
        drift = small.div(large).mul(IntervalScalar.point(5).exp()).sub(IntervalScalar.point(1))
        assert drift.abs().hi < 0.01


class TestIntegralTerm:
    def test_constant_rescaling_closed_form(self):
        # phi == 1 corresponds to psi = z^(-2s) with tail integral
        # N^(1-2s)/(2s-1)
        plan = em.make_plan(EPS60, 10, Fraction(13, 10), N=20, Mp=40)
        result = em.integral_term(lambda w: ONE_C, plan, 1)
        two_s = plan.s.scale2(1)
        exact = IntervalScalar.point(20).pow(IntervalScalar.point(1).sub(two_s)).div(
            two_s.sub(IntervalScalar.point(1))
        )
        assert result.re.contains(exact) and result.im.contains(0)

    def test_linear_rescaling_closed_form(self):
        # phi(w) = w corresponds to psi = z^(-2s-1) with tail integral
        # N^(-2s)/(2s)
        plan = em.make_plan(EPS60, 10, Fraction(13, 10), N=20, Mp=40)
        result = em.integral_term(lambda w: w, plan, 1)
        two_s = plan.s.scale2(1)
        exact = IntervalScalar.point(20).pow(two_s.neg()).div(two_s)
        assert result.re.contains(exact) and result.im.contains(0)

    def test_error_bound_is_geometric_in_Mp(self):
        s = IntervalScalar.point(Fraction(13, 10))
        small = em.integral_error_bound(20, 10, s, 42, 1)
        large = em.integral_error_bound(20, 10, s, 40, 1)
        drift = small.div(large).mul(IntervalScalar.point(4)).sub(IntervalScalar.point(1))
        assert drift.abs().hi < 0.01


class TestAcceleratedSum:
    def test_basel_sum(self):
        # 1/121 bounds |1/(z+1)^2| on Re z >= 10; 100/81 bounds the
        # rescaling 1/(1+w)^2 on |w| < 1/10
        plan = em.make_plan(EPS60, 10, 1)
        result = em.accelerated_sum(
            basel_psi, basel_tilde, plan, Fraction(1, 121), Fraction(100, 81)
        )
        target = IntervalScalar.pi().square().div(IntervalScalar.point(6))
        assert target.is_subset(result)
        assert result.width < gmpy2.mpfr(2) ** -50

    def test_geometric_sum_with_integral_override(self):
        # 2^(-z) is not analytic at infinity after rescaling, but the
        # tail integral has the closed form 2^(-N)/log 2; the full sum
        # is exactly 2
        plan = em.make_plan(EPS60, 10, 1)
        ln2 = IntervalScalar.point(2).log()
        psi = lambda z: z.mul_real(ln2).neg().exp()
        override = IntervalScalar.point(1).scale2(-plan.N).div(ln2)
        result = em.accelerated_sum(
            psi, None, plan, Fraction(1, 2**10), None, integral_override=override
        )
        assert result.contains(2)
        assert result.width < gmpy2.mpfr(2) ** -50

    def test_quadrature_terms_stay_real(self):
        plan = em.make_plan(EPS60, 10, 1)
        deriv = em.derivative_term(basel_psi, plan, Fraction(1, 121))
        integ = em.integral_term(basel_tilde, plan, Fraction(100, 81))
        assert deriv.im.contains(0)
        assert integ.im.contains(0)

    @pytest.mark.parametrize("family", ["pure_power", "telescoping", "rational"])
    def test_families_against_brute_force(self, family):
        # brute force: 10^6 float terms, an integral bracket for the
        # tail, and a cushion dominating the float rounding error
        if family == "pure_power":
            s, label = Fraction(13, 10), "(n+2)^-2.6"
            neg_two_s = IntervalScalar.point(s).scale2(1).neg()
            psi = lambda z: z.add(TWO_C).pow_real(neg_two_s)
            tilde = lambda w: w.mul_real(IntervalScalar.point(2)).add(ONE_C).pow_real(neg_two_s)
            C, C_tilde = Fraction(1, 144), 2
            term = lambda n: (n + 2.0) ** -2.6
            tail_lo = lambda K: (K + 3.0) ** -1.6 / 1.6 * (1 - 1e-9)
            tail_hi = lambda K: (K + 2.0) ** -1.6 / 1.6 * (1 + 1e-9)
        elif family == "telescoping":
            s, label = Fraction(3, 2), "(n+1)^-3 n/(n+1)"
            neg_three = IntervalScalar.point(-3)
            psi = lambda z: z.add(ONE_C).pow_real(neg_three).mul(z).mul(z.add(ONE_C).recip())
            tilde = lambda w: w.add(ONE_C).pow_real(IntervalScalar.point(-4))
            C, C_tilde = Fraction(1, 1000), 2
            term = lambda n: (n + 1.0) ** -3 * n / (n + 1.0)
            tail_lo = lambda K: (1 - 1.0 / K) * (K + 2.0) ** -2 / 2
            tail_hi = lambda K: float(K) ** -2 / 2
        else:
            s, label = Fraction(1), "(n+2)^-2 rational"
            three = IntervalScalar.point(3)
            psi = lambda z: z.add(TWO_C).pow_real(IntervalScalar.point(-2)).mul(
                z.mul(z).add(z.mul_real(three)).add(TWO_C)
            ).mul(z.mul(z).add(z.scale2(1)).add(TWO_C).recip())

            def tilde(w):
                head = w.mul_real(IntervalScalar.point(2)).add(ONE_C)
                num = ONE_C.add(w.mul_real(three)).add(w.mul(w).scale2(1))
                den = ONE_C.add(w.scale2(1)).add(w.mul(w).scale2(1))
                return head.pow_real(IntervalScalar.point(-2)).mul(num).mul(den.recip())

            C, C_tilde = Fraction(1, 100), 3
            term = lambda n: (n + 2.0) ** -2 * (n * n + 3.0 * n + 2.0) / (n * n + 2.0 * n + 2.0)
            tail_lo = lambda K: (1 - 3e-6) / (K + 3.0)
            tail_hi = lambda K: (1 + 3e-6) / (K + 2.0)

        plan = em.make_plan(EPS60, 10, s)
        result = em.accelerated_sum(psi, tilde, plan, C, C_tilde)
        K = 10**6
        brute = sum(term(n) for n in range(K + 1))
        lo = brute - 1e-9 + tail_lo(K)
        hi = brute + 1e-9 + tail_hi(K)
        assert result.lo >= gmpy2.mpfr(lo), label
        assert result.hi <= gmpy2.mpfr(hi), label

    def test_runs_fast_enough_for_oracle_suite(self):
        start = time.monotonic()
        plan = em.make_plan(EPS60, 10, 1)
        em.accelerated_sum(basel_psi, basel_tilde, plan, Fraction(1, 121), Fraction(100, 81))
        assert time.monotonic() - start < 30.0
