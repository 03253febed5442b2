"""Tests for the tensor Chebyshev module."""

from __future__ import annotations

import random
from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr

from gasketdim.cheb import (
    INSIDE,
    OUTSIDE,
    UNKNOWN,
    ChebCoeffs2D,
    EllipseSpec,
    alias_index,
    cheb_nodes,
    chebyshev_basis_at,
    coeffs_to_grid,
    ellipse_contains,
    eval_poly,
    grid_from_function,
    grid_to_coeffs,
    hardy_norm_bound,
    projection_error,
    sup_inf_bounds,
)
from gasketdim.rigor import IntervalComplex, IntervalScalar, ParameterError

I = IntervalScalar
C = IntervalComplex


def zeros_coeffs(K):
    return [[I.exact(0) for _ in range(K)] for _ in range(K)]


def unit_mode(K, k1, k2, value=1):
    c = zeros_coeffs(K)
    c[k1][k2] = I.point(value)
    return ChebCoeffs2D(K, c)


class TestNodes:
    def test_single_node_is_zero(self):
        (x,) = cheb_nodes(1)
        assert x.contains(0) and float(x.width) < 1e-30

    def test_two_nodes_are_half_sqrt2(self):
        a, b = cheb_nodes(2)
        half_sqrt2 = I.from_fraction(1, 2).sqrt()
        assert a.lo <= half_sqrt2.hi and half_sqrt2.lo <= a.hi
        assert b.neg().lo <= half_sqrt2.hi and half_sqrt2.lo <= b.neg().hi

    def test_symmetry_and_ordering(self):
        xs = cheb_nodes(5)
        for j in range(5):
            mirrored = xs[4 - j].neg()
            assert xs[j].lo <= mirrored.hi and mirrored.lo <= xs[j].hi
        for a, b in zip(xs, xs[1:]):
            assert b.strictly_less(a)
        assert all(-1 < x.lo and x.hi < 1 for x in xs)

    def test_bad_order_rejected(self):
        with pytest.raises(ParameterError):
            cheb_nodes(0)


class TestTransforms:
    def test_constant_grid(self):
        g = grid_from_function(lambda x, y: I.exact(1), 4)
        c = grid_to_coeffs(g)
        assert c.coeffs[0][0].contains(1)
        for k1 in range(4):
            for k2 in range(4):
                if (k1, k2) != (0, 0):
                    assert c.coeffs[k1][k2].contains(0)
                    assert float(c.coeffs[k1][k2].width) < 1e-30

    def test_single_mode_recovered(self):
        K = 8

        def t23(x, y):
            t2 = x.square().scale2(1) - 1
            t3 = (x.pow_int(3).scale2(2)) - x * 3
            # T_2(x) evaluated with x<->first argument: build T_2(x)*T_3(y)
            return (x.square().scale2(1) - 1) * ((y.pow_int(3).scale2(2)) - y * 3)

        c = grid_to_coeffs(grid_from_function(t23, K))
        for k1 in range(K):
            for k2 in range(K):
                target = 1 if (k1, k2) == (2, 3) else 0
                assert c.coeffs[k1][k2].contains(target), (k1, k2)

    def test_aliased_mode_vanishes(self):
        K = 6
        # T_K(x) = cos(K theta) at the nodes: sample directly from the angles
        table = chebyshev_basis_at  # noqa: F841  (documentation of intent)
        pi = I.pi()

        def tk0(x, y):
            # evaluate T_K by recurrence at the node interval
            basis = chebyshev_basis_at(x, K + 1)
            return basis[K]

        c = grid_to_coeffs(grid_from_function(tk0, K))
        for k1 in range(K):
            for k2 in range(K):
                assert c.coeffs[k1][k2].contains(0)

    def test_round_trip(self):
        K = 5
        rng = random.Random(7)
        coeffs = [[I.point(rng.uniform(-2, 2)) for _ in range(K)] for _ in range(K)]
        c0 = ChebCoeffs2D(K, coeffs)
        c1 = grid_to_coeffs(coeffs_to_grid(c0))
        for k1 in range(K):
            for k2 in range(K):
                a, b = c0.coeffs[k1][k2], c1.coeffs[k1][k2]
                assert b.lo <= a.hi and a.lo <= b.hi  # intervals intersect

    def test_idempotence_across_orders(self):
        for K in (2, 4, 8, 16, 32):
            g0 = grid_from_function(lambda x, y: x.mul(y).add(x), K)
            g1 = coeffs_to_grid(grid_to_coeffs(g0))
            for j1 in range(K):
                for j2 in range(K):
                    a, b = g0.values[j1][j2], g1.values[j1][j2]
                    assert b.lo <= a.hi and a.lo <= b.hi


class TestEvaluation:
    def test_product_mode(self):
        c = unit_mode(4, 1, 1)
        v = eval_poly(c, I.from_str("0.5"), I.from_str("0.25"))
        assert v.contains(Fraction(1, 8))

    def test_t3_outside_interval(self):
        c = unit_mode(5, 3, 0)
        v = eval_poly(c, C.point(2, 0), C.point(0, 0))
        assert v.contains(complex(26, 0))

    def test_node_reproduction(self):
        K = 6
        g = grid_from_function(lambda x, y: x.square().mul(y).add(y), K)
        c = grid_to_coeffs(g)
        nodes = cheb_nodes(K)
        v = eval_poly(c, nodes[2], nodes[4])
        target = g.values[2][4]
        assert v.lo <= target.hi and target.lo <= v.hi

    def test_basis_recurrence(self):
        xs = chebyshev_basis_at(I.from_str("0.3"), 5)
        # T_4(0.3) = 8*0.3^4 - 8*0.3^2 + 1
        q = Fraction(8) * Fraction(3, 10) ** 4 - 8 * Fraction(3, 10) ** 2 + 1
        assert xs[4].contains(q)

    def test_basis_complex(self):
        zs = chebyshev_basis_at(C.point(0, 1), 3)
        # T_2(i) = 2 i^2 - 1 = -3
        assert zs[2].contains(complex(-3, 0))


class TestAliasing:
    def test_low_mode_identity(self):
        assert alias_index((2, 3), 8) == ((2, 3), 1)

    def test_nyquist_vanishes(self):
        idx, c = alias_index((8, 0), 8)
        assert c == 0

    def test_full_period_reflects(self):
        K = 4
        assert alias_index((2 * K, 0), K) == ((0, 0), -1)
        # cross-check by sampling T_{2K} at the K nodes and transforming
        def t2k(x, y):
            return chebyshev_basis_at(x, 2 * K + 1)[2 * K]

        c = grid_to_coeffs(grid_from_function(t2k, K))
        assert c.coeffs[0][0].contains(-1)
        for k1 in range(K):
            for k2 in range(K):
                if (k1, k2) != (0, 0):
                    assert c.coeffs[k1][k2].contains(0)

    def test_norm_never_grows(self):
        for k in range(0, 40):
            m, c = alias_index((k,), 6)[0][0], alias_index((k,), 6)[1]
            assert m <= k
            assert m <= 6

    def test_random_aliases_match_transform(self):
        K = 5
        for k in (K + 1, K + 3, 2 * K + 2, 3 * K):
            (m,), c = alias_index((k,), K)

            def tk(x, y):
                return chebyshev_basis_at(x, k + 1)[k]

            cc = grid_to_coeffs(grid_from_function(tk, K))
            for k1 in range(K):
                expected = c if (k1 == m and c != 0) else 0
                assert cc.coeffs[k1][0].contains(expected), (k, k1)


class TestProjectionError:
    def test_d2_closed_form(self):
        e = projection_error(2, 10, I.from_str("1.4"))
        # 16 e^{-12.6} (1 + 14) / 1.96
        ref = (
            I.point(16)
            .mul(I.from_str("-12.6").exp())
            .mul(I.point(15))
            .div(I.from_str("1.96"))
        )
        assert e.lo <= ref.hi and ref.lo <= e.hi

    def test_monotone_in_order(self):
        x = I.from_str("1.4")
        prev = None
        for K in range(5, 51):
            cur = projection_error(2, K, x)
            if prev is not None:
                assert cur.hi < prev.lo
            prev = cur

    def test_branches_and_validity(self):
        x = I.from_str("1.0")
        assert projection_error(1, 8, x).strictly_positive()
        assert projection_error(3, 8, x).strictly_positive()
        assert projection_error(5, 8, x).strictly_positive()  # d>=4, d < Kx
        with pytest.raises(ParameterError):
            projection_error(5, 4, I.from_str("1.0"))  # d >= Kx
        with pytest.raises(ParameterError):
            projection_error(2, 1, x)
        with pytest.raises(ParameterError):
            projection_error(2, 8, I.point(0))

    def test_empirical_domination(self):
        # phi(z1,z2) = exp(z1) cos(z2): interpolation error on [-1,1]^2 must
        # stay below E_{2,K}(R) * (Hardy-norm bound of the coefficients)
        R = I.exact(1)
        for K in (8, 16):
            g = grid_from_function(lambda x, y: x.exp().mul(y.cos()), K)
            c = grid_to_coeffs(g)
            norm = hardy_norm_bound(grid_to_coeffs(
                grid_from_function(lambda x, y: x.exp().mul(y.cos()), 32)
            ), R)
            bound = projection_error(2, K, R).mul(norm)
            worst = mpfr(0)
            for u in [-0.95, -0.5, 0.0, 0.31, 0.77, 0.99]:
                for v in [-0.88, -0.21, 0.05, 0.5, 0.93]:
                    x, y = I.point(u), I.point(v)
                    exact = x.exp().mul(y.cos())
                    approx = eval_poly(c, x, y)
                    err = abs(approx.mid - exact.mid)
                    worst = max(worst, err)
            assert worst < bound.hi, (K, float(worst), float(bound.hi))


class TestEllipse:
    def test_real_points_inside(self):
        e = EllipseSpec(2, 2, I.from_str("0.5"))
        w = [C.point("0.3", 0), C.point("-0.9", 0)]
        assert ellipse_contains(e, w) == INSIDE

    def test_real_axis_beyond_cosh_outside(self):
        r = I.from_str("0.7")
        e = EllipseSpec(1, 2, r)
        w_out = I.from_str("1.1").cosh()  # cosh(1.1), 1.1 > 0.7
        assert ellipse_contains(e, [C.from_real(w_out)]) == OUTSIDE

    def test_constructed_point_inside(self):
        # w = cos(0 + i 0.6) = cosh(0.6) on each axis; ||(0.6,0.6)||_2 < 0.9
        e = EllipseSpec(2, 2, I.from_str("0.9"))
        w = C.from_real(I.from_str("0.6").cosh())
        assert ellipse_contains(e, [w, w]) == INSIDE

    def test_boundary_unknown(self):
        e = EllipseSpec(1, 2, I.from_str("0.6"))
        w = C.from_real(I.from_str("0.6").cosh())
        assert ellipse_contains(e, [w]) in (UNKNOWN, OUTSIDE)

    def test_angular_preimage_property(self):
        rng = random.Random(3)
        e = EllipseSpec(2, 2, I.from_str("0.9"))
        for _ in range(20):
            k1 = rng.uniform(0, 0.6), rng.uniform(0, 0.6)
            if (k1[0] ** 2 + k1[1] ** 2) ** 0.5 >= 0.88:
                continue
            comps = []
            for t, kap in zip((rng.uniform(0, 6.28), rng.uniform(0, 6.28)), k1):
                th, ka = I.point(t), I.point(kap)
                # cos(th + i ka) = cos th cosh ka - i sin th sinh ka
                comps.append(C(th.cos().mul(ka.cosh()), th.sin().mul(ka.sinh()).neg()))
            assert ellipse_contains(e, comps) == INSIDE

    def test_p_norm_variants(self):
        w = C.from_real(I.from_str("0.3").cosh())
        assert ellipse_contains(EllipseSpec(2, 1, I.exact(1)), [w, w]) == INSIDE
        assert (
            ellipse_contains(EllipseSpec(2, float("inf"), I.from_str("0.4")), [w, w])
            == INSIDE
        )
        with pytest.raises(ParameterError):
            ellipse_contains(EllipseSpec(2, 3, I.exact(1)), [w, w])
        with pytest.raises(ParameterError):
            ellipse_contains(EllipseSpec(2, 2, I.exact(1)), [w])


class TestCoefficientBounds:
    def test_hardy_constant(self):
        b = hardy_norm_bound(unit_mode(4, 0, 0), I.from_str("0.9"))
        assert b.contains(1) and float(b.width) < 1e-20

    def test_hardy_single_high_mode(self):
        r = I.from_str("0.9")
        b = hardy_norm_bound(unit_mode(8, 3, 4), r)
        ref = r.mul(I.point(5)).exp()
        assert b.lo <= ref.hi and ref.lo <= b.hi

    def test_hardy_additive(self):
        r = I.from_str("1.4")
        c = zeros_coeffs(4)
        c[1][0] = I.exact(1)
        c[0][1] = I.exact(1)
        b = hardy_norm_bound(ChebCoeffs2D(4, c), r)
        ref = r.exp().scale2(1)
        assert b.lo <= ref.hi and ref.lo <= b.hi

    def test_sup_inf_constant(self):
        lo, hi = sup_inf_bounds(unit_mode(3, 0, 0, 5))
        assert float(lo) == pytest.approx(5) and float(hi) == pytest.approx(5)

    def test_sup_inf_single_mode(self):
        lo, hi = sup_inf_bounds(unit_mode(3, 1, 0))
        assert float(lo) == pytest.approx(-1) and float(hi) == pytest.approx(1)

    def test_sup_inf_shifted_product(self):
        c = zeros_coeffs(3)
        c[0][0] = I.point(2)
        c[1][1] = I.exact(1)
        lo, hi = sup_inf_bounds(ChebCoeffs2D(3, c))
        assert float(lo) == pytest.approx(1) and float(hi) == pytest.approx(3)

    def test_sup_inf_sound_on_random_sets(self):
        rng = random.Random(11)
        for trial in range(10):
            K = rng.choice([2, 3, 4])
            coeffs = [
                [I.point(rng.uniform(-1, 1)) for _ in range(K)] for _ in range(K)
            ]
            c = ChebCoeffs2D(K, coeffs)
            lo, hi = sup_inf_bounds(c)
            for u in (-1.0, -0.4, 0.2, 0.9):
                for v in (-0.8, 0.0, 0.7, 1.0):
                    val = eval_poly(c, I.point(u), I.point(v))
                    assert lo <= val.hi and val.lo <= hi

    def test_coefficient_decay_envelope(self):
        K = 32
        g = grid_from_function(lambda x, y: x.exp().mul(y.cos()), K)
        c = grid_to_coeffs(g)
        norm = hardy_norm_bound(c, I.exact(1))
        for k1 in range(K):
            for k2 in range(K):
                norm_k = (k1 * k1 + k2 * k2) ** 0.5
                envelope = 4 * gmpy2.exp(-mpfr(norm_k)) * norm.hi
                assert c.coeffs[k1][k2].mag <= envelope, (k1, k2)
