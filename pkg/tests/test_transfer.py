"""Transfer-operator tests: certified pointwise application against
brute-force summation, matrix assembly consistency, and parameter gates."""

import math
from fractions import Fraction

import pytest

from gasketdim.cheb import (
    ChebCoeffs2D,
    ChebGrid2D,
    cheb_nodes,
    hardy_norm_bound,
    transform_matrix,
)
from gasketdim.euler_maclaurin import make_plan
from gasketdim.rigor import IntervalScalar, ParameterError
from gasketdim.transfer import (
    AprioriConstants,
    OperatorParams,
    apply_pointwise,
    apply_to_grid,
    assemble_matrix,
)

EPS40 = Fraction(1, 2**40)
EPS30 = Fraction(1, 2**30)
S_MID = Fraction(1305, 1000)
ONE = IntervalScalar.exact(1)
SQRT3 = math.sqrt(3.0)


# --- independent float model of the map family (for brute-force oracles) ---


def _mm(p, q):
    return (
        p[0] * q[0] + p[1] * q[2],
        p[0] * q[1] + p[1] * q[3],
        p[2] * q[0] + p[3] * q[2],
        p[2] * q[1] + p[3] * q[3],
    )


def induced_float(sign, n):
    omega = complex(-0.5, sign * SQRT3 / 2)
    conj = (1, 1, 0, 4)
    conj_inv = (4, -1, 0, 1)
    gen = (SQRT3 - 1, 1, -1, SQRT3 + 1)
    rot = (omega, 0, 0, 1)
    power = (SQRT3 - n, n, -n, SQRT3 + n)  # sqrt3 * A^n
    return _mm(_mm(_mm(_mm(conj_inv, gen), rot), power), conj)


def jacobian_float(sign, n, z):
    a, b, c, d = induced_float(sign, n)
    return abs(a * d - b * c) / abs(c * z + d) ** 2


def const_coeffs(K, value=1):
    c = [[IntervalScalar.exact(0)] * K for _ in range(K)]
    c[0][0] = IntervalScalar.point(value)
    return ChebCoeffs2D(K, c)


def overlap(a, b):
    return a.lo <= b.hi and b.lo <= a.hi


def row_total(row):
    total = row[0]
    for entry in row[1:]:
        total = total.add(entry)
    return total


class TestAprioriConstants:
    def test_default_values(self):
        c = AprioriConstants()
        assert c.R_A == Fraction(7, 5)
        assert c.r_A == Fraction(9, 10)
        assert c.nu_A == 10
        assert c.W_A == 3
        assert c.D_plus == Fraction(59, 100)
        assert c.D_minus == Fraction(33, 10)
        # C_A is 6.8 / nu_A^2 exactly
        assert c.C_A * c.nu_A**2 == Fraction(34, 5)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"r_A": Fraction(3, 2)},  # inner radius beyond outer
            {"nu_A": 0},
            {"W_A": 0},
            {"C_A": Fraction(-1, 10)},
            {"D_plus": Fraction(4)},  # exceeds D_minus
        ],
    )
    def test_rejects_inconsistent_values(self, kwargs):
        with pytest.raises(ParameterError):
            AprioriConstants(**kwargs)


class TestOperatorParams:
    def test_build_ties_plan_to_s_and_nu(self):
        params = OperatorParams.build(S_MID, EPS40, 4)
        assert params.plan.nu == Fraction(10)
        assert params.plan.s.contains(S_MID)
        assert params.K == 4 and params.y_even is False

    def test_template_shares_shape_but_not_s_dependent_coefficients(self):
        base = OperatorParams.build(Fraction(13, 10), EPS40, 4)
        other = OperatorParams.build(Fraction(131, 100), EPS40, 4,
                                     template=base.plan)
        for name in ("N", "L", "M", "Mp"):
            assert getattr(other.plan, name) == getattr(base.plan, name)
        # contour nodes are s-independent, the integral coefficients are not
        assert other.plan.z_m == base.plan.z_m
        assert other.plan.zp_k == base.plan.zp_k
        assert other.plan.cp_k[0] != base.plan.cp_k[0]

    def test_rejects_bad_shapes(self):
        with pytest.raises(ParameterError):
            OperatorParams.build(S_MID, EPS40, 0)
        with pytest.raises(ParameterError):
            OperatorParams.build(S_MID, EPS40, 5, y_even=True)

    def test_rejects_mismatched_plan(self):
        s_iv = IntervalScalar.point(S_MID)
        wrong_nu = make_plan(EPS40, 5, s_iv)
        with pytest.raises(ParameterError):
            OperatorParams(s_iv, 4, wrong_nu, AprioriConstants())
        wrong_s = make_plan(EPS40, 10, IntervalScalar.point(Fraction(13, 10)))
        with pytest.raises(ParameterError):
            OperatorParams(s_iv, 4, wrong_s, AprioriConstants())


class TestApplyPointwise:
    def test_constant_function_against_brute_force(self):
        # sum_{sign, n <= 1e5} J_n(0,0)^s plus an integral tail majorant
        params = OperatorParams.build(S_MID, EPS40, 4)
        val = apply_pointwise(params, const_coeffs(4), 0, 0, ONE)
        s = float(S_MID)
        brute = sum(
            jacobian_float(sign, n, 0j) ** s
            for sign in (1, -1)
            for n in range(100001)
        )
        tail_hi = 2 * 6.8**s * 1e5 ** (1 - 2 * s) / (2 * s - 1)
        assert float(val.lo) >= brute - 1e-9
        assert float(val.hi) <= brute + tail_hi + 1e-9
        assert float(val.width) < 2.0**-36

    def test_mirror_symmetry_for_y_even_phi(self):
        K = 4
        coeffs = [[IntervalScalar.exact(0)] * K for _ in range(K)]
        coeffs[0][0] = IntervalScalar.exact(1)
        coeffs[1][2] = IntervalScalar.point(Fraction(1, 4))
        coeffs[2][0] = IntervalScalar.point(Fraction(-1, 8))
        phi = ChebCoeffs2D(K, coeffs)
        norm = hardy_norm_bound(phi, IntervalScalar.point(Fraction(9, 10)))
        params = OperatorParams.build(S_MID, EPS40, K)
        for x, y in [(Fraction(3, 10), Fraction(3, 5)),
                     (Fraction(-1, 2), Fraction(9, 10))]:
            up = apply_pointwise(params, phi, x, y, norm)
            down = apply_pointwise(params, phi, x, -y, norm)
            assert overlap(up, down)
            assert abs(float(up.mid - down.mid)) <= float(up.width)

    def test_head_partial_sums_increase_toward_value(self):
        # all summands are positive, so explicit head prefixes stay below
        from gasketdim.ifs import jacobian_real

        params = OperatorParams.build(S_MID, EPS40, 4)
        val = apply_pointwise(params, const_coeffs(4), 0, 0, ONE)
        x = y = IntervalScalar.exact(0)
        s_iv = params.s
        partial = IntervalScalar.exact(0)
        previous = 0.0
        for n in range(12):
            for sign in (1, -1):
                partial = partial.add(jacobian_real(sign, n, x, y).pow(s_iv))
            assert float(partial.lo) >= previous
            previous = float(partial.lo)
            assert partial.lo <= val.hi

    def test_operator_norm_budget(self):
        # the verified budget W_A = 3 dominates every certified value of A_s 1
        params = OperatorParams.build(S_MID, EPS40, 4)
        for x, y in [(0, 0), (1, 1), (-1, 1), (1, -1), (-1, -1)]:
            val = apply_pointwise(params, const_coeffs(4), x, y, ONE)
            assert val.hi < 3

    def test_monotone_response_in_s(self):
        lo_params = OperatorParams.build(Fraction(13, 10), EPS40, 4)
        hi_params = OperatorParams.build(Fraction(131, 100), EPS40, 4)
        for x, y in [(0, 0), (Fraction(-7, 10), Fraction(3, 10))]:
            at_lo = apply_pointwise(lo_params, const_coeffs(4), x, y, ONE)
            at_hi = apply_pointwise(hi_params, const_coeffs(4), x, y, ONE)
            drop = at_lo.sub(at_hi)
            slack = float(at_lo.width + at_hi.width)
            # for phi = 1: D_plus (s'-s) <= drop <= D_minus (s'-s)
            assert float(drop.lo) >= 0.59 * 0.01 - slack
            assert float(drop.hi) <= 3.3 * 0.01 + slack

    def test_linearity_under_scaling(self):
        params = OperatorParams.build(S_MID, EPS40, 4)
        base = apply_pointwise(params, const_coeffs(4), 0, 0, ONE)
        doubled = apply_pointwise(params, const_coeffs(4, 2), 0, 0,
                                  IntervalScalar.exact(2))
        assert overlap(doubled, base.scale2(1))

    def test_parameter_gates(self):
        params = OperatorParams.build(S_MID, EPS40, 4)
        with pytest.raises(ParameterError):
            apply_pointwise(params, const_coeffs(4), Fraction(3, 2), 0, ONE)
        with pytest.raises(ParameterError):
            apply_pointwise(params, const_coeffs(6), 0, 0, ONE)
        for bad_s in (Fraction(129, 100), Fraction(132, 100)):
            bad = OperatorParams.build(bad_s, EPS40, 4)
            with pytest.raises(ParameterError):
                apply_pointwise(bad, const_coeffs(4), 0, 0, ONE)

    def test_range_endpoints_are_certifiable(self):
        # exact endpoint parameters must pass the guard despite rounding
        for s in (Fraction(13, 10), Fraction(131, 100)):
            params = OperatorParams.build(s, EPS40, 4)
            val = apply_pointwise(params, const_coeffs(4), 0, 0, ONE)
            assert val.lo > 0


class TestApplyToGrid:
    def test_matches_pointwise_on_ones(self):
        K = 4
        params = OperatorParams.build(S_MID, EPS30, K)
        grid = ChebGrid2D(K, [[ONE] * K for _ in range(K)])
        out = apply_to_grid(params, grid)
        nodes = cheb_nodes(K)
        for i1 in range(K):
            for i2 in range(K):
                direct = apply_pointwise(params, const_coeffs(K),
                                         nodes[i1], nodes[i2], ONE)
                assert overlap(out.values[i1][i2], direct)
                assert out.values[i1][i2].lo > 0  # positivity

    def test_y_even_mirrors_and_validates(self):
        K = 4
        params = OperatorParams.build(S_MID, EPS30, K, y_even=True)
        grid = ChebGrid2D(K, [[ONE] * K for _ in range(K)])
        out = apply_to_grid(params, grid)
        for i1 in range(K):
            for i2 in range(K // 2):
                a = out.values[i1][i2]
                b = out.values[i1][K - 1 - i2]
                assert a.lo == b.lo and a.hi == b.hi
        skew = [[ONE] * K for _ in range(K)]
        skew[1][0] = IntervalScalar.exact(2)
        with pytest.raises(ParameterError):
            apply_to_grid(params, ChebGrid2D(K, skew))

    def test_thread_count_does_not_change_results(self):
        K = 4
        params = OperatorParams.build(S_MID, EPS30, K, y_even=True)
        grid = ChebGrid2D(K, [[ONE] * K for _ in range(K)])
        lone = apply_to_grid(params, grid, threads=1)
        pooled = apply_to_grid(params, grid, threads=3)
        for i1 in range(K):
            for i2 in range(K):
                a, b = lone.values[i1][i2], pooled.values[i1][i2]
                assert a.lo == b.lo and a.hi == b.hi


class TestAssembleMatrix:
    def test_row_sums_match_constant_application(self):
        # sum_k ell_k = 1, so row sums reproduce A_s applied to the constant
        K = 4
        params = OperatorParams.build(S_MID, EPS40, K)
        matrix = assemble_matrix(params, rigorous=True)
        nodes = cheb_nodes(K)
        for i1, i2 in [(0, 0), (2, 3)]:
            total = row_total(matrix[i1 * K + i2])
            direct = apply_pointwise(params, const_coeffs(K),
                                     nodes[i1], nodes[i2], ONE)
            assert overlap(total, direct)
            assert abs(float(total.mid - direct.mid)) < 1e-20

    def test_entries_enclose_basis_applications(self):
        K = 4
        params = OperatorParams.build(S_MID, EPS40, K)
        matrix = assemble_matrix(params, rigorous=True)
        A = transform_matrix(K)
        nodes = cheb_nodes(K)
        r_inner = IntervalScalar.point(Fraction(9, 10))
        for i1, i2 in [(0, 0), (3, 1)]:
            for j1, j2 in [(0, 0), (1, 3), (2, 2)]:
                basis = ChebCoeffs2D(
                    K,
                    [[A[k1][j1].mul(A[k2][j2]) for k2 in range(K)]
                     for k1 in range(K)],
                )
                norm = hardy_norm_bound(basis, r_inner)
                direct = apply_pointwise(params, basis,
                                         nodes[i1], nodes[i2], norm)
                entry = matrix[i1 * K + i2][j1 * K + j2]
                assert overlap(entry, direct)
                assert abs(float(entry.mid - direct.mid)) < 1e-20

    def test_order_one_matrix_is_the_constant_oracle(self):
        params = OperatorParams.build(S_MID, EPS40, 1)
        matrix = assemble_matrix(params, rigorous=True)
        node = cheb_nodes(1)[0]
        direct = apply_pointwise(params, const_coeffs(1), node, node, ONE)
        assert overlap(matrix[0][0], direct)

    def test_y_even_matrix_matches_full_matrix_on_even_vectors(self):
        K = 4
        full = assemble_matrix(OperatorParams.build(S_MID, EPS40, K))
        half = assemble_matrix(OperatorParams.build(S_MID, EPS40, K,
                                                    y_even=True))
        vec = [[Fraction(j1 + 1, 3) + Fraction(min(j2, K - 1 - j2), 7)
                for j2 in range(K)] for j1 in range(K)]
        flat_full = [float(vec[a][b]) for a in range(K) for b in range(K)]
        flat_half = [float(vec[a][b]) for a in range(K) for b in range(K // 2)]
        for a in range(K):
            for b in range(K // 2):
                full_out = sum(
                    float(full[a * K + b][j]) * flat_full[j]
                    for j in range(K * K)
                )
                half_out = sum(
                    float(half[a * (K // 2) + b][j]) * flat_half[j]
                    for j in range(K * K // 2)
                )
                assert abs(full_out - half_out) < 1e-12

    def test_scalar_mode_tracks_rigorous_midpoints(self):
        K = 3
        params = OperatorParams.build(S_MID, EPS40, K)
        scalars = assemble_matrix(params)
        enclosures = assemble_matrix(params, rigorous=True)
        for i in range(K * K):
            for j in range(K * K):
                assert enclosures[i][j].contains(scalars[i][j]) or (
                    abs(float(enclosures[i][j].mid - scalars[i][j])) < 1e-25
                )

    def test_thread_count_does_not_change_entries(self):
        params = OperatorParams.build(S_MID, EPS30, 4, y_even=True)
        lone = assemble_matrix(params, threads=1)
        pooled = assemble_matrix(params, threads=4)
        assert all(
            a == b for ra, rb in zip(lone, pooled) for a, b in zip(ra, rb)
        )

    def test_rigorous_mode_gates_s(self):
        bad = OperatorParams.build(Fraction(7, 5), EPS40, 2)
        with pytest.raises(ParameterError):
            assemble_matrix(bad, rigorous=True)
        assemble_matrix(bad)  # the non-rigorous stage may roam
