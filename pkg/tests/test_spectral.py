"""Spectral-stage tests: power iteration, secant driver, and the small-K
dimension pipeline."""

from fractions import Fraction

import pytest

from gasketdim.cheb import projection_error
from gasketdim.rigor import IntervalScalar, ParameterError
from gasketdim.spectral import (
    EigenPair,
    MonotonicityViolation,
    NoConvergence,
    leading_eig,
    secant_iterate,
    secant_search,
)
from gasketdim.transfer import OperatorParams, assemble_matrix

# first forty digits of the Apollonian limit-set dimension
DIM = 1.3056867280498771846459862068510408911060


class TestLeadingEig:
    def test_symmetric_two_by_two(self):
        pair = leading_eig([[2, 1], [1, 2]])
        assert abs(float(pair.lam) - 3) < 1e-25
        assert abs(float(pair.vector[0] - pair.vector[1])) < 1e-25

    def test_diagonal_dominance(self):
        pair = leading_eig([[5, 0, 0], [0, 1, 0], [0, 0, Fraction(1, 10)]])
        assert abs(float(pair.lam) - 5) < 1e-25
        assert float(pair.vector[0]) == 1
        assert abs(float(pair.vector[1])) < 1e-15
        assert abs(float(pair.vector[2])) < 1e-15

    def test_sign_normalization(self):
        pair = leading_eig([[2, 1], [1, 2]], seed=[-1, -1])
        assert float(pair.vector[0]) > 0 and float(pair.vector[1]) > 0

    def test_rotation_has_no_dominant_pair(self):
        with pytest.raises(NoConvergence):
            leading_eig([[0, -1], [1, 0]], max_iter=64)

    def test_input_validation(self):
        with pytest.raises(ParameterError):
            leading_eig([[1, 2, 3], [4, 5, 6]])
        with pytest.raises(ParameterError):
            leading_eig([[1]], seed=[1, 2])

    def test_grid_shape_unfolds_y_even_vector(self):
        pair = leading_eig([[1]], grid_shape=(1, False))
        assert pair.phi_grid.K == 1
        identity = [[1 if i == j else 0 for j in range(8)] for i in range(8)]
        pair = leading_eig(identity, grid_shape=(4, True), max_iter=8)
        grid = pair.phi_grid.values
        for i1 in range(4):
            for i2 in range(2):
                assert grid[i1][i2] == grid[i1][3 - i2]


class TestSecantIterate:
    def test_linear_map_is_solved_after_two_evaluations(self):
        calls = []

        def lam(s):
            calls.append(s)
            return 2 - s / Fraction(13, 10)

        root, state = secant_iterate(lam, Fraction(13, 10),
                                     Fraction(131, 100), Fraction(1, 2**60))
        assert len(calls) <= 4 and state.t == len(calls)
        assert abs(float(root) - 1.3) < 1e-30

    def test_reciprocal_map_converges_quickly(self):
        evals = []

        def lam(s):
            evals.append(s)
            return 1 / (s - Fraction(3, 10))

        root, _ = secant_iterate(lam, Fraction(13, 10), Fraction(131, 100),
                                 Fraction(1, 2**60))
        assert abs(float(root) - 1.3) < 1e-18
        assert len(evals) <= 10

    def test_tolerance_window(self):
        for eps in (0, Fraction(1, 10**9), 1):
            with pytest.raises(ParameterError):
                secant_iterate(lambda s: 1, Fraction(13, 10),
                               Fraction(131, 100), eps)

    def test_increasing_lambda_is_rejected(self):
        with pytest.raises(MonotonicityViolation):
            secant_iterate(lambda s: s, Fraction(13, 10), Fraction(131, 100),
                           Fraction(1, 2**60))

    def test_flat_lambda_pair(self):
        with pytest.raises(NoConvergence):
            secant_iterate(lambda s: 2, Fraction(13, 10), Fraction(131, 100),
                           Fraction(1, 2**60))
        # a flat pair sitting exactly on the root is already converged
        root, _ = secant_iterate(lambda s: 1, Fraction(13, 10),
                                 Fraction(131, 100), Fraction(1, 2**60))
        assert float(root) == 1.31


class TestDimensionPipeline:
    def test_small_order_secant_hits_published_digits(self):
        s_star, phi = secant_search(Fraction(1, 2**35), 6, threads=2)
        assert abs(float(s_star) - DIM) < 1e-4
        values = [v for row in phi.values for v in row]
        assert all(float(v) > 0 for v in values)
        assert max(float(v) for v in values) == 1

    def test_discretization_error_shrinks_with_order(self):
        # |lambda_K - lambda_2K| is controlled by the projection envelope
        s_probe = Fraction(13056, 10000)
        lams = {}
        for K in (4, 8):
            params = OperatorParams.build(s_probe, Fraction(1, 2**40), K,
                                          y_even=True)
            lams[K] = leading_eig(assemble_matrix(params, threads=2)).lam
        envelope = projection_error(2, 4, IntervalScalar.point(Fraction(7, 5)))
        assert abs(float(lams[4] - lams[8])) <= 2 * 3 * float(envelope.hi)
        # both discretizations already sit near the crossing
        assert abs(float(lams[4]) - 1) < 1e-2
        assert abs(float(lams[8]) - 1) < 1e-3
