"""Non-rigorous spectral stage: leading eigenpair and the secant search.

The dimension estimate comes from the one-parameter family s -> A_s: its
discretized leading eigenvalue lambda(s) is strictly decreasing, and the
sought parameter is the root of lambda(s) = 1.  This module computes
lambda(s) by power iteration on the assembled matrix and drives a secant
iteration for the root.  Nothing here is interval-certified -- the
certified bracket is produced separately -- but everything runs at the
same extended working precision so the estimate can be trusted to far
more digits than double arithmetic would give.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import gmpy2

from .cheb import ChebGrid2D
from .rigor import ParameterError, big, get_precision
from .transfer import AprioriConstants, OperatorParams, assemble_matrix

__all__ = [
    "EigenPair",
    "SecantState",
    "NoConvergence",
    "MonotonicityViolation",
    "leading_eig",
    "secant_iterate",
    "secant_search",
]


class NoConvergence(ArithmeticError):
    """Iteration failed to settle within its budget."""


class MonotonicityViolation(ArithmeticError):
    """lambda(s) failed to decrease across the evaluated history."""


@dataclass
class EigenPair:
    """Dominant eigenvalue and sup-normalized eigenvector.

    ``vector`` is the flat eigenvector (sign-normalized so its largest
    component is positive); ``phi_grid`` is the same data reshaped onto
    the Chebyshev grid when the caller supplied the grid shape.
    """

    lam: object
    vector: list
    phi_grid: Optional[ChebGrid2D] = None
    iterations: int = 0


@dataclass
class SecantState:
    """Evaluation history of the secant iteration: (s_t, lambda_t) pairs."""

    history: list = field(default_factory=list)
    t: int = 0


def _working_context():
    return gmpy2.context(precision=get_precision())


def _unfold_grid(vector, K: int, y_even: bool) -> ChebGrid2D:
    cols = K // 2 if y_even else K
    values = [[None] * K for _ in range(K)]
    for i1 in range(K):
        for i2 in range(cols):
            v = vector[i1 * cols + i2]
            values[i1][i2] = v
            if y_even:
                values[i1][K - 1 - i2] = v
    return ChebGrid2D(K, values)


def leading_eig(matrix, *, grid_shape=None, tol=None, max_iter=2000,
                seed=None) -> EigenPair:
    """Dominant eigenpair of a square scalar matrix by power iteration.

    Stops when consecutive Rayleigh quotients agree to ``tol`` (default:
    sixteen bits above working-precision noise) and the eigen-residual
    ||Mv - lambda v|| has dropped well below the iterate -- the residual
    guard keeps rotation-like spectra (equal-modulus eigenvalues, no
    dominant pair) from masquerading as converged.  ``grid_shape`` is an
    optional (K, y_even) pair used to reshape the eigenvector onto the
    Chebyshev grid; ``seed`` warm-starts the iteration.
    """
    n = len(matrix)
    if n == 0 or any(len(row) != n for row in matrix):
        raise ParameterError("leading_eig needs a nonempty square matrix")
    with _working_context():
        rows = [[big(x) for x in row] for row in matrix]
        if seed is not None:
            if len(seed) != n:
                raise ParameterError("seed vector has wrong length")
            v = [big(x) for x in seed]
        else:
            v = [big(1)] * n
        if tol is None:
            tol = big(2) ** -(get_precision() - 16)
        else:
            tol = big(tol)
        res_tol = big(2) ** -max(get_precision() - 40, 24)
        lam_prev = None
        for it in range(1, max_iter + 1):
            w = [sum(r[j] * v[j] for j in range(n)) for r in rows]
            num = sum(v[i] * w[i] for i in range(n))
            den = sum(v[i] * v[i] for i in range(n))
            if den == 0:
                raise NoConvergence("power iteration collapsed to zero")
            lam = num / den
            m, idx = abs(w[0]), 0
            for i in range(1, n):
                a = abs(w[i])
                if a > m:
                    m, idx = a, i
            if m == 0:
                raise NoConvergence("matrix annihilated the iterate")
            residual = max(abs(w[i] - lam * v[i]) for i in range(n))
            scale = w[idx]  # keep the dominant component at +1
            v = [x / scale for x in w]
            settled = (
                lam_prev is not None
                and abs(lam - lam_prev) <= tol * max(abs(lam), big(1))
                and residual <= res_tol * m
            )
            if settled:
                grid = None
                if grid_shape is not None:
                    grid = _unfold_grid(v, grid_shape[0], grid_shape[1])
                return EigenPair(lam, v, grid, it)
            lam_prev = lam
    raise NoConvergence(f"power iteration did not settle in {max_iter} steps")


# ---------------------------------------------------------------------------
# secant iteration
# ---------------------------------------------------------------------------

_EPS_CAP = Fraction(1, 10**10)


def secant_iterate(lambda_of_s, s0, s1, epsilon, *, max_iter=24):
    """Drive the secant update for lambda(s) = 1 from two initial points.

    Stops once |lambda_t - 1| * |lambda_{t-1} - 1| <= epsilon and
    returns (s_star, state) where s_star is the next (unevaluated)
    secant point -- its distance to the true root is controlled by the
    product just tested.  Raises MonotonicityViolation if the evaluated
    lambda values fail to decrease strictly in s.
    """
    eps = Fraction(epsilon)
    if not 0 < eps < _EPS_CAP:
        raise ParameterError("secant tolerance must lie in (0, 1e-10)")
    state = SecantState()

    def record(s, lam):
        state.history.append((s, lam))
        state.t = len(state.history)
        by_s = sorted(state.history, key=lambda p: p[0])
        for (sa, la), (sb, lb) in zip(by_s, by_s[1:]):
            # Ties fall through to the stall branch below, which tells an
            # exact root (lambda = 1) apart from a genuinely flat lambda.
            if sa != sb and la < lb:
                raise MonotonicityViolation(
                    f"lambda({sa}) = {la} is below lambda({sb}) = {lb}")

    with _working_context():
        eps_b = big(eps)
        one = big(1)
        s_prev, s_cur = big(s0), big(s1)
        lam_prev = big(lambda_of_s(s_prev))
        record(s_prev, lam_prev)
        lam_cur = big(lambda_of_s(s_cur))
        record(s_cur, lam_cur)
        for _ in range(max_iter):
            dlam = lam_cur - lam_prev
            if dlam == 0:
                if lam_cur == one:
                    return s_cur, state
                raise NoConvergence("secant stalled on a flat lambda pair")
            s_next = s_cur - (lam_cur - one) * (s_cur - s_prev) / dlam
            if abs(lam_cur - one) * abs(lam_prev - one) <= eps_b:
                return s_next, state
            s_prev, lam_prev = s_cur, lam_cur
            s_cur = s_next
            lam_cur = big(lambda_of_s(s_cur))
            record(s_cur, lam_cur)
    raise NoConvergence(f"secant did not meet its tolerance in {max_iter} steps")


def secant_search(epsilon, K, plan=None, *, s0=Fraction(13, 10),
                  s1=Fraction(131, 100), constants=None, y_even=True,
                  threads=1, eig_tol=None, max_iter=24, state_out=None):
    """Secant search on the assembled operator: returns (s_star, phi).

    ``plan`` optionally fixes the quadrature shape (N, L, M, Mp) for all
    evaluations; by default the shape is derived once from epsilon at s0
    and then shared, so every secant step sees identical node geometry.
    The eigenvector of each step seeds the next (warm start), which
    saves power-iteration steps but cannot change any fixed point.
    Passing a SecantState as ``state_out`` captures the (s, lambda)
    evaluation history for reporting.
    """
    constants = AprioriConstants() if constants is None else constants
    template = plan
    if template is None:
        template = OperatorParams.build(s0, epsilon, K, constants=constants,
                                        y_even=y_even).plan
    warm = {"vec": None, "pair": None}

    def lam_of(s):
        params = OperatorParams.build(s, epsilon, K, constants=constants,
                                      y_even=y_even, template=template)
        mat = assemble_matrix(params, rigorous=False, threads=threads)
        pair = leading_eig(mat, grid_shape=(K, y_even), tol=eig_tol,
                           seed=warm["vec"])
        warm["vec"] = pair.vector
        warm["pair"] = pair
        return pair.lam

    s_star, state = secant_iterate(lam_of, s0, s1, epsilon, max_iter=max_iter)
    if state_out is not None:
        state_out.history.extend(state.history)
        state_out.t = state.t
    return s_star, warm["pair"].phi_grid
