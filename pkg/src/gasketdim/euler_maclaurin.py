"""Accelerated summation of analytic series with certified error bounds.

For a summand ``psi`` analytic on the half-plane ``Re z >= nu`` and
decaying like ``z**(-2s)`` at infinity, the infinite sum splits as

    sum_{n>=0} psi(n) = sum_{n<N} psi(n) + psi(N)/2 + I(N) + D(L,N) + R

where ``I(N)`` is the tail integral, ``D(L,N)`` collects the classical
Bernoulli-weighted odd derivatives at ``N``, and ``|R|`` is bounded by
:func:`remainder_bound`.  Both correction terms reduce to weighted point
evaluations at complex nodes:

* the derivative correction uses ``M`` equidistant nodes on the circle
  ``|z - N| = tau`` with ``tau = (N - nu)/e`` (each odd derivative is a
  discrete Fourier coefficient of ``psi`` on that circle, and the whole
  Bernoulli sum collapses into one coefficient ``c_m`` per node);

* the tail integral uses ``Mp`` nodes on the circle ``|z| = N``.  After
  the substitution ``w = 1/z`` the rescaled summand
  ``phi(w) = psi(1/w) * w**(-2s)`` is analytic at ``w = 0``, and the
  integral of each Taylor monomial of ``phi`` is known in closed form;
  the coefficients ``cp_k`` absorb the resulting powers of ``N`` and the
  factors ``1/(p + 2s - 1)``, so no fractional power of a complex node
  is ever taken.

The minus sign of the derivative correction is folded into the stored
``c_m``, so every term above is *added*.  All node weights are interval
enclosures and every truncation error carries an explicit bound, so the
final interval is a certified enclosure of the exact infinite sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from mpmath import bernfrac

from .rigor import IntervalComplex, IntervalScalar, ParameterError

__all__ = [
    "BernoulliTable",
    "EMPlan",
    "make_plan",
    "remainder_bound",
    "derivative_error_bound",
    "integral_error_bound",
    "taylor_derivative_estimate",
    "derivative_term",
    "integral_term",
    "accelerated_sum",
]

# targets coarser than this are not worth accelerating (and break the
# heuristics that pick N and L)
MAX_EPSILON = Fraction(1, 2**20)

_ONE = IntervalScalar.point(1)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float)):
        return Fraction(x)
    raise ParameterError(f"expected an exact numeric value, got {type(x).__name__}")


def _as_interval(x) -> IntervalScalar:
    return x if isinstance(x, IntervalScalar) else IntervalScalar.point(x)


def _as_complex(z) -> IntervalComplex:
    if isinstance(z, IntervalComplex):
        return z
    if isinstance(z, IntervalScalar):
        return IntervalComplex.from_real(z)
    if isinstance(z, complex):
        return IntervalComplex.point(z.real, z.imag)
    return IntervalComplex.point(z)


def _euler_e() -> IntervalScalar:
    return _ONE.exp()


def _half_turns(frac: Fraction) -> Fraction:
    """Reduce an angle measured in half-turns to the window (-1, 1]."""
    frac = frac % 2
    return frac - 2 if frac > 1 else frac


class _CisCache:
    """Memoized enclosures of exp(i*pi*q) for exact rational q."""

    def __init__(self):
        self._pi = IntervalScalar.pi()
        self._table = {}

    def __call__(self, frac: Fraction) -> IntervalComplex:
        frac = _half_turns(frac)
        hit = self._table.get(frac)
        if hit is None:
            hit = IntervalComplex.cis(self._pi.mul(IntervalScalar.point(frac)))
            self._table[frac] = hit
        return hit


@dataclass(frozen=True)
class BernoulliTable:
    """Exact even-index Bernoulli numbers B_2, B_4, ..., B_{2L}."""

    L: int
    values: tuple

    @classmethod
    def up_to(cls, L: int) -> "BernoulliTable":
        if L < 1:
            raise ParameterError("Bernoulli table needs L >= 1")
        vals = []
        for l in range(1, L + 1):
            p, q = bernfrac(2 * l)
            vals.append(Fraction(int(p), int(q)))
        return cls(L=L, values=tuple(vals))

    def b(self, l: int) -> Fraction:
        """B_{2l} as an exact rational, 1 <= l <= L."""
        if not 1 <= l <= self.L:
            raise ParameterError(f"Bernoulli index {l} outside table of length {self.L}")
        return self.values[l - 1]


@dataclass(frozen=True)
class EMPlan:
    """Frozen node and coefficient data for one accelerated summation.

    ``z_m``/``c_m`` drive the derivative correction (minus sign already
    folded into ``c_m``); ``w_k``/``cp_k`` drive the tail integral, with
    ``w_k = 1/zp_k`` the points where the rescaled summand is evaluated.
    ``err_budget`` is the summed upper bound of the three truncation
    errors for unit summand bounds (C = C~ = 1); callers scale it by
    their own bounds.  Plans are immutable and safe to share across
    worker processes.
    """

    epsilon: Fraction
    nu: Fraction
    s: IntervalScalar
    N: int
    L: int
    M: int
    Mp: int
    tau: IntervalScalar
    z_m: tuple
    c_m: tuple
    zp_k: tuple
    w_k: tuple
    cp_k: tuple
    bernoulli: BernoulliTable
    err_budget: object

    def __post_init__(self):
        if not (len(self.z_m) == len(self.c_m) == self.M):
            raise ParameterError("derivative node/coefficient count must equal M")
        if not (len(self.zp_k) == len(self.w_k) == len(self.cp_k) == self.Mp):
            raise ParameterError("integral node/coefficient count must equal Mp")


def make_plan(epsilon, nu, s, N=None, L=None, M=None, Mp=None) -> EMPlan:
    """Choose summation parameters for a target accuracy and build the plan.

    With natural logarithms throughout: N = ceil(nu - log(eps)/(2*pi)),
    L = floor(pi*(N - nu) - 1/2) which balances the remainder against the
    derivative quadrature, M = 2L, and Mp = 2*ceil(-log(eps)/(2*log(N/nu))).
    Any of N, L, M, Mp may be overridden, subject to the plan invariants
    (M >= 2L, Mp >= 1, N > nu, and 2L - 1 < 2*e*pi*(N - nu)).
    """
    eps = _as_fraction(epsilon)
    if not 0 < eps < MAX_EPSILON:
        raise ParameterError("epsilon must lie in (0, 2^-20)")
    nu_frac = _as_fraction(nu)
    if nu_frac < 1:
        raise ParameterError("analyticity radius nu must be >= 1")
    s_iv = _as_interval(s)
    two_s_minus_1 = s_iv.scale2(1).sub(_ONE)
    if not two_s_minus_1.strictly_positive():
        raise ParameterError("exponent parameter must satisfy s > 1/2")

    pi = IntervalScalar.pi()
    euler = _euler_e()
    neg_log_eps = IntervalScalar.point(eps).log().neg()

    if N is None:
        N = int(gmpy2.ceil(IntervalScalar.point(nu_frac).add(neg_log_eps.div(pi.scale2(1))).hi))
    if not N > nu_frac:
        raise ParameterError("head length N must exceed nu")
    gap = IntervalScalar.point(N).sub(IntervalScalar.point(nu_frac))

    if L is None:
        L = int(gmpy2.floor(pi.mul(gap).sub(IntervalScalar.from_fraction(1, 2)).lo))
        L = max(L, 1)
    if L < 1:
        raise ParameterError("derivative order L must be >= 1")
    if not IntervalScalar.point(2 * L - 1).strictly_less(pi.scale2(1).mul(euler).mul(gap)):
        raise ParameterError("derivative order violates 2L - 1 < 2*e*pi*(N - nu)")

    if M is None:
        M = 2 * L
    if M < 2 * L:
        raise ParameterError("derivative node count must satisfy M >= 2L")

    if Mp is None:
        growth = IntervalScalar.point(N).div(IntervalScalar.point(nu_frac)).log()
        Mp = 2 * int(gmpy2.ceil(neg_log_eps.div(growth.scale2(1)).hi))
    if Mp < 1:
        raise ParameterError("integral node count must satisfy Mp >= 1")

    tau = gap.div(euler)
    table = BernoulliTable.up_to(L)
    cis = _CisCache()

    # derivative correction: nodes on |z - N| = tau, one collapsed
    # Fourier coefficient per node, minus sign folded in
    weights = [
        IntervalScalar.point(-(table.b(l) / (2 * l))).mul(tau.pow_int(1 - 2 * l))
        for l in range(1, L + 1)
    ]
    n_iv = IntervalScalar.point(N)
    z_nodes, c_coeffs = [], []
    for m in range(1, M + 1):
        ray = cis(Fraction(2 * m - 1, M))
        z_nodes.append(IntervalComplex.from_real(n_iv).add(ray.mul_real(tau)))
        acc = IntervalComplex.point(0)
        for l in range(1, L + 1):
            acc = acc.add(cis(Fraction(-(2 * l - 1) * (2 * m - 1), M)).mul_real(weights[l - 1]))
        c_coeffs.append(acc)

    # tail integral: nodes on |z| = N, coefficients absorbing N^(1-2s)
    # and the closed-form monomial integrals 1/(p + 2s - 1)
    inv_n = IntervalScalar.from_fraction(1, N)
    n_power = n_iv.pow(_ONE.sub(s_iv.scale2(1)))
    monomial = [two_s_minus_1.add(IntervalScalar.point(p)).recip() for p in range(Mp)]
    zp_nodes, w_nodes, cp_coeffs = [], [], []
    for k in range(Mp):
        ray = cis(Fraction(2 * k + 1, Mp))
        zp_nodes.append(ray.conj().mul_real(n_iv))
        w_nodes.append(ray.mul_real(inv_n))
        acc = IntervalComplex.point(0)
        for p in range(Mp):
            acc = acc.add(cis(Fraction(-p * (2 * k + 1), Mp)).mul_real(monomial[p]))
        cp_coeffs.append(acc.mul_real(n_power))

    budget = (
        remainder_bound(L, N, nu_frac, 1)
        .add(derivative_error_bound(L, N, nu_frac, M, 1))
        .add(integral_error_bound(N, nu_frac, s_iv, Mp, 1))
    )
    return EMPlan(
        epsilon=eps,
        nu=nu_frac,
        s=s_iv,
        N=N,
        L=L,
        M=M,
        Mp=Mp,
        tau=tau,
        z_m=tuple(z_nodes),
        c_m=tuple(c_coeffs),
        zp_k=tuple(zp_nodes),
        w_k=tuple(w_nodes),
        cp_k=tuple(cp_coeffs),
        bernoulli=table,
        err_budget=budget.hi,
    )


# ---------------------------------------------------------------------------
# certified error bounds
# ---------------------------------------------------------------------------


def _gap(N, nu) -> IntervalScalar:
    gap = IntervalScalar.point(N).sub(IntervalScalar.point(_as_fraction(nu)))
    if not gap.strictly_positive():
        raise ParameterError("need N > nu")
    return gap


def remainder_bound(L, N, nu, C) -> IntervalScalar:
    """Bound on the tail left after L derivative-correction terms.

    Equals (2L+1)! C / (L (2pi)^(2L+1) (N-nu)^(2L)) for summands bounded
    in modulus by C on Re z >= nu.
    """
    if L < 1:
        raise ParameterError("remainder bound needs L >= 1")
    gap = _gap(N, nu)
    two_pi = IntervalScalar.pi().scale2(1)
    num = IntervalScalar.point(math.factorial(2 * L + 1)).mul(_as_interval(C))
    return num.div(IntervalScalar.point(L).mul(two_pi.pow_int(2 * L + 1)).mul(gap.pow_int(2 * L)))


def derivative_error_bound(L, N, nu, M, C) -> IntervalScalar:
    """Quadrature error of the collapsed derivative correction.

    Equals (pi^2 e/6) (N-nu) / ((2 pi e (N-nu)/(2L-1))^2 - 1) * C/(e^M - 1);
    requires 2L - 1 < 2 e pi (N - nu).
    """
    if L < 1:
        raise ParameterError("derivative error bound needs L >= 1")
    gap = _gap(N, nu)
    pi = IntervalScalar.pi()
    euler = _euler_e()
    ratio = pi.scale2(1).mul(euler).mul(gap).div(IntervalScalar.point(2 * L - 1))
    denom = ratio.square().sub(_ONE)
    if not denom.strictly_positive():
        raise ParameterError("derivative order violates 2L - 1 < 2*e*pi*(N - nu)")
    prefactor = pi.square().mul(euler).div(IntervalScalar.point(6)).mul(gap).div(denom)
    return prefactor.mul(_as_interval(C)).div(IntervalScalar.point(M).exp().sub(_ONE))


def integral_error_bound(N, nu, s, Mp, C_tilde) -> IntervalScalar:
    """Quadrature error of the rescaled tail integral.

    Equals 2 C~ N^(1-2s) / ((2s-1)(1 - nu/N)) / ((N/nu)^Mp - 1) for a
    rescaled summand bounded by C~ on |w| < 1/nu.
    """
    if Mp < 1:
        raise ParameterError("integral error bound needs Mp >= 1")
    _gap(N, nu)
    s_iv = _as_interval(s)
    two_s_minus_1 = s_iv.scale2(1).sub(_ONE)
    if not two_s_minus_1.strictly_positive():
        raise ParameterError("integral error bound needs s > 1/2")
    n_iv = IntervalScalar.point(N)
    nu_iv = IntervalScalar.point(_as_fraction(nu))
    n_power = n_iv.pow(_ONE.sub(s_iv.scale2(1)))
    shrink = _ONE.sub(nu_iv.div(n_iv))
    geometric = n_iv.div(nu_iv).pow_int(Mp).sub(_ONE)
    return n_power.mul(_as_interval(C_tilde)).scale2(1).div(
        two_s_minus_1.mul(shrink).mul(geometric)
    )


def _widen(value: IntervalComplex, bound: IntervalScalar) -> IntervalComplex:
    """Pad both components of ``value`` by the upper end of ``bound``."""
    radius = IntervalScalar.point(bound.mag)
    pad = IntervalScalar.hull_of([radius.neg(), radius])
    return IntervalComplex(value.re.add(pad), value.im.add(pad))


# ---------------------------------------------------------------------------
# quadrature terms
# ---------------------------------------------------------------------------


def taylor_derivative_estimate(psi, z0, tau, k, M, C, sigma) -> IntervalComplex:
    """Enclose the k-th derivative of ``psi`` at ``z0`` from circle samples.

    Uses M equidistant points on the circle of radius tau around z0 and
    widens the discrete Fourier coefficient by the aliasing bound
    C tau^M k! / (sigma^k (sigma^M - tau^M)), valid when ``psi`` is
    analytic and bounded by C on |z - z0| < sigma.
    """
    if not isinstance(k, int) or k < 0:
        raise ParameterError("derivative order k must be a nonnegative integer")
    if not isinstance(M, int) or M <= k:
        raise ParameterError("node count M must exceed the derivative order k")
    tau_iv, sigma_iv = _as_interval(tau), _as_interval(sigma)
    if not tau_iv.strictly_positive():
        raise ParameterError("sample radius tau must be positive")
    if not tau_iv.strictly_less(sigma_iv):
        raise ParameterError("sample radius tau must be smaller than sigma")
    center = _as_complex(z0)
    cis = _CisCache()
    acc = IntervalComplex.point(0)
    for m in range(1, M + 1):
        ray = cis(Fraction(2 * m - 1, M))
        node = center.add(ray.mul_real(tau_iv))
        acc = acc.add(cis(Fraction(-k * (2 * m - 1), M)).mul(psi(node)))
    scale = IntervalScalar.point(math.factorial(k)).div(
        IntervalScalar.point(M).mul(tau_iv.pow_int(k))
    )
    estimate = acc.mul_real(scale)
    span = sigma_iv.pow_int(M).sub(tau_iv.pow_int(M))
    if not span.strictly_positive():
        raise ParameterError("aliasing bound needs sigma > tau")
    alias = (
        _as_interval(C)
        .mul(tau_iv.pow_int(M))
        .mul(IntervalScalar.point(math.factorial(k)))
        .div(sigma_iv.pow_int(k).mul(span))
    )
    return _widen(estimate, alias)


def derivative_term(psi, plan: EMPlan, C) -> IntervalComplex:
    """Derivative correction as it is *added* in the accelerated sum.

    Evaluates (1/M) sum_m c_m psi(z_m) -- the collapsed enclosure of
    minus the Bernoulli-weighted odd derivatives at N -- widened by
    :func:`derivative_error_bound` for a summand bounded by C on
    Re z >= nu.
    """
    acc = IntervalComplex.point(0)
    for z, c in zip(plan.z_m, plan.c_m):
        acc = acc.add(c.mul(psi(z)))
    acc = acc.mul_real(IntervalScalar.from_fraction(1, plan.M))
    return _widen(acc, derivative_error_bound(plan.L, plan.N, plan.nu, plan.M, C))


def integral_term(psi_tilde, plan: EMPlan, C_tilde) -> IntervalComplex:
    """Tail integral from samples of the rescaled summand.

    ``psi_tilde`` is the handle for phi(w) = psi(1/w) * w^(-2s), which
    must be analytic and bounded by C~ on |w| < 1/nu; it is evaluated at
    the reciprocal nodes w_k and combined with the closed-form monomial
    integrals stored in cp_k, then widened by
    :func:`integral_error_bound`.
    """
    acc = IntervalComplex.point(0)
    for w, c in zip(plan.w_k, plan.cp_k):
        acc = acc.add(c.mul(psi_tilde(w)))
    acc = acc.mul_real(IntervalScalar.from_fraction(1, plan.Mp))
    return _widen(acc, integral_error_bound(plan.N, plan.nu, plan.s, plan.Mp, C_tilde))


def accelerated_sum(psi, psi_tilde, plan: EMPlan, C, C_tilde, integral_override=None) -> IntervalScalar:
    """Certified enclosure of sum_{n>=0} psi(n).

    ``psi`` must be real on the real axis, analytic and bounded by C on
    Re z >= nu, and decay like z^(-2s); ``psi_tilde`` is its rescaling
    as in :func:`integral_term`.  ``integral_override`` replaces the
    integral quadrature with a caller-supplied enclosure of
    int_N^infinity psi (useful when the rescaled summand is not analytic
    at w = 0, e.g. exponentially decaying summands with a closed-form
    tail integral); ``psi_tilde``/``C_tilde`` are then unused.
    """
    total = IntervalComplex.point(0)
    for n in range(plan.N):
        total = total.add(psi(IntervalComplex.point(n)))
    total = total.add(psi(IntervalComplex.point(plan.N)).scale2(-1))
    if integral_override is None:
        total = total.add(integral_term(psi_tilde, plan, C_tilde))
    else:
        override = integral_override
        if isinstance(override, IntervalScalar):
            override = IntervalComplex.from_real(override)
        total = total.add(override)
    total = total.add(derivative_term(psi, plan, C))
    total = _widen(total, remainder_bound(plan.L, plan.N, plan.nu, C))
    return total.re
