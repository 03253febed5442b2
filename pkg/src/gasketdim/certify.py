"""Certified dimension enclosures from the positive-operator stage.

The float stage proposes an eigenfunction and a crossing parameter; the
certified stage freezes both as exact dyadic data, encloses the
discretized operator image with interval arithmetic, and converts the
pointwise discrepancy into a two-sided bracket of the dimension via the
derivative window [-D_minus, -D_plus].
"""

import math
import os
import platform
import time
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Optional

import gmpy2

from .apriori import VerificationFailed, verify_constants
from .cheb import (
    ChebCoeffs2D,
    ChebGrid2D,
    coeffs_to_grid,
    grid_to_coeffs,
    hardy_norm_bound,
    projection_error,
    sup_inf_bounds,
)
from .rigor import IntervalScalar, ParameterError, temporary_precision
from .spectral import secant_search
from .transfer import (
    AprioriConstants,
    OperatorParams,
    _truncation_error,
    apply_to_grid,
)

__all__ = [
    "DimensionCertificate",
    "InconsistentBracket",
    "InvalidBounds",
    "PositivityFailure",
    "certificate_from_text",
    "certificate_to_text",
    "certify_dimension",
    "default_precision",
    "min_max_enclosure",
    "spectral_radius_bounds",
    "target_K",
]

_EPS_CAP = Fraction(1, 10**10)
_APRIORI_CLAIMS = ("ellipse-inclusion", "jacobian-envelope", "weight-sum",
                   "derivative-range")


class PositivityFailure(ArithmeticError):
    """A test function could not be certified positive on the square."""


class InvalidBounds(ValueError):
    """Discrepancy or positivity bounds handed to the bracket are unusable."""


class InconsistentBracket(ArithmeticError):
    """The certified bracket is empty or escapes the verified window."""


def _frac(f: Fraction) -> IntervalScalar:
    return IntervalScalar.from_fraction(f.numerator, f.denominator)


def _as_iv(v) -> IntervalScalar:
    if isinstance(v, IntervalScalar):
        return v
    if isinstance(v, Fraction):
        return _frac(v)
    return IntervalScalar.point(v)


@dataclass(frozen=True)
class DimensionCertificate:
    """A self-contained record of one certified enclosure [s_lo, s_hi].

    All scalar fields are dyadic floats at ``precision`` bits, so the
    text serialization below can store them as exact decimals and load
    them back without loss.
    """

    s_lo: object
    s_hi: object
    epsilon: Fraction
    K: int
    N: int
    L: int
    M: int
    Mp: int
    constants: AprioriConstants
    phi_lo: object
    phi_hi: object
    e_lo: object
    e_hi: object
    approx_error: object
    vnorm: object
    s0: object
    precision: int
    timestamp: str
    toolchain: str

    def __post_init__(self):
        if not self.phi_lo > 0:
            raise PositivityFailure("certificate needs a positive phi bound")
        if not self.s_lo < self.s_hi:
            raise InconsistentBracket(
                f"bracket [{self.s_lo}, {self.s_hi}] is empty")
        lo_edge, hi_edge = gmpy2.mpq(13, 10), gmpy2.mpq(131, 100)
        if not (self.s_lo >= lo_edge and self.s_hi <= hi_edge):
            raise InconsistentBracket(
                "bracket escapes [1.30, 1.31], where the window constants "
                "were verified")

    @property
    def width(self) -> float:
        return float(self.s_hi) - float(self.s_lo)

    def digits(self):
        """(digit string, count): decimal expansion certified by the bracket.

        Returns the longest prefix "1.30..." on which floor(s 10^k)
        agrees across the whole enclosure, with the number of certified
        fractional digits.
        """
        lo = Fraction(int(gmpy2.numer(gmpy2.mpq(self.s_lo))),
                      int(gmpy2.denom(gmpy2.mpq(self.s_lo))))
        hi = Fraction(int(gmpy2.numer(gmpy2.mpq(self.s_hi))),
                      int(gmpy2.denom(gmpy2.mpq(self.s_hi))))
        k = 0
        while int(lo * 10 ** (k + 1)) == int(hi * 10 ** (k + 1)):
            k += 1
        head = int(lo * 10**k)
        text = str(head)
        if k:
            text = text[:-k] + "." + text[-k:]
        return text, k


def target_K(epsilon, constants: Optional[AprioriConstants] = None) -> int:
    """Grid order for a target enclosure width: K = 2 ceil(-ln eps / 2 R_A)."""
    cst = constants or AprioriConstants()
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise ParameterError("epsilon must be in (0, 1)")
    neg_log = math.log(eps.denominator) - math.log(eps.numerator)
    return 2 * math.ceil(neg_log / (2 * float(cst.R_A)))


def default_precision(epsilon) -> int:
    """Working precision: twice the target bits, never below 120."""
    eps = Fraction(epsilon)
    bits = math.ceil(math.log2(eps.denominator) - math.log2(eps.numerator))
    return max(120, 2 * bits)


def min_max_enclosure(params: OperatorParams, eps_bounds, err,
                      phi_bounds) -> tuple:
    """Bracket of the crossing parameter from one certified application.

    Given e_lo <= P_K A_{s0} phi - phi <= e_hi on the square,
    err >= ||A_{s0} phi - P_K A_{s0} phi||_inf, and 0 < phi_lo <= phi
    <= phi_hi, the derivative window turns the pointwise inequalities
    into

        s0 + (e_lo - err)/(D_minus phi_hi) < s* < s0 + (e_hi + err)/(D_plus phi_lo)

    evaluated here with outward rounding.  ``err`` may be a scalar or an
    IntervalScalar (its upper end is used both ways).
    """
    e_lo, e_hi = (_as_iv(b) for b in eps_bounds)
    p_lo, p_hi = (_as_iv(b) for b in phi_bounds)
    if not p_lo.lo > 0:
        raise InvalidBounds("phi lower bound must be positive")
    if e_lo.lo > e_hi.hi:
        raise InvalidBounds(
            f"discrepancy bounds are crossed: {e_lo!r} > {e_hi!r}")
    cst = params.constants
    err_iv = _as_iv(err)
    err_pad = IntervalScalar.point(err_iv.mag)
    lo_num = e_lo.sub(err_pad)
    hi_num = e_hi.add(err_pad)
    lo_den = _frac(cst.D_minus).mul(p_hi)
    hi_den = _frac(cst.D_plus).mul(p_lo)
    s_lo = params.s.add(lo_num.div(lo_den)).lo
    s_hi = params.s.add(hi_num.div(hi_den)).hi
    return s_lo, s_hi


def _coeff_sub(a: ChebCoeffs2D, b: ChebCoeffs2D, scale=None) -> ChebCoeffs2D:
    rows = []
    for r1, r2 in zip(a.coeffs, b.coeffs):
        if scale is None:
            rows.append([x.sub(y) for x, y in zip(r1, r2)])
        else:
            rows.append([x.sub(scale.mul(y)) for x, y in zip(r1, r2)])
    return ChebCoeffs2D(a.K, rows)


def _approximation_error(params: OperatorParams,
                         vnorm: IntervalScalar) -> IntervalScalar:
    """W_A vnorm E_{2,K}(R_A) + quadrature error: bound on A phi - P_K A phi.

    The operator maps the small-ellipse Hardy ball into the large one
    with norm gain at most W_A, and the projection error of any such
    image is controlled by E_{2,K}(R_A); the quadrature term covers the
    gap between the evaluated sums and the true operator image.
    """
    cst = params.constants
    proj = projection_error(2, params.K, _frac(cst.R_A))
    analytic = _frac(cst.W_A).mul(vnorm).mul(proj)
    return analytic.add(_truncation_error(params, vnorm))


def spectral_radius_bounds(params: OperatorParams, phi: ChebCoeffs2D,
                           lam=1) -> str:
    """Compare the operator at params.s against lam on a positive phi.

    Returns "upper-confirmed" when A_s phi < lam phi holds certified
    everywhere on the square (hence rho(A_s) <= lam), "lower-confirmed"
    when A_s phi > lam phi is certified (rho(A_s) >= lam), and
    "inconclusive" when neither direction can be decided at this K.
    """
    lam_iv = _as_iv(lam)
    if not lam_iv.lo > 0:
        raise ParameterError("the comparison eigenvalue must be positive")
    if params.y_even:
        raise ParameterError(
            "radius comparison needs y_even=False params: a generic phi "
            "grid realized from coefficients has no exact mirror symmetry")
    p_lo, p_hi = sup_inf_bounds(phi)
    if not p_lo > 0:
        raise PositivityFailure(
            f"test function inf bound is {p_lo}; need certified positivity")
    vnorm = hardy_norm_bound(phi, _frac(params.constants.r_A))
    chi = apply_to_grid(params, coeffs_to_grid(phi))
    g = _coeff_sub(grid_to_coeffs(chi), phi, scale=lam_iv)
    g_lo, g_hi = sup_inf_bounds(g)
    bound = _approximation_error(params, vnorm)
    if IntervalScalar.point(g_hi).add(bound).hi < 0:
        return "upper-confirmed"
    if IntervalScalar.point(g_lo).sub(bound).lo > 0:
        return "lower-confirmed"
    return "inconclusive"


def _check_apriori(reports) -> None:
    missing = [c for c in _APRIORI_CLAIMS if c not in reports]
    if missing:
        raise VerificationFailed(
            f"constants not verified: missing claims {missing}")
    failed = [c for c in _APRIORI_CLAIMS if not reports[c].passed]
    if failed:
        raise VerificationFailed(f"constants not verified: failed {failed}")


def certify_dimension(epsilon, *, constants: Optional[AprioriConstants] = None,
                      y_even: bool = True, threads: int = 1,
                      precision: Optional[int] = None,
                      K: Optional[int] = None, N: Optional[int] = None,
                      L: Optional[int] = None, M: Optional[int] = None,
                      Mp: Optional[int] = None,
                      apriori_reports: Optional[dict] = None,
                      apriori_subdivision: int = 40,
                      cache_dir: Optional[str] = None) -> DimensionCertificate:
    """Full pipeline: float proposal, certified enclosure, packaged bracket.

    The a priori constants must be verified first: pass the reports from
    an earlier run, or leave ``apriori_reports`` None to run (or load
    from ``cache_dir``) the verification here.  Any failing claim aborts
    with no certificate.
    """
    eps = Fraction(epsilon)
    if not 0 < eps < _EPS_CAP:
        raise ParameterError("epsilon must lie in (0, 1e-10)")
    cst = constants or AprioriConstants()
    prec = precision or default_precision(eps)
    with temporary_precision(prec):
        if apriori_reports is None:
            apriori_reports = verify_constants(
                apriori_subdivision, constants=cst, threads=threads,
                cache_dir=cache_dir)
        _check_apriori(apriori_reports)

        order = K or target_K(eps, cst)
        base = OperatorParams.build(Fraction(13, 10), eps, order,
                                    constants=cst, y_even=y_even,
                                    N=N, L=L, M=M, Mp=Mp)
        s_star, phi_grid = secant_search(eps, order, plan=base.plan,
                                         constants=cst, y_even=y_even,
                                         threads=threads)

        # freeze the float proposal as exact dyadic data
        s0_q = Fraction(int(gmpy2.numer(gmpy2.mpq(s_star))),
                        int(gmpy2.denom(gmpy2.mpq(s_star))))
        vals = [[IntervalScalar.point(v) for v in row]
                for row in phi_grid.values]
        exact_grid = ChebGrid2D(order, vals)

        params = OperatorParams.build(s0_q, eps, order, constants=cst,
                                      y_even=y_even, template=base.plan)
        phi_hat = grid_to_coeffs(exact_grid)
        p_lo, p_hi = sup_inf_bounds(phi_hat)
        if not p_lo > 0:
            raise PositivityFailure(
                f"float-stage eigenfunction has inf bound {p_lo}")
        vnorm = hardy_norm_bound(phi_hat, _frac(cst.r_A))

        chi = apply_to_grid(params, exact_grid, threads=threads)
        g = _coeff_sub(grid_to_coeffs(chi), phi_hat)
        e_lo, e_hi = sup_inf_bounds(g)
        ae = _approximation_error(params, vnorm)
        s_lo, s_hi = min_max_enclosure(params, (e_lo, e_hi), ae,
                                       (p_lo, p_hi))

        epoch = int(os.environ.get("SOURCE_DATE_EPOCH", time.time()))
        stamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(epoch))
        chain = (f"python {platform.python_version()}, "
                 f"gmpy2 {gmpy2.version()}, {prec}-bit intervals")
        plan = params.plan
        return DimensionCertificate(
            s_lo=s_lo, s_hi=s_hi, epsilon=eps, K=order, N=plan.N, L=plan.L,
            M=plan.M, Mp=plan.Mp, constants=cst,
            phi_lo=p_lo, phi_hi=p_hi, e_lo=e_lo, e_hi=e_hi,
            approx_error=ae.hi, vnorm=vnorm.hi, s0=params.s.lo,
            precision=prec, timestamp=stamp, toolchain=chain,
        )


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------


_SCALARS = ("s_lo", "s_hi", "phi_lo", "phi_hi", "e_lo", "e_hi",
            "approx_error", "vnorm", "s0")
_INTS = ("K", "N", "L", "M", "Mp", "precision")


def _exact_decimal(x) -> str:
    """Finite decimal expansion of a dyadic float, sign included."""
    q = gmpy2.mpq(x)
    num, den = int(gmpy2.numer(q)), int(gmpy2.denom(q))
    sign = "-" if num < 0 else ""
    num = abs(num)
    k = den.bit_length() - 1
    if den != 1 << k:
        raise ValueError(f"not a dyadic value: {x}")
    digits = str(num * 5**k).rjust(k + 1, "0")
    if k == 0:
        return sign + digits
    return sign + digits[:-k] + "." + digits[-k:]


def certificate_to_text(cert: DimensionCertificate) -> str:
    """Key-value text form; every stored field loads back losslessly."""
    digits, count = cert.digits()
    lines = ["gasket-dimension-certificate v1", ""]
    lines.append(f"certified_digits = {digits}")
    lines.append(f"certified_digit_count = {count}")
    lines.append("")
    for name in ("s_lo", "s_hi"):
        lines.append(f"{name} = {_exact_decimal(getattr(cert, name))}")
    lines.append(f"epsilon = {cert.epsilon}")
    for name in _INTS:
        lines.append(f"{name} = {getattr(cert, name)}")
    for f in fields(cert.constants):
        lines.append(f"constants.{f.name} = {getattr(cert.constants, f.name)}")
    for name in _SCALARS[2:]:
        lines.append(f"{name} = {_exact_decimal(getattr(cert, name))}")
    lines.append(f"timestamp = {cert.timestamp}")
    lines.append(f"toolchain = {cert.toolchain}")
    return "\n".join(lines) + "\n"


def certificate_from_text(text: str) -> DimensionCertificate:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "gasket-dimension-certificate v1":
        raise ValueError("not a gasket-dimension-certificate v1 document")
    pairs = {}
    for line in lines:
        if "=" in line:
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()
    prec = int(pairs["precision"])
    const_kwargs = {}
    for f in fields(AprioriConstants):
        raw = pairs[f"constants.{f.name}"]
        const_kwargs[f.name] = int(raw) if f.name == "nu_A" else Fraction(raw)
    with temporary_precision(prec):
        def scalar(name):
            f = Fraction(pairs[name])
            iv = IntervalScalar.from_fraction(f.numerator, f.denominator)
            if not iv.lo == iv.hi:
                raise ValueError(f"{name} does not load exactly at "
                                 f"{prec} bits")
            return iv.lo

        kwargs = {name: scalar(name) for name in _SCALARS}
        kwargs.update({name: int(pairs[name]) for name in _INTS})
        kwargs["epsilon"] = Fraction(pairs["epsilon"])
        kwargs["constants"] = AprioriConstants(**const_kwargs)
        kwargs["timestamp"] = pairs["timestamp"]
        kwargs["toolchain"] = pairs["toolchain"]
        return DimensionCertificate(**kwargs)
