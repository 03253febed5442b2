"""Parabolic Moebius generators and the induced contracting system.

The circle-packing limit set is generated by a parabolic map A with
matrix ((sqrt3-1, 1), (-1, sqrt3+1)) (neutral fixed point at z = 1)
together with the rotations by exp(+-2 pi i/3).  Inducing on the
parabolic piece produces a countable family of uniformly contracting
maps indexed by a sign and n = 0, 1, 2, ...:

    f_n^{sigma} = S^{-1} o A o rot_sigma o A^n o S,   S(z) = (z+1)/4,

acting on (a neighbourhood of) the square [-1,1]^2 read as z1 + i z2:
S carries the square into the disk where the generator and the
rotations act, and S^{-1} reads the first-return piece back off.  (The
opposite conjugation order would place Moebius poles inside the square;
this one keeps them clustered near zeta = 3, matching the analyticity
domain |z1 + i z2 - 3| > eps used throughout.)
Because A^n has the closed form ((sqrt3-n, n), (-n, n+sqrt3)), every
matrix entry of f_n^sigma is affine in n, so the whole family -- and its
analytic continuation to complex n, needed by the contour-summation
stage -- is evaluated from two cached constant matrices.

The two-variable real-analytic maps G and Jacobian factors J follow the
conjugate-pair construction: with zeta^+ = z1 + i z2, zeta^- = z1 - i z2,

    G = ((f(zeta+) + f~(zeta-))/2, (f(zeta+) - f~(zeta-))/2i),
    J = 144 / (D_sigma(zeta+) . D_{-sigma}(zeta-)),

where f~ is the conjugate-coefficient map and D_sigma(zeta) = c zeta + d
is the Moebius denominator, affine in n:  D = alpha_sigma(zeta) n +
beta_sigma(zeta).  The rational form of J is single-valued, positive on
the real square, and analytic in n; no square-root branch tracking is
needed until one takes powers J^s, for which log-space helpers with
certified branch conditions are provided (log1p factors with
Re(1+u) > 0, anchored at the n = infinity limit).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .rigor import (
    BranchCutCrossed,
    IntervalComplex,
    IntervalScalar,
    get_precision,
)

__all__ = [
    "BranchSelector",
    "DomainError",
    "G",
    "J",
    "MapIndex",
    "MoebiusMap",
    "apollonian_generator",
    "apollonian_power",
    "branch_selector",
    "d_affine",
    "g_real",
    "induced_map_matrix",
    "jacobian_real",
    "log_scaled_jacobian",
    "rotation",
    "scaled_jacobian",
    "scaled_jacobian_limit",
]


class DomainError(ArithmeticError):
    """A Moebius denominator or analyticity-domain condition failed."""


Sign = int  # +1 or -1


@dataclass(frozen=True)
class MapIndex:
    """One member of the induced family: a sign and an index n.

    n is a nonnegative integer in the head sum, or an IntervalComplex on
    the contour-summation circles (|n| >= nu).
    """

    sign: Sign
    n: Union[int, IntervalComplex]

    def __post_init__(self):
        if self.sign not in (+1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if isinstance(self.n, int) and self.n < 0:
            raise ValueError(f"integer index must be >= 0, got {self.n}")


class MoebiusMap:
    """Projective map z -> (az+b)/(cz+d) with interval matrix entries."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = a, b, c, d

    def det(self) -> IntervalComplex:
        return self.a.mul(self.d).sub(self.b.mul(self.c))

    def apply(self, z: IntervalComplex) -> IntervalComplex:
        den = self.c.mul(z).add(self.d)
        if den.abs2().lo <= 0:
            raise DomainError(f"Moebius denominator {den!r} may vanish")
        return self.a.mul(z).add(self.b).div(den)

    def derivative(self, z: IntervalComplex) -> IntervalComplex:
        den = self.c.mul(z).add(self.d)
        if den.abs2().lo <= 0:
            raise DomainError(f"Moebius denominator {den!r} may vanish")
        return self.det().div(den.mul(den))

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(
            self.a.mul(other.a).add(self.b.mul(other.c)),
            self.a.mul(other.b).add(self.b.mul(other.d)),
            self.c.mul(other.a).add(self.d.mul(other.c)),
            self.c.mul(other.b).add(self.d.mul(other.d)),
        )

    def conj(self) -> "MoebiusMap":
        return MoebiusMap(self.a.conj(), self.b.conj(), self.c.conj(), self.d.conj())

    def __repr__(self):
        return f"MoebiusMap({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"


# ---------------------------------------------------------------------------
# cached constants (per working precision)
# ---------------------------------------------------------------------------

_const_cache: dict = {}
_int_matrix_cache: dict = {}


def _real(x) -> IntervalComplex:
    return IntervalComplex.from_real(x if isinstance(x, IntervalScalar) else IntervalScalar.point(x))


def _mm(p, q):
    """2x2 complex-interval matrix product, matrices as 4-tuples (a,b,c,d)."""
    pa, pb, pc, pd = p
    qa, qb, qc, qd = q
    return (
        pa.mul(qa).add(pb.mul(qc)),
        pa.mul(qb).add(pb.mul(qd)),
        pc.mul(qa).add(pd.mul(qc)),
        pc.mul(qb).add(pd.mul(qd)),
    )


def _constants():
    key = get_precision()
    if key in _const_cache:
        return _const_cache[key]
    sqrt3 = IntervalScalar.point(3).sqrt()
    half = IntervalScalar.from_fraction(1, 2)
    zero = IntervalScalar.exact(0)
    omega = {
        s: IntervalComplex(half.neg(), sqrt3.scale2(-1) if s > 0 else sqrt3.scale2(-1).neg())
        for s in (+1, -1)
    }
    mu = {s: omega[s].sub(_real(sqrt3.add(IntervalScalar.exact(1)))) for s in (+1, -1)}
    m_s = (_real(1), _real(1), _real(0), _real(4))
    m_s_inv = (_real(4), _real(-1), _real(0), _real(1))
    m_a = (
        _real(sqrt3.sub(IntervalScalar.exact(1))),
        _real(1),
        _real(-1),
        _real(sqrt3.add(IntervalScalar.exact(1))),
    )
    a0 = (_real(sqrt3), _real(0), _real(0), _real(sqrt3))  # A^n at n=0 (times sqrt3)
    a1 = (_real(-1), _real(1), _real(-1), _real(1))  # coefficient of n in A^n
    affine = {}
    for s in (+1, -1):
        m_rot = (omega[s], _real(0), _real(0), _real(1))
        # f_n = S^{-1} o A o rot o A^n o S: conjugation carries the square
        # into the disk where the generator and rotations act
        prefix = _mm(_mm(m_s_inv, m_a), m_rot)
        affine[s] = (_mm(_mm(prefix, a0), m_s), _mm(_mm(prefix, a1), m_s))
    beta_const = IntervalScalar.point(4).mul(IntervalScalar.point(3).add(sqrt3))
    consts = {
        "sqrt3": sqrt3,
        "omega": omega,
        "mu": mu,
        "affine": affine,  # sign -> (C0, C1) with M(n) = C0 + n C1
        "beta_const": beta_const,  # 4(3 + sqrt3)
        "m144": IntervalScalar.point(144),
        "three": _real(3),
    }
    _const_cache[key] = consts
    return consts


# ---------------------------------------------------------------------------
# generator matrices
# ---------------------------------------------------------------------------


def apollonian_generator() -> MoebiusMap:
    """The parabolic generator A with fixed point 1: ((sqrt3-1,1),(-1,sqrt3+1))."""
    sqrt3 = _constants()["sqrt3"]
    one = IntervalScalar.exact(1)
    return MoebiusMap(
        _real(sqrt3.sub(one)), _real(one), _real(one.neg()), _real(sqrt3.add(one))
    )


def apollonian_power(n) -> MoebiusMap:
    """A^n = ((sqrt3-n, n), (-n, n+sqrt3)); valid for complex interval n."""
    sqrt3 = _real(_constants()["sqrt3"])
    nv = n if isinstance(n, IntervalComplex) else _real(IntervalScalar.point(n))
    return MoebiusMap(sqrt3.sub(nv), nv, nv.neg(), nv.add(sqrt3))


def rotation(sign: Sign) -> MoebiusMap:
    """z -> e^{sign 2 pi i/3} z."""
    omega = _constants()["omega"][sign]
    return MoebiusMap(omega, _real(0), _real(0), _real(1))


def induced_map_matrix(idx: MapIndex) -> MoebiusMap:
    """Matrix of f_n^sigma (integer-normalized; det = 144 e^{sigma 2 pi i/3})."""
    if isinstance(idx.n, int):
        key = (idx.sign, idx.n, get_precision())
        cached = _int_matrix_cache.get(key)
        if cached is not None:
            return cached
    c0, c1 = _constants()["affine"][idx.sign]
    nv = idx.n if isinstance(idx.n, IntervalComplex) else _real(IntervalScalar.point(idx.n))
    out = MoebiusMap(*(z0.add(nv.mul(z1)) for z0, z1 in zip(c0, c1)))
    if isinstance(idx.n, int):
        _int_matrix_cache[key] = out
    return out


def d_affine(sign: Sign, zeta: IntervalComplex):
    """(alpha, beta) with Moebius denominator D_sigma(zeta) = alpha n + beta.

    alpha = mu_sigma (zeta - 3), beta = 4(3+sqrt3) - omega_sigma sqrt3 (zeta+1),
    mu_sigma = omega_sigma - sqrt3 - 1.
    """
    consts = _constants()
    alpha = consts["mu"][sign].mul(zeta.sub(consts["three"]))
    omega_s3 = consts["omega"][sign].mul_real(consts["sqrt3"])
    beta = _real(consts["beta_const"]).sub(omega_s3.mul(zeta.add(_real(1))))
    return alpha, beta


# ---------------------------------------------------------------------------
# the two-variable maps G and Jacobians J
# ---------------------------------------------------------------------------


def _zeta_pair(z1, z2):
    iz2 = z2.mul_i() if isinstance(z2, IntervalComplex) else _real(z2).mul_i()
    z1c = z1 if isinstance(z1, IntervalComplex) else _real(z1)
    return z1c.add(iz2), z1c.sub(iz2)


def G(idx: MapIndex, z1, z2):
    """The induced map as two components; real inputs give real outputs.

    Accepts IntervalScalar or IntervalComplex components; the complex
    form is the analytic continuation used on contour nodes.
    """
    zp, zm = _zeta_pair(z1, z2)
    wp = induced_map_matrix(idx).apply(zp)
    wm = induced_map_matrix(MapIndex(-idx.sign, idx.n)).apply(zm)
    u = wp.add(wm).scale2(-1)
    v = wp.sub(wm).mul_i().neg().scale2(-1)
    return u, v


def g_real(sign: Sign, n: int, x: IntervalScalar, y: IntervalScalar):
    """Fast real-path G for integer n: (Re, Im) of f_n^sigma(x + i y)."""
    h = induced_map_matrix(MapIndex(sign, n)).apply(IntervalComplex(x, y))
    return h.re, h.im


def J(idx: MapIndex, z1, z2) -> IntervalComplex:
    """Jacobian factor 144/(D_sigma(zeta+) D_{-sigma}(zeta-)).

    Single-valued rational form of the branch-consistent square root;
    positive on the real square for integer n.
    """
    zp, zm = _zeta_pair(z1, z2)
    nv = idx.n if isinstance(idx.n, IntervalComplex) else _real(IntervalScalar.point(idx.n))
    ap, bp = d_affine(idx.sign, zp)
    am, bm = d_affine(-idx.sign, zm)
    den = ap.mul(nv).add(bp).mul(am.mul(nv).add(bm))
    if den.abs2().lo <= 0:
        raise DomainError(f"Jacobian denominator {den!r} may vanish")
    return _real(_constants()["m144"]).div(den)


def jacobian_real(sign: Sign, n: int, x: IntervalScalar, y: IntervalScalar) -> IntervalScalar:
    """J on the real square for integer n: 144/|D_sigma(x+iy)|^2 > 0."""
    ap, bp = d_affine(sign, IntervalComplex(x, y))
    den = ap.mul_real(IntervalScalar.point(n)).add(bp).abs2()
    if den.lo <= 0:
        raise DomainError(f"Jacobian denominator squared {den!r} may vanish")
    return _constants()["m144"].div(den)


def scaled_jacobian(idx: MapIndex, z1, z2) -> IntervalComplex:
    """n^2 J, the quantity analytic and bounded as n -> infinity.

    For integer n this is literally n^2 J; for complex contour n it is
    computed in the cancellation-free form L/((1+u+)(1+u-)) with
    u = beta/(alpha n), which stays finite as |n| grows.
    """
    if isinstance(idx.n, int):
        nsq = IntervalScalar.point(idx.n * idx.n)
        return J(idx, z1, z2).mul_real(nsq)
    zp, zm = _zeta_pair(z1, z2)
    ap, bp = d_affine(idx.sign, zp)
    am, bm = d_affine(-idx.sign, zm)
    L = _real(_constants()["m144"]).div(ap.mul(am))
    one = _real(1)
    up = bp.div(ap.mul(idx.n))
    um = bm.div(am.mul(idx.n))
    den = one.add(up).mul(one.add(um))
    if den.abs2().lo <= 0:
        raise DomainError("scaled Jacobian: 1 + beta/(alpha n) may vanish")
    return L.div(den)


def scaled_jacobian_limit(sign: Sign, z1, z2) -> IntervalComplex:
    """lim_{n->inf} n^2 J = 144/(alpha_sigma(zeta+) alpha_{-sigma}(zeta-))."""
    zp, zm = _zeta_pair(z1, z2)
    ap, _ = d_affine(sign, zp)
    am, _ = d_affine(-sign, zm)
    return _real(_constants()["m144"]).div(ap.mul(am))


def log_scaled_jacobian(sign: Sign, n: IntervalComplex, x: IntervalScalar, y: IntervalScalar) -> IntervalComplex:
    """log(n^2 J) at a real grid point, branch anchored at n = infinity.

    Uses log L - log1p(u+) - log1p(u-) with L = 144/|alpha|^2 real
    positive (the zeta arguments are conjugates), so the only branch
    conditions are Re(1 + u) > 0 for both correction factors; raises
    BranchCutCrossed when they cannot be certified.
    """
    ap, bp = d_affine(sign, IntervalComplex(x, y))
    am, bm = ap.conj(), bp.conj()
    L = _constants()["m144"].div(ap.abs2())
    up = bp.div(ap.mul(n))
    um = bm.div(am.mul(n))
    out = IntervalComplex.from_real(L.log())
    return out.sub(up.log1p()).sub(um.log1p())


# ---------------------------------------------------------------------------
# branch anchoring at n = infinity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchSelector:
    """Branch anchor for one conjugate factor: the n->infinity limit of
    n times the square-rooted derivative factor, 12 e^{sigma i pi/3} /
    (mu_sigma (zeta - 3)).  Nonzero whenever zeta is bounded away from 3.
    """

    sign: Sign
    anchor_value: IntervalComplex


def branch_selector(sign: Sign, zeta: IntervalComplex) -> BranchSelector:
    consts = _constants()
    # 12 e^{sigma i pi/3} = 12 (1/2 + sigma i sqrt3/2) = 6 + sigma 6 sqrt3 i
    six = IntervalScalar.point(6)
    imag = consts["sqrt3"].mul(six) if sign > 0 else consts["sqrt3"].mul(six).neg()
    num = IntervalComplex(six, imag)
    den = consts["mu"][sign].mul(zeta.sub(consts["three"]))
    if den.abs2().lo <= 0:
        raise DomainError("branch anchor undefined: zeta too close to 3")
    return BranchSelector(sign, num.div(den))
