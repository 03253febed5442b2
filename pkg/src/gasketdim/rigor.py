"""Directed-rounding interval arithmetic on MPFR big floats.

Every certified quantity in this package is an :class:`IntervalScalar`
(endpoint pair ``[lo, hi]`` of arbitrary-precision floats) or an
:class:`IntervalComplex` (axis-aligned rectangle ``re + i*im``).  The
contract is inclusion isotonicity: the result of any operation contains
the exact image of its input intervals.  This is obtained from MPFR's
correct rounding -- endpoint computations are performed through two
shared ``gmpy2.context`` objects used as method hosts, one rounding
toward -inf and one toward +inf.  The contexts are never installed
globally and are immutable after :func:`set_precision`, so all
operations are pure and safe to run from worker processes.

Precision is configured once per run (default 120 bits).  Operations on
inputs carrying a different precision remain sound: MPFR rounds the
exact mathematical result of each operation into the working precision
in the requested direction.  Integer and decimal-string inputs are
routed through exact ``mpz``/``mpq`` values so that conversion itself
costs at most one directed rounding.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

import gmpy2
from gmpy2 import mpfr, mpq, mpz

__all__ = [
    "BranchCutCrossed",
    "DivisorContainsZero",
    "IntervalComplex",
    "IntervalScalar",
    "ParameterError",
    "big",
    "complex_pow_real_exponent",
    "get_precision",
    "interval_add",
    "interval_div",
    "interval_exp",
    "interval_log",
    "interval_mul",
    "interval_pow",
    "interval_sqrt",
    "set_precision",
    "temporary_precision",
]


class DivisorContainsZero(ZeroDivisionError):
    """Division by an interval whose enclosure contains zero."""


class BranchCutCrossed(ArithmeticError):
    """A branch-dependent operation could not certify branch continuity."""


class ParameterError(ValueError):
    """A parameter falls outside the validity range of a certified formula."""


# ---------------------------------------------------------------------------
# precision management
# ---------------------------------------------------------------------------

_MIN_PRECISION = 64

_MZERO = mpfr(0)
_MONE = mpfr(1)
_MNEGONE = mpfr(-1)


class _Contexts:
    __slots__ = ("bits", "down", "up", "near")

    def __init__(self, bits: int):
        self.bits = bits
        self.down = gmpy2.context(precision=bits, round=gmpy2.RoundDown)
        self.up = gmpy2.context(precision=bits, round=gmpy2.RoundUp)
        self.near = gmpy2.context(precision=bits, round=gmpy2.RoundToNearest)


_ctx = _Contexts(120)


def set_precision(bits: int) -> None:
    """Fix the working precision (bits of mantissa) for the whole run."""
    if bits < _MIN_PRECISION:
        raise ValueError(f"precision must be >= {_MIN_PRECISION} bits, got {bits}")
    global _ctx
    _ctx = _Contexts(int(bits))


def get_precision() -> int:
    return _ctx.bits


class temporary_precision:
    """Context manager: run a block at a different precision (tests mostly)."""

    def __init__(self, bits: int):
        self.bits = bits
        self._saved = None

    def __enter__(self):
        global _ctx
        self._saved = _ctx
        set_precision(self.bits)
        return self

    def __exit__(self, *exc):
        global _ctx
        _ctx = self._saved
        return False


def _exactify(x) -> Union[mpfr, mpz, mpq]:
    """Convert input to an exact gmpy2 value (no rounding yet)."""
    if isinstance(x, (mpfr, mpz, mpq)):
        return x
    if isinstance(x, int):
        return mpz(x)
    if isinstance(x, float):
        return mpfr(x)  # floats are exactly representable
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        frac = Fraction(x)
        return mpq(frac.numerator, frac.denominator)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact scalar")


def big(x) -> mpfr:
    """Round-to-nearest scalar at working precision (non-certified paths)."""
    return _ctx.near.add(_exactify(x), _MZERO)


Number = Union[int, float, str, "mpfr"]


# ---------------------------------------------------------------------------
# real intervals
# ---------------------------------------------------------------------------


class IntervalScalar:
    """Closed interval [lo, hi] with outward-rounded arithmetic."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: mpfr, hi: mpfr):
        if not (lo <= hi):  # also rejects NaN endpoints
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    # -- constructors -------------------------------------------------------

    @classmethod
    def point(cls, x: Number) -> "IntervalScalar":
        """Tightest interval around the exact value of ``x``."""
        v = _exactify(x)
        return cls(_ctx.down.add(v, _MZERO), _ctx.up.add(v, _MZERO))

    @classmethod
    def exact(cls, x) -> "IntervalScalar":
        """Degenerate interval; ``x`` must be exactly representable."""
        iv = cls.point(x)
        if iv.lo != iv.hi:
            raise ValueError(f"{x!r} is not exactly representable at {_ctx.bits} bits")
        return iv

    # decimal strings go through exact rationals, so "1.4" encloses 7/5
    from_str = point

    @classmethod
    def from_fraction(cls, num: int, den: int) -> "IntervalScalar":
        if den == 0:
            raise DivisorContainsZero("fraction with zero denominator")
        return cls.point(mpq(num, den))

    @classmethod
    def pi(cls) -> "IntervalScalar":
        return cls(_ctx.down.const_pi(), _ctx.up.const_pi())

    @classmethod
    def hull_of(cls, items: Iterable["IntervalScalar"]) -> "IntervalScalar":
        items = list(items)
        if not items:
            raise ValueError("hull of empty collection")
        return cls(min(x.lo for x in items), max(x.hi for x in items))

    # -- diagnostics --------------------------------------------------------

    @property
    def mid(self) -> mpfr:
        return _ctx.near.div(_ctx.near.add(self.lo, self.hi), mpfr(2))

    @property
    def width(self) -> mpfr:
        return _ctx.up.sub(self.hi, self.lo)

    @property
    def mag(self) -> mpfr:
        """sup |x| over the interval (upward rounded)."""
        return max(_ctx.up.abs(self.lo), _ctx.up.abs(self.hi))

    @property
    def mig(self) -> mpfr:
        """inf |x| over the interval (0 if the interval contains 0)."""
        if self.lo <= 0 <= self.hi:
            return mpfr(0)
        return min(_ctx.down.abs(self.lo), _ctx.down.abs(self.hi))

    def contains(self, x) -> bool:
        if isinstance(x, IntervalScalar):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= _exactify(x) <= self.hi

    def is_subset(self, other: "IntervalScalar") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def strictly_positive(self) -> bool:
        return self.lo > 0

    def strictly_negative(self) -> bool:
        return self.hi < 0

    def strictly_less(self, other: "IntervalScalar") -> bool:
        return self.hi < other.lo

    def __repr__(self) -> str:
        return f"IntervalScalar({self.lo!r}, {self.hi!r})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IntervalScalar)
            and self.lo == other.lo
            and self.hi == other.hi
        )

    def __hash__(self):
        return hash((self.lo, self.hi))

    # -- ring operations ----------------------------------------------------

    def add(self, other: "IntervalScalar") -> "IntervalScalar":
        return IntervalScalar(
            _ctx.down.add(self.lo, other.lo), _ctx.up.add(self.hi, other.hi)
        )

    def sub(self, other: "IntervalScalar") -> "IntervalScalar":
        return IntervalScalar(
            _ctx.down.sub(self.lo, other.hi), _ctx.up.sub(self.hi, other.lo)
        )

    def neg(self) -> "IntervalScalar":
        # gmpy2's unary minus rounds at the *global* context; stay directed
        return IntervalScalar(_ctx.down.minus(self.hi), _ctx.up.minus(self.lo))

    def mul(self, other: "IntervalScalar") -> "IntervalScalar":
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        dn, up = _ctx.down.mul, _ctx.up.mul
        lo = min(dn(a, c), dn(a, d), dn(b, c), dn(b, d))
        hi = max(up(a, c), up(a, d), up(b, c), up(b, d))
        return IntervalScalar(lo, hi)

    def square(self) -> "IntervalScalar":
        a, b = self.lo, self.hi
        if a >= 0:
            return IntervalScalar(_ctx.down.mul(a, a), _ctx.up.mul(b, b))
        if b <= 0:
            return IntervalScalar(_ctx.down.mul(b, b), _ctx.up.mul(a, a))
        return IntervalScalar(_MZERO, max(_ctx.up.mul(a, a), _ctx.up.mul(b, b)))

    def div(self, other: "IntervalScalar") -> "IntervalScalar":
        if other.lo <= 0 <= other.hi:
            raise DivisorContainsZero(f"divisor {other!r} contains zero")
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        dn, up = _ctx.down.div, _ctx.up.div
        lo = min(dn(a, c), dn(a, d), dn(b, c), dn(b, d))
        hi = max(up(a, c), up(a, d), up(b, c), up(b, d))
        return IntervalScalar(lo, hi)

    def recip(self) -> "IntervalScalar":
        if self.lo <= 0 <= self.hi:
            raise DivisorContainsZero(f"reciprocal of {self!r}")
        return IntervalScalar(_ctx.down.div(_MONE, self.hi), _ctx.up.div(_MONE, self.lo))

    def scale2(self, k: int) -> "IntervalScalar":
        """Multiplication by 2**k (exact bit-shift of both endpoints)."""
        if k >= 0:
            return IntervalScalar(_ctx.down.mul_2exp(self.lo, k), _ctx.up.mul_2exp(self.hi, k))
        return IntervalScalar(_ctx.down.div_2exp(self.lo, -k), _ctx.up.div_2exp(self.hi, -k))

    def abs(self) -> "IntervalScalar":
        return IntervalScalar(self.mig, self.mag)

    # -- monotone elementary functions --------------------------------------

    def sqrt(self) -> "IntervalScalar":
        if self.lo < 0:
            raise ValueError(f"sqrt of interval {self!r} reaching below zero")
        return IntervalScalar(_ctx.down.sqrt(self.lo), _ctx.up.sqrt(self.hi))

    def exp(self) -> "IntervalScalar":
        return IntervalScalar(_ctx.down.exp(self.lo), _ctx.up.exp(self.hi))

    def expm1(self) -> "IntervalScalar":
        return IntervalScalar(_ctx.down.expm1(self.lo), _ctx.up.expm1(self.hi))

    def log(self) -> "IntervalScalar":
        if self.lo <= 0:
            raise ValueError(f"log of interval {self!r} reaching zero")
        return IntervalScalar(_ctx.down.log(self.lo), _ctx.up.log(self.hi))

    def log1p(self) -> "IntervalScalar":
        if self.lo <= -1:
            raise ValueError(f"log1p of interval {self!r} reaching -1")
        return IntervalScalar(_ctx.down.log1p(self.lo), _ctx.up.log1p(self.hi))

    def atan(self) -> "IntervalScalar":
        return IntervalScalar(_ctx.down.atan(self.lo), _ctx.up.atan(self.hi))

    def sinh(self) -> "IntervalScalar":
        return IntervalScalar(_ctx.down.sinh(self.lo), _ctx.up.sinh(self.hi))

    def cosh(self) -> "IntervalScalar":
        return IntervalScalar(_ctx.down.cosh(self.mig), _ctx.up.cosh(self.mag))

    def acosh(self) -> "IntervalScalar":
        if self.lo < 1:
            raise ValueError(f"acosh of interval {self!r} reaching below 1")
        return IntervalScalar(_ctx.down.acosh(self.lo), _ctx.up.acosh(self.hi))

    # -- trigonometric functions (extremum-aware) ----------------------------

    def cos(self) -> "IntervalScalar":
        pi = IntervalScalar.pi()
        if _ctx.down.sub(self.hi, self.lo) >= _ctx.down.mul_2exp(pi.lo, 1):
            return IntervalScalar(mpfr(-1), mpfr(1))
        lo = min(_ctx.down.cos(self.lo), _ctx.down.cos(self.hi))
        hi = max(_ctx.up.cos(self.lo), _ctx.up.cos(self.hi))
        # include +-1 whenever a multiple of pi may fall inside the interval
        q = self.div(pi)
        k_min = int(gmpy2.ceil(q.lo)) - 1
        k_max = int(gmpy2.floor(q.hi)) + 1
        for k in range(k_min, k_max + 1):
            kpi = pi.mul(IntervalScalar.point(k))
            if kpi.hi < self.lo or kpi.lo > self.hi:
                continue
            if k % 2 == 0:
                hi = _MONE
            else:
                lo = _MNEGONE
        return IntervalScalar(max(lo, _MNEGONE), min(hi, _MONE))

    def sin(self) -> "IntervalScalar":
        return IntervalScalar.pi().scale2(-1).sub(self).cos()

    # -- powers ---------------------------------------------------------------

    def pow_int(self, k: int) -> "IntervalScalar":
        if k == 0:
            return IntervalScalar(_MONE, _MONE)
        if k < 0:
            return self.pow_int(-k).recip()
        dn, up = _ctx.down.pow, _ctx.up.pow
        lo = min(dn(self.lo, k), dn(self.hi, k))
        hi = max(up(self.lo, k), up(self.hi, k))
        if k % 2 == 0 and self.lo < 0 < self.hi:
            lo = _MZERO
        return IntervalScalar(lo, hi)

    def pow(self, s: "IntervalScalar") -> "IntervalScalar":
        """x**s = exp(s*log x) for strictly positive base intervals."""
        if self.lo <= 0:
            raise ValueError(f"pow of non-positive base interval {self!r}")
        return self.log().mul(s).exp()

    # -- operator sugar --------------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, IntervalScalar):
            return x
        if isinstance(x, (int, float, mpfr)):
            return IntervalScalar.point(x)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else self.add(other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else self.sub(other)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else other.sub(self)

    def __mul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else self.mul(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else self.div(other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else other.div(self)

    def __neg__(self):
        return self.neg()


# ---------------------------------------------------------------------------
# complex rectangles
# ---------------------------------------------------------------------------


class IntervalComplex:
    """Axis-aligned rectangle re + i*im with inclusion-isotone arithmetic."""

    __slots__ = ("re", "im")

    def __init__(self, re: IntervalScalar, im: IntervalScalar):
        self.re = re
        self.im = im

    @classmethod
    def point(cls, re: Number, im: Number = 0) -> "IntervalComplex":
        return cls(IntervalScalar.point(re), IntervalScalar.point(im))

    @classmethod
    def from_real(cls, re: IntervalScalar) -> "IntervalComplex":
        return cls(re, IntervalScalar(_MZERO, _MZERO))

    @classmethod
    def cis(cls, theta: IntervalScalar) -> "IntervalComplex":
        """exp(i*theta) for a real interval angle."""
        return cls(theta.cos(), theta.sin())

    def __repr__(self) -> str:
        return f"IntervalComplex({self.re!r}, {self.im!r})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IntervalComplex)
            and self.re == other.re
            and self.im == other.im
        )

    def __hash__(self):
        return hash((self.re, self.im))

    def contains(self, z) -> bool:
        if isinstance(z, IntervalComplex):
            return self.re.contains(z.re) and self.im.contains(z.im)
        if isinstance(z, complex):
            return self.re.contains(z.real) and self.im.contains(z.imag)
        return self.re.contains(z) and self.im.contains(0)

    @property
    def width(self) -> mpfr:
        return max(self.re.width, self.im.width)

    # -- field operations ------------------------------------------------------

    def add(self, other: "IntervalComplex") -> "IntervalComplex":
        return IntervalComplex(self.re.add(other.re), self.im.add(other.im))

    def sub(self, other: "IntervalComplex") -> "IntervalComplex":
        return IntervalComplex(self.re.sub(other.re), self.im.sub(other.im))

    def neg(self) -> "IntervalComplex":
        return IntervalComplex(self.re.neg(), self.im.neg())

    def conj(self) -> "IntervalComplex":
        return IntervalComplex(self.re, self.im.neg())

    def mul(self, other: "IntervalComplex") -> "IntervalComplex":
        a, b, c, d = self.re, self.im, other.re, other.im
        return IntervalComplex(a.mul(c).sub(b.mul(d)), a.mul(d).add(b.mul(c)))

    def mul_real(self, t: IntervalScalar) -> "IntervalComplex":
        return IntervalComplex(self.re.mul(t), self.im.mul(t))

    def mul_i(self) -> "IntervalComplex":
        """Multiplication by i (exact)."""
        return IntervalComplex(self.im.neg(), self.re)

    def abs2(self) -> IntervalScalar:
        return self.re.square().add(self.im.square())

    def abs(self) -> IntervalScalar:
        return self.abs2().sqrt()

    def div(self, other: "IntervalComplex") -> "IntervalComplex":
        d2 = other.abs2()
        if d2.lo <= 0:
            raise DivisorContainsZero(f"complex divisor {other!r} may contain zero")
        num = self.mul(other.conj())
        return IntervalComplex(num.re.div(d2), num.im.div(d2))

    def recip(self) -> "IntervalComplex":
        d2 = self.abs2()
        if d2.lo <= 0:
            raise DivisorContainsZero(f"reciprocal of {self!r}")
        return IntervalComplex(self.re.div(d2), self.im.neg().div(d2))

    # -- exponential family ------------------------------------------------------

    def exp(self) -> "IntervalComplex":
        r = self.re.exp()
        return IntervalComplex(r.mul(self.im.cos()), r.mul(self.im.sin()))

    def arg(self) -> IntervalScalar:
        """Principal argument; the rectangle must avoid the branch cut.

        Supported positions: right half-plane, or strictly upper/lower
        half-plane.  Anything touching the closed negative real axis raises
        BranchCutCrossed.
        """
        re, im = self.re, self.im
        if re.lo > 0:
            return im.div(re).atan()
        half_pi = IntervalScalar.pi().scale2(-1)
        if im.lo > 0:
            return half_pi.sub(re.div(im).atan())
        if im.hi < 0:
            return half_pi.neg().sub(re.div(im).atan())
        raise BranchCutCrossed(f"argument of {self!r} straddles the branch cut")

    def log(self) -> "IntervalComplex":
        """Principal logarithm: (1/2) log|z|^2 + i arg z."""
        mod2 = self.abs2()
        if mod2.lo <= 0:
            raise BranchCutCrossed(f"log of rectangle {self!r} possibly containing 0")
        return IntervalComplex(mod2.log().scale2(-1), self.arg())

    def log1p(self) -> "IntervalComplex":
        """log(1 + z); requires Re(1+z) > 0 (certified principal branch)."""
        one_plus_re = self.re.add(IntervalScalar(_MONE, _MONE))
        if one_plus_re.lo <= 0:
            raise BranchCutCrossed(f"log1p of {self!r}: 1 + Re reaches 0")
        # |1+z|^2 - 1 = 2 re + re^2 + im^2, fed through real log1p for tightness
        t = self.re.scale2(1).add(self.re.square()).add(self.im.square())
        return IntervalComplex(t.log1p().scale2(-1), IntervalComplex(one_plus_re, self.im).arg())

    def sqrt_principal(self) -> "IntervalComplex":
        """Principal square root via exp(log/2)."""
        return self.log().scale2(-1).exp()

    def scale2(self, k: int) -> "IntervalComplex":
        return IntervalComplex(self.re.scale2(k), self.im.scale2(k))

    def pow_real(self, s: IntervalScalar) -> "IntervalComplex":
        """z**s on the principal branch (rectangle must avoid the cut)."""
        return self.log().mul_real(s).exp()

    # -- operator sugar ------------------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, IntervalComplex):
            return x
        if isinstance(x, IntervalScalar):
            return IntervalComplex.from_real(x)
        if isinstance(x, (int, float, mpfr)):
            return IntervalComplex.from_real(IntervalScalar.point(x))
        if isinstance(x, complex):
            return IntervalComplex.point(x.real, x.imag)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else self.add(other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else self.sub(other)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else other.sub(self)

    def __mul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else self.mul(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else self.div(other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else other.div(self)

    def __neg__(self):
        return self.neg()


# ---------------------------------------------------------------------------
# module-level operation aliases (uniform scalar/complex entry points)
# ---------------------------------------------------------------------------


def interval_add(a, b):
    return a.add(b)


def interval_mul(a, b):
    return a.mul(b)


def interval_div(a, b):
    return a.div(b)


def interval_sqrt(a):
    return a.sqrt() if isinstance(a, IntervalScalar) else a.sqrt_principal()


def interval_exp(a):
    return a.exp()


def interval_log(a):
    return a.log()


def interval_pow(a, b):
    return a.pow(b) if isinstance(a, IntervalScalar) else a.pow_real(b)


def complex_pow_real_exponent(
    base: IntervalComplex,
    s: IntervalScalar,
    branch_anchor: "IntervalComplex | None" = None,
) -> IntervalComplex:
    """base**s with the logarithm branch pinned at ``branch_anchor``.

    The rectangle ``base`` must avoid the principal cut (-inf, 0]; the
    anchor, when provided, must itself be certifiably off the cut.  Any
    path from such an anchor to the base avoiding the cut stays on the
    principal branch, so the continuation reduces to the principal
    power; an anchor straddling the cut raises BranchCutCrossed.
    """
    if branch_anchor is not None:
        branch_anchor.arg()  # raises BranchCutCrossed if unusable
    return base.pow_real(s)
