"""Tensor-product Chebyshev machinery with certified rounding.

Nodes are Chebyshev points of the first kind, x_j = cos(pi(2j+1)/2K),
j = 0..K-1.  A function sampled on the K x K tensor grid is carried to
coefficients in the T_{k1} T_{k2} basis by the direct discrete cosine
transform, evaluated as an interval matrix product (O(K^3) per axis; a
fast transform would not give rounding control).  The module also
provides Clenshaw evaluation at real or complex interval arguments,
index aliasing under the K-point projection, Bernstein-ellipse
membership tests, Hardy-norm coefficient bounds, and the explicit
projection-error envelope E_{d,K}(x).

All quantities are IntervalScalar/IntervalComplex; every returned bound
is outward-rounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .rigor import (
    IntervalComplex,
    IntervalScalar,
    ParameterError,
    get_precision,
)

__all__ = [
    "INSIDE",
    "OUTSIDE",
    "UNKNOWN",
    "ChebCoeffs2D",
    "ChebGrid2D",
    "EllipseSpec",
    "alias_index",
    "cheb_nodes",
    "chebyshev_basis_at",
    "coeffs_to_grid",
    "ellipse_contains",
    "eval_poly",
    "grid_from_function",
    "grid_to_coeffs",
    "hardy_norm_bound",
    "projection_error",
    "sup_inf_bounds",
    "transform_matrix",
]


# ---------------------------------------------------------------------------
# nodes and transform matrices
# ---------------------------------------------------------------------------

_node_cache: dict = {}
_matrix_cache: dict = {}


def cheb_nodes(K: int) -> list[IntervalScalar]:
    """Enclosures of cos(pi(2j+1)/2K), j = 0..K-1 (strictly decreasing)."""
    if K < 1:
        raise ParameterError(f"order K must be >= 1, got {K}")
    key = (K, get_precision())
    if key not in _node_cache:
        pi = IntervalScalar.pi()
        _node_cache[key] = [
            pi.mul(IntervalScalar.point(Fraction(2 * j + 1, 2 * K))).cos()
            for j in range(K)
        ]
    return _node_cache[key]


def _cos_table(K: int) -> list[list[IntervalScalar]]:
    """C[k][j] = cos(k * theta_j) = T_k(x_j), for k, j = 0..K-1."""
    key = (K, get_precision())
    if key not in _matrix_cache:
        pi = IntervalScalar.pi()
        table = []
        for k in range(K):
            row = []
            for j in range(K):
                angle = pi.mul(IntervalScalar.point(Fraction(k * (2 * j + 1), 2 * K)))
                row.append(angle.cos())
            table.append(row)
        _matrix_cache[key] = table
    return _matrix_cache[key]


def transform_matrix(K: int) -> list[list[IntervalScalar]]:
    """A[k][j] with coeffs = A . values . A^T; row k is (2-delta_k0)/K cos(k theta_j)."""
    table = _cos_table(K)
    inv_k = IntervalScalar.from_fraction(1, K)
    two_inv_k = IntervalScalar.from_fraction(2, K)
    out = [[c.mul(inv_k) for c in table[0]]]
    for k in range(1, K):
        out.append([c.mul(two_inv_k) for c in table[k]])
    return out


def _mat_mul(A, B):
    n, m, p = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row_a = A[i]
        row = []
        for j in range(p):
            acc = row_a[0].mul(B[0][j])
            for t in range(1, m):
                acc = acc.add(row_a[t].mul(B[t][j]))
            row.append(acc)
        out.append(row)
    return out


def _transpose(A):
    return [list(col) for col in zip(*A)]


# ---------------------------------------------------------------------------
# grids and coefficient arrays
# ---------------------------------------------------------------------------


@dataclass
class ChebGrid2D:
    """Values of a function at the K x K tensor Chebyshev nodes."""

    K: int
    values: list  # K rows of K IntervalScalar; values[j1][j2] at (x_j1, x_j2)

    def __post_init__(self):
        if len(self.values) != self.K or any(len(r) != self.K for r in self.values):
            raise ValueError(f"grid shape must be {self.K}x{self.K}")


@dataclass
class ChebCoeffs2D:
    """Coefficients of sum_k c[k1][k2] T_k1(z1) T_k2(z2), k1, k2 < K."""

    K: int
    coeffs: list

    def __post_init__(self):
        if len(self.coeffs) != self.K or any(len(r) != self.K for r in self.coeffs):
            raise ValueError(f"coefficient shape must be {self.K}x{self.K}")


def grid_from_function(
    f: Callable[[IntervalScalar, IntervalScalar], IntervalScalar], K: int
) -> ChebGrid2D:
    nodes = cheb_nodes(K)
    return ChebGrid2D(K, [[f(nodes[j1], nodes[j2]) for j2 in range(K)] for j1 in range(K)])


def grid_to_coeffs(g: ChebGrid2D) -> ChebCoeffs2D:
    A = transform_matrix(g.K)
    return ChebCoeffs2D(g.K, _mat_mul(_mat_mul(A, g.values), _transpose(A)))


def coeffs_to_grid(c: ChebCoeffs2D) -> ChebGrid2D:
    B = _cos_table(c.K)  # B[k][j] = T_k(x_j)
    Bt = _transpose(B)  # values = B^T . coeffs . B
    return ChebGrid2D(c.K, _mat_mul(_mat_mul(Bt, c.coeffs), B))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _zero_like(z):
    if isinstance(z, IntervalComplex):
        return IntervalComplex.point(0, 0)
    return IntervalScalar.exact(0)


def _clenshaw(coeffs: Sequence, z):
    """sum_m coeffs[m] T_m(z) by the backward recurrence."""
    zero = _zero_like(z)
    b1, b2 = zero, zero
    for a in reversed(coeffs[1:]):
        b1, b2 = a + (z * b1).scale2(1) - b2, b1
    return coeffs[0] + z * b1 - b2


def eval_poly(c: ChebCoeffs2D, z1, z2):
    """Evaluate the tensor polynomial at interval arguments (real or complex)."""
    partial = [_clenshaw(c.coeffs[k1], z2) for k1 in range(c.K)]
    return _clenshaw(partial, z1)


def chebyshev_basis_at(z, K: int) -> list:
    """[T_0(z), ..., T_{K-1}(z)] by the three-term recurrence."""
    one = IntervalScalar.exact(1)
    out = [one if isinstance(z, IntervalScalar) else IntervalComplex.from_real(one)]
    if K == 1:
        return out
    out.append(z)
    for _ in range(2, K):
        out.append((z * out[-1]).scale2(1) - out[-2])
    return out


# ---------------------------------------------------------------------------
# aliasing under the K-point projection
# ---------------------------------------------------------------------------


def _alias_1d(k: int, K: int) -> tuple[int, int]:
    q, r = divmod(k, 2 * K)
    sign = -1 if q % 2 else 1
    if r < K:
        return r, sign
    if r == K:
        return 0, 0
    return 2 * K - r, -sign


def alias_index(k: Sequence[int], K: int) -> tuple[tuple[int, ...], int]:
    """Fold a multi-index: P_K T_k = c T_{m}; returns (m, c), c in {-1,0,1}."""
    idx, c = [], 1
    for comp in k:
        m, s = _alias_1d(comp, K)
        idx.append(m)
        c *= s
    return tuple(idx), c


# ---------------------------------------------------------------------------
# projection error envelope E_{d,K}(x)
# ---------------------------------------------------------------------------


def projection_error(d: int, K: int, x) -> IntervalScalar:
    """Upper envelope for the sup-norm projection error of P_K on E_x^{d,2}.

    Returns an enclosure whose upper endpoint is the certified bound.
    """
    if K < 2:
        raise ParameterError(f"projection error needs K >= 2, got {K}")
    xv = x if isinstance(x, IntervalScalar) else IntervalScalar.point(x)
    if not xv.strictly_positive():
        raise ParameterError(f"ellipse parameter must be positive, got {xv!r}")
    decay = xv.mul(IntervalScalar.point(-(K - 1))).exp()
    Kx = xv.mul(IntervalScalar.point(K))
    one = IntervalScalar.exact(1)
    if d == 1:
        return decay.mul(IntervalScalar.point(8)).div(xv)
    if d == 2:
        return decay.mul(IntervalScalar.point(16)).mul(one.add(Kx)).div(xv.square())
    if d == 3:
        poly = IntervalScalar.point(2).add(Kx.scale2(1)).add(Kx.square())
        return decay.mul(IntervalScalar.point(48)).mul(poly).div(xv.square().mul(xv))
    if d >= Kx.lo:
        raise ParameterError(f"E_{{d,K}} branch for d >= 4 needs d < Kx, got d={d}")
    lead = IntervalScalar.point(2**d * d * d * K ** (d - 1))
    return decay.mul(one.exp()).mul(lead).div(xv)


# ---------------------------------------------------------------------------
# Bernstein-ellipse membership
# ---------------------------------------------------------------------------

INSIDE = "certified-inside"
OUTSIDE = "certified-outside"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class EllipseSpec:
    """E_r^{d,p} = cos(R^d + i Ball_r^{d,p}) with the p-norm on the ball."""

    d: int
    p: float  # 1, 2, or inf
    r: object  # IntervalScalar or anything IntervalScalar.point accepts


def _im_arccos_abs(w: IntervalComplex) -> IntervalScalar:
    """|Im arccos w| as acosh of the mean distance to the foci +-1."""
    one = IntervalScalar.exact(1)
    a = w.re.add(one).square().add(w.im.square()).sqrt()
    b = w.re.sub(one).square().add(w.im.square()).sqrt()
    m = a.add(b).scale2(-1)
    # true m >= 1 always; the enclosure may dip below by rounding
    m = IntervalScalar(max(m.lo, one.lo), max(m.hi, one.hi))
    return m.acosh()


def ellipse_contains(e: EllipseSpec, w: Iterable) -> str:
    comps = [c if isinstance(c, IntervalComplex) else IntervalComplex.from_real(c) for c in w]
    if len(comps) != e.d:
        raise ParameterError(f"expected {e.d} components, got {len(comps)}")
    ts = [_im_arccos_abs(c) for c in comps]
    if e.p == 2:
        norm_sq = ts[0].square()
        for t in ts[1:]:
            norm_sq = norm_sq.add(t.square())
        norm = norm_sq.sqrt()
    elif e.p == 1:
        norm = ts[0]
        for t in ts[1:]:
            norm = norm.add(t)
    elif e.p == float("inf"):
        norm = IntervalScalar(max(t.lo for t in ts), max(t.hi for t in ts))
    else:
        raise ParameterError(f"unsupported ellipse norm index p={e.p}")
    r = e.r if isinstance(e.r, IntervalScalar) else IntervalScalar.point(e.r)
    if norm.strictly_less(r):
        return INSIDE
    if r.strictly_less(norm) or r.hi == norm.lo:
        return OUTSIDE
    return UNKNOWN


# ---------------------------------------------------------------------------
# coefficient-norm bounds
# ---------------------------------------------------------------------------


def hardy_norm_bound(c: ChebCoeffs2D, r) -> IntervalScalar:
    """Upper bound sum_k e^{r ||k||_2} |c_k| (upper endpoint is certified)."""
    rv = r if isinstance(r, IntervalScalar) else IntervalScalar.point(r)
    total = IntervalScalar.exact(0)
    for k1 in range(c.K):
        for k2 in range(c.K):
            norm_k = IntervalScalar.point(k1 * k1 + k2 * k2).sqrt()
            weight = rv.mul(norm_k).exp()
            total = total.add(weight.mul(IntervalScalar.point(c.coeffs[k1][k2].mag)))
    return total


def sup_inf_bounds(c: ChebCoeffs2D):
    """(lower, upper) with lower <= inf phi <= sup phi <= upper on [-1,1]^2."""
    tail = IntervalScalar.exact(0)
    for k1 in range(c.K):
        for k2 in range(c.K):
            if k1 == k2 == 0:
                continue
            tail = tail.add(IntervalScalar.point(c.coeffs[k1][k2].mag))
    head = c.coeffs[0][0]
    return head.sub(tail).lo, head.add(tail).hi
