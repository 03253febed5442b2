"""Assembly and certified pointwise application of the transfer operator.

The dimension computation rests on the operator

    (A_s phi)(x, y) = sum_{sigma = +, -} sum_{n >= 0}
                          J_n^sigma(x, y)^s  phi(G_n^sigma(x, y))

acting on functions of two real variables on the closed unit square.
Truncating the index sum naively converges like N^(1-2s), far too slowly
for certified work, so the tail is accelerated with the contour scheme
from euler_maclaurin: an explicit head, a half-weight term at the cut N,
a derivative correction on the circle around the cut, and a trapezoidal
evaluation of the tail integral on the circle |z| = N.  Both J^s and
phi(G) continue analytically in the index (through the branch-anchored
logarithm of the scaled Jacobian), which is what the contour nodes
evaluate.

Two consumers with different needs share the quadrature:

* ``apply_pointwise`` / ``apply_to_grid`` return certified enclosures of
  (A_s phi)(x, y), widened by the scheme's three analytic error bounds
  with summand envelope C = 2 C_A^s ||phi|| on the derivative circle and
  C~ = C nu_A^(2s) on the integral circle, where ||phi|| is a
  Hardy-space bound supplied by the caller.

* ``assemble_matrix`` returns the discretized operator in the
  Chebyshev-Lagrange node basis (optionally restricted to the y-even
  subspace) for the non-rigorous eigenvalue stage; each quadrature point
  contributes to a whole matrix row at once via per-axis factors.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpq

from .cheb import (
    ChebCoeffs2D,
    ChebGrid2D,
    cheb_nodes,
    chebyshev_basis_at,
    eval_poly,
    grid_to_coeffs,
    hardy_norm_bound,
    transform_matrix,
)
from .euler_maclaurin import (
    derivative_error_bound,
    integral_error_bound,
    make_plan,
    remainder_bound,
)
from .ifs import G, MapIndex, g_real, jacobian_real, log_scaled_jacobian
from .rigor import IntervalScalar, ParameterError, get_precision

__all__ = [
    "AprioriConstants",
    "OperatorParams",
    "apply_pointwise",
    "apply_to_grid",
    "assemble_matrix",
]


@dataclass(frozen=True)
class AprioriConstants:
    """Geometric constants the certified evaluation relies on.

    R_A and r_A are the outer/inner Bernstein-ellipse parameters (the
    operator maps the Hardy space of the R_A-ellipse into itself and the
    images G(z) land in the r_A-ellipse); nu_A is the index cut beyond
    which the complex continuation is controlled; W_A bounds
    sum |J_n|^s; C_A bounds |z^2 J| / nu_A^2 on the contours;
    D_plus/D_minus are two-sided slopes of s -> (A_s phi) for positive
    phi.  All of them must be re-verified by the apriori checks before a
    certificate is issued; the defaults are the verified values.
    """

    R_A: Fraction = Fraction(7, 5)
    r_A: Fraction = Fraction(9, 10)
    nu_A: int = 10
    W_A: Fraction = Fraction(3)
    C_A: Fraction = Fraction(17, 250)
    D_plus: Fraction = Fraction(59, 100)
    D_minus: Fraction = Fraction(33, 10)

    def __post_init__(self):
        if not 0 < self.r_A < self.R_A:
            raise ParameterError("ellipse parameters need 0 < r_A < R_A")
        if self.nu_A < 1:
            raise ParameterError("index cut nu_A must be >= 1")
        if self.W_A <= 0 or self.C_A <= 0:
            raise ParameterError("W_A and C_A must be positive")
        if not 0 < self.D_plus <= self.D_minus:
            raise ParameterError("slope bounds need 0 < D_plus <= D_minus")


@dataclass(frozen=True)
class OperatorParams:
    """Everything a single operator evaluation depends on.

    The quadrature plan must be built at nu = nu_A and at the same s,
    so that its integral-circle coefficients carry the right z^(-2s).
    """

    s: IntervalScalar
    K: int
    plan: object  # EMPlan
    constants: AprioriConstants
    y_even: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ParameterError("grid order K must be >= 1")
        if self.y_even and self.K % 2:
            raise ParameterError("the y-even reduction needs even K")
        if self.plan.nu != Fraction(self.constants.nu_A):
            raise ParameterError("plan must be built with nu = nu_A")
        if not (self.plan.s.lo == self.s.lo and self.plan.s.hi == self.s.hi):
            raise ParameterError("plan was built for a different s")

    @classmethod
    def build(cls, s, epsilon, K, *, constants=None, y_even=False,
              template=None, N=None, L=None, M=None, Mp=None):
        """Construct params, building the quadrature plan at nu = nu_A.

        ``template`` reuses the (N, L, M, Mp) shape of an existing plan
        so successive s values share identical node geometry.
        """
        constants = AprioriConstants() if constants is None else constants
        s_iv = s if isinstance(s, IntervalScalar) else IntervalScalar.point(s)
        if template is not None:
            N = template.N if N is None else N
            L = template.L if L is None else L
            M = template.M if M is None else M
            Mp = template.Mp if Mp is None else Mp
        plan = make_plan(epsilon, constants.nu_A, s_iv, N=N, L=L, M=M, Mp=Mp)
        return cls(s_iv, K, plan, constants, y_even)


# ---------------------------------------------------------------------------
# certified-path guards
# ---------------------------------------------------------------------------

# The envelope and slope constants are established on [1.30, 1.31].  The
# endpoints are not dyadic, so a point interval at exactly 13/10 sticks
# out below by one rounding step; the guard therefore allows a 2^-40
# margin, and the a-priori verification sweeps the widened range so that
# everything the guard admits is actually covered.
S_MARGIN = Fraction(1, 2**40)
_S_LO = mpq(13, 10) - mpq(1, 2**40)
_S_HI = mpq(131, 100) + mpq(1, 2**40)


def _require_certified_s(s: IntervalScalar) -> None:
    if not (s.lo >= _S_LO and s.hi <= _S_HI):
        raise ParameterError(f"certified path needs s inside [1.30, 1.31], got {s!r}")


def _as_iv(v) -> IntervalScalar:
    return v if isinstance(v, IntervalScalar) else IntervalScalar.point(v)


def _require_square(x: IntervalScalar, y: IntervalScalar) -> None:
    if not (x.lo >= -1 and x.hi <= 1 and y.lo >= -1 and y.hi <= 1):
        raise ParameterError("evaluation point must lie in the closed unit square")


# ---------------------------------------------------------------------------
# quadrature-term enumeration
# ---------------------------------------------------------------------------


def _real_terms(params: OperatorParams, x: IntervalScalar, y: IntervalScalar):
    """Yield (weight, gx, gy) for the explicit head and the cut term.

    Weights are the positive real intervals J_n^s; the n = N term
    carries the contour scheme's factor 1/2.
    """
    N = params.plan.N
    s = params.s
    for sign in (1, -1):
        for n in range(N + 1):
            w = jacobian_real(sign, n, x, y).pow(s)
            if n == N:
                w = w.scale2(-1)
            gx, gy = g_real(sign, n, x, y)
            yield w, gx, gy


def _paired(nodes, coeffs):
    """(node, coeff, doubled) for the first member of each conjugate pair.

    Node lists store conjugates at mirrored positions; an odd list has a
    self-conjugate (real) node in the middle, which is not doubled.
    """
    half, odd = divmod(len(nodes), 2)
    for i in range(half):
        yield nodes[i], coeffs[i], True
    if odd:
        yield nodes[half], coeffs[half], False


def _complex_terms(params: OperatorParams, x: IntervalScalar, y: IntervalScalar):
    """Yield (weight, g1, g2) over contour nodes, conjugate pairs folded.

    Weights absorb the quadrature coefficients, the 1/M or 1/Mp
    normalisation and a factor 2 per conjugate pair, so each term
    contributes (weight * phi(g)).re to the (real) operator value.  The
    s-power of J at a complex index z is exp(s(log(z^2 J) - 2 log z)) on
    the derivative circle, where Re z > 0 keeps log z unambiguous; the
    integral-circle coefficients already carry z^(-2s), leaving only
    exp(s log(z^2 J)).
    """
    plan, s = params.plan, params.s
    two_s = s.scale2(1)
    inv_m = IntervalScalar.from_fraction(1, plan.M)
    inv_p = IntervalScalar.from_fraction(1, plan.Mp)
    for sign in (1, -1):
        for z, c, doubled in _paired(plan.z_m, plan.c_m):
            lsj = log_scaled_jacobian(sign, z, x, y)
            jpow = lsj.mul_real(s).sub(z.log().mul_real(two_s)).exp()
            w = c.mul(jpow).mul_real(inv_m)
            if doubled:
                w = w.scale2(1)
            g1, g2 = G(MapIndex(sign, z), x, y)
            yield w, g1, g2
        for z, c, doubled in _paired(plan.zp_k, plan.cp_k):
            lsj = log_scaled_jacobian(sign, z, x, y)
            w = c.mul(lsj.mul_real(s).exp()).mul_real(inv_p)
            if doubled:
                w = w.scale2(1)
            g1, g2 = G(MapIndex(sign, z), x, y)
            yield w, g1, g2


# ---------------------------------------------------------------------------
# truncation error
# ---------------------------------------------------------------------------


def _truncation_error(params: OperatorParams, phi_norm) -> IntervalScalar:
    """Total analytic quadrature error for one pointwise application.

    The per-sign summand is bounded by C_A^s ||phi|| / |z|^(2s) beyond
    the index cut; folding the two signs gives the envelope
    C = 2 C_A^s ||phi||, and the scaled integrand needs
    C~ = C nu_A^(2s).
    """
    plan, s, consts = params.plan, params.s, params.constants
    norm = _as_iv(phi_norm)
    c_env = IntervalScalar.point(consts.C_A).pow(s).mul(norm).scale2(1)
    c_tilde = c_env.mul(IntervalScalar.point(consts.nu_A).pow(s.scale2(1)))
    total = remainder_bound(plan.L, plan.N, plan.nu, c_env)
    total = total.add(derivative_error_bound(plan.L, plan.N, plan.nu, plan.M, c_env))
    return total.add(integral_error_bound(plan.N, plan.nu, s, plan.Mp, c_tilde))


def _pad(value: IntervalScalar, err: IntervalScalar) -> IntervalScalar:
    r = IntervalScalar.point(err.mag)
    return value.add(IntervalScalar.hull_of([r.neg(), r]))


# ---------------------------------------------------------------------------
# certified application
# ---------------------------------------------------------------------------


def apply_pointwise(params: OperatorParams, phi: ChebCoeffs2D, x, y,
                    phi_hardy_norm) -> IntervalScalar:
    """Certified enclosure of (A_s phi)(x, y).

    ``phi`` is given by Chebyshev coefficients and evaluated by Clenshaw
    recurrence at the (generally complex) image points G(z).
    ``phi_hardy_norm`` must upper-bound its Hardy norm on the
    r_A-ellipse, typically ``hardy_norm_bound(phi, r_A)``; it only
    enters the truncation-error padding, so a crude bound costs width
    but never correctness.
    """
    _require_certified_s(params.s)
    if phi.K != params.K:
        raise ParameterError(f"phi has order {phi.K}, params expect {params.K}")
    x_iv, y_iv = _as_iv(x), _as_iv(y)
    _require_square(x_iv, y_iv)
    total = IntervalScalar.exact(0)
    for w, gx, gy in _real_terms(params, x_iv, y_iv):
        total = total.add(w.mul(eval_poly(phi, gx, gy)))
    for w, g1, g2 in _complex_terms(params, x_iv, y_iv):
        total = total.add(w.mul(eval_poly(phi, g1, g2)).re)
    return _pad(total, _truncation_error(params, phi_hardy_norm))


def _grid_points(K: int, y_even: bool):
    cols = K // 2 if y_even else K
    return [(i1, i2) for i1 in range(K) for i2 in range(cols)]


def _apply_batch(args):
    params, payload, pts = args
    coeffs, norm = payload
    nodes = cheb_nodes(params.K)
    return [apply_pointwise(params, coeffs, nodes[i1], nodes[i2], norm)
            for i1, i2 in pts]


def apply_to_grid(params: OperatorParams, phi_values: ChebGrid2D,
                  threads: int = 1) -> ChebGrid2D:
    """Certified enclosures of (A_s phi) at every Chebyshev node.

    ``phi`` is the interpolant of ``phi_values``; its coefficients and
    Hardy bound are computed once and shared by the K^2 independent
    pointwise applications.  With y_even set the input grid must be
    symmetric in the second coordinate; only the y > 0 half is evaluated
    and the result is mirrored.
    """
    _require_certified_s(params.s)
    if phi_values.K != params.K:
        raise ParameterError(f"grid has order {phi_values.K}, params expect {params.K}")
    K = params.K
    vals = [[_as_iv(v) for v in row] for row in phi_values.values]
    if params.y_even:
        for row in vals:
            for i2 in range(K // 2):
                if not (row[i2].lo == row[K - 1 - i2].lo and row[i2].hi == row[K - 1 - i2].hi):
                    raise ParameterError("y_even application needs a y-even grid")
    coeffs = grid_to_coeffs(ChebGrid2D(K, vals))
    norm = hardy_norm_bound(coeffs, IntervalScalar.point(params.constants.r_A))
    pts = _grid_points(K, params.y_even)
    flat = _run_batches(_apply_batch, params, (coeffs, norm), pts, threads)
    out = [[None] * K for _ in range(K)]
    for (i1, i2), v in zip(pts, flat):
        out[i1][i2] = v
        if params.y_even:
            out[i1][K - 1 - i2] = v
    return ChebGrid2D(K, out)


# ---------------------------------------------------------------------------
# matrix assembly
# ---------------------------------------------------------------------------


def _k2_indices(params: OperatorParams):
    return range(0, params.K, 2) if params.y_even else range(params.K)


def _moment_row(params: OperatorParams, x: IntervalScalar, y: IntervalScalar):
    """Chebyshev moments of one node's quadrature measure.

    M[k1][i] encloses the quadrature value of (A_s T_k1 T_k2)(x, y) for
    k2 = k2_indices[i] (even k2 only under the y-even reduction, where
    odd moments vanish).  Accumulating moments instead of Lagrange
    values keeps the inner loop at two products per (k1, k2) and defers
    the change to the node basis to a single fold per row.
    """
    K = params.K
    k2s = list(_k2_indices(params))
    M = [[IntervalScalar.exact(0) for _ in k2s] for _ in range(K)]
    for w, gx, gy in _real_terms(params, x, y):
        t1 = chebyshev_basis_at(gx, K)
        t2 = chebyshev_basis_at(gy, K)
        wt1 = [w.mul(t) for t in t1]
        for k1 in range(K):
            u = wt1[k1]
            row = M[k1]
            for i, k2 in enumerate(k2s):
                row[i] = row[i].add(u.mul(t2[k2]))
    for w, g1, g2 in _complex_terms(params, x, y):
        t1 = chebyshev_basis_at(g1, K)
        t2 = chebyshev_basis_at(g2, K)
        wt1 = [w.mul(t) for t in t1]
        for k1 in range(K):
            ur, ui = wt1[k1].re, wt1[k1].im
            row = M[k1]
            for i, k2 in enumerate(k2s):
                t = t2[k2]
                row[i] = row[i].add(ur.mul(t.re).sub(ui.mul(t.im)))
    return M


def _fold_matrices(params: OperatorParams):
    """(Fx, Fy) with row_node = Fx^T . moments . Fy.

    Fx[k][j] = A[k][j] reproduces ell_j on the first axis; on the second
    axis the y-even columns are the symmetrised ell_j + ell_{K-1-j},
    whose T_k2 expansion is 2 A[k2][j] over even k2.
    """
    K = params.K
    A = transform_matrix(K)
    if not params.y_even:
        return A, A
    fy = [[A[k2][j].scale2(1) for j in range(K // 2)] for k2 in _k2_indices(params)]
    return A, fy


def _fold_row_interval(params: OperatorParams, M):
    fx, fy = _fold_matrices(params)
    K = params.K
    cols = len(fy[0])
    B = [[IntervalScalar.exact(0) for _ in range(cols)] for _ in range(K)]
    for k1 in range(K):
        mrow = M[k1]
        brow = B[k1]
        for i, frow in enumerate(fy):
            m = mrow[i]
            for j2 in range(cols):
                brow[j2] = brow[j2].add(m.mul(frow[j2]))
    out = []
    for j1 in range(K):
        for j2 in range(cols):
            acc = IntervalScalar.exact(0)
            for k1 in range(K):
                acc = acc.add(fx[k1][j1].mul(B[k1][j2]))
            out.append(acc)
    return out


def _fold_row_scalar(params: OperatorParams, M):
    # midpoint fold for the non-rigorous eigenvalue stage, at working precision
    fx, fy = _fold_matrices(params)
    K = params.K
    cols = len(fy[0])
    with gmpy2.context(precision=get_precision()):
        fxm = [[v.mid for v in row] for row in fx]
        fym = [[v.mid for v in row] for row in fy]
        mm = [[v.mid for v in row] for row in M]
        B = [[sum(mm[k1][i] * fym[i][j2] for i in range(len(fym)))
              for j2 in range(cols)] for k1 in range(K)]
        return [sum(fxm[k1][j1] * B[k1][j2] for k1 in range(K))
                for j1 in range(K) for j2 in range(cols)]


def _row_batch(args):
    params, rigorous, pts = args
    nodes = cheb_nodes(params.K)
    fold = _fold_row_interval if rigorous else _fold_row_scalar
    return [fold(params, _moment_row(params, nodes[i1], nodes[i2]))
            for i1, i2 in pts]


def _axis_hardy_factors(params: OperatorParams, folded: bool):
    """Per-column axis factors sum_k e^(r_A k) |a_kj| of the Lagrange basis."""
    K = params.K
    A = transform_matrix(K)
    e_r = IntervalScalar.point(params.constants.r_A).exp()
    weights = [IntervalScalar.exact(1)]
    for _ in range(1, K):
        weights.append(weights[-1].mul(e_r))
    out = []
    for j in range(K // 2 if folded else K):
        total = IntervalScalar.exact(0)
        for k in range(K):
            a = A[k][j].add(A[k][K - 1 - j]) if folded else A[k][j]
            total = total.add(weights[k].mul(IntervalScalar.point(a.mag)))
        out.append(total)
    return out


def assemble_matrix(params: OperatorParams, rigorous: bool = False,
                    threads: int = 1):
    """Discretized operator in the Lagrange node basis.

    Rows and columns run over the K x K Chebyshev nodes (with y_even:
    over the y > 0 half, columns being the reflection-symmetrised basis
    functions), flattened as i1 * cols + i2.  Entry (i, j) encloses the
    accelerated-quadrature value of (A_s ell_j)(node_i); the
    non-rigorous mode returns its midpoints for the eigenvalue stage.

    In rigorous mode each entry is additionally widened by the analytic
    truncation bound evaluated with a per-column Hardy envelope of the
    Lagrange function (the separable majorant e^(r(k1+k2)) of
    e^(r ||k||)).  Those envelopes grow like e^(2 r_A K), so rigorous
    assembly is only informative for small K; certified dimension bounds
    go through apply_to_grid instead, where the Hardy norm of the actual
    argument is available.
    """
    if rigorous:
        _require_certified_s(params.s)
    K = params.K
    pts = _grid_points(K, params.y_even)
    rows = _run_batches(_row_batch, params, rigorous, pts, threads)
    if not rigorous:
        return rows
    ax_plain = _axis_hardy_factors(params, folded=False)
    ax_cols = _axis_hardy_factors(params, folded=params.y_even)
    cols = K // 2 if params.y_even else K
    errs = [
        _truncation_error(params, ax_plain[j1].mul(ax_cols[j2]))
        for j1 in range(K) for j2 in range(cols)
    ]
    return [[_pad(entry, errs[j]) for j, entry in enumerate(row)] for row in rows]


# ---------------------------------------------------------------------------
# node-parallel driver
# ---------------------------------------------------------------------------


def _run_batches(worker, params, payload, pts, threads):
    """Run a per-node worker over pts, optionally fanning out to processes.

    Chunks are contiguous and gathered in order, and every point is
    processed independently, so results are identical for every thread
    count.
    """
    if threads <= 1 or len(pts) <= 1:
        return worker((params, payload, pts))
    n = min(threads, len(pts))
    base, extra = divmod(len(pts), n)
    chunks, start = [], 0
    for i in range(n):
        size = base + (1 if i < extra else 0)
        chunks.append(pts[start:start + size])
        start += size
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(n) as pool:
        parts = pool.map(worker, [(params, payload, c) for c in chunks])
    return [item for part in parts for item in part]
