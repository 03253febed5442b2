"""Command-line interface for the gasket-dimension pipeline.

Five subcommands cover the pipeline end to end:

* ``estimate``  -- non-rigorous dimension estimate via the secant iteration,
* ``certify``   -- certified enclosure written as a structured-text certificate,
* ``apriori``   -- box-verification reports for the analytic constants,
* ``em-check``  -- oracle checks of the accelerated-summation machinery,
* ``render``    -- SVG picture of the disk packing (presentation only).

Exit-code discipline: 0 is returned only when every rigor claim in the
output is backed by a completed certified computation; verification
failures and non-convergence exit 1, configuration errors exit 2 before
any computation starts.  Reports and certificates are plain
``key = value`` text so they can be diffed and audited.  Identical
configurations produce byte-identical certificate payloads regardless
of ``--threads``; set SOURCE_DATE_EPOCH to pin the timestamp line too.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import gmpy2

from .apriori import SubdivisionTooCoarse, VerificationFailed, verify_constants
from .certify import (
    InconsistentBracket,
    InvalidBounds,
    PositivityFailure,
    _exact_decimal,
    certificate_to_text,
    certify_dimension,
    default_precision,
    target_K,
)
from .cheb import projection_error
from .euler_maclaurin import accelerated_sum, make_plan
from .ifs import DomainError
from .rigor import (
    DivisorContainsZero,
    IntervalComplex,
    IntervalScalar,
    ParameterError,
    temporary_precision,
)
from .spectral import MonotonicityViolation, NoConvergence, SecantState, secant_search
from .transfer import AprioriConstants, OperatorParams

__all__ = ["RunConfig", "build_parser", "main"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

# computation failures: the run completed wrong or refused to certify (exit 1);
# ParameterError is a config problem and aborts before compute (exit 2)
_FAILURES = (
    VerificationFailed,
    SubdivisionTooCoarse,
    NoConvergence,
    MonotonicityViolation,
    PositivityFailure,
    InconsistentBracket,
    InvalidBounds,
    DomainError,
    DivisorContainsZero,
)


def _default_threads() -> int:
    raw = os.environ.get("GASKETDIM_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def _default_cache_dir() -> str:
    env = os.environ.get("GASKETDIM_CACHE")
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".cache", "gasketdim")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration shared by every subcommand.

    Plan overrides (k, n, l, m, mp) are checked against the quadrature
    invariants by OperatorParams.build before any matrix work starts, so
    an inconsistent override aborts the run up front.
    """

    command: str
    eps_bits: int = 60
    precision_bits: Optional[int] = None
    k: Optional[int] = None
    n: Optional[int] = None
    l: Optional[int] = None
    m: Optional[int] = None
    mp: Optional[int] = None
    threads: int = 1
    out: Optional[str] = None
    y_even: bool = True
    run_apriori: bool = False
    subdivision: int = 40
    depth: int = 6
    figure: Optional[str] = None
    constants_path: Optional[str] = None
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if self.eps_bits < 1:
            raise ParameterError("--eps-bits must be a positive integer")
        if self.precision_bits is not None and self.precision_bits < 53:
            raise ParameterError("--precision-bits must be at least 53")
        if self.threads < 1:
            raise ParameterError("--threads must be >= 1")
        if self.subdivision < 1:
            raise ParameterError("--subdivision must be >= 1")
        if not 1 <= self.depth <= 12:
            raise ParameterError("--depth must lie in 1..12")
        for name in ("k", "n", "l", "m", "mp"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ParameterError(f"--{name} must be >= 1 when given")

    @property
    def epsilon(self) -> Fraction:
        return Fraction(1, 2**self.eps_bits)


def _load_constants(path: Optional[str]) -> AprioriConstants:
    """Read ``name = value`` lines into AprioriConstants.

    Partial files are allowed: unlisted constants keep their defaults.
    Values are exact fractions (``59/100``); nu_A is an integer.
    """
    if path is None:
        return AprioriConstants()
    known = {f.name for f in dataclasses.fields(AprioriConstants)}
    overrides = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                name, sep, value = line.partition("=")
                name, value = name.strip(), value.strip()
                if not sep or not name or not value:
                    raise ParameterError(f"{path}:{lineno}: expected 'name = value'")
                if name not in known:
                    raise ParameterError(f"{path}:{lineno}: unknown constant {name!r}")
                overrides[name] = int(value) if name == "nu_A" else Fraction(value)
    except OSError as exc:
        raise ParameterError(f"cannot read constants file: {exc}") from exc
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"{path}: bad constant value: {exc}") from exc
    return dataclasses.replace(AprioriConstants(), **overrides)


def _emit(lines, out_path: Optional[str] = None) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def cmd_estimate(cfg: RunConfig) -> int:
    constants = _load_constants(cfg.constants_path)
    eps = cfg.epsilon
    prec = cfg.precision_bits or default_precision(eps)
    with temporary_precision(prec):
        order = cfg.k if cfg.k is not None else target_K(eps, constants)
        # every plan invariant is checked here, before any matrix work
        base = OperatorParams.build(
            Fraction(13, 10), eps, order, constants=constants, y_even=cfg.y_even,
            N=cfg.n, L=cfg.l, M=cfg.m, Mp=cfg.mp,
        )
        state = SecantState()
        s_star, _ = secant_search(
            eps, order, plan=base.plan, constants=constants, y_even=cfg.y_even,
            threads=cfg.threads, state_out=state,
        )
        outer = IntervalScalar.from_fraction(
            constants.R_A.numerator, constants.R_A.denominator)
        disc = projection_error(2, order, outer)
        # exact rational detour: float(lam) alone would round the
        # residual of a converged run to exactly zero
        residual = float(abs(gmpy2.mpq(state.history[-1][1]) - 1))

    lines = [
        "command = estimate",
        f"epsilon = 2^-{cfg.eps_bits}",
        f"precision_bits = {prec}",
        f"K = {order}",
        f"N = {base.plan.N}",
        f"L = {base.plan.L}",
        f"M = {base.plan.M}",
        f"Mp = {base.plan.Mp}",
        f"y_even = {'yes' if cfg.y_even else 'no'}",
        f"threads = {cfg.threads}",
    ]
    for t, (s_t, lam_t) in enumerate(state.history):
        lines.append(f"secant[{t}] s = {s_t} lambda = {lam_t}")
    lines += [
        f"s_star = {s_star}",
        f"secant_residual = {residual:.3e}",
        f"discretization_error_estimate = {float(disc.hi):.3e}",
        "rigorous = no (point estimate; digits below the error scales above"
        " are not meaningful)",
    ]
    _emit(lines, cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------


def cmd_certify(cfg: RunConfig) -> int:
    constants = _load_constants(cfg.constants_path)
    out_path = cfg.out or f"certificate-eps{cfg.eps_bits}.txt"
    cache = None if cfg.run_apriori else (cfg.cache_dir or _default_cache_dir())
    header = [
        "command = certify",
        f"epsilon = 2^-{cfg.eps_bits}",
        f"threads = {cfg.threads}",
    ]
    try:
        cert = certify_dimension(
            cfg.epsilon,
            constants=constants,
            y_even=cfg.y_even,
            threads=cfg.threads,
            precision=cfg.precision_bits,
            K=cfg.k, N=cfg.n, L=cfg.l, M=cfg.m, Mp=cfg.mp,
            apriori_subdivision=cfg.subdivision,
            cache_dir=cache,
        )
    except _FAILURES as exc:
        # the artifact at out_path is a refusal report, never a certificate
        lines = header + [
            "status = NOT-CERTIFIED (refused)",
            f"reason = {type(exc).__name__}: {exc}",
        ]
        _emit(lines, out_path)
        return EXIT_FAIL

    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(certificate_to_text(cert))
    digits, count = cert.digits()
    lines = header + [
        "status = certified",
        f"s_lo = {_exact_decimal(cert.s_lo)}",
        f"s_hi = {_exact_decimal(cert.s_hi)}",
        f"certified_digits = {digits}",
        f"certified_digit_count = {count}",
        f"width = {cert.width:.6e}",
        f"width_bits = {math.log2(cert.width):.2f}",
        f"K = {cert.K}",
        f"precision_bits = {cert.precision}",
        f"certificate = {out_path}",
    ]
    _emit(lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# apriori
# ---------------------------------------------------------------------------


def cmd_apriori(cfg: RunConfig) -> int:
    constants = _load_constants(cfg.constants_path)
    prec = cfg.precision_bits or 120
    cache = None if cfg.run_apriori else (cfg.cache_dir or _default_cache_dir())
    lines = [
        "command = apriori",
        f"subdivision = {cfg.subdivision}",
        f"precision_bits = {prec}",
        f"threads = {cfg.threads}",
    ]
    with temporary_precision(prec):
        try:
            reports = verify_constants(
                cfg.subdivision, constants=constants, threads=cfg.threads,
                cache_dir=cache,
            )
        except VerificationFailed as exc:
            lines += ["status = FAIL", f"reason = {exc}"]
            _emit(lines, cfg.out)
            return EXIT_FAIL
    for name in sorted(reports):
        rep = reports[name]
        lines.append("")
        lines.append(f"claim = {rep.claim}")
        if rep.n_range is not None:
            lines.append(f"n_range = {rep.n_range[0]}..{rep.n_range[1]}")
        lines.append(f"boxes = {rep.boxes}")
        lines.append(f"slack = {rep.slack:.6e}")
        if rep.detail:
            lines.append(f"detail = {rep.detail}")
        lines.append(f"result = {'PASS' if rep.passed else 'FAIL'}")
    ok = all(rep.passed for rep in reports.values())
    lines += ["", f"status = {'PASS' if ok else 'FAIL'}"]
    _emit(lines, cfg.out)
    if cfg.figure:
        _apriori_figure(reports, cfg.figure)
    return EXIT_OK if ok else EXIT_FAIL


def _apriori_figure(reports, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = sorted(reports)
    slacks = [max(float(reports[n].slack), 1e-300) for n in names]
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    ax.barh(names, slacks, color="#4878cf")
    ax.set_xscale("log")
    ax.set_xlabel("certified slack (log scale)")
    ax.set_title("a priori constant verification")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# em-check
# ---------------------------------------------------------------------------


def _em_suite(eps: Fraction):
    """Run the accelerated-sum oracle suite.

    One transcendental target (the zeta(2) series, checked against
    pi^2/6) and three rational summand families checked against brute
    force: 10^6 float terms plus a closed-form integral bracket for the
    tail, with a cushion dominating the float rounding error.
    """
    one_c = IntervalComplex.point(1)
    two_c = IntervalComplex.point(2)
    three = IntervalScalar.point(3)
    results = []

    def basel_psi(z):
        w = z.add(one_c)
        return w.mul(w).recip()

    def basel_tilde(w):
        u = w.add(one_c)
        return u.mul(u).recip()

    plan = make_plan(eps, 10, 1)
    got = accelerated_sum(
        basel_psi, basel_tilde, plan, Fraction(1, 121), Fraction(100, 81))
    target = IntervalScalar.pi().square().div(IntervalScalar.point(6))
    results.append({
        "name": "zeta-2",
        "summand": "1/(n+1)^2",
        "oracle": "pi^2/6",
        "enclosure": got,
        "budget": float(plan.err_budget),
        "ok": bool(target.is_subset(got)),
    })

    neg_26 = IntervalScalar.point(Fraction(13, 10)).scale2(1).neg()

    def power_psi(z):
        return z.add(two_c).pow_real(neg_26)

    def power_tilde(w):
        return w.mul_real(IntervalScalar.point(2)).add(one_c).pow_real(neg_26)

    def rational_psi(z):
        num = z.mul(z).add(z.mul_real(three)).add(two_c)
        den = z.mul(z).add(z.scale2(1)).add(two_c)
        return z.add(two_c).pow_real(IntervalScalar.point(-2)).mul(num).mul(den.recip())

    def rational_tilde(w):
        head = w.mul_real(IntervalScalar.point(2)).add(one_c)
        num = one_c.add(w.mul_real(three)).add(w.mul(w).scale2(1))
        den = one_c.add(w.scale2(1)).add(w.mul(w).scale2(1))
        return head.pow_real(IntervalScalar.point(-2)).mul(num).mul(den.recip())

    def telescope_psi(z):
        shifted = z.add(one_c)
        return shifted.pow_real(IntervalScalar.point(-3)).mul(z).mul(shifted.recip())

    def telescope_tilde(w):
        return w.add(one_c).pow_real(IntervalScalar.point(-4))

    families = [
        {
            "name": "power-2.6",
            "summand": "(n+2)^-2.6",
            "s": Fraction(13, 10),
            "psi": power_psi, "tilde": power_tilde,
            "C": Fraction(1, 144), "C_tilde": 2,
            "term": lambda n: (n + 2.0) ** -2.6,
            "tail_lo": lambda K: (K + 3.0) ** -1.6 / 1.6 * (1 - 1e-9),
            "tail_hi": lambda K: (K + 2.0) ** -1.6 / 1.6 * (1 + 1e-9),
        },
        {
            "name": "telescoping",
            "summand": "(n+1)^-3 n/(n+1)",
            "s": Fraction(3, 2),
            "psi": telescope_psi, "tilde": telescope_tilde,
            "C": Fraction(1, 1000), "C_tilde": 2,
            "term": lambda n: (n + 1.0) ** -3 * n / (n + 1.0),
            "tail_lo": lambda K: (1 - 1.0 / K) * (K + 2.0) ** -2 / 2,
            "tail_hi": lambda K: float(K) ** -2 / 2,
        },
        {
            "name": "rational",
            "summand": "(n+2)^-2 (n^2+3n+2)/(n^2+2n+2)",
            "s": Fraction(1),
            "psi": rational_psi, "tilde": rational_tilde,
            "C": Fraction(1, 100), "C_tilde": 3,
            "term": lambda n: (n + 2.0) ** -2 * (n * n + 3.0 * n + 2.0)
                              / (n * n + 2.0 * n + 2.0),
            "tail_lo": lambda K: (1 - 3e-6) / (K + 3.0),
            "tail_hi": lambda K: (1 + 3e-6) / (K + 2.0),
        },
    ]
    hits = 10**6
    for fam in families:
        plan = make_plan(eps, 10, fam["s"])
        got = accelerated_sum(fam["psi"], fam["tilde"], plan, fam["C"], fam["C_tilde"])
        brute = sum(fam["term"](n) for n in range(hits + 1))
        lo = brute - 1e-9 + fam["tail_lo"](hits)
        hi = brute + 1e-9 + fam["tail_hi"](hits)
        results.append({
            "name": fam["name"],
            "summand": fam["summand"],
            "oracle": f"brute force, {hits} terms + tail bracket",
            "enclosure": got,
            "budget": float(plan.err_budget),
            "ok": bool(float(got.lo) >= lo and float(got.hi) <= hi),
        })
    return results


def cmd_em_check(cfg: RunConfig) -> int:
    prec = cfg.precision_bits or 120
    lines = [
        "command = em-check",
        f"epsilon = 2^-{cfg.eps_bits}",
        f"precision_bits = {prec}",
    ]
    with temporary_precision(prec):
        results = _em_suite(cfg.epsilon)
        for res in results:
            lines += [
                "",
                f"check = {res['name']}",
                f"summand = {res['summand']}",
                f"oracle = {res['oracle']}",
                f"enclosure_width = {float(res['enclosure'].width):.3e}",
                f"plan_error_budget = {res['budget']:.3e}",
                f"result = {'PASS' if res['ok'] else 'FAIL'}",
            ]
    ok = all(res["ok"] for res in results)
    lines += ["", f"status = {'PASS' if ok else 'FAIL'}"]
    _emit(lines, cfg.out)
    if cfg.figure:
        _em_figure(results, cfg.figure)
    return EXIT_OK if ok else EXIT_FAIL


def _em_figure(results, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [res["name"] for res in results]
    widths = [max(float(res["enclosure"].width), 1e-300) for res in results]
    budgets = [res["budget"] for res in results]
    xs = range(len(names))
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    ax.bar(xs, widths, color="#4878cf", label="enclosure width")
    ax.plot(xs, budgets, "v", color="#d1495b", label="plan error budget")
    ax.set_yscale("log")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=15)
    ax.set_ylabel("interval width")
    ax.set_title("accelerated-sum oracle suite")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# render
# ---------------------------------------------------------------------------


def _parabolic_triple():
    """Float matrices of the three parabolic maps fixing 1, w, w^2.

    Conjugating the generator by the order-3 rotation only scales the
    off-diagonal entries: R^j A R^-j = ((a, w^j b), (w^-j c, d)).
    """
    s3 = math.sqrt(3.0)
    omega = complex(-0.5, s3 / 2.0)
    maps = []
    for j in range(3):
        rj = omega**j
        maps.append((complex(s3 - 1.0), rj, -rj.conjugate(), complex(s3 + 1.0)))
    return maps


def _mat_mul(p, q):
    a, b, c, d = p
    e, f, g, h = q
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _moebius_point(m, z: complex) -> complex:
    a, b, c, d = m
    return (a * z + b) / (c * z + d)


def _circle_image(m, center: complex, radius: float):
    """Image circle under z -> (az+b)/(cz+d), pole assumed outside.

    The image center is the image of the point symmetric to the pole:
    symmetry with respect to a circle is Moebius-invariant and the
    center is the symmetric partner of infinity.
    """
    a, b, c, d = m
    if abs(c) < 1e-14:
        w = (a * center + b) / d
        return w, abs(a / d) * radius
    pole = -d / c
    diff = pole - center
    sym = center + radius * radius / diff.conjugate()
    w_center = _moebius_point(m, sym)
    boundary = center + radius * diff / abs(diff)
    return w_center, abs(w_center - _moebius_point(m, boundary))


def _packing_circles(depth: int):
    """Unit circle plus its images under reduced words of length <= depth.

    Words avoid immediate repetition of a generator, giving 3 * 2^(k-1)
    fresh circles at word length k.
    """
    maps = _parabolic_triple()
    identity = (complex(1.0), complex(0.0), complex(0.0), complex(1.0))
    circles = [(complex(0.0), 1.0)]

    def extend(mat, last, level):
        for j, gen in enumerate(maps):
            if j == last:
                continue
            comp = _mat_mul(mat, gen)
            circles.append(_circle_image(comp, complex(0.0), 1.0))
            if level + 1 < depth:
                extend(comp, j, level + 1)

    extend(identity, None, 0)
    return circles


def _svg_document(circles, size: int = 720) -> str:
    half = size / 2.0
    scale = half / 1.05
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}"'
        f' viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="#ffffff"/>',
    ]
    for center, radius in circles:
        cx = half + center.real * scale
        cy = half - center.imag * scale
        parts.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius * scale:.2f}"'
            f' fill="none" stroke="#24348c" stroke-width="0.8"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_render(cfg: RunConfig) -> int:
    out_path = cfg.out or f"gasket-depth{cfg.depth}.svg"
    circles = _packing_circles(cfg.depth)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(_svg_document(circles))
    _emit([
        "command = render",
        f"depth = {cfg.depth}",
        f"circles = {len(circles)}",
        f"svg = {out_path}",
        "rigorous = no (presentation output)",
    ])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_tolerance(parser):
    parser.add_argument(
        "--eps-bits", type=int, default=60,
        help="target tolerance, epsilon = 2^-BITS (default 60)")
    parser.add_argument(
        "--precision-bits", type=int, default=None,
        help="working interval precision in bits (default: derived)")


def _add_execution(parser):
    parser.add_argument(
        "--threads", type=int, default=_default_threads(),
        help="worker processes (default: GASKETDIM_THREADS or 1)")
    parser.add_argument(
        "--out", default=None, help="write the report or artifact to this path")


def _add_plan_overrides(parser):
    parser.add_argument("--k", type=int, default=None,
                        help="Chebyshev order override")
    parser.add_argument("--n", type=int, default=None,
                        help="summation head length override")
    parser.add_argument("--l", type=int, default=None,
                        help="Euler-Maclaurin correction order override")
    parser.add_argument("--m", type=int, default=None,
                        help="derivative quadrature node count override")
    parser.add_argument("--mp", type=int, default=None,
                        help="integral quadrature node count override")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--y-even", dest="y_even", action="store_true",
                       default=True, help="restrict to the y-even subspace (default)")
    group.add_argument("--no-y-even", dest="y_even", action="store_false",
                       help="work on the full tensor grid")


def _add_constants(parser):
    parser.add_argument(
        "--constants", dest="constants_path", default=None,
        help="constants file overriding the built-in verified values")


def _add_apriori_source(parser):
    parser.add_argument(
        "--run-apriori", action="store_true",
        help="re-verify the analytic constants, ignoring cached reports")
    parser.add_argument(
        "--subdivision", type=int, default=40,
        help="boundary subdivision for the constant verification (default 40)")
    parser.add_argument(
        "--cache-dir", default=None,
        help="report cache directory (default: GASKETDIM_CACHE or ~/.cache/gasketdim)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gasketdim",
        description="Certified enclosures of the Apollonian gasket dimension.")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser(
        "estimate", help="non-rigorous dimension estimate (secant iteration)")
    _add_tolerance(est)
    _add_plan_overrides(est)
    _add_constants(est)
    _add_execution(est)

    cert = sub.add_parser(
        "certify", help="certified dimension enclosure with a certificate file")
    _add_tolerance(cert)
    _add_plan_overrides(cert)
    _add_constants(cert)
    _add_apriori_source(cert)
    _add_execution(cert)

    apr = sub.add_parser(
        "apriori", help="box-verification reports for the analytic constants")
    apr.add_argument("--precision-bits", type=int, default=None,
                     help="working interval precision in bits (default 120)")
    _add_constants(apr)
    _add_apriori_source(apr)
    _add_execution(apr)
    apr.add_argument("--figure", default=None,
                     help="also save a slack chart to this path")

    emc = sub.add_parser(
        "em-check", help="oracle checks of the accelerated summation")
    _add_tolerance(emc)
    _add_execution(emc)
    emc.add_argument("--figure", default=None,
                     help="also save a width chart to this path")

    ren = sub.add_parser("render", help="SVG picture of the disk packing")
    ren.add_argument("--depth", type=int, default=6,
                     help="maximum word length (default 6)")
    ren.add_argument("--out", default=None,
                     help="output SVG path (default gasket-depth<D>.svg)")

    return parser


_HANDLERS = {
    "estimate": cmd_estimate,
    "certify": cmd_certify,
    "apriori": cmd_apriori,
    "em-check": cmd_em_check,
    "render": cmd_render,
}


def _config_from(namespace: argparse.Namespace) -> RunConfig:
    values = {}
    for field in dataclasses.fields(RunConfig):
        if hasattr(namespace, field.name):
            values[field.name] = getattr(namespace, field.name)
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    namespace = parser.parse_args(argv)
    try:
        cfg = _config_from(namespace)
        return _HANDLERS[cfg.command](cfg)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _FAILURES as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
