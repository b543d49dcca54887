"""The invariant suite behind ``shiftlab verify``: one check per module
property, each with a measured value and the tolerance it is held to."""
from dataclasses import dataclass
from decimal import Decimal, localcontext
import math
import time

import numpy as np

from .config import DEFAULT
from .errors import DomainError, NumericalError, PreconditionFailed
from .weights import Weight, envelope, legendre, classify, transform
from .series import CoeffVec, Hyperfunction, convolve, laurent_eval, pair, circle_samples, circle_coeffs
from .operators import SpaceModel, shift, resolvent_T, divide, power_norm, functional_norm, func_calc, r_n_op
from .growth import (GrowthProfile, mm_integral, mm_dichotomy, c_eps, tail_weight, summability_62,
                     hypothesis_report, delta)
from .subspaces import (TruncSubspace, zero_set, division_check, quotient_U, recursion_basis, glue_test)
from .hyperlab import (RadialProfile, fit_phi, dynkin_extend, cauchy_transform, dbar_density,
                       annulus_factorize, exp_series, span_identity, lemma82_trend, running_extremes,
                       annihilating_pair, prop84_residual)

PASS, FAIL, DEVIATION = "pass", "fail", "deviation"

# pi to 60 digits for the decimal evaluation of C(eps)
_PI = Decimal("3.14159265358979323846264338327950288419716939937510582097494")


@dataclass
class CheckResult:
    module: str
    name: str
    status: str
    value: float
    tol: float
    detail: str = ""
    seconds: float = 0.0

    def to_dict(self):
        v = self.value
        return {"module": self.module, "name": self.name, "status": self.status,
                "value": None if v is None or not math.isfinite(v) else float(v),
                "tol": self.tol, "detail": self.detail}


_CHECKS = []


def check(module, tol, deviation=None):
    """Register a check returning (value, passed[, detail]).  ``deviation``
    marks a property known not to hold: it is reported, not counted."""
    def deco(fn):
        _CHECKS.append((module, fn.__name__, tol, deviation, fn))
        return fn
    return deco


def _poly(rng, deg):
    return CoeffVec(0, rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1))


def _zero_free(rng, deg, rmin=1.3, rmax=3.0):
    rad = rng.uniform(rmin, rmax, deg)
    c = np.array([1.0 + 0j])
    for a in rad * np.exp(2j * np.pi * rng.uniform(size=deg)):
        c = np.convolve(c, [1.0, -1.0 / a])
    return CoeffVec(0, c)


def _disc_grid(rng, n, rmax=0.9):
    return np.sqrt(rng.uniform(0, rmax ** 2, n)) * np.exp(2j * np.pi * rng.uniform(size=n))


def _space(N, log_fn=None):
    w = Weight.constant("Z+", 0, N) if log_fn is None else Weight.from_function("Z+", 0, N, log_fn)
    return SpaceModel(w, 2, N)


# weights ----------------------------------------------------------------------------

@check("weights", 1e-12)
def envelope_submultiplicative(ctx):
    rng = ctx["rng"]
    w = Weight("Z", -60, np.cumsum(rng.normal(0, 0.4, 121)))
    worst = -math.inf
    for kind in ("bar", "tilde"):
        for m1 in range(1, 8):
            for m2 in range(1, 8):
                a = envelope(w, kind, m1 + m2).log_value
                b = envelope(w, kind, m1).log_value + envelope(w, kind, m2).log_value
                worst = max(worst, a - b)
    return worst, worst <= 1e-12


@check("weights", 1e-14)
def envelope_closed_forms(ctx):
    w = Weight.from_function("Z+", 0, 200, lambda n: -np.log1p(n))
    err = abs(envelope(w, "bar", 2).value - 3.0)
    err = max(err, abs(envelope(Weight.constant("Z", -50, 50), "tilde", 9).value - 1.0))
    return err, err <= 1e-14


@check("weights", 1e-12)
def legendre_enumeration(ctx):
    w = Weight.from_function("Z-", -400, -1, lambda n: np.sqrt(-n))
    worst = 0.0
    for r in (0.3, 0.8, 0.95):
        k = np.arange(400)
        brute = max(k * math.log(r) + np.sqrt(k + 1))
        worst = max(worst, abs(legendre(w, r).log_value - brute))
    return worst, worst <= 1e-12


@check("weights", 0)
def classify_constant_in_S(ctx):
    rep = classify(Weight.constant("Z", -64, 64))
    ok = rep.verdicts["class_S"]["verdict"] == PASS
    return float(ok), ok


@check("weights", 0)
def transform_dual_involution(ctx):
    w = Weight("Z", -30, ctx["rng"].normal(size=61))
    dd = transform(transform(w, "dual"), "dual")
    err = float(np.max(np.abs(dd.log_values - w.log_values)))
    return err, err == 0 and dd.n_lo == w.n_lo


@check("weights", 0)
def weight_json_round_trip(ctx):
    w = Weight("Z-", -20, ctx["rng"].normal(size=20))
    back = Weight.from_dict(w.to_dict())
    err = float(np.max(np.abs(back.log_values - w.log_values)))
    return err, err == 0


# series -----------------------------------------------------------------------------

@check("series", 1e-12)
def convolve_eval_product(ctx):
    rng = ctx["rng"]
    a = CoeffVec(-5, rng.normal(size=12) + 1j * rng.normal(size=12))
    b = CoeffVec(-3, rng.normal(size=9))
    z = 0.9 * np.exp(1j * rng.uniform(0, 6.28, 20))
    lhs = laurent_eval(convolve(a, b), z)
    rhs = laurent_eval(a, z) * laurent_eval(b, z)
    err = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
    return err, err <= 1e-12


@check("series", 1e-12)
def circle_round_trip(ctx):
    rng = ctx["rng"]
    f = CoeffVec(-20, rng.normal(size=41) + 1j * rng.normal(size=41))
    back = circle_coeffs(circle_samples(f, 0.9, 128), 0.9, -20, 20)
    err = float(np.max(np.abs(back.coeffs - f.coeffs)))
    return err, err <= 1e-12


@check("series", 1e-13)
def pairing_shift_adjoint(ctx):
    rng = ctx["rng"]
    f = CoeffVec(-10, rng.normal(size=21))
    h = CoeffVec(-10, rng.normal(size=21))
    # <S f, h> = <f, S h>
    err = abs(pair(f.shifted(1), h) - pair(f, h.shifted(1)))
    return err, err <= 1e-13


@check("series", 0)
def alias_guard_raises(ctx):
    f = CoeffVec(0, np.ones(100))
    try:
        circle_coeffs(circle_samples(f, 0.9, 64), 0.9, 0, 20)
    except NumericalError:
        return 1.0, True
    return 0.0, False


# operators --------------------------------------------------------------------------

@check("operators", 1e-11)
def resolvent_identities(ctx):
    """T (I - lam T)^-1 (S - lam) f = f and (I - S T)(I - lam T)^-1 f = f(lam) 1."""
    rng = ctx["rng"]
    worst = 0.0
    for _ in range(100):
        f = _poly(rng, int(rng.integers(1, min(ctx["N"], 121))))
        sc = f.max_abs()
        for lam in (0.0, 0.5, -0.3 + 0.4j):
            sf = shift(Hyperfunction(f, CoeffVec.zero(-1)), "S").plus - f.scale(lam)
            back = shift(Hyperfunction(resolvent_T(sf, lam), CoeffVec.zero(-1)), "T").plus
            worst = max(worst, float(np.max(np.abs(back.window(0, f.n_hi) - f.coeffs))) / sc)
            g = resolvent_T(f, lam)
            h = g - shift(shift(Hyperfunction(g, CoeffVec.zero(-1)), "T"), "S").plus
            val = complex(laurent_eval(f, lam))
            worst = max(worst, abs(h[0] - val) / sc, float(np.max(np.abs(h.coeffs[1:]))) / sc)
            divide(f, lam, tol=1e-11)  # raises if the two routes disagree
    return worst, worst <= 1e-11


@check("operators", 0.01)
def power_norm_closed_forms(ctx):
    """Attained envelopes match at 1%; sups approached only as n -> inf are
    required to improve monotonically with N instead."""
    worst, monotone = 0.0, True
    fns = (None, lambda n: 2 * np.log1p(n), lambda n: -2 * np.log1p(n), lambda n: np.sqrt(n))
    for fn in fns:
        w = Weight.constant("Z+", 0, 600) if fn is None else Weight.from_function("Z+", 0, 600, fn)
        for m in (1, 4, 16):
            for op in ("S", "T"):
                r = power_norm(SpaceModel(w, 2, 256), op, m)
                if r.at_edge:
                    ests = [power_norm(SpaceModel(w, 2, N), op, m).matrix_estimate for N in (64, 128, 256)]
                    monotone &= ests[0] <= ests[1] * (1 + 1e-12) and ests[1] <= ests[2] * (1 + 1e-12)
                else:
                    worst = max(worst, r.relative_gap)
    return worst, worst <= 0.01 and monotone


@check("operators", 1e-9)
def delta_norm_two_routes(ctx):
    sp = _space(ctx["N"], lambda n: 0.5 * np.log1p(n))
    worst = max(functional_norm(sp, "delta", lam=l).relative_gap for l in (0.0, 0.4, -0.7j, 0.9))
    return worst, worst <= 1e-9


@check("operators", 1e-14)
def func_calc_is_convolution(ctx):
    rng = ctx["rng"]
    sp = SpaceModel(Weight.constant("Z", -40, 40), 2, 40, "hyper")
    w = CoeffVec(-3, rng.normal(size=7))
    f = CoeffVec(-5, rng.normal(size=11))
    got = func_calc(w, sp, f).value.laurent()
    want = convolve(w, f)
    err = float(np.max(np.abs(got.window(-8, 8) - want.window(-8, 8))))
    return err, err <= 1e-14


@check("operators", 1e-12)
def r_n_dense_norm(ctx):
    tail = Weight.from_function("Z-", -40, -1, lambda n: 0.1 * n.astype(float) ** 2)
    disc = Weight.from_function("Z+", 0, 40, lambda n: 0.3 * n)
    _, nrm = r_n_op(CoeffVec(0, [1.0]), 12, tail, disc)
    # dense matrix of R_12 between the weighted models
    A = np.zeros((12, 12))
    for m in range(12):
        A[m, m] = math.exp(tail.log_at(m - 12) - disc.log_at(m))
    err = abs(nrm - np.linalg.norm(A, 2)) / nrm
    return err, err <= 1e-12


# growth -----------------------------------------------------------------------------

def _log_C_decimal(eps):
    with localcontext() as c:
        c.prec = 50
        e = Decimal(eps)
        inner = (26 * _PI + Decimal(3) / 2) * (2 + 1 / e)
        C = (54 / _PI) * e ** -3 * (1 + e) * (1 + 2 * e / 3) ** 2 * (1 + Decimal(44) / 5 * inner.exp())
        return float(C.ln())


@check("growth", 1e-10)
def c_eps_high_precision(ctx):
    worst = max(abs(c_eps(e) / _log_C_decimal(e) - 1) for e in (0.5, 1.0, 3.0, 100.0))
    return worst, worst <= 1e-10


@check("growth", 1e-9)
def mm_constant_delta(ctx):
    worst = 0.0
    for c in (0.1, 1.0, 7.0):
        for r in (0.0, 0.5, 0.99, 0.999999):
            got = mm_integral(lambda t: c, r).value
            want = 2 * math.sqrt(c) * (1 - math.sqrt(1 - r))
            worst = max(worst, abs(got - want) / max(want, 1e-300) if want else abs(got))
    return worst, worst <= 1e-9


@check("growth", 0)
def mm_dichotomy_examples(ctx):
    a = mm_dichotomy(GrowthProfile.constant(64)).verdict
    b = mm_dichotomy(GrowthProfile(-2 * np.log1p(np.arange(2001)), "loglinear")).verdict
    ok = a == "divergent" and b == "convergent"
    return float(ok), ok, f"{a}/{b}"


@check("growth", 0)
def hypothesis_thresholds_verbatim(ctx):
    n = np.arange(0, 2001)
    rep = hypothesis_report(GrowthProfile(n ** 0.3), Weight.from_function("Z-", -2000, -1, lambda k: (-k) ** 0.8))
    ok = rep["thresholds"] == {"factorization_ratio": "1/64", "annihilator_ratio": "1/200", "nqa_exponent": "3/2"}
    return float(ok), ok


@check("growth", 1e-12)
def delta_log_convex_in_log_r(ctx):
    prof = GrowthProfile(0.5 * np.log1p(np.arange(400.0)), "loglinear")
    v = np.array([delta(prof, math.exp(x))[0] for x in np.linspace(-5, -0.01, 60)])
    worst = float(max(-np.min(np.diff(v)), -np.min(np.diff(v, 2)), 0.0))
    return worst, worst <= 1e-10


def _tail(ctx):
    if "tail200" not in ctx:
        ctx["tail200"] = tail_weight(GrowthProfile.constant(64), 1.0, 200)
    return ctx["tail200"]


@check("growth", 0)
def tail_radii_increase(ctx):
    r = _tail(ctx)
    d = np.diff(r.log_r_opt[1:])
    return float(d.min()), bool(np.all(d > 0) and np.all(r.r_opt[1:] < 1))


@check("growth", 0)
def tail_summability_convergent(ctx):
    r = _tail(ctx)
    n = np.arange(1, 201)
    res = summability_62(-r.checked.log_at(-n), r.log_sigma[1:])
    return float(res.verdict == "convergent"), res.verdict == "convergent", res.verdict


@check("growth", 1e-6, deviation="the synthesized weight is an infimum of lines in n, hence log-concave; "
                                   "log-convexity cannot hold")
def tail_log_convex(ctx):
    r = _tail(ctx)
    d2 = np.diff(r.log_sigma, 2)
    return float(d2.min()), bool(np.all(d2 >= -1e-6 * np.abs(r.log_sigma[2:])))


# subspaces --------------------------------------------------------------------------

@check("subspaces", 0)
def division_index_one_zero_free(ctx):
    rng = ctx["rng"]
    bad = 0
    for _ in range(20):
        M = TruncSubspace.from_generator(_zero_free(rng, int(rng.integers(1, 4))), _space(min(ctx["N"], 32)))
        for lam in _disc_grid(rng, 10):
            r = division_check(M, lam)
            bad += int(not (r.has_division and r.index == 1))
    return float(bad), bad == 0


@check("subspaces", 0)
def division_iff_zero_free_index_one(ctx):
    rng = ctx["rng"]
    bad = 0
    for _ in range(10):
        lam0 = complex(_disc_grid(rng, 1, 0.8)[0])
        g = CoeffVec(0, np.convolve([-lam0, 1.0], _zero_free(rng, 2).coeffs))
        M = TruncSubspace.from_generator(g, _space(20))
        grid = list(_disc_grid(rng, 8)) + [lam0]
        for lam, z in zip(grid, zero_set(M, grid)):
            r = division_check(M, lam)
            bad += int(r.has_division != ((not z["zero"]) and r.index_at_lam == 1))
    return float(bad), bad == 0


@check("subspaces", 1e-9)
def quotient_resolvent_identity(ctx):
    rng = ctx["rng"]
    worst = 0.0
    for _ in range(10):
        M = TruncSubspace.from_generator(_zero_free(rng, int(rng.integers(1, 5))), _space(24))
        lam, mu = _disc_grid(rng, 2, 0.8)
        q = quotient_U(M, lam, mu)
        worst = max(worst, q.resolvent_residual, q.intertwining_residual)
    return worst, worst <= 1e-9


@check("subspaces", 1e-12)
def recursion_exact(ctx):
    rng = ctx["rng"]
    worst = 0.0
    for _ in range(10):
        u = _zero_free(rng, 3)
        worst = max(worst, max(recursion_basis(u.scale(1 / u[0]), 20).residuals))
    return worst, worst <= 1e-12


@check("subspaces", 1e-8)
def glue_half_generator(ctx):
    sp = _space(16)
    tail = Weight.from_function("Z-", -16, -1, lambda n: n.astype(float) ** 2)
    M = TruncSubspace.from_generator(CoeffVec(0, [1.0, -0.5]), sp)
    rep = glue_test(M, tail, 10)
    return rep.max_residual, rep.max_residual <= 1e-8


@check("subspaces", 0)
def z_invariance_certified(ctx):
    rng = ctx["rng"]
    M = TruncSubspace.from_generator(_zero_free(rng, 3), _space(min(ctx["N"], 64)))
    return M.z_residual, bool(M.z_invariant)


# hyperlab ---------------------------------------------------------------------------

@check("hyperlab", 1e-10)
def tau_constant_profile(ctx):
    one = RadialProfile.constant()
    worst = max(abs(math.sqrt(one.tau2(n)) * math.sqrt(n + 1) - 1) for n in range(40))
    return worst, worst <= 1e-10


@check("hyperlab", 1e-10)
def dynkin_conj_lambda(ctx):
    one = RadialProfile.constant()
    worst = max(abs(dynkin_extend(CoeffVec(-1, [1.0]), one, l)[0] - np.conj(l)) for l in _disc_grid(ctx["rng"], 10))
    return worst, worst <= 1e-10


def _fitted_phi(ctx):
    if "phi" not in ctx:
        ctx["phi"], _ = fit_phi(Weight.from_function("Z+", 0, 40, lambda n: -np.log1p(n)))
    return ctx["phi"]


@check("hyperlab", 1e-8)
def reproduction_identity(ctx):
    rng = ctx["rng"]
    phi = _fitted_phi(ctx)
    worst = 0.0
    for _ in range(3):
        c = (rng.normal(size=12) + 1j * rng.normal(size=12)) * 0.8 ** np.arange(12)
        h = CoeffVec(-12, c[::-1])
        for mu in (1.5, 2.0j, -4.0):
            got = cauchy_transform(lambda z: dbar_density(h, phi, z), mu, edges=phi.edges)
            worst = max(worst, abs(got - complex(laurent_eval(h, mu))))
    return worst, worst <= 1e-8


@check("hyperlab", 1e-6)
def wirtinger_dbar(ctx):
    rng = ctx["rng"]
    phi = RadialProfile.power(0.5)
    c = (rng.normal(size=6) + 1j * rng.normal(size=6)) * 0.8 ** np.arange(6)
    h = CoeffVec(-6, c[::-1])
    eps, worst = 1e-4, 0.0
    for lam in _disc_grid(rng, 20, 0.85):
        D = lambda z: dynkin_extend(h, phi, z)[0]
        dbar = ((D(lam + eps) - D(lam - eps)) + 1j * (D(lam + 1j * eps) - D(lam - 1j * eps))) / (4 * eps)
        L = dynkin_extend(h, phi, lam)[1]
        worst = max(worst, abs(dbar - L) / max(1.0, abs(L)))
    return worst, worst <= 1e-6


@check("hyperlab", 1e-9)
def factorization_round_trip(ctx):
    rng = ctx["rng"]
    worst, wrong_k = 0.0, 0
    for i in range(50):
        k = i % 6
        g = _zero_free(rng, int(rng.integers(1, 4)))
        hl = int(rng.integers(1, 11))
        hc = (rng.normal(size=hl) + 1j * rng.normal(size=hl)) * 0.3 * 0.6 ** np.arange(1, hl + 1)
        e = exp_series(np.concatenate([[0], hc]), 160)
        f = convolve(CoeffVec(-160, e[::-1]), g).shifted(-k)
        r = annulus_factorize(f, 0.8, r0=0.6)
        wrong_k += int(r.k != k)
        worst = max(worst, r.residual)
        if i < 10:
            ctx.setdefault("angles", []).append(span_identity(r, f))
    return worst, worst <= 1e-9 and wrong_k == 0, f"wrong k: {wrong_k}"


@check("hyperlab", 1e-6)
def span_identity_angles(ctx):
    if "angles" not in ctx:
        factorization_round_trip(ctx)
    worst = max(ctx["angles"])
    return worst, worst <= 1e-6


@check("hyperlab", 0.1)
def backward_norm_ratio_band(ctx):
    tail = Weight.from_function("Z-", -600, -1, lambda n: (-n.astype(float)) ** 0.7)
    rows = lemma82_trend(GrowthProfile.constant(600), tail, 500)
    r = np.array([x.ratio for x in rows if 100 <= x.n <= 500])
    hi, lo = running_extremes(rows, 100)
    worst = float(np.max(np.abs(r - 1)))
    return worst, worst <= 0.1 and hi[0] <= 1.1 and lo[0] >= 0.9


@check("hyperlab", 1e-7)
def annihilator_identity(ctx):
    rng = ctx["rng"]
    g = _zero_free(rng, 3)
    q = rng.normal(size=3) + 1j * rng.normal(size=3)
    f, l = annihilating_pair(g, q, 0.7)
    rep = prop84_residual(f, l, _fitted_phi(ctx), _disc_grid(rng, 32))
    return rep.max_residual, rep.max_residual <= 1e-7


def run_suite(seed=42, N=128, cfg=DEFAULT, only=None):
    """All checks in registration order, each with its own generator seeded
    from (seed, index) so results do not depend on which checks run."""
    if N < 8:
        raise DomainError("N must be >= 8")
    out = []
    shared = {}
    for i, (module, name, tol, deviation, fn) in enumerate(_CHECKS):
        if only and module not in only:
            continue
        ctx = shared
        ctx.update(rng=np.random.default_rng([seed, i]), N=N, cfg=cfg)
        t0 = time.perf_counter()
        try:
            res = fn(ctx)
            value, ok = float(res[0]), bool(res[1])
            detail = res[2] if len(res) > 2 else ""
        except (DomainError, NumericalError, PreconditionFailed, ArithmeticError, ValueError) as exc:
            value, ok, detail = math.nan, False, f"{type(exc).__name__}: {exc}"
        status = PASS if ok else (DEVIATION if deviation else FAIL)
        if deviation and not ok:
            detail = (detail + "; " if detail else "") + deviation
        out.append(CheckResult(module, name, status, value, tol, detail, time.perf_counter() - t0))
    return out
