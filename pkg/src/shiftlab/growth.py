"""Growth profiles |T^n|, the majorant Delta(r) = sum r^n |T^n|, the integral
int sqrt(Delta(t)/(1-t)) dt, the constant C(eps), the exponent L_eps(r) and
the tail weights obtained from inf_r r^-n exp(L_eps(r)).

Everything that can overflow is carried as a natural log.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate, optimize

from .config import DEFAULT
from .errors import DomainError, ProfileTooShort
from .weights import Weight, ZM, transform, classify
from . import _tails

THRESHOLD_FACTORIZATION = "1/64"
THRESHOLD_ANNIHILATOR = "1/200"
NQA_EXPONENT = "3/2"


@dataclass(frozen=True, eq=False)
class GrowthProfile:
    """log |T^n| for n = 0..N_g.  With extension "loglinear" the profile is
    continued past N_g with its last log-slope (geometric tail summed exactly);
    with "error" the tail is only bounded and must be negligible."""
    log_t_norms: np.ndarray
    extension: str = "error"
    provenance: str = "user"

    def __post_init__(self):
        a = np.array(self.log_t_norms, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise DomainError("growth profile needs at least two entries")
        if not np.all(np.isfinite(a)):
            raise DomainError("growth profile log-values must be finite")
        if self.extension not in ("error", "loglinear"):
            raise DomainError(f"unknown extension {self.extension!r}")
        a.setflags(write=False)
        object.__setattr__(self, "log_t_norms", a)

    @property
    def N_g(self):
        return self.log_t_norms.size - 1

    @classmethod
    def from_weight(cls, w, N_g, extension="error"):
        """Closed-form |T^n| = bar(n) on the disc space with weight w."""
        from .weights import envelope
        return cls(np.array([envelope(w, "bar", n).log_value for n in range(N_g + 1)]),
                   extension, "closed-form")

    @classmethod
    def constant(cls, N_g=64, log_c=0.0):
        return cls(np.full(N_g + 1, float(log_c)), "loglinear", "closed-form")

    def tail_slope(self):
        """Largest consecutive log-ratio over the last half of the profile."""
        a = self.log_t_norms
        d = np.diff(a[a.size // 2:]) if a.size >= 4 else np.diff(a)
        return float(d.max())

    def to_dict(self):
        return {"log_t_norms": [float(v) for v in self.log_t_norms],
                "extension": self.extension, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d):
        return cls(d["log_t_norms"], d.get("extension", "error"), d.get("provenance", "user"))


# Delta ---------------------------------------------------------------------------

def delta(profile, r, cfg=DEFAULT, one_minus_r=None):
    """(log Delta(r), tail) with Delta(r) = sum_n r^n |T^n|.

    Under "loglinear" the tail is summed into the value and reported as 0;
    under "error" the returned tail is an upper bound for the omitted terms
    using the largest late log-ratio as growth cap.  ``one_minus_r`` may be
    passed when 1 - r is known more accurately than r."""
    if one_minus_r is not None:
        if not 0.0 < one_minus_r <= 1.0:
            raise DomainError("r must lie in [0, 1)")
        lr = math.log1p(-one_minus_r) if one_minus_r < 1.0 else -math.inf
    else:
        if not 0.0 <= r < 1.0:
            raise DomainError("r must lie in [0, 1)")
        lr = math.log(r) if r > 0 else -math.inf
    a = profile.log_t_norms
    if lr == -math.inf:
        return float(a[0]), 0.0
    n = np.arange(a.size)
    part = float(np.logaddexp.reduce(n * lr + a))
    slope = profile.tail_slope()
    lq = lr + slope
    if lq >= 0:
        if profile.extension == "loglinear":
            raise ProfileTooShort(f"profile extension diverges at log r={lr}")
        tail_log = math.inf
    else:
        # sum_{k>=1} r^{N+k} |T^N| e^{k slope}
        tail_log = profile.N_g * lr + a[-1] + lq - math.log(-math.expm1(lq))
    if profile.extension == "loglinear":
        return float(np.logaddexp(part, tail_log)), 0.0
    if tail_log - part > math.log(cfg.tail_tol):
        raise ProfileTooShort(f"profile too short for this r: tail/value = {math.exp(min(tail_log - part, 700)):.3e}")
    return part, math.exp(tail_log)


def _log_delta_fn(profile_or_fn, cfg):
    """log Delta as a function of (t, 1 - t)."""
    if isinstance(profile_or_fn, GrowthProfile):
        return lambda t, omt: delta(profile_or_fn, t, cfg, one_minus_r=omt)[0]
    return lambda t, omt: math.log(profile_or_fn(t))


# Matsaev-Mogulski integral -------------------------------------------------------------

@dataclass
class MMIntegral:
    value: float
    abserr: float
    divergence_class: str
    witness: dict = field(default_factory=dict)


def _mm_value(log_delta, r_up, cfg, one_minus_r_up=None):
    """int_0^{r_up} sqrt(Delta(t)/(1-t)) dt.  The piece near 0 is integrated
    in t (rescaled to [0,1] so tiny r_up keep relative accuracy); the piece
    near 1 with t = 1 - u^2, which turns the integrand into 2 sqrt(Delta),
    split into decades of u."""
    if r_up <= 0.0:
        return 0.0, 0.0
    kw = dict(epsabs=cfg.quad_abs, epsrel=cfg.quad_rel, limit=200)
    split = min(r_up, 0.5)

    def f_t(s):
        t = split * s
        return math.exp(0.5 * (log_delta(t, 1.0 - t) - math.log1p(-t)))

    v1, e1 = integrate.quad(f_t, 0.0, 1.0, **kw)
    v1, e1 = v1 * split, e1 * split
    if r_up <= 0.5:
        return v1, e1

    def f_u(u):
        u2 = u * u
        return 2.0 * math.exp(0.5 * log_delta(1.0 - u2, u2))

    omr = (1.0 - r_up) if one_minus_r_up is None else one_minus_r_up
    u_lo, u_hi = math.sqrt(omr), math.sqrt(0.5)
    edges = [u_hi]
    while edges[-1] / 10.0 > u_lo:
        edges.append(edges[-1] / 10.0)
    edges.append(u_lo)
    v2 = e2 = 0.0
    for b, a in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f_u, a, b, **kw)
        v2 += v
        e2 += e
    return v1 + v2, e1 + e2


def mm_dichotomy(profile_or_fn, cfg=DEFAULT, u_min=1e-7):
    """Convergence of int^1 sqrt(Delta/(1-t)) dt from the log-log slope of the
    u-integrand 2 sqrt(Delta(1-u^2)) over the last available decade of u."""
    log_delta = _log_delta_fn(profile_or_fn, cfg)
    u_floor = None
    for e in range(1, 9):
        u = 10.0 ** (-e)
        if u < u_min * 0.999:
            break
        try:
            log_delta(1.0 - u * u, u * u)
            u_floor = u
        except ProfileTooShort:
            break
    if u_floor is None or u_floor > 1e-2:
        return _tails.TailVerdict(_tails.UNDECIDED, "profile-too-short")
    u = np.geomspace(10 * u_floor, u_floor, 48)
    log_i = np.array([math.log(2.0) + 0.5 * log_delta(1.0 - x * x, x * x) for x in u])
    return _tails.integral_verdict(u, log_i, cfg)


def mm_integral(profile_or_fn, r_up, cfg=DEFAULT):
    """Value of the integral on [0, r_up] plus the convergence class of the
    integral on [0, 1)."""
    if r_up >= 1.0:
        raise DomainError("r_up must be < 1")
    v, e = _mm_value(_log_delta_fn(profile_or_fn, cfg), max(r_up, 0.0), cfg)
    tv = mm_dichotomy(profile_or_fn, cfg)
    return MMIntegral(v, e, tv.verdict, tv.to_dict())


# C(eps), L_eps -------------------------------------------------------------------

def c_eps(eps):
    """log C(eps), C(eps) = 54/pi eps^-3 (1+eps)(1+2eps/3)^2 (1 + 44/5 e^{(26 pi + 3/2)(2 + 1/eps)})."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    expo = (26.0 * math.pi + 1.5) * (2.0 + 1.0 / eps)
    return (math.log(54.0 / math.pi) - 3.0 * math.log(eps) + math.log1p(eps)
            + 2.0 * math.log1p(2.0 * eps / 3.0) + float(np.logaddexp(0.0, math.log(44.0 / 5.0) + expo)))


def l_eps(profile_or_fn, eps, r, cfg=DEFAULT, log_c=None):
    """log L_eps(r), L_eps(r) = (C(eps)+1)/(1-r) [int_0^{r^{1/(1+eps)}} sqrt(Delta/(1-t)) dt]^2."""
    if not 0.0 < r < 1.0:
        raise DomainError("r must lie in (0, 1)")
    lc = c_eps(eps) if log_c is None else log_c
    e = math.log(r) / (1.0 + eps)
    v, _ = _mm_value(_log_delta_fn(profile_or_fn, cfg), math.exp(e), cfg, -math.expm1(e))
    if v <= 0:
        return -math.inf
    return float(np.logaddexp(lc, 0.0)) - math.log1p(-r) + 2.0 * math.log(v)


# tail synthesis ------------------------------------------------------------------

@dataclass
class TailWeightResult:
    n: np.ndarray
    log_sigma: np.ndarray
    r_opt: np.ndarray
    log_r_opt: np.ndarray
    boundary: np.ndarray
    plain: Weight
    checked: Weight
    report_plain: object = None
    report_checked: object = None

    def rows(self):
        return [(int(k), float(s), float(lr)) for k, s, lr in zip(self.n, self.log_sigma, self.log_r_opt)]


def _softplus(x):
    return float(np.logaddexp(0.0, x))


def _minimize_one(n, obj, x_grid, cfg):
    vals = np.array([obj(x) for x in x_grid])
    i = int(np.argmin(vals))
    if i == 0 or i == x_grid.size - 1:
        # infimum approached at the boundary of (0,1): report the limit
        return float(vals[i]), float(x_grid[i]), True
    res = optimize.minimize_scalar(obj, bracket=(x_grid[i - 1], x_grid[i], x_grid[i + 1]),
                                   method="golden", tol=cfg.golden_tol)
    x = float(res.x)
    f = float(res.fun)
    if f > vals[i]:
        x, f = float(x_grid[i]), float(vals[i])
    return f, x, False


def tail_weight(profile_or_fn, eps, n_max, cfg=DEFAULT, threads=1, classify_output=True):
    """log sigma(n) = inf_{0<r<1} [n log(1/r) + L_eps(r)] for n = 0..n_max,
    minimized over x = logit(r) (scan of cfg.scan_points then golden section).

    Returns the plain Z- weight sigma_tail(-n) = sigma(n) and the checked
    variant (n+1)^2 sigma(n), n >= 1."""
    if eps <= 0 or n_max < 1:
        raise DomainError("need eps > 0 and n_max >= 1")
    lc = c_eps(eps)
    log_delta = _log_delta_fn(profile_or_fn, cfg)
    lc1 = float(np.logaddexp(lc, 0.0))
    cache = {}

    def log_L(x):
        if x not in cache:
            lr = -_softplus(-x)               # log r
            log1m = -_softplus(x)             # log (1 - r)
            e = lr / (1.0 + eps)
            v, _ = _mm_value(log_delta, math.exp(e), cfg, -math.expm1(e))
            cache[x] = lc1 - log1m + 2.0 * math.log(v) if v > 0 else -math.inf
        return cache[x]

    def make_obj(n):
        def obj(x):
            ll = log_L(x)
            big = math.exp(ll) if ll < 700 else math.inf
            return n * _softplus(-x) + big
        return obj

    x_grid = np.linspace(-(lc + 60.0), 25.0, cfg.scan_points)

    def solve(n):
        if n == 0:
            return 0.0, -math.inf, True
        return _minimize_one(n, make_obj(n), x_grid, cfg)

    ns = list(range(n_max + 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(solve, ns))
    else:
        out = [solve(n) for n in ns]
    log_sigma = np.array([o[0] for o in out])
    x_opt = np.array([o[1] for o in out])
    boundary = np.array([o[2] for o in out])
    with np.errstate(over="ignore"):
        log_r = -np.logaddexp(0.0, -x_opt)
    sig = Weight("Z+", 0, log_sigma)
    plain = transform(sig, "tail", squared=False)
    checked = transform(sig, "tail", squared=True)
    res = TailWeightResult(np.arange(n_max + 1), log_sigma, np.exp(log_r), log_r, boundary, plain, checked)
    if classify_output and len(plain) >= cfg.min_window:
        res.report_plain = classify(plain, cfg)
        res.report_checked = classify(checked, cfg)
    return res


# summability ---------------------------------------------------------------------

@dataclass
class SummabilityResult:
    verdict: str
    partial_sums: list
    log_terms: np.ndarray
    witness: dict


def summability_62(log_L_norms, log_U_norms, cfg=DEFAULT):
    """sum_{p>=1} |L_{-p}| |U^p pi(1)| with both sequences given as logs,
    entry k standing for p = k+1."""
    a = np.asarray(log_L_norms, dtype=float)
    b = np.asarray(log_U_norms, dtype=float)
    if a.shape != b.shape:
        raise DomainError("sequences must have the same length")
    terms = a + b
    p = np.arange(1, terms.size + 1)
    lps = _tails.log_partial_sums(terms)
    tv = _tails.series_verdict(p, terms, cfg)
    idx = np.unique(np.geomspace(1, terms.size, num=min(terms.size, 40)).astype(int) - 1)
    partial = [(int(p[i]), float(lps[i])) for i in idx]
    return SummabilityResult(tv.verdict, partial, terms, tv.to_dict())


# hypothesis checks ---------------------------------------------------------------

def _windowed_limsup(x):
    """Max over the last half of the window and the trend against the
    preceding quarter."""
    h = x.size // 2
    late, mid = x[h:], x[h // 2:h] if h >= 2 else x[:h]
    return float(late.max()), float(mid.max()) if mid.size else float("nan")


def _windowed_liminf(x):
    h = x.size // 2
    late, mid = x[h:], x[h // 2:h] if h >= 2 else x[:h]
    return float(late.min()), float(mid.min()) if mid.size else float("nan")


def _growth_exponent(n, log_t):
    """Fit log log|T^n| ~ alpha log n over the last decade (alpha = 0 for
    bounded profiles)."""
    sel = (n >= n[-1] / 10) & (n >= 2)
    y = log_t[sel]
    if y.size < 4 or np.all(y <= 1e-12) or np.any(y <= 0):
        return 0.0
    A = np.vstack([np.ones(y.size), np.log(n[sel])]).T
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    return float(coef[1])


def _to_infinity(x):
    """Verdict on liminf x_n = +inf from a windowed sequence: the late minimum
    must exceed the earlier minimum by a clear margin and x must be
    eventually nondecreasing."""
    late, mid = _windowed_liminf(x)
    tail = x[x.size // 2:]
    if late > mid * 1.05 + 1e-12 and np.all(np.diff(tail) >= -1e-12 * (1 + np.abs(tail[1:]))):
        return "pass", late, mid
    if late <= mid:
        return "fail", late, mid
    return "undecided", late, mid


def hypothesis_report(profile, tail, cfg=DEFAULT, c_log=1.0):
    a = profile.log_t_norms
    n_tail = len(tail)
    n_max = min(profile.N_g, n_tail)
    if n_max < 8:
        raise DomainError("profile and tail overlap too little")
    n = np.arange(1, n_max + 1)
    log_t = a[1:n_max + 1]
    log_s = tail.log_at(-n)
    report = {"thresholds": {"factorization_ratio": THRESHOLD_FACTORIZATION, "annihilator_ratio": THRESHOLD_ANNIHILATOR,
                             "nqa_exponent": NQA_EXPONENT},
              "threshold_values": {"factorization_ratio": 1 / 64, "annihilator_ratio": 1 / 200, "nqa_exponent": 3 / 2},
              "window": [1, int(n_max)], "verdicts": {}}
    V = report["verdicts"]

    pos = log_s > 0
    ratio = np.where(pos, log_t / np.where(pos, log_s, 1.0), np.inf)
    late, mid = _windowed_limsup(ratio)
    trend = "decreasing" if late < mid else "nondecreasing"
    for name, thr in (("growth_ratio_lt_1", 1.0), ("factorization_ratio_ratio_lt_1/64", 1 / 64),
                      ("annihilator_ratio_ratio_lt_1/200", 1 / 200)):
        if late < thr and (trend == "decreasing" or late < 0.9 * thr):
            v = "pass"
        elif late >= thr and trend == "nondecreasing":
            v = "fail"
        else:
            v = "undecided"
        V[name] = {"verdict": v, "windowed_limsup": late, "earlier_sup": mid, "trend": trend,
                   "threshold": thr}

    alpha = _growth_exponent(n, log_t)
    report["fitted_alpha"] = alpha
    if alpha < 0.5 - 0.05:
        x = log_s / np.sqrt(n)
        case = "alpha<1/2: liminf log sigma(-n)/sqrt(n) = inf"
    elif alpha <= 0.5 + 0.05:
        x = log_s / (np.sqrt(n) * np.log(n + 1.0))
        case = "alpha=1/2: liminf log sigma(-n)/(sqrt(n) log(n+1)) = inf"
    elif alpha < 1 - 0.05:
        x = log_s / n ** alpha
        case = "1/2<alpha<1: liminf log sigma(-n)/n^alpha = inf"
    else:
        x = None
        case = "alpha>=1: log-power case"
    if x is not None:
        v, lo_late, lo_mid = _to_infinity(x)
        V["alpha_case"] = {"verdict": v, "case": case, "late_min": lo_late, "earlier_min": lo_mid}
    else:
        lhs = log_s * np.log(n + 1.0) ** c_log / n
        rhs = log_t * np.log(n + 1.0) ** c_log / n
        li, _ = _windowed_liminf(lhs)
        ls, _ = _windowed_limsup(rhs)
        V["alpha_case"] = {"verdict": "pass" if li > ls else "fail", "case": case, "c": c_log,
                           "liminf_tail": li, "limsup_profile": ls}
    return report


# Cauchy-type coefficient bounds ---------------------------------------------------

def fit_exp_type_bound(radii, log_modulus):
    """Smallest (log a, b) with log M(r) <= log a + b/(1-r) on the grid, b
    taken from the least-squares slope against 1/(1-r) (clipped at 0)."""
    radii = np.asarray(radii, dtype=float)
    y = np.asarray(log_modulus, dtype=float)
    x = 1.0 / (1.0 - radii)
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    b = max(float(coef[1]), 0.0)
    log_a = float(np.max(y - b * x))
    return log_a, b


def cauchy_growth_bound(log_a, b, n, index=None):
    """log of a r^-index e^{b/(1-r)} at r = 1 - 1/sqrt n, i.e.
    a (1 - 1/sqrt n)^{-index} e^{b sqrt n}: a bound for the coefficient of
    order ``index`` (default n) of g with log|g(lam)| <= log a + b/(1-|lam|)."""
    n = np.asarray(n, dtype=float)
    k = n if index is None else np.asarray(index, dtype=float)
    return log_a - k * np.log1p(-1.0 / np.sqrt(n)) + b * np.sqrt(n)
