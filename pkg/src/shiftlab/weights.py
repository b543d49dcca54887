"""Positive weight sequences on Z, Z+ or Z-, kept in natural-log form.

Envelopes use one convention on every support:

    bar(m)   = sup_n sigma(n) / sigma(n+m)
    tilde(m) = sup_n sigma(n+m) / sigma(n)

with the sup over pairs (n, n+m) inside the stored window.  On a weighted
l^p space with this weight, ``bar(m)`` is the norm of the m-th power of the
shift that lowers indices and ``tilde(m)`` the norm of the m-th power of the
shift that raises them.
"""
from dataclasses import dataclass, field
import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import DEFAULT
from .errors import InsufficientSupport, DomainError, PreconditionFailed
from . import _tails

Z, ZP, ZM = "Z", "Z+", "Z-"
_ALIASES = {"Z": Z, "Z+": ZP, "Z_plus": ZP, "Zplus": ZP, "Z-": ZM, "Z_minus": ZM, "Zminus": ZM}

PASS, FAIL, UNDECIDED = "pass", "fail", "undecided"


def _support(s):
    try:
        return _ALIASES[s]
    except KeyError:
        raise DomainError(f"unknown support {s!r}") from None


@dataclass(frozen=True, eq=False)
class Weight:
    support: str
    n_lo: int
    log_values: np.ndarray
    extension: str = "error"

    def __post_init__(self):
        sup = _support(self.support)
        lv = np.array(self.log_values, dtype=float)
        if lv.ndim != 1 or lv.size == 0:
            raise InsufficientSupport("weight window must be nonempty")
        if not np.all(np.isfinite(lv)):
            raise DomainError("weight log-values must be finite")
        n_lo = int(self.n_lo)
        n_hi = n_lo + lv.size - 1
        if sup == ZP and n_lo != 0:
            raise DomainError("Z+ weight must start at n=0")
        if sup == ZM and n_hi != -1:
            raise DomainError("Z- weight must end at n=-1")
        if self.extension not in ("error", "loglinear"):
            raise DomainError(f"unknown extension rule {self.extension!r}")
        lv.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "n_lo", n_lo)
        object.__setattr__(self, "log_values", lv)

    # construction -------------------------------------------------------
    @classmethod
    def from_function(cls, support, n_lo, n_hi, log_fn, extension="error"):
        n = np.arange(n_lo, n_hi + 1)
        return cls(support, n_lo, np.asarray(log_fn(n), dtype=float) * np.ones(n.size), extension)

    @classmethod
    def constant(cls, support, n_lo, n_hi, log_c=0.0):
        return cls(support, n_lo, np.full(n_hi - n_lo + 1, float(log_c)))

    # window --------------------------------------------------------------
    @property
    def n_hi(self):
        return self.n_lo + self.log_values.size - 1

    @property
    def indices(self):
        return np.arange(self.n_lo, self.n_hi + 1)

    def __len__(self):
        return self.log_values.size

    def log_at(self, n):
        n = np.asarray(n)
        i = n - self.n_lo
        inside = (i >= 0) & (i < len(self))
        if np.all(inside):
            return self.log_values[i]
        if self.extension == "error" or len(self) < 2:
            raise InsufficientSupport(f"index outside weight window [{self.n_lo}, {self.n_hi}]")
        lv = self.log_values
        lo_slope, hi_slope = lv[1] - lv[0], lv[-1] - lv[-2]
        ic = np.clip(i, 0, len(self) - 1)
        out = lv[ic] + np.where(i < 0, i * lo_slope, 0.0) + np.where(i >= len(self), (i - len(self) + 1) * hi_slope, 0.0)
        return out

    def restrict(self, n_lo, n_hi):
        if n_lo < self.n_lo or n_hi > self.n_hi or n_hi < n_lo:
            raise InsufficientSupport("restriction outside window")
        sup = self.support
        if sup == ZP and n_lo != 0 or sup == ZM and n_hi != -1:
            sup = Z
        return Weight(sup, n_lo, self.log_values[n_lo - self.n_lo:n_hi - self.n_lo + 1], self.extension)

    # I/O -----------------------------------------------------------------
    def to_dict(self):
        return {"support": self.support, "n_lo": self.n_lo, "n_hi": self.n_hi,
                "log_values": [float(v) for v in self.log_values]}

    @classmethod
    def from_dict(cls, d):
        lv = d["log_values"]
        if "n_hi" in d and d["n_hi"] - d["n_lo"] + 1 != len(lv):
            raise DomainError("n_hi - n_lo + 1 does not match len(log_values)")
        return cls(d["support"], d["n_lo"], lv, d.get("extension", "error"))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["n", "log_sigma"])
            for n, v in zip(self.indices, self.log_values):
                wr.writerow([int(n), repr(float(v))])

    @classmethod
    def load(cls, path, support=None):
        """Read a JSON weight file, or a CSV with columns ``n`` and either
        ``sigma`` or ``log_sigma``."""
        path = Path(path)
        if path.suffix.lower() == ".csv":
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
            n = np.array([int(r["n"]) for r in rows])
            if "log_sigma" in rows[0]:
                lv = np.array([float(r["log_sigma"]) for r in rows])
            else:
                lv = np.log([float(r["sigma"]) for r in rows])
            order = np.argsort(n)
            n, lv = n[order], lv[order]
            if np.any(np.diff(n) != 1):
                raise DomainError(f"{path}: field 'n' is not a contiguous index range")
            if support is None:
                support = ZP if n[0] == 0 else ZM if n[-1] == -1 else Z
            return cls(support, int(n[0]), lv)
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# envelopes ------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    kind: str
    m: int
    log_value: float
    argmax: int
    at_edge: bool

    @property
    def value(self):
        return math.exp(self.log_value)


def _truncation_edges(w):
    """Which window ends are artificial (as opposed to the end of the support)."""
    return w.support in (Z, ZM), w.support in (Z, ZP)


def _ratio_logs(w, kind, m):
    lv = w.log_values
    if kind == "bar":
        return lv[:len(lv) - m] - lv[m:]
    if kind == "tilde":
        return lv[m:] - lv[:len(lv) - m]
    raise DomainError(f"unknown envelope kind {kind!r}")


def envelope(w, kind, m):
    """sup over the window of sigma(n)/sigma(n+m) (bar) or its reciprocal
    (tilde); smallest maximizing n is reported."""
    m = int(m)
    if m < 0:
        raise DomainError("envelope order must be nonnegative")
    if m >= len(w):
        raise InsufficientSupport(f"insufficient support: window of {len(w)} indices for m={m}")
    if m == 0:
        return Envelope(kind, 0, 0.0, w.n_lo, False)
    d = _ratio_logs(w, kind, m)
    i = int(np.argmax(d))
    best = d[i]
    ties = np.nonzero(d >= best - 1e-14 * max(1.0, abs(best)))[0]
    lo_cut, hi_cut = _truncation_edges(w)
    last = d.size - 1
    edge = (lo_cut & (ties == 0)) | (hi_cut & (ties == last))
    return Envelope(kind, m, float(best), w.n_lo + i, bool(np.all(edge)))


def envelope_profile(w, kind, ms):
    return [envelope(w, kind, m) for m in ms]


# Legendre-type sups ---------------------------------------------------------

@dataclass(frozen=True)
class SupResult:
    log_value: float
    argmax: int
    truncation_dominated: bool

    @property
    def value(self):
        return math.exp(self.log_value)


def _geometric_sup(log_terms, r):
    if not 0.0 < r < 1.0:
        raise DomainError("r must lie in (0, 1)")
    n = np.arange(log_terms.size)
    obj = n * math.log(r) + log_terms
    i = int(np.argmax(obj))
    decreasing = obj.size >= 2 and obj[-1] < obj[-2]
    return SupResult(float(obj[i]), i, bool(i == obj.size - 1 or not decreasing))


def legendre(w, r):
    """log of sup_{n>=0} r^n sigma(-n-1) for a Z- weight."""
    if w.support != ZM:
        raise DomainError("legendre transform needs a Z- weight")
    # sigma(-1), sigma(-2), ...
    return _geometric_sup(w.log_values[::-1], r)


def lambda_envelope(log_u, r):
    """log of sup_{n>=0} r^n (n+1)^2 u_n, with u given as log u_n (u_n >= 1)."""
    log_u = np.asarray(log_u, dtype=float)
    if np.any(log_u < -1e-12):
        raise PreconditionFailed("lambda_envelope needs u_n >= 1")
    n = np.arange(log_u.size)
    return _geometric_sup(log_u + 2.0 * np.log1p(n), r)


# transforms -----------------------------------------------------------------

def transform(w, op, s=None, other=None, squared=True):
    """Weight transforms in log-domain.

    op = "power"   : sigma^s
         "product" : sigma * other (common window, same support)
         "dual"    : sigma*(n) = 1/sigma(-n-1)
         "tail"    : Z+ weight sigma -> Z- weight n -> (n+1)^2 sigma(n) at -n
                     (or sigma(n) when ``squared`` is False), n >= 1
    """
    if op == "power":
        return Weight(w.support, w.n_lo, s * w.log_values, w.extension)
    if op == "product":
        if other.support != w.support:
            raise DomainError("support mismatch for product")
        lo, hi = max(w.n_lo, other.n_lo), min(w.n_hi, other.n_hi)
        if hi < lo:
            raise InsufficientSupport("product windows do not overlap")
        lv = w.log_at(np.arange(lo, hi + 1)) + other.log_at(np.arange(lo, hi + 1))
        return Weight(w.support, lo, lv)
    if op == "dual":
        sup = {Z: Z, ZP: ZM, ZM: ZP}[w.support]
        return Weight(sup, -w.n_hi - 1, -w.log_values[::-1], w.extension)
    if op in ("tail", "check_variant"):
        if w.support != ZP:
            raise DomainError("tail variant needs a Z+ weight")
        n = np.arange(1, w.n_hi + 1)
        lv = w.log_values[1:] + (2.0 * np.log1p(n) if squared else 0.0)
        return Weight(ZM, -w.n_hi, lv[::-1])
    raise DomainError(f"unknown transform {op!r}")


# classification -------------------------------------------------------------

@dataclass
class WeightClassReport:
    support: str
    ratio_inf: float
    ratio_sup: float
    envelope_root_trend: list
    log_concave_from: object
    nqa_partial_sums: list
    verdicts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "support": self.support,
            "ratio_inf": self.ratio_inf,
            "ratio_sup": self.ratio_sup,
            "envelope_root_trend": [list(t) for t in self.envelope_root_trend],
            "log_concave_from": self.log_concave_from,
            "nqa_partial_sums": [list(t) for t in self.nqa_partial_sums],
            "verdicts": self.verdicts,
        }


def _verdict(v, **witness):
    return {"verdict": v, "witness": {k: _clean(x) for k, x in witness.items()}}


def _clean(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def natural_sequence(w):
    """(n, log u_n) read toward the infinite end of the support:
    u_n = sigma(-n), n >= 1, for Z-; u_n = sigma(n), n >= 0, otherwise."""
    if w.support == ZM:
        return np.arange(1, len(w) + 1), w.log_values[::-1].copy()
    lo = max(w.n_lo, 0)
    if lo > w.n_hi:
        return np.arange(0), np.zeros(0)
    n = np.arange(lo, w.n_hi + 1)
    return n, w.log_at(n)


def eventually_from(n, diffs, tol, min_tail):
    """Least n0 with diffs[k] <= tol for every index at or after n0.
    Returns (verdict, n0)."""
    bad = np.nonzero(diffs > tol)[0]
    if bad.size == 0:
        return PASS, int(n[0])
    j = bad[-1] + 1
    if j >= diffs.size:
        tail = diffs[-min_tail:]
        return (FAIL if tail.size >= min_tail and np.all(tail > tol) else UNDECIDED), None
    if diffs.size - j < min_tail:
        return UNDECIDED, int(n[j])
    return PASS, int(n[j])


def _concave_check(n, s, cfg):
    if s.size < 3:
        return UNDECIDED, None
    d2 = s[2:] - 2 * s[1:-1] + s[:-2]
    tol = cfg.concavity_tol * (1 + np.abs(s[1:-1]))
    return eventually_from(n[:-2], d2 - tol, 0.0, max(3, cfg.min_window // 2))


def _nondecreasing_check(n, s, cfg):
    if s.size < 2:
        return UNDECIDED, None
    d = -(np.diff(s))
    tol = cfg.concavity_tol * (1 + np.abs(s[1:]))
    return eventually_from(n[:-1], d - tol, 0.0, max(3, cfg.min_window // 2))


def _ratio_verdict(w, cfg):
    d = np.diff(w.log_values)
    if d.size == 0:
        return UNDECIDED, 0.0, 0.0
    a = np.abs(d)
    if w.support == ZM:
        a = a[::-1]
    half = a.size // 2
    head, tail = a[:max(half, 1)], a[half:]
    if tail.max() <= head.max() * (1 + 1e-9) + 1e-12:
        v = PASS
    elif np.all(np.diff(tail) > 0) and tail[-1] >= 1.5 * tail[0] and tail[-1] > 1.0:
        v = FAIL
    else:
        v = UNDECIDED
    return v, float(np.exp(d.min())), float(np.exp(d.max()))


def _root_grid(w):
    mmax = len(w) // 2
    if mmax < 1:
        return []
    ms = np.unique(np.geomspace(1, mmax, num=min(24, mmax)).astype(int))
    return [int(m) for m in ms]


def _root_verdict(trend, cfg):
    if len(trend) < 2:
        return UNDECIDED
    lim = math.log1p(cfg.root_tol)
    m_last, b_last, t_last = trend[-1]
    worst = max(abs(math.log(b_last)), abs(math.log(t_last)))
    if worst <= lim:
        return PASS
    half = [t for t in trend if t[0] <= m_last // 2]
    if half:
        m_h, b_h, t_h = half[-1]
        worst_h = max(abs(math.log(b_h)), abs(math.log(t_h)))
        if worst >= 0.98 * worst_h:
            return FAIL
    return UNDECIDED


def _checkpoints(size):
    if size == 0:
        return []
    idx = np.unique(np.geomspace(1, size, num=min(size, 40)).astype(int) - 1)
    return idx


def classify(w, cfg=DEFAULT, a_values=None):
    if len(w) < cfg.min_window:
        raise InsufficientSupport(f"insufficient support: window {len(w)} < min_window {cfg.min_window}")
    a_values = cfg.monotone_a if a_values is None else tuple(a_values)
    verdicts = {}

    ratio_v, r_inf, r_sup = _ratio_verdict(w, cfg)
    verdicts["bounded_ratios"] = _verdict(ratio_v, ratio_inf=r_inf, ratio_sup=r_sup)

    trend = []
    for m in _root_grid(w):
        b, t = envelope(w, "bar", m), envelope(w, "tilde", m)
        trend.append((m, math.exp(b.log_value / m), math.exp(t.log_value / m)))
    root_v = _root_verdict(trend, cfg)
    verdicts["envelope_roots"] = _verdict(root_v, last=trend[-1] if trend else None, root_tol=cfg.root_tol)

    name = {Z: "class_S", ZP: "class_S+", ZM: "class_S-"}[w.support]
    if FAIL in (ratio_v, root_v):
        cls_v = FAIL
    elif ratio_v == root_v == PASS:
        cls_v = PASS
    else:
        cls_v = UNDECIDED
    verdicts[name] = _verdict(cls_v, bounded_ratios=ratio_v, envelope_roots=root_v)

    n, s = natural_sequence(w)
    lc_v, lc_from = _concave_check(n, s, cfg)
    verdicts["log_concave"] = _verdict(lc_v, start=lc_from)

    # shapes read toward infinity, n >= 1 (n >= 2 where log n appears as a factor)
    pos = n >= 1
    n1, s1 = n[pos], s[pos]
    alpha_hits = {}
    for alpha in cfg.log_concave_alpha:
        v, start = _concave_check(n1, s1 - alpha * np.log(n1), cfg)
        alpha_hits[str(alpha)] = {"verdict": v, "start": start}
    verdicts["log_concave_over_power"] = _verdict(_any_pass(alpha_hits), alpha=alpha_hits)

    mono = {}
    for a in a_values:
        v, start = _nondecreasing_check(n1, s1 / n1 ** a, cfg)
        mono[str(a)] = {"verdict": v, "start": start}
        verdicts[f"monotone_log_over_n^{a}"] = _verdict(v, start=start)

    n2 = n1[n1 >= 2]
    s2 = s1[n1 >= 2]
    a_hits = {}
    for A in cfg.log_power_A:
        v, start = _nondecreasing_check(n2, s2 / n2 * np.log(n2) ** A, cfg)
        a_hits[str(A)] = {"verdict": v, "start": start}
    verdicts["log_over_n_times_logpower"] = _verdict(_any_pass(a_hits), A=a_hits)

    # sum log u_n / n^{3/2} < inf (u_n >= 1 is required)
    nqa_sums = []
    if n1.size:
        terms = s1 / n1 ** 1.5
        ps = np.cumsum(terms)
        nqa_sums = [(int(n1[i]), float(ps[i])) for i in _checkpoints(ps.size)]
        if np.any(s1 < -1e-12):
            verdicts["nqa_3_2"] = _verdict(UNDECIDED, note="u_n < 1 somewhere in window")
        else:
            tv = _tails.series_verdict(n1, _safe_log(s1) - 1.5 * np.log(n1), cfg)
            v = {_tails.CONVERGENT: PASS, _tails.DIVERGENT: FAIL}.get(tv.verdict, UNDECIDED)
            verdicts["nqa_3_2"] = _verdict(v, partial_sum=float(ps[-1]), tail=tv.to_dict())

        # sum log u_n / n^2 = inf
        if np.any(s1 < -1e-12):
            verdicts["log_sum_over_n2_diverges"] = _verdict(UNDECIDED, note="u_n < 1 somewhere in window")
        else:
            tv = _tails.series_verdict(n1, _safe_log(s1) - 2.0 * np.log(n1), cfg)
            v = {_tails.DIVERGENT: PASS, _tails.CONVERGENT: FAIL}.get(tv.verdict, UNDECIDED)
            verdicts["log_sum_over_n2_diverges"] = _verdict(
                v, partial_sum=float(np.sum(s1 / n1 ** 2.0)), tail=tv.to_dict())

    return WeightClassReport(
        support=w.support,
        ratio_inf=r_inf,
        ratio_sup=r_sup,
        envelope_root_trend=trend,
        log_concave_from=lc_from,
        nqa_partial_sums=nqa_sums,
        verdicts=verdicts,
    )


def _safe_log(x):
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(x, 0.0))


def _any_pass(hits):
    vs = [h["verdict"] for h in hits.values()]
    if PASS in vs:
        return PASS
    if all(v == FAIL for v in vs):
        return FAIL
    return UNDECIDED
