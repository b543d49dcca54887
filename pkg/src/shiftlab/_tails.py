"""Convergence verdicts for series and improper integrals known only on a
finite window.

The terms are fitted as ``a(x) ~ c x^-beta`` over the last decade of the
window and the Bertrand exponent ``kappa = (beta - 1) log x`` is read off:
``sum 1/(x log^g x)`` has ``kappa -> g``, so the series converges iff
``kappa -> g > 1`` in the boundary case and ``kappa -> +-inf`` otherwise.
"""
from dataclasses import dataclass, asdict
import math

import numpy as np

from .config import DEFAULT

CONVERGENT = "convergent"
DIVERGENT = "divergent"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class TailVerdict:
    verdict: str
    method: str
    beta: float = float("nan")
    kappa: float = float("nan")
    fit_residual: float = float("nan")
    tail_estimate: float = float("nan")

    def to_dict(self):
        return {k: _jsonable(v) for k, v in asdict(self).items()}


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _tail_slice(x, frac=0.1, min_points=6):
    hi = x[-1]
    idx = np.nonzero(x >= hi * frac)[0]
    if idx.size < min_points:
        idx = np.arange(max(0, x.size - min_points), x.size)
    return idx


def series_verdict(x, log_a, cfg=DEFAULT):
    """Verdict on ``sum_x a(x)`` from log-terms sampled at increasing x > 0."""
    x = np.asarray(x, dtype=float)
    log_a = np.asarray(log_a, dtype=float)
    if x.size < 4:
        return TailVerdict(UNDECIDED, "too-few-terms")
    idx = _tail_slice(x)
    xt, lt = x[idx], log_a[idx]
    if np.all(np.isneginf(lt)):
        return TailVerdict(CONVERGENT, "terminating", tail_estimate=0.0)
    if np.any(~np.isfinite(lt)):
        return TailVerdict(UNDECIDED, "nonfinite-terms")

    # terms not tending to zero
    if lt[-1] >= lt[0] and lt[-1] > log_a[np.isfinite(log_a)].max() - 1.0:
        return TailVerdict(DIVERGENT, "terms-not-decaying")

    # ratio test for geometric-or-faster decay
    steps = np.diff(xt)
    if np.all(steps > 0):
        rate = np.diff(lt) / steps
        q = math.exp(rate.max()) if rate.size else 1.0
        if q <= 0.9 and np.all(np.diff(rate) <= 1e-9 * (1 + np.abs(rate[1:]))):
            tail = math.exp(lt[-1]) * q / (1 - q)
            return TailVerdict(CONVERGENT, "ratio-test", tail_estimate=tail)

    # power-law fit on a log-spaced subsample of the last decade
    lx = np.log(xt)
    if lx.size > 256:
        pick = np.unique(np.searchsorted(lx, np.linspace(lx[0], lx[-1], 256)).clip(0, lx.size - 1))
        lx, lt = lx[pick], lt[pick]
    A = np.vstack([np.ones_like(lx), -lx]).T
    coef, *_ = np.linalg.lstsq(A, lt, rcond=None)
    beta = float(coef[1])
    resid = float(np.sqrt(np.mean((A @ coef - lt) ** 2)))
    x_mid = math.exp(0.5 * (lx[0] + lx[-1]))
    kappa = (beta - 1.0) * math.log(x_mid)
    monotone = bool(np.all(np.diff(lt) <= 1e-12 * (1 + np.abs(lt[1:]))))
    if resid > cfg.fit_residual_max:
        return TailVerdict(UNDECIDED, "power-fit", beta, kappa, resid)
    if kappa >= cfg.kappa_convergent and monotone:
        tail = math.exp(log_a[-1]) * x[-1] / (beta - 1.0)
        return TailVerdict(CONVERGENT, "power-fit", beta, kappa, resid, tail)
    if kappa <= cfg.kappa_divergent:
        return TailVerdict(DIVERGENT, "power-fit", beta, kappa, resid)
    return TailVerdict(UNDECIDED, "power-fit", beta, kappa, resid)


def integral_verdict(u, log_integrand, cfg=DEFAULT):
    """Verdict on ``int_0 I(u) du`` near ``u -> 0+`` from samples at
    decreasing u.  Substituting ``x = 1/u`` turns it into a series verdict."""
    u = np.asarray(u, dtype=float)
    order = np.argsort(-u)
    x = 1.0 / u[order]
    log_a = np.asarray(log_integrand, dtype=float)[order] - 2.0 * np.log(x)
    return series_verdict(x, log_a, cfg)


def log_partial_sums(log_terms):
    return np.logaddexp.accumulate(np.asarray(log_terms, dtype=float))
