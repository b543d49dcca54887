"""Annulus factorization f = zeta^-k e^h g, the radial-moment (Dynkin)
extension of tail functions into the disc, Cauchy transforms over the disc,
the norm trend of backward bilateral shift powers, and the annihilator
identity for pairs (f, l).
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate, optimize
from scipy.linalg import null_space, subspace_angles

from .config import DEFAULT
from .errors import DomainError, NumericalError, PreconditionFailed
from .series import CoeffVec, Hyperfunction, as_laurent, laurent_eval, convolve, circle_coeffs, pair
from .weights import Weight, envelope, legendre, classify, ZP, ZM
from .operators import SpaceModel, func_calc, log_r_n_norm


# radial profiles -----------------------------------------------------------------

def _default_edges(levels=24, levels_0=20):
    """Panel edges on [0, 1], geometric toward both ends (power-type behaviour
    of phi at 0, decay or blow-up at 1)."""
    return np.unique(np.concatenate([[0.0], 0.5 ** np.arange(2, levels_0 + 2),
                                     1.0 - 0.5 ** np.arange(1, levels + 1), [1.0]]))


def _gauss_panels(edges, order=32):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = np.asarray(edges[:-1]), np.asarray(edges[1:])
    h = (b - a) / 2
    nodes = (a[:, None] + h[:, None] * (x[None, :] + 1)).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(eq=False)
class RadialProfile:
    """phi^2 on [0, 1] as a vectorized callable, with the edges where it may
    fail to be smooth (quadrature breakpoints) and a JSON description."""
    phi2: object
    edges: np.ndarray = None
    params: dict = None
    _tau2: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        e = _default_edges() if self.edges is None else np.unique(np.concatenate([[0.0, 1.0], self.edges]))
        self.edges = e
        nodes, _ = _gauss_panels(e, 8)
        v = np.asarray(self.phi2(nodes), dtype=float)
        # values may underflow to 0 next to t = 1 (exp-type decay)
        if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(~(v[nodes <= 0.99] > 0)):
            raise DomainError("phi must be positive on the quadrature nodes")

    @classmethod
    def constant(cls, c=1.0):
        return cls(lambda t: np.full_like(np.asarray(t, dtype=float), c * c), None,
                   {"kind": "constant", "c": c})

    @classmethod
    def power(cls, a):
        """phi(t) = t^a."""
        return cls(lambda t: np.asarray(t, dtype=float) ** (2 * a) + 0.0, None, {"kind": "power", "a": a})

    @classmethod
    def steps(cls, edges, values):
        """phi^2 piecewise constant: ``values[j]`` on [edges[j], edges[j+1])."""
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if edges.size != values.size + 1 or edges[0] != 0 or edges[-1] != 1:
            raise DomainError("step profile needs edges 0 = e_0 < ... < e_J = 1 and J values")

        def phi2(t):
            t = np.asarray(t, dtype=float)
            j = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, values.size - 1)
            return values[j]
        return cls(phi2, edges, {"kind": "steps", "edges": edges.tolist(), "values": values.tolist()})

    @classmethod
    def exp_singular(cls):
        """phi(t) = exp(-1/(1-t))."""
        def phi2(t):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(t < 1, np.exp(-2.0 / np.maximum(1 - t, 1e-300)), 0.0)
        return cls(phi2, None, {"kind": "exp_singular"})

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == "constant":
            return cls.constant(float(d.get("c", 1.0)))
        if kind == "power":
            return cls.power(float(d["a"]))
        if kind == "steps":
            return cls.steps(d["edges"], d["values"])
        if kind == "exp_singular":
            return cls.exp_singular()
        raise DomainError(f"unknown radial profile kind {kind!r}")

    def to_dict(self):
        return dict(self.params) if self.params else {"kind": "custom"}

    def _quad(self, fn, a, b, cfg):
        pts = [e for e in self.edges if a < e < b]
        v, _ = integrate.quad(fn, a, b, points=pts or None, limit=400,
                              epsabs=0.0, epsrel=1e-12)
        return v

    def tau2(self, n, cfg=DEFAULT):
        """tau_phi(n)^2 = 2 int_0^1 phi^2(t) t^{2n+1} dt."""
        n = int(n)
        if n < 0:
            raise DomainError("n must be >= 0")
        if n not in self._tau2:
            self._tau2[n] = 2.0 * self._quad(lambda t: float(self.phi2(t)) * t ** (2 * n + 1), 0.0, 1.0, cfg)
        return self._tau2[n]

    def scaled_moment(self, n, s, cfg=DEFAULT):
        """m_n(s) / s^{2n+2} = 2 int_0^1 phi^2(s u) u^{2n+1} du (stable for small s)."""
        if s <= 0:
            return float(self.phi2(0.0)) / (n + 1)
        pts = [e / s for e in self.edges if 0 < e < s]
        v, _ = integrate.quad(lambda u: float(self.phi2(s * u)) * u ** (2 * n + 1), 0.0, 1.0,
                              points=pts or None, limit=400, epsabs=0.0, epsrel=1e-12)
        return 2.0 * v


def tau_phi(phi, n, cfg=DEFAULT):
    return math.sqrt(phi.tau2(n, cfg))


@dataclass
class EquivalenceReport:
    ratio_inf: float
    ratio_sup: float
    spread: float
    n_fit: int
    panels: int

    def to_dict(self):
        return {"ratio_inf": self.ratio_inf, "ratio_sup": self.ratio_sup, "spread": self.spread,
                "n_fit": self.n_fit, "panels": self.panels}


def fit_phi(target, cfg=DEFAULT, edges=None):
    """phi^2 as a nonnegative step function whose moments tau_phi(n)^2 fit
    sigma*(n)^2 (relative least squares, solved by NNLS) on the target window."""
    if target.support != ZP:
        raise DomainError("target must be a Z+ weight")
    ls = np.asarray(target.log_values)
    if ls.size >= 3 and np.min(np.diff(ls, 2)) < -cfg.concavity_tol * (1 + np.max(np.abs(ls))):
        raise PreconditionFailed("target weight is not log-convex on its window")
    e = np.asarray(_default_edges(30, 1) if edges is None else edges, dtype=float)
    n = np.arange(ls.size)
    a, b = e[:-1], e[1:]
    # panel moments 2 int_a^b t^{2n+1} dt = (b^{2n+2} - a^{2n+2})/(n+1)
    A = (b[None, :] ** (2 * n[:, None] + 2) - a[None, :] ** (2 * n[:, None] + 2)) / (n[:, None] + 1)
    A = A * np.exp(-2 * ls)[:, None]
    c, _ = optimize.nnls(A, np.ones(n.size), maxiter=50 * A.shape[1])
    c = np.maximum(c, 1e-12 * max(c.max(), 1e-300))
    phi = RadialProfile.steps(e, c)
    ratio = np.sqrt(A @ c)  # tau_phi(n)/sigma*(n)
    rep = EquivalenceReport(float(ratio.min()), float(ratio.max()), float(ratio.max() / ratio.min()),
                            int(n.size), int(c.size))
    if rep.spread > cfg.equiv_max:
        raise NumericalError(f"no equivalent profile found at this resolution (spread {rep.spread:.3e})")
    return phi, rep


# Dynkin extension ---------------------------------------------------------------------

def _tail_coeffs(h):
    """c(n) = h(-n-1) for n = 0..n_max."""
    h = as_laurent(h)
    if h.is_empty:
        return np.zeros(0, dtype=complex)
    if h.n_hi > -1 and np.any(h.window(0, h.n_hi) != 0):
        raise DomainError("h must live on negative indices")
    return h.window(h.n_lo, -1)[::-1]


def dbar_density(h, phi, zeta, cfg=DEFAULT):
    """L_phi(h)(zeta) = phi^2(|zeta|) sum_n h(-n-1) conj(zeta)^n / tau_phi(n)^2."""
    c = _tail_coeffs(h)
    zeta = np.asarray(zeta, dtype=complex)
    if c.size == 0:
        return np.zeros_like(zeta)
    d = c / np.array([phi.tau2(n, cfg) for n in range(c.size)])
    cz = np.conj(zeta)
    acc = np.zeros_like(zeta)
    for v in d[::-1]:
        acc = acc * cz + v
    return phi.phi2(np.abs(zeta)) * acc


def dynkin_extend(h, phi, lam, cfg=DEFAULT):
    """(D_phi(h)(lam), L_phi(h)(lam)) with
    D_phi(h)(lam) = sum_n h(-n-1) lam^{-n-1} m_n(|lam|) / tau_phi(n)^2,
    m_n(s) = 2 int_0^s phi^2(t) t^{2n+1} dt."""
    lam = complex(lam)
    if abs(lam) >= 1:
        raise DomainError("|lambda| must be < 1")
    c = _tail_coeffs(h)
    if c.size == 0:
        return 0j, 0j
    s = abs(lam)
    tau2 = np.array([phi.tau2(n, cfg) for n in range(c.size)])
    if np.any(~(tau2 > 0)):
        raise DomainError("tau_phi must be positive on the window")
    # lam^{-n-1} m_n(s) = conj(lam)^{n+1} m_n(s)/s^{2n+2}
    sm = np.array([phi.scaled_moment(n, s, cfg) for n in range(c.size)])
    D = complex(np.sum(c * np.conj(lam) ** (np.arange(c.size) + 1) * sm / tau2))
    return D, complex(dbar_density(h, phi, lam, cfg))


# Cauchy transform ----------------------------------------------------------------------

def _angular_modes(F, t, K):
    """Fourier modes F_k(t), k in [-K/2, K/2), of F(t e^{i theta}) from K samples."""
    th = 2 * np.pi * np.arange(K) / K
    vals = F(t[:, None] * np.exp(1j * th)[None, :])
    return np.fft.fft(vals, axis=1) / K


def _kernel_sum(t, w, modes, lam, inner):
    """2 sum_i w_i t_i (angular integral of F_k e^{ik theta}/(lam - t e^{i theta}))/(2 pi):
    radii inside |lam| carry modes k <= 0 as t^-k lam^{k-1}, radii outside carry
    modes k >= 1 as -lam^{k-1} t^-k."""
    K = modes.shape[1]
    half = K // 2
    total = 0j
    if np.any(inner):
        ti = t[inner]
        q = ti / lam
        acc = np.zeros(ti.size, dtype=complex)
        for j in range(half - 1, -1, -1):
            acc = acc * q + modes[inner, (-j) % K]
        total += np.sum(w[inner] * ti * acc) / lam
    outer = ~inner
    if np.any(outer):
        to = t[outer]
        q = lam / to
        acc = np.zeros(to.size, dtype=complex)
        for k in range(half - 1, 0, -1):
            acc = acc * q + modes[outer, k]
        total -= np.sum(w[outer] * acc)
    return 2.0 * total


def cauchy_transform(F, lam, side=None, edges=None, K=512, order=32, cfg=DEFAULT):
    """(1/pi) int_D F(zeta)/(lam - zeta) dm(zeta) by polar quadrature.

    F is a vectorized callable on complex points and ``lam`` a point or an
    array of points.  On each radius the angular Fourier modes F_k(t) come
    from K samples; the angular integral against 1/(lam - t e^{i theta}) is
    then exact, which removes the singularity.  The radial panel holding |lam|
    is split there, so no node sits on the singular circle.  Shared panels
    are sampled once for all points."""
    lams = np.atleast_1d(np.asarray(lam, dtype=complex))
    e = _default_edges() if edges is None else np.unique(np.concatenate([_default_edges(), edges]))
    K = int(K)
    t0, w0 = _gauss_panels(e, order)
    m0 = _angular_modes(F, t0, K)
    panel = np.repeat(np.arange(e.size - 1), order)
    out = np.zeros(lams.size, dtype=complex)
    for i, lm in enumerate(lams):
        s = abs(lm)
        sd = side if side is not None else ("plus" if s < 1 else "minus")
        if sd == "plus" and s >= 1 or sd == "minus" and s <= 1:
            raise DomainError(f"lambda on the wrong side for {sd}")
        if sd == "minus" or s == 0 or s in e:
            t, w, modes = t0, w0, m0
        else:
            j = int(np.searchsorted(e, s) - 1)
            keep = panel != j
            ts, ws = _gauss_panels(np.array([e[j], s, e[j + 1]]), order)
            t = np.concatenate([t0[keep], ts])
            w = np.concatenate([w0[keep], ws])
            modes = np.concatenate([m0[keep], _angular_modes(F, ts, K)])
        inner = t < s if sd == "plus" else np.ones(t.size, dtype=bool)
        out[i] = _kernel_sum(t, w, modes, lm, inner)
    return complex(out[0]) if np.ndim(lam) == 0 else out


# d-bar estimate ---------------------------------------------------------------------

@dataclass
class DbarReport:
    k_delta: float
    delta: float
    per_radius: list
    hypotheses_certified: str
    h_norm: float

    def to_dict(self):
        return {"k_delta": self.k_delta, "delta": self.delta, "per_radius": self.per_radius,
                "hypotheses_certified": self.hypotheses_certified, "h_norm": self.h_norm}


def dbar_bound_check(h, phi, sigma, delta, grid, cfg=DEFAULT):
    """Fitted k_delta = max over the grid of |L_phi(h)(lam)| L(|lam|)^delta / |h|,
    L the Legendre transform of the tail weight sigma and |h| its weighted l^2
    norm.  The max over each radius is reported in order of |lam| together
    with the classify verdict for eventual log-concavity of sigma(-n)/n^alpha."""
    if sigma.support != ZM:
        raise DomainError("sigma must be a Z- weight")
    if delta <= 0:
        raise DomainError("delta must be positive")
    c = _tail_coeffs(h)
    nz = np.nonzero(np.abs(c))[0]
    if nz.size == 0:
        return DbarReport(0.0, delta, [], "n/a", 0.0)
    idx = -(np.arange(c.size) + 1)
    h_norm = float(np.sqrt(np.sum(np.abs(c) ** 2 * np.exp(2 * sigma.log_at(idx)))))
    try:
        rep = classify(sigma, cfg)
        cert = rep.verdicts.get("log_concave_over_power", {}).get("verdict", "undecided")
    except Exception:
        cert = "undecided"
    rows = {}
    for lam in grid:
        lam = complex(lam)
        r = abs(lam)
        Ld = delta * legendre(sigma, r).log_value if r > 0 else 0.0
        v = abs(complex(dbar_density(h, phi, lam, cfg))) * math.exp(Ld) / h_norm
        key = round(r, 12)
        rows[key] = max(rows.get(key, 0.0), v)
    per = [[k, v] for k, v in sorted(rows.items())]
    return DbarReport(max(v for _, v in per), delta, per, cert, h_norm)


# annulus factorization ------------------------------------------------------------------

def exp_series(a, degree):
    """Coefficients 0..degree of exp(sum_j a_j w^j) via n e_n = sum_j j a_j e_{n-j}."""
    a = np.asarray(a, dtype=complex)
    e = np.zeros(degree + 1, dtype=complex)
    e[0] = np.exp(a[0]) if a.size else 1.0
    ja = np.arange(a.size) * a
    for n in range(1, degree + 1):
        m = min(n, a.size - 1)
        if m >= 1:
            e[n] = np.dot(ja[1:m + 1], e[n - 1::-1][:m]) / n
    return e


def _exp_degree(a, rho, tol=1e-18, d_max=2000):
    """Degree at which exp(a(w)) coefficients times rho^n drop below tol for a
    run of terms."""
    d = 32
    while d <= d_max:
        e = exp_series(a, d)
        mag = np.abs(e) * rho ** np.arange(d + 1)
        if np.all(mag[-8:] < tol * max(mag.max(), 1e-300)):
            return d, e
        d *= 2
    raise NumericalError("exponential series did not converge on the test radius")


@dataclass
class FactorizationResult:
    k: int
    h: CoeffVec
    g: CoeffVec
    residual: float
    winding: float
    K: int
    exp_h: CoeffVec = None
    operator_residual: float = None
    circles: list = field(default_factory=list)

    def to_dict(self):
        return {"k": self.k, "h": self.h.to_dict(), "g": self.g.to_dict(),
                "residual": self.residual, "winding": self.winding, "K": self.K,
                "operator_residual": self.operator_residual, "circles": self.circles}


def _samples(f, rho, K):
    z = rho * np.exp(2j * np.pi * np.arange(K) / K)
    return laurent_eval(as_laurent(f), z)


def annulus_factorize(f, r, K=1024, r0=None, cfg=DEFAULT):
    """f = zeta^-k e^h g on the circle |zeta| = r.

    The winding number w of f on the circle comes from summed phase
    increments (K doubled until adjacent jumps are below pi/4).  The
    continuous logarithm of zeta^-w f is split into h (indices < 0, so
    h(inf) = 0) and a (indices >= 0, constant term included); then
    k = max(-w, 0) and g = zeta^max(w, 0) e^a."""
    f = as_laurent(f)
    if f.is_empty or not np.any(f.coeffs):
        raise DomainError("f must be nonzero")
    if not 0 < r < 1:
        raise DomainError("need 0 < r < 1")
    r0 = r / 2 if r0 is None else r0
    if not 0 < r0 < r:
        raise DomainError("need 0 < r0 < r")
    K = int(K)
    while True:
        vals = _samples(f, r, K)
        if np.min(np.abs(vals)) <= cfg.zero_margin:
            raise DomainError("f vanishes (numerically) on the contour")
        jumps = np.angle(np.roll(vals, -1) / vals)
        if np.max(np.abs(jumps)) < np.pi / 4:
            break
        if 2 * K > cfg.k_max_samples:
            raise NumericalError("phase jumps stay above pi/4; increase K")
        K *= 2
    w_real = float(np.sum(jumps) / (2 * np.pi))
    w = int(round(w_real))
    if abs(w_real - w) > cfg.winding_snap:
        raise NumericalError(f"winding number {w_real} does not snap to an integer")
    th = 2 * np.pi * np.arange(K) / K
    arg = np.angle(vals[0]) + np.concatenate([[0.0], np.cumsum(jumps[:-1])]) - w * th
    if np.max(np.abs(np.diff(arg))) > np.pi:
        raise NumericalError("branch tracking jump exceeds pi; increase K")
    logs = np.log(np.abs(vals)) - w * math.log(r) + 1j * arg
    d = np.fft.fft(logs) / K
    # DFT entries at the rounding level of log f are noise; r^-n would amplify them
    thr = 1e-13 * max(1.0, np.max(np.abs(d)), abs(w * math.log(r)))
    big = np.abs(d) > thr
    ks = np.arange(K)
    signed = np.where(ks < K // 2, ks, ks - K)
    n_neg = min(int(max(-signed[big].min(), 0)) + 2 if big.any() else 1, K // 2 - 1)
    n_pos = min(int(max(signed[big].max(), 0)) + 2 if big.any() else 1, K // 2 - 1)
    ell = circle_coeffs(logs, r, -n_neg, n_pos, cfg, guard=big.any())
    band = np.arange(-n_neg, n_pos + 1)
    ell = CoeffVec(ell.n_lo, np.where(big[band % K], ell.coeffs, 0))
    h = ell.restrict(-n_neg, -1)
    a = ell.window(0, n_pos)
    k = max(-w, 0)
    rho_lo, rho_hi = (r0 + r) / 2, (1 + r) / 2
    _, ga = _exp_degree(a, rho_hi)
    g = CoeffVec(0, ga).shifted(max(w, 0))
    _, eh = _exp_degree(h.window(-n_neg, 0)[::-1], 1 / rho_lo)
    exp_h = CoeffVec(-(eh.size - 1), eh[::-1])
    res, circles = 0.0, []
    for rho in (rho_lo, r, rho_hi):
        z = rho * np.exp(2j * np.pi * np.arange(256) / 256)
        rec = z ** (-k) * laurent_eval(exp_h, z) * laurent_eval(g, z)
        err = float(np.max(np.abs(laurent_eval(f, z) - rec)))
        circles.append([rho, err])
        res = max(res, err)
    # operator form: f = e^h(biS) biS^-k g as a coefficient convolution on a
    # constant-weight hyper model
    target = g.shifted(-k)
    lo = min(f.n_lo, target.n_lo + exp_h.n_lo)
    hi = max(f.n_hi, target.n_hi)
    N = max(abs(lo), abs(hi))
    space = SpaceModel(Weight.constant("Z", -N, N), 2, N, "hyper")
    fc = func_calc(exp_h, space, Hyperfunction.from_laurent(target), cfg)
    got = fc.value.laurent()
    # coefficient errors weighted by r^n (the l^1 bound for the error on |zeta| = r)
    op_res = float(np.sum(np.abs(got.window(lo, hi) - f.window(lo, hi)) * r ** np.arange(lo, hi + 1.0)))
    return FactorizationResult(k, h.trim(), g.trim(), res, w_real, K, exp_h, op_res, circles)


def span_identity(fac, f, n_max=6, cfg=DEFAULT):
    """Largest principal angle between span{biS^-n f} and span{biS^{-n-k} g}
    (n <= n_max), each tested for inclusion in the other's span extended by
    the length of the exponential factor that links them."""
    f = as_laurent(f)
    g = fac.g
    _, em = _exp_degree(-fac.h.window(fac.h.n_lo, 0)[::-1] if not fac.h.is_empty else np.zeros(1),
                        1.0 / 0.5)
    ext_f = em.size
    ext_g = fac.exp_h.coeffs.size
    f_sh = [f.shifted(-n) for n in range(n_max + 1)]
    g_sh = [g.shifted(-n - fac.k) for n in range(n_max + 1)]
    f_ext = [f.shifted(-n) for n in range(n_max + ext_f + 1)]
    g_ext = [g.shifted(-n - fac.k) for n in range(n_max + ext_g + 1)]
    vecs = f_sh + g_sh + f_ext + g_ext
    lo = min(v.n_lo for v in vecs)
    hi = max(v.n_hi for v in vecs)

    def mat(vs):
        return np.array([v.window(lo, hi) for v in vs]).T
    a1 = subspace_angles(mat(f_sh), mat(g_ext))
    a2 = subspace_angles(mat(g_sh), mat(f_ext))
    return float(max(a1.max(), a2.max()))


# backward shift norm trend -------------------------------------------------------------------

@dataclass
class TrendRow:
    n: int
    ratio: float
    log_norm: float
    dominant: str
    at_edge: bool


def lemma82_trend(profile, tail, n_max, disc=None, n_min=1):
    """log |biS^-n| / log sigma(-n) on E (+) tail with
    |biS^-n| ~ max(|T^n|, |R_n|, |biS^-n on the tail|) for p = 2 models; the
    disc weight (default 1) enters |R_n|."""
    rows = []
    prof = profile.log_t_norms
    for n in range(max(n_min, 1), n_max + 1):
        log_s = float(tail.log_at(-n))
        if log_s <= 0:
            continue
        t = float(prof[n]) if n < prof.size else math.nan
        env = envelope(tail, "bar", n)
        cands = {"T": t, "R": log_r_n_norm(n, tail, disc), "tail": env.log_value}
        dom = max((k for k in cands if not math.isnan(cands[k])), key=lambda k: cands[k])
        rows.append(TrendRow(n, cands[dom] / log_s, cands[dom], dom, env.at_edge))
    return rows


def running_extremes(rows, start):
    """Running max and min of the ratio from index ``start`` onward."""
    r = np.array([x.ratio for x in rows if x.n >= start])
    return np.maximum.accumulate(r[::-1])[::-1], np.minimum.accumulate(r[::-1])[::-1]


# annihilator identity ---------------------------------------------------------------

def annihilation_rows(g, h, v, theta, n_test):
    """<biS^-n f, l> for n = 1..n_test with f = (g, h), l = (v, theta):
    <T^n g, v> + <theta, R_n g> + <theta, biS^-n h>, where
    <theta, R_n g> = (g theta)^(n-1) and <theta, biS^-n h> = <T^n theta, h>."""
    g, h, v, theta = (as_laurent(x) for x in (g, h, v, theta))
    gt = convolve(g, theta)
    out = []
    for n in range(1, n_test + 1):
        tg = g.restrict(n, max(g.n_hi, n)).shifted(-n)
        tt = theta.restrict(n, max(theta.n_hi, n)).shifted(-n)
        t1 = np.dot(tg.window(0, v.n_hi), v.window(0, v.n_hi)) if not v.is_empty and v.n_hi >= 0 else 0j
        out.append(complex(t1 + gt[n - 1] + pair(tt, h)))
    return np.array(out)


def _series_quotient(q, g, tol=1e-17, d_max=4000):
    """Taylor coefficients of q/g (g(0) != 0) up to the degree where they fall below tol."""
    q, g = np.asarray(q, dtype=complex), np.asarray(g, dtype=complex)
    out = []
    d = 0
    scale = 0.0
    while d < d_max:
        acc = (q[d] if d < q.size else 0) - sum(g[j] * out[d - j] for j in range(1, min(d, g.size - 1) + 1))
        out.append(acc / g[0])
        scale = max(scale, abs(out[-1]))
        if d >= q.size + g.size and max(abs(x) for x in out[-g.size:]) < tol * scale:
            break
        d += 1
    else:
        raise NumericalError("q/g series does not decay; g must be zero-free on the closed disc")
    return np.array(out)


def annihilating_pair(g, q, alpha=1.0):
    """A pair f = (g, h), l = (v, theta) with <biS^-n f, l> = 0 for every n >= 1.

    theta = q/g (deg q < deg g, g zero-free on the closed disc), so g theta = q;
    h = alpha zeta^{-G-1} g makes <theta, biS^-n h> = alpha (g theta)^(n+G) = 0;
    v solves the triangular system <T^n g, v> = -q(n-1), n = 1..G."""
    g = as_laurent(g)
    G = g.n_hi
    q = np.asarray(q, dtype=complex)
    if G < 1 or g.n_lo != 0:
        raise DomainError("g must be a polynomial of degree >= 1")
    if q.size > G:
        raise DomainError("need deg q < deg g")
    theta = CoeffVec(0, _series_quotient(q, g.coeffs))
    h = g.shifted(-G - 1).scale(alpha)
    A = np.array([[g[m + n] for m in range(G)] for n in range(1, G + 1)])
    rhs = -np.array([q[n - 1] if n - 1 < q.size else 0 for n in range(1, G + 1)])
    v = CoeffVec(0, np.linalg.solve(A, rhs))
    return Hyperfunction(g, h), (v, theta)


def annihilating_v(g, v_len):
    """theta = 0, h = 0: a nonzero v on [0, v_len - 1] with <T^n g, v> = 0, n >= 1."""
    g = as_laurent(g)
    deg = g.n_hi
    A = np.array([[g[m + n] for m in range(v_len)] for n in range(1, max(deg, 1) + 1)])
    Nsp = null_space(A)
    if Nsp.shape[1] == 0:
        raise NumericalError("no annihilating v of this length")
    return CoeffVec(0, Nsp[:, 0])


@dataclass
class AnnihilatorReport:
    max_residual: float
    annihilation: float
    rows: list

    def to_dict(self):
        return {"max_residual": self.max_residual, "annihilation": self.annihilation,
                "rows": self.rows}


def prop84_residual(f, l, phi, grid, n_test=None, cfg=DEFAULT, K=512):
    """Both sides of theta (g + D_phi h) = C+(theta L_phi h) - <g_., v> on the grid.

    <g_lam, v> = sum_n lam^n <T^{n+1} g, v>; the left side uses the series form
    of the Dynkin extension, the right side the polar-quadrature Cauchy
    transform of theta times the d-bar density."""
    g, h = f.plus, f.minus
    v, theta = (as_laurent(x) for x in l)
    if (g.is_empty or not np.any(g.coeffs)) and (h.is_empty or not np.any(h.coeffs)):
        raise DomainError("f must be nonzero")
    if n_test is None:
        n_test = max(g.n_hi, 0) + max(theta.n_hi, 0) + 2
    ann = annihilation_rows(g, h, v, theta, n_test)
    scale = max(1.0, g.max_abs(), h.max_abs()) * max(1.0, v.max_abs() if not v.is_empty else 0,
                                                     theta.max_abs() if not theta.is_empty else 0)
    ann_res = float(np.max(np.abs(ann)) / scale)
    if ann_res > 1e-10:
        raise PreconditionFailed(f"l does not annihilate biS^-n f (residual {ann_res:.3e})")
    deg = max(g.n_hi, 0)
    tg = [g.window(n + 1, max(deg, n + 1)) for n in range(deg)]
    vw = [sum(c * v[m] for m, c in enumerate(t)) for t in tg]  # <T^{n+1} g, v>
    # angular modes of theta L_phi(h) span [-len(h), deg theta]
    span = max(theta.n_hi, 0) + len(h) + 1
    K = max(K, 1 << int(math.ceil(math.log2(4 * span))))
    grid = np.asarray(grid, dtype=complex)
    if theta.is_empty or h.is_empty or not np.any(theta.coeffs):
        cp = np.zeros(grid.size, dtype=complex)
    else:
        cp = cauchy_transform(lambda z: laurent_eval(theta, z) * dbar_density(h, phi, z, cfg),
                              grid, "plus", edges=phi.edges, K=K, cfg=cfg)
    rows, worst = [], 0.0
    for lam, c in zip(grid, cp):
        lam = complex(lam)
        D, _ = dynkin_extend(h, phi, lam, cfg) if not h.is_empty else (0j, 0j)
        th = complex(laurent_eval(theta, lam)) if not theta.is_empty else 0j
        lhs = th * (complex(laurent_eval(g, lam)) + D)
        gv = sum(c_n * lam ** n for n, c_n in enumerate(vw))
        err = abs(lhs - (c - gv))
        worst = max(worst, err)
        rows.append([lam.real, lam.imag, err])
    return AnnihilatorReport(worst, ann_res, rows)
