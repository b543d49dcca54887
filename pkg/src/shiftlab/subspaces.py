"""Truncated models of z-invariant subspaces M of a disc space E = P_N.

Linear algebra is done in weighted coordinates y(n) = sigma(n) c(n), so the
Euclidean metric on y is the weighted l^2 metric on coefficients.  A
subspace is stored by its raw generating columns and an orthonormal frame.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import null_space

from .config import DEFAULT
from .errors import DomainError, NumericalError, PreconditionFailed
from .series import CoeffVec, laurent_eval
from .operators import SpaceModel, divide, shift, functional_norm, sup_delta_bound
from .growth import summability_62
from . import _tails


def _rank(A, cfg):
    if A.size == 0 or A.shape[1] == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > cfg.rank_tol * s[0])) if s[0] > 0 else 0


def _frame(A, cfg):
    """Orthonormal basis of the column span (rank cut relative to the top
    singular value)."""
    if A.shape[1] == 0:
        return A.copy()
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return A[:, :0]
    return U[:, :int(np.sum(s > cfg.rank_tol * s[0]))]


def _inter_dim(A, B, cfg):
    """dim(span A cap span B) = rank A + rank B - rank [A B]."""
    return _rank(A, cfg) + _rank(B, cfg) - _rank(np.hstack([A, B]), cfg)


@dataclass(eq=False)
class TruncSubspace:
    """Column span inside the disc model ``space``.  ``raw`` holds the
    generating columns in weighted coordinates; ``frame`` an orthonormal
    basis of the same span.  ``orthonormal`` selects which of the two the
    checks run on."""
    space: SpaceModel
    raw: np.ndarray
    frame: np.ndarray
    generator: CoeffVec = None
    orthonormal: bool = True
    z_invariant: bool = False
    z_residual: float = 0.0
    edge_columns: int = 0
    cfg: object = DEFAULT

    @property
    def N(self):
        return self.space.N

    @property
    def rank(self):
        return self.frame.shape[1]

    @property
    def basis(self):
        return self.frame if self.orthonormal else self.raw

    @property
    def sigma(self):
        return np.exp(self.space.log_sigma)

    def to_weighted(self, f):
        return self.space.coords(f) * self.sigma

    def to_coeffs(self, y):
        return CoeffVec(0, np.asarray(y) / self.sigma)

    def residual(self, y, scale=None):
        """Distance of the weighted vector y from the span, relative to |y|
        (or to ``scale`` when y is a difference of larger terms)."""
        y = np.asarray(y, dtype=complex)
        ny = np.linalg.norm(y) if scale is None else max(scale, np.linalg.norm(y))
        if ny == 0:
            return 0.0
        if self.rank == 0:
            return 1.0
        B = self.basis
        if self.orthonormal:
            r = y - B @ (B.conj().T @ y)
        else:
            x, *_ = np.linalg.lstsq(B, y, rcond=None)
            r = y - B @ x
        return float(np.linalg.norm(r) / ny)

    def contains(self, f):
        return self.residual(self.to_weighted(f)) < self.cfg.member_tol

    def with_basis(self, orthonormal):
        return TruncSubspace(self.space, self.raw, self.frame, self.generator, orthonormal,
                             self.z_invariant, self.z_residual, self.edge_columns, self.cfg)

    @classmethod
    def from_columns(cls, space, columns, cfg=DEFAULT, orthonormal=True, generator=None):
        """Span of the given raw coefficient columns (each a CoeffVec or an
        array on [0, N])."""
        if space.kind != "disc":
            raise DomainError("subspaces live in disc spaces")
        sig = np.exp(space.log_sigma)
        cols = [space.coords(c) if isinstance(c, CoeffVec) else np.asarray(c, dtype=complex)
                for c in columns]
        raw = np.array(cols, dtype=complex).T * sig[:, None] if cols else np.zeros((space.N + 1, 0), complex)
        if raw.shape[0] != space.N + 1:
            raise DomainError("columns must live on [0, N]")
        frame = _frame(raw, cfg)
        if not orthonormal and frame.shape[1] < raw.shape[1]:
            raise DomainError("raw columns are linearly dependent")
        M = cls(space, raw, frame, generator, orthonormal, cfg=cfg)
        M._certify_z_invariance()
        return M

    @classmethod
    def from_generator(cls, g, space, cfg=DEFAULT, orthonormal=True):
        """span{g, z g, ..., z^(N - deg g) g}."""
        g = CoeffVec(0, np.trim_zeros(space.coords(g), "b")) if isinstance(g, CoeffVec) else CoeffVec(0, g)
        if g.is_empty or not np.any(g.coeffs):
            raise DomainError("generator must be nonzero")
        if g.n_hi > space.N:
            raise DomainError("generator degree exceeds N")
        cols = [g.shifted(k) for k in range(space.N - g.n_hi + 1)]
        return cls.from_columns(space, cols, cfg, orthonormal, generator=g)

    def _certify_z_invariance(self):
        """S maps every element of M of degree < N back into M.  The subspace
        M cap P_{N-1} is found exactly as the kernel of the top-coefficient
        row; elements of degree N are the edge columns."""
        low = self.low_part()
        self.edge_columns = self.rank - low.shape[1]
        if low.shape[1] == 0:
            self.z_invariant, self.z_residual = True, 0.0
            return
        sy = self.shift_weighted(low)
        res = max(self.residual(sy[:, j]) for j in range(sy.shape[1]))
        self.z_residual = res
        self.z_invariant = res < self.cfg.member_tol

    def low_part(self):
        """Weighted orthonormal basis of M cap P_{N-1}."""
        Q = self.frame
        if Q.shape[1] == 0:
            return Q
        top = Q[-1:, :]
        if np.max(np.abs(top)) <= self.cfg.rank_tol:
            return Q
        K = null_space(top)
        return Q @ K

    def shift_weighted(self, Y, lam=0.0):
        """(S - lam) on weighted columns supported on [0, N-1]."""
        sig = self.sigma
        C = Y / sig[:, None]
        out = np.zeros_like(C)
        out[1:] = C[:-1]
        out -= lam * C
        return out * sig[:, None]

    def eval_row(self, lam):
        """Weighted representer of delta_lam: f(lam) = e . y."""
        n = np.arange(self.N + 1)
        return (complex(lam) ** n) / self.sigma if lam != 0 else (n == 0) / self.sigma


# zero set -------------------------------------------------------------------------

def zero_set(M, grid, cfg=None):
    """For each lam: the norm of delta_lam restricted to M relative to its norm
    on the whole model, i.e. max |f(lam)| over unit f in M divided by |delta_lam|.
    Points below cfg.zero_tol are flagged as common zeros."""
    cfg = cfg or M.cfg
    if len(grid) == 0:
        raise DomainError("empty grid")
    out = []
    for lam in grid:
        e = M.eval_row(lam)
        full = np.linalg.norm(e)
        on_m = np.linalg.norm(e @ M.frame) if M.rank else 0.0
        v = float(on_m / full)
        out.append({"lam": complex(lam), "eval_norm": v, "zero": v < cfg.zero_tol})
    return out


# division ---------------------------------------------------------------------------

@dataclass
class DivisionReport:
    lam: complex
    has_division: bool
    index: int
    max_residual: float
    kernel_dim: int
    index_at_lam: int
    eval_norm: float

    def to_dict(self):
        return {"lam": [self.lam.real, self.lam.imag], "has_division": self.has_division,
                "index": self.index, "max_residual": self.max_residual,
                "kernel_dim": self.kernel_dim, "index_at_lam": self.index_at_lam,
                "eval_norm": self.eval_norm}


def subspace_index(M, lam=0.0, cfg=None):
    """dim M - dim(M cap (S - lam)(M cap P_{N-1})); lam = 0 gives dim(M/(M cap zM))."""
    cfg = cfg or M.cfg
    low = M.low_part()
    A = M.shift_weighted(low, lam)
    return M.rank - _inter_dim(M.frame, A, cfg)


def division_check(M, lam, cfg=None):
    """Every f in M with f(lam) = 0 has (f - f(lam))/(z - lam) in M."""
    cfg = cfg or M.cfg
    lam = complex(lam)
    if abs(lam) >= 1:
        raise DomainError("lambda must lie in the open disc")
    if M.rank < 1:
        raise DomainError("subspace has rank 0")
    B = M.basis
    e = M.eval_row(lam)
    v = e @ B
    scale = np.linalg.norm(e) * np.max(np.linalg.norm(B, axis=0))
    if np.linalg.norm(v) <= cfg.zero_tol * scale:
        K = np.eye(B.shape[1], dtype=complex)
    else:
        K = null_space(v[None, :])
    worst = 0.0
    sig = M.sigma
    for j in range(K.shape[1]):
        y = B @ K[:, j]
        f = CoeffVec(0, y / sig)
        q = divide(f, lam)
        yq = M.space.coords(q) * sig
        worst = max(worst, M.residual(yq))
    ok = worst < cfg.member_tol
    full = np.linalg.norm(e)
    return DivisionReport(lam, bool(ok), subspace_index(M, 0.0, cfg), worst, K.shape[1],
                          subspace_index(M, lam, cfg), float(np.linalg.norm(e @ M.frame) / full))


# quotient ---------------------------------------------------------------------------

@dataclass
class QuotientModel:
    """Quotient P_N / M in coordinates of the weighted orthogonal complement W
    (pi(y) = W^H y; the quotient norm is the Euclidean norm of pi(y))."""
    W: np.ndarray
    S_M: np.ndarray
    lam: complex
    U: np.ndarray
    mu: complex = None
    resolvent_residual: float = 0.0
    intertwining_residual: float = 0.0
    cond: float = 1.0
    notes: list = field(default_factory=list)

    @property
    def dim(self):
        return self.W.shape[1]

    def pi(self, y):
        return self.W.conj().T @ y

    def to_dict(self):
        return {"dim": self.dim, "lam": [self.lam.real, self.lam.imag],
                "mu": None if self.mu is None else [self.mu.real, self.mu.imag],
                "resolvent_residual": self.resolvent_residual,
                "intertwining_residual": self.intertwining_residual,
                "cond": self.cond, "notes": list(self.notes)}


def quotient_U(M, lam=0.0, mu=None, cfg=None):
    """S_M on the quotient and U_lam = (S_M - lam)^{-1}.

    Representatives of quotient classes are taken in P_{N-1} (minimum norm),
    so S of a representative stays in the window.  The resolvent identity
    U_mu = U_lam (I - (mu - lam) U_lam)^{-1} is checked against an
    independent inversion at mu, and U_lam pi (S - lam) = pi on P_{N-1}."""
    cfg = cfg or M.cfg
    lam = complex(lam)
    if abs(lam) >= 1:
        raise DomainError("lambda must lie in the open disc")
    if mu is None:
        mu = lam + 0.2 if abs(lam + 0.2) < 1 else lam - 0.2
    mu = complex(mu)
    n1 = M.N + 1
    Q = M.frame
    W = null_space(Q.conj().T) if Q.shape[1] else np.eye(n1, dtype=complex)
    W = W.astype(complex)
    notes = [] if M.z_invariant else ["M is not z-invariant on the window; no verdict claimed"]
    d = W.shape[1]
    if d == 0:
        z = np.zeros((0, 0), dtype=complex)
        return QuotientModel(W, z, lam, z, mu, 0.0, 0.0, 1.0, notes + ["trivial quotient"])
    A = W.conj().T[:, :M.N]
    if _rank(A, cfg) < d:
        raise NumericalError("quotient classes need degree-N representatives; enlarge N")
    R = np.zeros((n1, d), dtype=complex)
    R[:M.N] = np.linalg.pinv(A)
    S_M = W.conj().T @ M.shift_weighted(R)
    I = np.eye(d)

    def inv(shift_val):
        X = S_M - shift_val * I
        c = np.linalg.cond(X)
        if not np.isfinite(c) or c > cfg.cond_max:
            raise NumericalError(f"division fails at lambda={shift_val}: condition number {c:.3e}")
        return np.linalg.inv(X), float(c)

    U, c = inv(lam)
    U_mu, _ = inv(mu)
    via = U @ np.linalg.inv(I - (mu - lam) * U)
    res5 = float(np.max(np.abs(via - U_mu)) / max(np.max(np.abs(U_mu)), 1e-300))
    # U pi (S - lam) = pi on P_{N-1}
    E = np.zeros((n1, M.N), dtype=complex)
    E[:M.N] = np.diag(M.sigma[:M.N])  # weighted unit vectors of degree < N
    lhs = U @ (W.conj().T @ M.shift_weighted(E, lam))
    rhs = W.conj().T @ E
    inter = float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300))
    return QuotientModel(W, S_M, lam, U, mu, res5, inter, c, notes)


def u_power_norms(q, M, p_max, f=None):
    """||U^p pi(f)|| for p = 1..p_max (f defaults to 1), quotient norm."""
    f = CoeffVec(0, [1.0]) if f is None else f
    if q.dim == 0:
        return np.zeros(p_max)
    x = q.pi(M.to_weighted(f))
    out = []
    for _ in range(p_max):
        x = q.U @ x
        out.append(float(np.linalg.norm(x)))
    return np.array(out)


# recursion (12) ---------------------------------------------------------------------

@dataclass
class RecursionBasis:
    alpha: np.ndarray
    v: list
    residuals: list


def recursion_basis(u, p_max, tol=1e-12):
    """alpha_0 = 1, v_1 = -T u, v_p = T(v_{p-1} - v_{p-1}(0) u), alpha_p = v_p(0),
    with 1 = sum_{k<p} alpha_k z^k u + z^p v_p checked coefficientwise."""
    u = CoeffVec(0, u.window(0, max(u.n_hi, 0))) if isinstance(u, CoeffVec) else CoeffVec(0, u)
    if abs(u[0] - 1) > tol:
        raise DomainError("u(0) must equal 1")
    if p_max < 1:
        raise DomainError("p_max must be >= 1")
    alpha = [1.0 + 0j]
    vs = []
    v = shift(u, "T").plus.scale(-1.0)
    res = []
    one = CoeffVec(0, [1.0])
    acc = u  # sum_{k<p} alpha_k z^k u
    for p in range(1, p_max + 1):
        if p > 1:
            v = shift(v - u.scale(v[0]), "T").plus
        vs.append(v)
        alpha.append(complex(v[0]))
        rhs = acc + (v.shifted(p) if not v.is_empty else v)
        diff = rhs - one
        res.append(diff.max_abs())
        acc = acc + u.shifted(p).scale(alpha[p])
    return RecursionBasis(np.array(alpha[:p_max + 1]), vs, res)


# gluing -----------------------------------------------------------------------------

@dataclass
class GlueReport:
    p_max: int
    summability: dict
    u_norms: list
    lift_norms: list
    v_minus_w: list
    plus_part: list
    minus_part: list
    recursion: list

    @property
    def max_residual(self):
        vals = self.v_minus_w + self.plus_part + self.minus_part
        return max(vals) if vals else 0.0

    def to_dict(self):
        return {"p_max": self.p_max, "summability": self.summability,
                "u_norms": self.u_norms, "lift_norms": self.lift_norms,
                "residuals": {"v_minus_w_in_M": self.v_minus_w, "plus_side_in_M": self.plus_part,
                              "minus_side_in_N": self.minus_part, "recursion": self.recursion},
                "max_residual": self.max_residual}


def _unit_element(M):
    """Some u in M with u(0) = 1: the normalized generator when known, else the
    minimum-norm solution."""
    if M.generator is not None and abs(M.generator[0]) > 0:
        return M.generator.scale(1.0 / M.generator[0])
    e = M.eval_row(0.0)
    v = e @ M.frame
    if np.linalg.norm(v) == 0:
        raise DomainError("every element of M vanishes at 0")
    x = v.conj() / np.vdot(v, v)
    return M.to_coeffs(M.frame @ x).trim()


def _span_residual(cols, target):
    A = np.array(cols).T
    x, *_ = np.linalg.lstsq(A, target, rcond=None)
    nt = np.linalg.norm(target)
    return float(np.linalg.norm(A @ x - target) / nt) if nt else 0.0


def glue_test(M, tail, p_max, cfg=None):
    """The gluing construction at truncation scale.

    w_p is the minimum-norm lift of U_0^p pi(1) and D f = sum_p f(-p) w_p.
    Checked for p <= p_max: v_p - w_p in M; (P+ + D) biS^{-p} u in M; and
    (P- - D) biS^{-p} 1 = zeta^{-p} - w_p in span{biS^{-k} M : k <= p}."""
    cfg = cfg or M.cfg
    u = _unit_element(M)
    if p_max > M.N - u.n_hi:
        raise DomainError(f"p_max must be <= N - deg u = {M.N - u.n_hi}")
    q = quotient_U(M, 0.0, cfg=cfg)
    unorm = u_power_norms(q, M, p_max)
    p = np.arange(1, p_max + 1)
    if q.dim == 0 or np.all(unorm == 0):
        summ = {"verdict": _tails.CONVERGENT, "method": "trivial-quotient", "partial_sums": []}
    else:
        s = summability_62(-tail.log_at(-p), np.log(unorm), cfg)
        summ = {"verdict": s.verdict, "partial_sums": s.partial_sums, **s.witness}
        if s.verdict != _tails.CONVERGENT:
            raise PreconditionFailed(f"summability {s.verdict}: partial sums (p, log) {s.partial_sums}")
    rec = recursion_basis(u, p_max)
    sig = M.sigma
    # w_p in weighted coordinates
    x = q.pi(M.to_weighted(CoeffVec(0, [1.0])))
    w = []
    for _ in range(p_max):
        x = q.U @ x if q.dim else x
        w.append(q.W @ x if q.dim else np.zeros(M.N + 1, dtype=complex))
    vmw, plus, minus = [], [], []
    uy = M.to_weighted(u)
    n1 = M.N + 1
    for k in range(1, p_max + 1):
        vy = M.to_weighted(rec.v[k - 1])
        d = vy - w[k - 1]
        vmw.append(M.residual(d, np.linalg.norm(vy) + np.linalg.norm(w[k - 1])))
        # (P+ + D) biS^{-k} u
        su = u.shifted(-k)
        pos = M.space.coords(su) * sig
        corr = sum((su[-j] * w[j - 1] for j in range(1, k + 1)), np.zeros(n1, dtype=complex))
        scale = np.linalg.norm(pos) + sum(abs(su[-j]) * np.linalg.norm(w[j - 1]) for j in range(1, k + 1))
        plus.append(M.residual(pos + corr, scale))
        # zeta^{-k} - w_k in span{biS^{-j} m : j <= k}, window [-k, N], plain coefficients
        cols = []
        basis_c = M.frame / sig[:, None]
        for j in range(k + 1):
            for c in range(basis_c.shape[1]):
                col = np.zeros(n1 + k, dtype=complex)
                col[k - j:k - j + n1] = basis_c[:, c]
                cols.append(col)
        tgt = np.zeros(n1 + k, dtype=complex)
        tgt[0] = 1.0
        tgt[k:] -= w[k - 1] / sig
        minus.append(_span_residual(cols, tgt))
    return GlueReport(p_max, summ, [float(v) for v in unorm],
                      [float(np.linalg.norm(v)) for v in w], vmw, plus, minus,
                      [float(r) for r in rec.residuals])


# boundary functional ------------------------------------------------------------------

@dataclass
class BoundaryReport:
    zeta: complex
    certificate: dict
    phi_one: complex
    intertwining_residual: float
    kernel: TruncSubspace
    division: list

    def to_dict(self):
        return {"zeta": [self.zeta.real, self.zeta.imag], "certificate": self.certificate,
                "phi_one": [self.phi_one.real, self.phi_one.imag],
                "intertwining_residual": self.intertwining_residual,
                "kernel_rank": self.kernel.rank,
                "division": [d.to_dict() for d in self.division]}


def boundary_functional(space, zeta, lams=(0.0, 0.4), cfg=DEFAULT):
    """phi(f) = sum f(n) zeta^n on a p = 2 disc model with sum 1/sigma^2 < inf.

    The certificate bounds |delta_lam| on radii 1 - 2^-k by the window sum and
    asks for a convergent verdict on sum 1/sigma(n)^2."""
    zeta = complex(zeta)
    if abs(abs(zeta) - 1) > 1e-12:
        raise DomainError("zeta must lie on the unit circle")
    if space.p != 2 or space.kind != "disc":
        raise DomainError("boundary functional needs a p = 2 disc model")
    n = np.arange(space.N + 1)
    tv = _tails.series_verdict(n + 1.0, -2 * space.log_sigma, cfg)
    bound = sup_delta_bound(space)
    radii = 1 - 2.0 ** -np.arange(1, 11)
    norms = [functional_norm(space, "delta", lam=r * zeta).closed_form for r in radii]
    cert = {"sum_inv_sigma2": tv.to_dict(), "sup_bound": bound, "delta_norms": norms}
    if tv.verdict != _tails.CONVERGENT or max(norms) > bound * (1 + 1e-12):
        raise PreconditionFailed("point evaluations are not certified bounded near the circle")
    row = zeta ** n
    K = null_space(row[None, :])
    cols = [K[:, j] for j in range(K.shape[1])]
    M = TruncSubspace.from_columns(space, cols, cfg)
    phi = lambda c: complex(np.dot(row[:c.size], c[:row.size]))
    one = phi(np.array([1.0]))
    # phi(S f) = zeta phi(f) on P_{N-1}
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(4):
        c = rng.normal(size=space.N) + 1j * rng.normal(size=space.N)
        sc = np.concatenate([[0], c])
        worst = max(worst, abs(phi(sc) - zeta * phi(c)) / max(1.0, np.sum(np.abs(c))))
    div = [division_check(M, lam, cfg) for lam in lams]
    return BoundaryReport(zeta, cert, one, worst, M, div)
