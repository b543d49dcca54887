"""Finite coefficient windows for Taylor, Laurent and hyperfunction data.

A ``CoeffVec`` holds complex coefficients c(n) for n in [n_lo, n_hi] and is
zero outside.  A ``Hyperfunction`` is a pair (plus, minus) of such windows,
plus inside Z+ and minus inside Z-.
"""
from dataclasses import dataclass
import math

import numpy as np

from .config import DEFAULT
from .errors import DomainError, NumericalError


@dataclass(frozen=True, eq=False)
class CoeffVec:
    n_lo: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "n_lo", int(self.n_lo))

    @classmethod
    def zero(cls, n_lo=0):
        return cls(n_lo, np.zeros(0))

    @classmethod
    def monomial(cls, k, c=1.0):
        return cls(k, [c])

    @classmethod
    def poly(cls, coeffs):
        return cls(0, coeffs)

    @property
    def n_hi(self):
        return self.n_lo + self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    @property
    def is_empty(self):
        return self.coeffs.size == 0

    def __getitem__(self, n):
        i = n - self.n_lo
        if 0 <= i < self.coeffs.size:
            return self.coeffs[i]
        return 0j

    def window(self, n_lo, n_hi):
        """Dense coefficient array on [n_lo, n_hi] (zero-padded or cut)."""
        out = np.zeros(max(n_hi - n_lo + 1, 0), dtype=complex)
        lo, hi = max(n_lo, self.n_lo), min(n_hi, self.n_hi)
        if hi >= lo:
            out[lo - n_lo:hi - n_lo + 1] = self.coeffs[lo - self.n_lo:hi - self.n_lo + 1]
        return out

    def restrict(self, n_lo, n_hi):
        return CoeffVec(n_lo, self.window(n_lo, n_hi))

    def shifted(self, k):
        """Coefficient c(n) moved to index n + k."""
        return CoeffVec(self.n_lo + k, self.coeffs)

    def trim(self, tol=0.0):
        nz = np.nonzero(np.abs(self.coeffs) > tol)[0]
        if nz.size == 0:
            return CoeffVec.zero(self.n_lo)
        return CoeffVec(self.n_lo + nz[0], self.coeffs[nz[0]:nz[-1] + 1])

    def __add__(self, other):
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        lo, hi = min(self.n_lo, other.n_lo), max(self.n_hi, other.n_hi)
        return CoeffVec(lo, self.window(lo, hi) + other.window(lo, hi))

    def __neg__(self):
        return CoeffVec(self.n_lo, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a):
        return CoeffVec(self.n_lo, a * self.coeffs)

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def to_dict(self):
        return {"n_lo": self.n_lo, "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs]}

    @classmethod
    def from_dict(cls, d):
        raw = d["coeffs"]
        c = [complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x) for x in raw]
        return cls(d["n_lo"], c)


@dataclass(frozen=True, eq=False)
class Hyperfunction:
    plus: CoeffVec
    minus: CoeffVec

    def __post_init__(self):
        if not self.plus.is_empty and self.plus.n_lo < 0:
            raise DomainError("plus part must live on n >= 0")
        if not self.minus.is_empty and self.minus.n_hi > -1:
            raise DomainError("minus part must live on n <= -1")

    @classmethod
    def from_laurent(cls, cv):
        if cv.is_empty:
            return cls(CoeffVec.zero(0), CoeffVec.zero(-1))
        plus = cv.restrict(0, cv.n_hi) if cv.n_hi >= 0 else CoeffVec.zero(0)
        minus = cv.restrict(cv.n_lo, -1) if cv.n_lo <= -1 else CoeffVec.zero(-1)
        return cls(plus, minus)

    @classmethod
    def from_plus(cls, coeffs):
        return cls(CoeffVec(0, coeffs), CoeffVec.zero(-1))

    def laurent(self):
        return self.plus + self.minus

    def to_dict(self):
        return {"plus": self.plus.to_dict(), "minus": self.minus.to_dict()}

    @classmethod
    def from_dict(cls, d):
        if "plus" in d:
            return cls(CoeffVec.from_dict(d["plus"]), CoeffVec.from_dict(d["minus"]))
        return cls.from_laurent(CoeffVec.from_dict(d))


def as_laurent(f):
    return f.laurent() if isinstance(f, Hyperfunction) else f


def laurent_eval(cv, z):
    """Sum of c(n) z^n over the window (any nonzero z; z=0 only for n_lo >= 0)."""
    z = np.asarray(z, dtype=complex)
    if cv.is_empty:
        return np.zeros_like(z)
    out = np.zeros_like(z)
    if cv.n_hi >= 0:
        pos = cv.window(max(cv.n_lo, 0), cv.n_hi)
        acc = np.zeros_like(z)
        for c in pos[::-1]:
            acc = acc * z + c
        out = out + acc * z ** max(cv.n_lo, 0)
    if cv.n_lo < 0:
        neg = cv.window(cv.n_lo, min(cv.n_hi, -1))[::-1]  # c(-1), c(-2), ...
        w = 1.0 / z
        acc = np.zeros_like(z)
        for c in neg[::-1]:
            acc = acc * w + c
        out = out + acc * w ** (-min(cv.n_hi, -1))
    return out


def eval(f, z):
    """Evaluate the plus part inside the disc and the minus part outside."""
    z = complex(z)
    if abs(z) == 1.0:
        raise DomainError("circle evaluation undefined for hyperfunctions")
    if isinstance(f, CoeffVec):
        f = Hyperfunction.from_laurent(f)
    part = f.plus if abs(z) < 1 else f.minus
    return complex(laurent_eval(part, z))


def pair(f, h):
    """<f, h> = sum_n f(n) h(-n-1), bilinear."""
    f = as_laurent(f)
    h = as_laurent(h)
    if f.is_empty or h.is_empty:
        return 0j
    lo = max(f.n_lo, -h.n_hi - 1)
    hi = min(f.n_hi, -h.n_lo - 1)
    if hi < lo:
        return 0j
    fa = f.window(lo, hi)
    ha = h.window(-hi - 1, -lo - 1)[::-1]
    return complex(np.dot(fa, ha))


def convolve(a, b):
    """Exact Cauchy product; window [a.lo + b.lo, a.hi + b.hi]."""
    a, b = as_laurent(a), as_laurent(b)
    if a.is_empty or b.is_empty:
        return CoeffVec.zero(a.n_lo + b.n_lo)
    return CoeffVec(a.n_lo + b.n_lo, np.convolve(a.coeffs, b.coeffs))


# circle sampling -------------------------------------------------------------

def _check_K(K):
    K = int(K)
    if K < 2 or K & (K - 1):
        raise DomainError(f"K={K} must be a power of two")
    return K


def circle_samples(f, r, K):
    """Samples of f at r e^{2 pi i k/K}.  Coefficient data is summed as a
    Laurent series (plus and minus parts together); callables are called on
    the nodes."""
    K = _check_K(K)
    if r <= 0:
        raise DomainError("radius must be positive")
    if callable(f) and not isinstance(f, (CoeffVec, Hyperfunction)):
        z = r * np.exp(2j * np.pi * np.arange(K) / K)
        return np.asarray(f(z), dtype=complex)
    cv = as_laurent(f)
    if cv.is_empty:
        return np.zeros(K, dtype=complex)
    n = np.arange(cv.n_lo, cv.n_hi + 1)
    bins = np.zeros(K, dtype=complex)
    np.add.at(bins, n % K, cv.coeffs * np.exp(n * math.log(r)))
    return np.fft.ifft(bins) * K


def circle_coeffs(samples, r, n_lo=None, n_hi=None, cfg=DEFAULT, guard=True):
    """Coefficients c(n) = r^-n * (discrete Fourier coefficient) on the band
    [n_lo, n_hi] (default: the middle half of the K frequencies).  Energy
    outside the band above cfg.alias_tol (relative) raises NumericalError."""
    samples = np.asarray(samples, dtype=complex)
    K = _check_K(samples.size)
    if n_lo is None:
        n_lo, n_hi = -K // 4, K // 4 - 1
    if n_hi - n_lo + 1 > K:
        raise DomainError("band wider than the number of samples")
    d = np.fft.fft(samples) / K
    n = np.arange(n_lo, n_hi + 1)
    band = d[n % K]
    if guard:
        mask = np.ones(K, dtype=bool)
        mask[n % K] = False
        out_e = float(np.sum(np.abs(d[mask]) ** 2))
        in_e = float(np.sum(np.abs(band) ** 2))
        if out_e > cfg.alias_tol ** 2 * max(in_e, 1e-300) and out_e > 0:
            raise NumericalError(
                f"aliasing guard: out-of-band energy ratio {math.sqrt(out_e / max(in_e, 1e-300)):.3e} "
                f"exceeds {cfg.alias_tol:g}")
    return CoeffVec(n_lo, band * np.exp(-n * math.log(r)))


def circle_transform(f, r, K=None, direction="forward", n_lo=None, n_hi=None, cfg=DEFAULT):
    if direction == "forward":
        return circle_samples(f, r, K)
    if direction == "inverse":
        return circle_coeffs(f, r, n_lo, n_hi, cfg)
    raise DomainError(f"unknown direction {direction!r}")


def cauchy_coeff_bound(f, r, n, K=4096):
    """(r^-n M_r, |f(n)| <= r^-n M_r) with M_r the max modulus over K circle
    samples.  For K above the window length the discrete Cauchy formula makes
    the sampled bound rigorous."""
    f = as_laurent(f)
    if not f.is_empty and f.n_lo < 0:
        raise DomainError("cauchy_coeff_bound needs a Taylor window")
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    K = max(int(K), 1 << int(math.ceil(math.log2(max(len(f), 2)))))
    M = float(np.max(np.abs(circle_samples(f, r, K)))) if not f.is_empty else 0.0
    bound = r ** (-n) * M
    return bound, bool(abs(f[n]) <= bound * (1 + 1e-12) + 1e-300)
