"""Numerical tolerances shared by all modules.

Every threshold used to turn a float into a verdict lives here so that
reports can embed the exact configuration they were produced with.
"""
from dataclasses import dataclass, asdict, replace


@dataclass(frozen=True)
class Config:
    # weights
    min_window: int = 16
    root_tol: float = 0.05
    concavity_tol: float = 1e-9
    monotone_a: tuple = (0.5, 0.7)
    log_concave_alpha: tuple = (1.6, 2.0, 3.0)
    log_power_A: tuple = (1.0, 2.0, 4.0)
    # tail verdicts (Bertrand-type exponent, see _tails)
    kappa_convergent: float = 2.0
    kappa_divergent: float = 1.1
    fit_residual_max: float = 0.1
    # series
    alias_tol: float = 1e-10
    # growth
    tail_tol: float = 1e-6
    quad_abs: float = 1e-9
    quad_rel: float = 1e-8
    golden_tol: float = 1e-10
    scan_points: int = 64
    # subspaces
    member_tol: float = 1e-9
    rank_tol: float = 1e-10
    zero_tol: float = 1e-8
    cond_max: float = 1e12
    # hyperlab
    equiv_max: float = 1e3
    zero_margin: float = 1e-6
    sing_dist: float = 1e-12
    winding_snap: float = 0.01
    k_max_samples: int = 1 << 16

    def to_dict(self):
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def with_(self, **kw):
        return replace(self, **kw)


DEFAULT = Config()
