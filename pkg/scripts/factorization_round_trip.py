"""Build f = zeta^-k exp(h) g from random parts, factor it on an annulus and
report the recovered winding number, residuals and span angles.

    python scripts/factorization_round_trip.py --trials 50 --seed 0
"""
import argparse

import numpy as np

from shiftlab.series import CoeffVec, convolve
from shiftlab.hyperlab import annulus_factorize, exp_series, span_identity


def zero_free(rng, deg):
    c = np.array([1.0 + 0j])
    for a in rng.uniform(1.3, 3.0, deg) * np.exp(2j * np.pi * rng.uniform(size=deg)):
        c = np.convolve(c, [1.0, -1.0 / a])
    return CoeffVec(0, c)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=float, default=0.8, help="outer contour radius")
    p.add_argument("--r0", type=float, default=0.6, help="inner contour radius")
    p.add_argument("--kmax", type=int, default=5)
    a = p.parse_args()
    rng = np.random.default_rng(a.seed)
    print(f"{'k':>2} {'k_hat':>5} {'residual':>10} {'op_resid':>10} {'angle':>10}")
    wrong = 0
    for i in range(a.trials):
        k = i % (a.kmax + 1)
        g = zero_free(rng, int(rng.integers(1, 4)))
        hl = int(rng.integers(1, 11))
        hc = (rng.normal(size=hl) + 1j * rng.normal(size=hl)) * 0.3 * 0.6 ** np.arange(1, hl + 1)
        e = exp_series(np.concatenate([[0], hc]), 160)
        f = convolve(CoeffVec(-160, e[::-1]), g).shifted(-k)
        r = annulus_factorize(f, a.r, r0=a.r0)
        wrong += int(r.k != k)
        print(f"{k:2d} {r.k:5d} {r.residual:10.2e} {r.operator_residual:10.2e} {span_identity(r, f):10.2e}")
    print(f"wrong winding numbers: {wrong} of {a.trials}")


if __name__ == "__main__":
    main()
