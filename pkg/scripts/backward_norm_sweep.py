"""Sweep the ratio log |S^-n| / log sigma(-n) over tails sigma(-n) = exp(n^a).

    python scripts/backward_norm_sweep.py --alphas 0.3 0.5 0.7 0.9 --nmax 500
"""
import argparse

import numpy as np

from shiftlab.weights import Weight
from shiftlab.growth import GrowthProfile
from shiftlab.hyperlab import lemma82_trend, running_extremes


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alphas", type=float, nargs="+", default=[0.3, 0.5, 0.7, 0.9])
    p.add_argument("--nmin", type=int, default=100)
    p.add_argument("--nmax", type=int, default=500)
    p.add_argument("--disc-slope", type=float, default=0.0,
                   help="log of the disc weight is slope * log(1+n)")
    a = p.parse_args()
    L = a.nmax + 100
    disc = Weight.from_function("Z+", 0, L, lambda n: a.disc_slope * np.log1p(n)) if a.disc_slope else None
    print(f"{'alpha':>6} {'min':>8} {'max':>8} {'hi@end':>8} {'lo@end':>8}  dominant")
    for al in a.alphas:
        tail = Weight.from_function("Z-", -L, -1, lambda n: (-n.astype(float)) ** al)
        rows = lemma82_trend(GrowthProfile.constant(L), tail, a.nmax, disc=disc)
        r = np.array([x.ratio for x in rows if a.nmin <= x.n <= a.nmax])
        hi, lo = running_extremes(rows, a.nmin)
        dom = sorted({x.dominant for x in rows if x.n >= a.nmin})
        print(f"{al:6.2f} {r.min():8.4f} {r.max():8.4f} {hi[-1]:8.4f} {lo[-1]:8.4f}  {','.join(dom)}")


if __name__ == "__main__":
    main()
