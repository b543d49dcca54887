import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftlab.growth import (GrowthProfile, delta, mm_integral, mm_dichotomy, c_eps, l_eps,
                             tail_weight, summability_62, hypothesis_report,
                             fit_exp_type_bound, cauchy_growth_bound)
from shiftlab.weights import Weight
from shiftlab.errors import DomainError, ProfileTooShort

CONST = GrowthProfile.constant(64)
INV_SQ = GrowthProfile(-2 * np.log1p(np.arange(2001)), "loglinear")


def test_delta_examples():
    v, tail = delta(CONST, 0.5)
    assert v == pytest.approx(math.log(2.0), abs=1e-14) and tail == 0
    v, _ = delta(INV_SQ, 0.999)
    assert math.exp(v) <= math.pi ** 2 / 6
    p = GrowthProfile(np.array([0.3, 0.1, -0.2, -1.0]))
    assert delta(p, 0.0) == (0.3, 0.0)
    with pytest.raises(DomainError):
        delta(CONST, 1.0)


def test_delta_error_extension_is_strict():
    short = GrowthProfile(np.zeros(20))
    delta(short, 0.1)
    with pytest.raises(ProfileTooShort):
        delta(short, 0.9)


def test_delta_monotone_and_log_convex():
    lr = np.linspace(-5, -0.01, 80)
    for prof in (CONST, INV_SQ, GrowthProfile(0.5 * np.log1p(np.arange(400.0)), "loglinear")):
        v = np.array([delta(prof, math.exp(x))[0] for x in lr])
        assert np.all(np.diff(v) >= -1e-13)
        assert np.all(np.diff(v, 2) >= -1e-10)


@given(st.floats(0.01, 50.0), st.floats(0.0, 0.999999))
@settings(max_examples=40, deadline=None)
def test_mm_integral_constant_delta(c, r):
    got = mm_integral(lambda t: c, r).value
    assert got == pytest.approx(2 * math.sqrt(c) * (1 - math.sqrt(1 - r)), rel=1e-10, abs=1e-12)


def test_mm_integral_examples():
    m = mm_integral(CONST, 0.9)
    assert m.value == pytest.approx(-math.log(0.1), rel=1e-10)
    assert m.divergence_class == "divergent"
    m = mm_integral(INV_SQ, 0.99)
    assert m.divergence_class == "convergent"
    bound = math.pi ** 2 / 6
    assert m.value <= 2 * math.sqrt(bound) * (1 - math.sqrt(0.01)) + 1e-12
    assert mm_integral(CONST, 0.0).value == 0.0


def test_dichotomy_short_profile_is_undecided():
    assert mm_dichotomy(GrowthProfile(np.zeros(10))).verdict == "undecided"


def test_c_eps_matches_high_precision():
    mpmath.mp.dps = 60
    for eps in (1, 0.5, 3, 100):
        e = mpmath.mpf(eps)
        C = (54 / mpmath.pi) * e ** -3 * (1 + e) * (1 + 2 * e / 3) ** 2 * \
            (1 + mpmath.mpf(44) / 5 * mpmath.exp((26 * mpmath.pi + mpmath.mpf(3) / 2) * (2 + 1 / e)))
        assert c_eps(eps) == pytest.approx(float(mpmath.log(C)), rel=1e-10)
    assert c_eps(1.0) == pytest.approx(256.27803129, rel=1e-9)


def test_c_eps_decreasing():
    grid = np.geomspace(0.1, 100, 200)
    v = np.array([c_eps(e) for e in grid])
    assert np.all(np.diff(v) < 0)
    assert c_eps(1e3) > c_eps(1e6)
    # the limit is finite: log(36/pi * 44/5) + 2(26 pi + 3/2)
    lim = math.log(54 / math.pi * 4 / 9 * 44 / 5) + 2 * (26 * math.pi + 1.5)
    assert c_eps(1e9) == pytest.approx(lim, rel=1e-8)


def test_l_eps_examples():
    lc1 = float(np.logaddexp(c_eps(1.0), 0.0))
    rho = math.sqrt(0.9)
    exact = lc1 - math.log(0.1) + 2 * math.log(-math.log1p(-rho))
    assert l_eps(CONST, 1.0, 0.9) == pytest.approx(exact, rel=1e-10)
    # small r: the integral vanishes, so log L falls below log(C+1)
    assert l_eps(CONST, 1.0, 1e-8) < lc1 - 10
    rs = np.linspace(0.01, 0.999, 60)
    v = [l_eps(CONST, 1.0, r) for r in rs]
    assert np.all(np.diff(v) >= 0)


@pytest.fixture(scope="module")
def tail200():
    return tail_weight(CONST, 1.0, 200)


def test_tail_weight_shape(tail200):
    r = tail200
    assert r.log_sigma[0] == 0 and r.boundary[0]
    assert not r.boundary[1:].any()
    assert np.all(np.diff(r.log_r_opt[1:]) > 0)
    # envelope of lines in n: concave in n
    assert np.all(np.diff(r.log_sigma, 2) <= 1e-6 * np.abs(r.log_sigma[2:]))
    # small-r regime: L ~ C r, so log sigma(n) ~ n (log C + 1 - log n)
    lc = c_eps(1.0)
    n = np.arange(1, 11)
    assert np.allclose(r.log_sigma[1:11], n * (lc + 1 - np.log(n)), rtol=1e-3)


def test_tail_weight_variants(tail200):
    p, c = tail200.plain, tail200.checked
    assert p.support == "Z-" and p.n_lo == -200 and p.n_hi == -1
    n = np.arange(1, 201)
    assert np.allclose(c.log_at(-n) - p.log_at(-n), 2 * np.log(n + 1))
    assert tail200.report_plain is not None


def test_tail_weight_matches_direct_minimization():
    r = tail_weight(CONST, 1.0, 12, classify_output=False)
    lc1 = float(np.logaddexp(c_eps(1.0), 0.0))
    for n in (3, 12):
        # brute-force over a log r grid around the reported optimum
        lr = r.log_r_opt[n] + np.linspace(-0.5, 0.5, 2001)
        rr = np.exp(lr)
        rho = rr ** 0.5
        L = np.exp(lc1 - np.log1p(-rr) + 2 * np.log(-np.log1p(-rho)))
        assert r.log_sigma[n] <= np.min(-n * lr + L) + 1e-9


def test_summability_examples(tail200):
    p = np.arange(1, 101)
    assert summability_62(-p ** 2.0, p * 1.0).verdict == "convergent"
    assert summability_62(np.zeros(100), np.zeros(100)).verdict == "divergent"
    n = np.arange(1, 201)
    log_L = -tail200.checked.log_at(-n)
    log_U = tail200.log_sigma[1:]
    res = summability_62(log_L, log_U)
    assert res.verdict == "convergent"
    with pytest.raises(DomainError):
        summability_62([0.0], [0.0, 1.0])


def test_hypothesis_report():
    n = np.arange(0, 10001)
    prof = GrowthProfile(n ** 0.3)
    tail = Weight.from_function("Z-", -10000, -1, lambda k: (-k) ** 0.8)
    rep = hypothesis_report(prof, tail)
    assert rep["verdicts"]["growth_ratio_lt_1"]["verdict"] == "pass"
    assert rep["thresholds"] == {"factorization_ratio": "1/64", "annihilator_ratio": "1/200", "nqa_exponent": "3/2"}
    assert rep["threshold_values"]["annihilator_ratio"] == 1 / 200
    assert rep["fitted_alpha"] == pytest.approx(0.3, abs=0.02)
    assert rep["verdicts"]["alpha_case"]["verdict"] == "pass"
    same = GrowthProfile(np.concatenate([[0.0], n[1:] ** 0.8]))
    rep = hypothesis_report(same, tail)
    assert rep["verdicts"]["growth_ratio_lt_1"]["verdict"] == "fail"


def _exp_type_coeffs(b, n):
    # coefficients of exp(b/(1-z)) = e^b exp(b z/(1-z)) via f' = b f/(1-z)^2
    # i.e. (1 - 2z + z^2) f' = b f
    c = np.zeros(n + 1)
    c[0] = math.exp(b)
    for k in range(n):
        rhs = b * c[k] + (2 * k * c[k] if k >= 1 else 0) - ((k - 1) * c[k - 1] if k >= 2 else 0)
        c[k + 1] = rhs / (k + 1)
    return c


def test_cauchy_growth_bound_on_exp_type():
    b = 0.7
    c = _exp_type_coeffs(b, 400)
    z = 0.3
    direct = sum(c[k] * z ** k for k in range(401))
    assert direct == pytest.approx(math.exp(b / (1 - z)), rel=1e-12)
    radii = np.linspace(0.0, 0.99, 100)
    log_a, bb = fit_exp_type_bound(radii, b / (1 - radii))
    assert bb == pytest.approx(b, rel=1e-9) and abs(log_a) < 1e-9
    n = np.arange(2, 401)
    bound = cauchy_growth_bound(log_a, bb, n)
    assert np.all(np.log(c[2:]) <= bound + 1e-9)
    # O(sqrt n): the bound divided by sqrt n stays bounded
    assert np.max(bound / np.sqrt(n)) < 3.0
