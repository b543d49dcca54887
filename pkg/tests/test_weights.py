import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftlab.weights import (Weight, envelope, classify, legendre, lambda_envelope,
                              transform, PASS, FAIL)
from shiftlab.errors import InsufficientSupport, DomainError, PreconditionFailed


def test_constant_envelope_is_one():
    w = Weight.constant("Z", -20, 20)
    assert envelope(w, "bar", 5).value == 1.0
    assert not envelope(w, "bar", 5).at_edge


def test_geometric_envelopes():
    w = Weight.from_function("Z+", 0, 40, lambda n: n * math.log(2.0))
    assert envelope(w, "tilde", 3).value == pytest.approx(8.0, rel=1e-14)
    assert envelope(w, "bar", 3).value == pytest.approx(1 / 8, rel=1e-14)


def test_tail_power_envelope_brute_force():
    # sigma(-n) = exp(n^0.7), n = 1..2000
    w = Weight.from_function("Z-", -2000, -1, lambda n: (-n) ** 0.7)
    sig = {-j: j ** 0.7 for j in range(1, 2001)}
    for m in (1, 4, 9):
        bar = max(sig[k] - sig[k + m] for k in range(-2000, -m))
        til = max(sig[k + m] - sig[k] for k in range(-2000, -m))
        assert envelope(w, "bar", m).log_value == pytest.approx(bar, abs=1e-12)
        assert envelope(w, "tilde", m).log_value == pytest.approx(til, abs=1e-12)
    e = envelope(w, "tilde", 4)
    assert e.log_value == pytest.approx(-0.28640422112158603, abs=1e-12)
    assert e.at_edge and e.argmax == -2000


def test_envelope_errors():
    w = Weight.constant("Z+", 0, 3)
    with pytest.raises(InsufficientSupport):
        envelope(w, "bar", 4)
    with pytest.raises(DomainError):
        Weight("Z+", 1, [0.0, 1.0])


def test_envelope_edge_flag_only_on_truncated_ends():
    # sup of (n+3)/(n+1) sits at n=0, the true end of Z+
    w = Weight.from_function("Z+", 0, 100, lambda n: -np.log1p(n))
    e = envelope(w, "bar", 2)
    assert e.value == pytest.approx(3.0) and not e.at_edge
    # sup of (n+1)/(n+3) is approached only at the truncation
    assert envelope(w, "tilde", 2).at_edge


def _random_weight(seed, support="Z", size=60):
    rng = np.random.default_rng(seed)
    lv = np.cumsum(rng.normal(0, 0.5, size))
    n_lo = {"Z": -size // 2, "Z+": 0, "Z-": -size}[support]
    return Weight(support, n_lo, lv)


@given(st.integers(0, 10**6), st.integers(0, 20), st.integers(0, 20),
       st.sampled_from(["bar", "tilde"]))
@settings(max_examples=60, deadline=None)
def test_submultiplicative(seed, m1, m2, kind):
    w = _random_weight(seed)
    a = envelope(w, kind, m1 + m2).log_value
    b = envelope(w, kind, m1).log_value + envelope(w, kind, m2).log_value
    assert a <= b + 1e-12


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_zero_order_envelope_exactly_one(seed):
    w = _random_weight(seed)
    assert envelope(w, "bar", 0).log_value == 0.0
    assert envelope(w, "tilde", 0).log_value == 0.0


def test_legendre_examples():
    w = Weight.constant("Z-", -50, -1)
    res = legendre(w, 0.5)
    assert res.value == 1.0 and res.argmax == 0
    w = Weight.from_function("Z-", -50, -1, lambda n: -n - 1.0)  # sigma(-k-1) = e^k
    res = legendre(w, 0.25)
    assert res.value == pytest.approx(1.0) and res.argmax == 0


def test_legendre_sqrt_brute_force():
    N = 10**5
    w = Weight.from_function("Z-", -N, -1, lambda n: np.sqrt(-n - 1.0))
    res = legendre(w, 0.9)
    best = max((k * math.log(0.9) + math.sqrt(k), k) for k in range(N))
    assert res.log_value == pytest.approx(best[0], abs=1e-12)
    assert res.argmax == best[1] == 23
    assert res.log_value == pytest.approx(2.3725396631827147, abs=1e-12)
    assert not res.truncation_dominated


def test_legendre_truncation_flag():
    w = Weight.from_function("Z-", -10, -1, lambda n: 3.0 * (-n))
    assert legendre(w, 0.5).truncation_dominated


def test_lambda_envelope_small_enumeration():
    # (n+1)^2 0.5^n: 1, 2, 2.25, 2, 1.5625, ...
    res = lambda_envelope(np.zeros(30), 0.5)
    assert res.value == pytest.approx(2.25) and res.argmax == 2
    res = lambda_envelope(np.zeros(30), 1e-9)
    assert res.value == pytest.approx(1.0) and res.argmax == 0


def test_lambda_envelope_sqrt_brute_force():
    N = 10**6
    n = np.arange(N)
    res = lambda_envelope(np.sqrt(n), 0.99)
    best = max(range(0, 5000), key=lambda k: k * math.log(0.99) + 2 * math.log(k + 1) + math.sqrt(k))
    val = best * math.log(0.99) + 2 * math.log(best + 1) + math.sqrt(best)
    assert res.argmax == best
    assert res.log_value == pytest.approx(val, abs=1e-10)


def test_lambda_envelope_precondition():
    with pytest.raises(PreconditionFailed):
        lambda_envelope([0.0, -1.0], 0.5)


@given(st.integers(0, 10**6), st.floats(0.05, 0.9), st.floats(0.0, 0.09))
@settings(max_examples=40, deadline=None)
def test_legendre_monotone_and_dual_enumeration(seed, r, dr):
    rng = np.random.default_rng(seed)
    w = Weight("Z-", -40, np.abs(np.cumsum(rng.normal(0, 1, 40))))
    a, b = legendre(w, r), legendre(w, r + dr)
    assert a.log_value <= b.log_value + 1e-14
    # sup_n r^n / sigma*(n) by direct enumeration of the dual weight
    d = transform(w, "dual")
    direct = max(k * math.log(r) - d.log_at(k) for k in range(d.n_lo, d.n_hi + 1))
    assert a.log_value == pytest.approx(direct, abs=1e-12)
    u = np.abs(rng.normal(0, 3, 50))
    assert lambda_envelope(u, r).log_value <= lambda_envelope(u, r + dr).log_value + 1e-14


def test_transforms():
    w = _random_weight(3)
    dd = transform(transform(w, "dual"), "dual")
    assert dd.n_lo == w.n_lo and np.array_equal(dd.log_values, w.log_values)
    assert np.array_equal(transform(w, "power", s=2).log_values, 2 * w.log_values)
    wp = Weight.from_function("Z+", 0, 30, np.sqrt)
    chk = transform(wp, "check_variant")
    for n in range(1, 31):
        assert chk.log_at(-n) == pytest.approx(2 * math.log(n + 1) + math.sqrt(n), abs=1e-14)
    plain = transform(wp, "tail", squared=False)
    assert plain.log_at(-7) == pytest.approx(math.sqrt(7))
    with pytest.raises(DomainError):
        transform(w, "product", other=wp)
    prod = transform(wp, "product", other=wp)
    assert np.allclose(prod.log_values, 2 * wp.log_values)


def test_json_and_csv_round_trip(tmp_path):
    w = _random_weight(5, "Z-")
    p = tmp_path / "w.json"
    p.write_text(json.dumps(w.to_dict()))
    w2 = Weight.load(p)
    assert w2.support == "Z-" and np.array_equal(w2.log_values, w.log_values)
    q = tmp_path / "w.csv"
    w.to_csv(q)
    w3 = Weight.load(q)
    assert w3.n_lo == w.n_lo and np.allclose(w3.log_values, w.log_values, atol=0)
    q2 = tmp_path / "s.csv"
    q2.write_text("n,sigma\n0,1\n1,2\n2,4\n")
    w4 = Weight.load(q2)
    assert w4.support == "Z+" and np.allclose(w4.log_values, [0, math.log(2), math.log(4)])


def test_extension_rule():
    w = Weight.from_function("Z+", 0, 10, lambda n: 0.5 * n, extension="loglinear")
    assert w.log_at(15) == pytest.approx(7.5)
    with pytest.raises(InsufficientSupport):
        Weight.constant("Z+", 0, 10).log_at(11)


def test_classify_constant():
    rep = classify(Weight.constant("Z", -64, 64))
    assert rep.verdicts["class_S"]["verdict"] == PASS
    assert rep.log_concave_from == 0
    assert rep.ratio_inf <= rep.ratio_sup


@pytest.mark.parametrize("rho, expected", [(0.5, FAIL), (1.0, PASS), (2.0, FAIL)])
def test_classify_geometric(rho, expected):
    w = Weight.from_function("Z", -100, 100, lambda n: n * math.log(rho))
    assert classify(w).verdicts["class_S"]["verdict"] == expected


def test_classify_geometric_plus():
    w = Weight.from_function("Z+", 0, 200, lambda n: n * math.log(2.0))
    rep = classify(w)
    assert rep.verdicts["class_S+"]["verdict"] == FAIL
    m, bar_root, til_root = rep.envelope_root_trend[-1]
    assert til_root == pytest.approx(2.0)


def test_classify_borderline_tail_million():
    # sigma(-n) = exp(n / log(n+2)): sum log sigma / n^2 diverges, the 3/2 sum too
    N = 10**6
    w = Weight.from_function("Z-", -N, -1, lambda n: (-n) / np.log(-n + 2.0))
    rep = classify(w)
    assert rep.verdicts["log_sum_over_n2_diverges"]["verdict"] == PASS
    assert rep.verdicts["nqa_3_2"]["verdict"] == FAIL
    # partial sums at the checkpoints are increasing
    sums = [s for _, s in rep.nqa_partial_sums]
    assert all(b > a for a, b in zip(sums, sums[1:]))


def test_classify_power_tail():
    w = Weight.from_function("Z-", -4000, -1, lambda n: (-n) ** 0.7)
    rep = classify(w)
    v = rep.verdicts
    assert v["log_concave"]["verdict"] == PASS
    assert v["monotone_log_over_n^0.5"]["verdict"] == PASS
    assert v["log_sum_over_n2_diverges"]["verdict"] == FAIL
    assert v["log_concave_over_power"]["verdict"] == PASS


def test_classify_short_window():
    with pytest.raises(InsufficientSupport):
        classify(Weight.constant("Z+", 0, 5))


def test_classify_json_serializable():
    rep = classify(Weight.from_function("Z-", -300, -1, lambda n: np.sqrt(-n)))
    json.dumps(rep.to_dict())
