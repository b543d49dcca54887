import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftlab.series import CoeffVec, Hyperfunction, laurent_eval
from shiftlab.weights import Weight, envelope
from shiftlab.operators import (SpaceModel, shift, resolvent_T, divide, power_norm,
                                functional_norm, func_calc, r_n_op, sup_delta_bound,
                                weighted_power_matvec)
from shiftlab.errors import DomainError, Unbounded

LAMS = [0, 0.5, -0.5, 0.3 + 0.4j]


def poly(rng, deg):
    return CoeffVec(0, rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1))


def plus(cv):
    return Hyperfunction(cv, CoeffVec.zero(-1))


def test_shift_examples():
    t = shift(plus(CoeffVec(0, [1, 2, 3])), "T")
    assert np.array_equal(t.plus.coeffs, [2, 3])
    b = shift(plus(CoeffVec(0, [1])), "biS_inv")
    assert b.plus.is_empty or not np.any(b.plus.coeffs)
    assert b.minus.n_lo == -1 and b.minus.coeffs[0] == 1
    with pytest.raises(DomainError):
        shift(Hyperfunction.from_laurent(CoeffVec(-1, [1, 1])), "T")


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_bilateral_inverse_pair(seed):
    rng = np.random.default_rng(seed)
    f = Hyperfunction.from_laurent(CoeffVec(-8, rng.normal(size=17)))
    g = shift(shift(f, "biS_inv"), "biS")
    assert np.array_equal(g.laurent().window(-8, 8), f.laurent().window(-8, 8))
    g = shift(shift(f, "biS"), "biS_inv")
    assert np.array_equal(g.laurent().window(-8, 8), f.laurent().window(-8, 8))
    pp, pm = shift(f, "Pplus"), shift(f, "Pminus")
    assert np.array_equal((pp.laurent() + pm.laurent()).window(-8, 8), f.laurent().window(-8, 8))


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_TS_and_ST(seed):
    rng = np.random.default_rng(seed)
    f = plus(poly(rng, 10))
    ts = shift(shift(f, "S"), "T").plus
    assert np.array_equal(ts.window(0, 10), f.plus.window(0, 10))
    st_ = shift(shift(f, "T"), "S").plus
    expect = f.plus.window(0, 10).copy()
    expect[0] = 0
    assert np.array_equal(st_.window(0, 10), expect)


def test_resolvent_examples():
    f = CoeffVec(0, [0, 0, 1])
    assert np.allclose(resolvent_T(f, 0.5).coeffs, [0.25, 0.5, 1])
    assert np.array_equal(resolvent_T(f, 0).coeffs, f.coeffs)
    assert np.allclose(resolvent_T(CoeffVec(0, [1]), 0.7).coeffs, [1])
    with pytest.raises(DomainError):
        resolvent_T(f, 1.0)


def test_divide_examples():
    q = divide(CoeffVec(0, [-0.25, 0, 1]), 0.5)
    assert np.allclose(q.coeffs, [0.5, 1])
    assert np.allclose(divide(CoeffVec(0, [1]), 0.3).coeffs, [0])
    # z^3 + 2z at 0.3: quotient z^2 + 0.3 z + 2.09
    q = divide(CoeffVec(0, [0, 2, 0, 1]), 0.3)
    assert np.allclose(q.coeffs, [2.09, 0.3, 1], atol=1e-15)
    with pytest.raises(DomainError):
        divide(CoeffVec(0, [1, 1]), 1.2)


@given(st.integers(0, 10**6), st.sampled_from(LAMS))
@settings(max_examples=40, deadline=None)
def test_operator_identities(seed, lam):
    rng = np.random.default_rng(seed)
    N = 40
    f = poly(rng, N - 1)
    # T (I - lam T)^{-1} (S - lam) f = f
    sf = shift(plus(f), "S").plus - f.scale(lam)
    back = shift(plus(resolvent_T(sf, lam)), "T").plus
    assert np.max(np.abs(back.window(0, N - 1) - f.coeffs)) < 1e-12 * np.max(np.abs(f.coeffs)) * 10
    # (I - S T)(I - lam T)^{-1} f = f(lam) 1
    g = resolvent_T(f, lam)
    h = g - shift(shift(plus(g), "T"), "S").plus
    val = complex(laurent_eval(f, lam))
    assert abs(h[0] - val) < 1e-12 * (1 + abs(val))
    assert np.max(np.abs(h.coeffs[1:])) == 0


def test_eigenvector_of_T():
    lam, N = 0.6 - 0.2j, 80
    u = CoeffVec(0, lam ** np.arange(N + 1))
    tu = shift(plus(u), "T").plus
    res = tu.window(0, N) - lam * u.coeffs
    assert np.max(np.abs(res)) <= abs(lam) ** (N + 1) * 1.0001


def test_power_norm_examples():
    one = SpaceModel(Weight.constant("Z+", 0, 300), 2, 64, "disc")
    for m in (0, 3, 7):
        assert power_norm(one, "T", m).closed_form == 1.0
    r = power_norm(one, "S", 7)
    assert r.matrix_estimate == pytest.approx(1.0, abs=1e-15)
    w = Weight.from_function("Z+", 0, 300, lambda n: -np.log1p(n))
    r = power_norm(SpaceModel(w, 2, 64), "T", 2)
    assert r.closed_form == pytest.approx(3.0) and not r.at_edge
    assert r.matrix_estimate == pytest.approx(3.0, rel=1e-9)
    with pytest.raises(DomainError):
        power_norm(one.with_N(10), "biS_inv", 1)


def test_power_norm_matrix_oracle():
    # dense weighted shift matrix power vs the sliced matvec, and the SVD norm
    rng = np.random.default_rng(7)
    w = Weight("Z", -20, np.cumsum(rng.normal(0, 0.3, 41)))
    sp = SpaceModel(w, 2, 20, "hyper")
    n = 41
    D = np.diag(np.exp(w.log_values))
    A = np.diag(np.ones(n - 1), -1)  # raise index
    for m, op, M in ((3, "biS", np.linalg.matrix_power(A, 3)), (2, "biS_inv", np.linalg.matrix_power(A.T, 2))):
        Aw = D @ M @ np.linalg.inv(D)
        mv, _ = weighted_power_matvec(sp, 1 if op == "biS" else -1, m)
        x = rng.normal(size=n)
        assert np.allclose(mv(x), Aw @ x)
        assert power_norm(sp, op, m).matrix_estimate == pytest.approx(np.linalg.norm(Aw, 2), rel=1e-6)


def test_power_norm_p_not_two_bracket():
    w = Weight.from_function("Z+", 0, 200, lambda n: np.sqrt(n))
    r = power_norm(SpaceModel(w, 1.5, 64), "S", 4)
    assert r.lower <= r.upper * (1 + 1e-12)


def test_power_norm_monotone_in_N():
    w = Weight.from_function("Z+", 0, 600, lambda n: 2 * np.log1p(n))
    ests = [power_norm(SpaceModel(w, 2, N), "T", 3).matrix_estimate for N in (64, 128, 256)]
    assert ests[0] <= ests[1] <= ests[2] <= 1.0


def test_functional_norms():
    sp = SpaceModel(Weight.constant("Z+", 0, 400), 2, 400)
    r = functional_norm(sp, "delta", lam=0.6)
    assert r.closed_form == pytest.approx(1.25, rel=1e-12)
    assert r.matrix_estimate == pytest.approx(1.25, rel=1e-12)
    w = Weight("Z+", 0, [0.0, 0.0, 0.0, math.log(5.0)] + [0.0] * 10)
    r = functional_norm(SpaceModel(w, 2, 13), "L", n=3)
    assert r.closed_form == pytest.approx(0.2)
    w = Weight.from_function("Z+", 0, 5000, lambda n: 2 * np.log1p(n))
    sp = SpaceModel(w, 2, 5000)
    b = sup_delta_bound(sp)
    assert b <= math.sqrt(math.pi ** 4 / 90)
    for lam in (0.9, 0.99, -0.999j):
        assert functional_norm(sp, "delta", lam=lam).closed_form <= b


@given(st.floats(0.0, 0.95), st.floats(0, 2 * math.pi), st.sampled_from([1.5, 2.0, 3.0]))
@settings(max_examples=30, deadline=None)
def test_delta_norm_two_routes(rad, ang, p):
    w = Weight.from_function("Z+", 0, 200, lambda n: 0.5 * np.log1p(n))
    sp = SpaceModel(w, p, 200)
    r = functional_norm(sp, "delta", lam=rad * np.exp(1j * ang))
    assert r.relative_gap < 1e-10


def test_lemma_chain_bound():
    w = Weight.from_function("Z+", 0, 100, lambda n: np.sqrt(n))
    sp = SpaceModel(w, 2, 100)
    for n in range(0, 20):
        r = functional_norm(sp, "L", n=n)
        assert r.closed_form <= r.upper * (1 + 1e-12)


def _hyper_space(N, tail_log):
    disc = Weight.constant("Z+", 0, N)
    tail = Weight.from_function("Z-", -N, -1, tail_log)
    return SpaceModel.hyper_from(disc, tail, N)


def test_func_calc_examples():
    rng = np.random.default_rng(5)
    sp = _hyper_space(20, lambda n: 0 * n)
    f = Hyperfunction.from_laurent(CoeffVec(-5, rng.normal(size=11)))
    r = func_calc(CoeffVec.monomial(0), sp, f)
    assert np.array_equal(r.value.laurent().window(-20, 20), f.laurent().window(-20, 20))
    r = func_calc(CoeffVec.monomial(-1), sp, f)
    g = shift(f, "biS_inv")
    assert np.array_equal(r.value.laurent().window(-20, 20), g.laurent().window(-20, 20))


def test_func_calc_exponential_tail():
    # w = exp(1/zeta) truncated, f = 1, tail weight exp(n^2)
    N = 40
    sp = _hyper_space(N, lambda n: n.astype(float) ** 2)
    w = CoeffVec(-29, [1 / math.factorial(k) for k in range(29, -1, -1)])
    r = func_calc(w, sp, Hyperfunction.from_plus([1.0]))
    assert math.isfinite(r.log_guard_sum)
    got = r.value.laurent()
    for k in range(30):
        assert abs(got[-k] - 1 / math.factorial(k)) < 1e-10
    z = 1.7
    assert abs(laurent_eval(got, z) - math.exp(1 / z)) < 1e-10
    assert r.summability["verdict"] == "divergent"
    with pytest.raises(Unbounded):
        func_calc(w, sp, Hyperfunction.from_plus([1.0]), strict=True)


def test_func_calc_insufficient_window_is_unbounded():
    sp = _hyper_space(10, lambda n: 0 * n)
    with pytest.raises(Unbounded):
        func_calc(CoeffVec.monomial(-30), sp, Hyperfunction.from_plus([1.0]))


def test_r_n_examples():
    tail = Weight.from_function("Z-", -50, -1, lambda n: (-n) ** 0.8)
    out, _ = r_n_op(CoeffVec(0, [1]), 3, tail)
    assert out.n_lo == -3 and np.allclose(out.coeffs, [1, 0, 0])
    out, _ = r_n_op(CoeffVec(0, [0, 1]), 1, tail)
    assert np.allclose(out.coeffs, [0])


def test_r_n_norm_dense_oracle():
    rng = np.random.default_rng(11)
    tail = Weight.from_function("Z-", -50, -1, lambda n: (-n) ** 0.8)
    disc = Weight.from_function("Z+", 0, 50, lambda n: 0.3 * np.sqrt(n))
    g = CoeffVec(0, rng.normal(size=11))
    n = 5
    out, est = r_n_op(g, n, tail, disc)
    M = np.zeros((n, 11))  # rows: tail indices -n..-1, cols: disc indices 0..10
    for m in range(min(n, 11)):
        M[m, m] = math.exp(tail.log_at(m - n) - disc.log_at(m))
    assert est == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)
    assert np.allclose(out.coeffs, g.coeffs[:n])
