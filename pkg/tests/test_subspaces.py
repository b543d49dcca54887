import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftlab.series import CoeffVec, laurent_eval
from shiftlab.weights import Weight
from shiftlab.operators import SpaceModel
from shiftlab.subspaces import (TruncSubspace, zero_set, division_check, subspace_index, quotient_U,
                                u_power_norms, recursion_basis, glue_test, boundary_functional)
from shiftlab.errors import DomainError, NumericalError, PreconditionFailed


def space(N, log_fn=None):
    w = Weight.constant("Z+", 0, N) if log_fn is None else Weight.from_function("Z+", 0, N, log_fn)
    return SpaceModel(w, 2, N)


def poly_from_roots(roots):
    c = np.array([1.0 + 0j])
    for a in roots:
        c = np.convolve(c, [1.0, -1.0 / a])  # (1 - z/a)
    return CoeffVec(0, c)


def zero_free(rng, deg):
    rad = rng.uniform(1.2, 3.0, deg)
    return poly_from_roots(rad * np.exp(2j * np.pi * rng.uniform(size=deg)))


def disc_grid(rng, n, rmax=0.9):
    return np.sqrt(rng.uniform(0, rmax ** 2, n)) * np.exp(2j * np.pi * rng.uniform(size=n))


def test_from_generator_examples():
    sp = space(8)
    P = TruncSubspace.from_generator(CoeffVec(0, [1.0]), sp)
    assert P.rank == 9 and P.z_invariant
    M = TruncSubspace.from_generator(CoeffVec(0, [1.0, -0.5]), sp)
    assert M.rank == 8 and M.z_invariant and M.edge_columns == 1
    with pytest.raises(DomainError):
        TruncSubspace.from_generator(CoeffVec(0, [0.0]), sp)


def test_zero_set_examples():
    sp = space(16)
    Z = TruncSubspace.from_generator(CoeffVec(0, [0, 1.0]), sp)
    assert zero_set(Z, [0.0])[0]["zero"]
    P = TruncSubspace.from_generator(CoeffVec(0, [1.0]), sp)
    assert not any(z["zero"] for z in zero_set(P, [0, 0.5, -0.3j]))
    g = CoeffVec(0, np.convolve([-0.3, 1.0], [1.0, -0.5]))
    G = TruncSubspace.from_generator(g, sp)
    grid = np.round(np.arange(0.2, 0.41, 0.01), 2)
    flagged = [z["lam"].real for z in zero_set(G, grid) if z["zero"]]
    assert flagged == [0.3]


def test_zero_set_matches_direct_minimization():
    # the restricted evaluation norm equals max |f(lam)| over unit f in M (random search lower bound)
    rng = np.random.default_rng(0)
    sp = space(12, lambda n: 0.5 * np.log1p(n))
    M = TruncSubspace.from_generator(CoeffVec(0, [-0.4, 1.0]), sp)
    lam = 0.1 + 0.2j
    e = M.eval_row(lam)
    best = 0.0
    for _ in range(2000):
        x = rng.normal(size=M.rank) + 1j * rng.normal(size=M.rank)
        y = M.frame @ (x / np.linalg.norm(x))
        best = max(best, abs(complex(laurent_eval(M.to_coeffs(y), lam))))
    v = zero_set(M, [lam])[0]["eval_norm"] * np.linalg.norm(e)
    assert best <= v * (1 + 1e-12) and best > 0.5 * v


def test_division_examples():
    sp = space(16)
    M = TruncSubspace.from_generator(CoeffVec(0, [1.0, -0.5]), sp)
    for lam in (0.0, 0.5j):
        r = division_check(M, lam)
        assert r.has_division and r.index == 1
    Z = TruncSubspace.from_generator(CoeffVec(0, [0, 1.0]), sp)
    assert not division_check(Z, 0.0).has_division
    P = TruncSubspace.from_generator(CoeffVec(0, [1.0]), sp)
    for lam in (0.0, 0.3, -0.7j):
        r = division_check(P, lam)
        assert r.has_division and r.index == 1
    with pytest.raises(DomainError):
        division_check(M, 1.0)


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_division_iff_zero_free_index_one(seed):
    rng = np.random.default_rng(seed)
    lam0 = complex(disc_grid(rng, 1, 0.8)[0])
    g = CoeffVec(0, np.convolve([-lam0, 1.0], zero_free(rng, 2).coeffs))
    M = TruncSubspace.from_generator(g, space(20))
    grid = list(disc_grid(rng, 8)) + [lam0]
    zs = zero_set(M, grid)
    for lam, z in zip(grid, zs):
        r = division_check(M, lam)
        assert r.has_division == ((not z["zero"]) and r.index_at_lam == 1)
    assert zs[-1]["zero"] and not division_check(M, lam0).has_division


@given(st.integers(0, 10**6))
@settings(max_examples=10, deadline=None)
def test_division_verdict_constant_on_grid_and_basis_independent(seed):
    rng = np.random.default_rng(seed)
    M = TruncSubspace.from_generator(zero_free(rng, 3), space(20))
    raw = M.with_basis(orthonormal=False)
    verdicts = []
    for lam in disc_grid(rng, 50):
        a = division_check(M, lam)
        b = division_check(raw, lam)
        assert a.has_division == b.has_division
        verdicts.append(a.has_division)
    assert len(set(verdicts)) == 1 and verdicts[0]


def test_quotient_examples():
    sp = space(16)
    M = TruncSubspace.from_generator(CoeffVec(0, [1.0, -0.5]), sp)
    q = quotient_U(M, 0.0, mu=0.2)
    assert q.dim == 1
    # S_M is multiplication by the zero of the generator, so U_0 = 1/2
    assert q.S_M[0, 0] == pytest.approx(2.0) and q.U[0, 0] == pytest.approx(0.5)
    assert q.resolvent_residual < 1e-12 and q.intertwining_residual < 1e-12
    P = TruncSubspace.from_generator(CoeffVec(0, [1.0]), sp)
    assert quotient_U(P, 0.3).dim == 0
    G = TruncSubspace.from_generator(CoeffVec(0, [-0.3, 1.0]), sp)
    with pytest.raises(NumericalError):
        quotient_U(G, 0.3)


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_quotient_resolvent_identity(seed):
    rng = np.random.default_rng(seed)
    M = TruncSubspace.from_generator(zero_free(rng, int(rng.integers(1, 5))), space(24))
    lam, mu = disc_grid(rng, 2, 0.8)
    q = quotient_U(M, lam, mu)
    assert q.resolvent_residual < 1e-9 and q.intertwining_residual < 1e-9
    # eigenvalues of S_M are the zeros of the generator
    roots = np.roots(M.generator.coeffs[::-1])
    assert np.allclose(np.sort_complex(np.linalg.eigvals(q.S_M)), np.sort_complex(roots), atol=1e-8)


def test_recursion_examples():
    r = recursion_basis(CoeffVec(0, [1.0]), 5)
    assert np.array_equal(r.alpha, [1, 0, 0, 0, 0, 0])
    r = recursion_basis(CoeffVec(0, [1.0, 1.0]), 6)
    assert np.array_equal(r.alpha, [1, -1, 1, -1, 1, -1, 1])
    assert np.allclose(r.v[0].coeffs, [-1]) and np.allclose(r.v[1].coeffs, [1])
    with pytest.raises(DomainError):
        recursion_basis(CoeffVec(0, [2.0, 1.0]), 3)


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_recursion_identity_exact(seed):
    rng = np.random.default_rng(seed)
    u = zero_free(rng, 3)
    r = recursion_basis(u.scale(1 / u[0]), 20)
    assert max(r.residuals) <= 1e-12


def test_glue_examples():
    sp = space(16)
    tail = Weight.from_function("Z-", -16, -1, lambda n: n.astype(float) ** 2)
    P = TruncSubspace.from_generator(CoeffVec(0, [1.0]), sp)
    rep = glue_test(P, tail, 10)
    assert rep.max_residual < 1e-14 and max(rep.lift_norms) == 0
    M = TruncSubspace.from_generator(CoeffVec(0, [1.0, -0.5]), sp)
    rep = glue_test(M, tail, 10)
    assert rep.summability["verdict"] == "convergent"
    assert rep.max_residual < 1e-8 and max(rep.recursion) == 0
    # U_0 = 1/2 on the one-dimensional quotient
    u = np.array(rep.u_norms)
    assert np.allclose(u[1:] / u[:-1], 0.5)
    G = TruncSubspace.from_generator(CoeffVec(0, [1.0, -2.0]), sp)
    with pytest.raises(PreconditionFailed):
        glue_test(G, Weight.constant("Z-", -16, -1), 10)


def test_boundary_functional():
    sp = SpaceModel(Weight.from_function("Z+", 0, 64, lambda n: 2 * np.log1p(n)), 2, 64)
    rep = boundary_functional(sp, 1.0)
    assert rep.phi_one == 1 and rep.kernel.rank == 64
    assert all(d.has_division for d in rep.division)
    assert rep.intertwining_residual < 1e-12 and rep.kernel.z_invariant
    # (z - zeta) q lies in the kernel
    rng = np.random.default_rng(3)
    zeta = np.exp(0.7j)
    rep = boundary_functional(sp, zeta)
    q = rng.normal(size=20)
    f = CoeffVec(0, np.convolve([-zeta, 1.0], q))
    assert rep.kernel.contains(f)
    with pytest.raises(PreconditionFailed):
        boundary_functional(space(64), 1.0)
