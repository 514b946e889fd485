import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conclab import diffops, generators, laplacian
from conclab.hoeffding import decompose
from conclab.product_space import (
    Factor,
    GridFunction,
    ProductSpace,
    SpaceError,
    coordinate,
    expectation,
    monomial,
)


@st.composite
def functions(draw, max_n=4, kinds=("cube", "two_point", "mixed")):
    n = draw(st.integers(1, max_n))
    rng = np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1)))
    space = generators.random_space(rng, n, draw(st.sampled_from(kinds)))
    return generators.random_function(space, rng)


def scale(f):
    return max(1.0, f.sup_norm())


def test_eigenvalue_examples():
    s = ProductSpace.cube(3)
    assert np.allclose(laplacian.laplace(coordinate(s, 0)).values, 0.0)
    x01 = monomial(s, [0, 1])
    assert np.allclose(laplacian.laplace(x01).values, 2 * x01.values)
    x012 = monomial(s, [0, 1, 2])
    assert np.allclose(laplacian.laplace(x012).values, 6 * x012.values)


def test_first_order_examples():
    s = ProductSpace.cube(3)
    x01, x012 = monomial(s, [0, 1]), monomial(s, [0, 1, 2])
    assert np.allclose(laplacian.L1(x01).values, 2 * x01.values)
    assert np.allclose(laplacian.L1_power(x012, 2).values, 9 * x012.values)
    assert np.all(laplacian.L1(GridFunction.constant(s, 2.0)).values == 0)


def test_lstar_annihilates_lower_degree():
    s = ProductSpace.cube(3)
    assert np.allclose(laplacian.Lstar(monomial(s, [0, 1]), 3).values, 0.0)


@settings(max_examples=30, deadline=None)
@given(functions())
def test_matches_oracle(f):
    assert np.allclose(laplacian.laplace(f).values, oracles.L(f.space, list(f.values)), atol=1e-10 * scale(f))


@settings(max_examples=40, deadline=None)
@given(functions(max_n=6))
def test_spectral_theorem(f):
    rep = laplacian.spectrum(f)
    assert rep.ok
    dec = decompose(f)
    for d in range(f.space.n + 1):
        fd = dec.degree(d)
        resid = laplacian.laplace(fd).values - d * (d - 1) * fd.values
        assert np.max(np.abs(resid)) <= 1e-9 * scale(f)


@settings(max_examples=30, deadline=None)
@given(functions(), st.integers(0, 2 ** 32 - 1))
def test_self_adjoint_and_quadratic_form(f, seed):
    g = generators.random_function(f.space, np.random.default_rng(seed))
    lf, lg = laplacian.laplace(f), laplacian.laplace(g)
    a, b = expectation(lf * g), expectation(f * lg)
    pairs = sum(
        expectation(diffops.D_ij(f, i, j) * diffops.D_ij(g, i, j))
        for i, j in itertools.permutations(range(f.space.n), 2)
    )
    sc = max(1.0, scale(f) * scale(g))
    assert abs(a - b) <= 1e-10 * sc
    assert abs(a - pairs) <= 1e-10 * sc
    assert expectation(f * lf) >= -1e-10 * scale(f) ** 2


@settings(max_examples=30, deadline=None)
@given(functions())
def test_lstar_two_is_laplacian(f):
    if f.space.n < 2:
        return
    l1 = laplacian.L1
    poly = laplacian.Lstar(f, 2)
    assert np.allclose(poly.values, laplacian.laplace(f).values, atol=1e-10 * scale(f))
    assert np.allclose(poly.values, (l1(l1(f)) - l1(f)).values, atol=1e-10 * scale(f))
    assert np.allclose(laplacian.Lstar(f, 2, "direct").values, poly.values, atol=1e-10 * scale(f))


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 5), st.integers(0, 2 ** 32 - 1), st.data())
def test_lstar_falling_factorial(n, seed, data):
    rng = np.random.default_rng(seed)
    space = generators.random_space(rng, n, data.draw(st.sampled_from(["cube", "mixed"])))
    k = data.draw(st.integers(1, min(n, 4)))
    for d in range(n + 1):
        fd = generators.random_pure_degree(space, d, rng, terms=2)
        want = laplacian.falling_factorial(d, k) * fd.values
        direct = laplacian.Lstar(fd, k, "direct").values
        poly = laplacian.Lstar(fd, k).values
        assert np.allclose(direct, want, atol=1e-9 * scale(fd))
        assert np.allclose(poly, want, atol=1e-9 * scale(fd))


def test_permutation_examples():
    s = ProductSpace.cube(3)
    f = coordinate(s, 0)
    assert np.array_equal(laplacian.permute(f, [1, 2, 0]).values, coordinate(s, 2).values)
    sym = coordinate(s, 0) * coordinate(s, 1) + coordinate(s, 1) * coordinate(s, 2) + coordinate(s, 0) * coordinate(s, 2)
    for perm in itertools.permutations(range(3)):
        assert np.array_equal(laplacian.permute(sym, perm).values, sym.values)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1), st.data())
def test_permutation_invariance(n, seed, data):
    rng = np.random.default_rng(seed)
    fac = generators.random_factor(rng)
    space = ProductSpace((fac,) * n)
    f = generators.random_function(space, rng)
    perm = data.draw(st.permutations(range(n)))
    assert laplacian.permutation_invariance_check(f, perm) <= 1e-10 * scale(f)
    assert laplacian.permutation_invariance_check(f, range(n)) == 0.0


def test_permutation_rejects_mixed_factors():
    s = ProductSpace((Factor.symmetric_bernoulli(), Factor((0.0, 1.0), (0.3, 0.7))))
    with pytest.raises(SpaceError):
        laplacian.permute(coordinate(s, 0), [1, 0])


def test_spectrum_report_json():
    rep = laplacian.spectrum(monomial(ProductSpace.cube(3), [0, 1, 2]))
    out = rep.to_json()
    assert out["ok"] and out["degrees"][0]["eigenvalue"] == 6 and out["degrees"][0]["residual"] <= 1e-9
