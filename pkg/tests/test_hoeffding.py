import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conclab import generators
from conclab.hoeffding import (
    decompose,
    first_order,
    has_vanishing_low_order,
    project_degree,
    remainder,
)
from conclab.product_space import (
    Factor,
    GridFunction,
    ProductSpace,
    SpaceError,
    coordinate,
    expect_tensor,
    expectation,
    monomial,
    to_walsh,
)

BIASED = Factor((1.0, -1.0), (0.75, 0.25))


@st.composite
def functions(draw, max_n=4, kinds=("cube", "two_point", "mixed")):
    n = draw(st.integers(1, max_n))
    rng = np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1)))
    space = generators.random_space(rng, n, draw(st.sampled_from(kinds)))
    return generators.random_function(space, rng)


def test_constant_has_one_term():
    dec = decompose(GridFunction.constant(ProductSpace.cube(3), 2.5))
    assert dec.subsets == [frozenset()]
    assert dec.coefficients[frozenset()] == 2.5


def test_square_of_sum_on_cube():
    s = ProductSpace.cube(2)
    x0, x1 = coordinate(s, 0), coordinate(s, 1)
    f = (x0 + x1) * (x0 + x1)
    assert project_degree(f, 0).values == pytest.approx([2.0] * 4)
    assert np.allclose(project_degree(f, 1).values, 0.0)
    assert np.allclose(project_degree(f, 2).values, 2 * (x0 * x1).values)


def test_biased_product_by_hand():
    s = ProductSpace((BIASED, BIASED))
    x0, x1 = coordinate(s, 0), coordinate(s, 1)
    dec = decompose(x0 * x1)
    assert np.allclose(dec.degree(0).values, 0.25)
    assert np.allclose(dec.degree(1).values, (0.5 * (x0 - 0.5) + 0.5 * (x1 - 0.5)).values)
    assert np.allclose(dec.degree(2).values, ((x0 - 0.5) * (x1 - 0.5)).values)


def test_degree_two_of_cube_polynomial():
    s = ProductSpace.cube(2)
    f = coordinate(s, 0) + monomial(s, [0, 1])
    assert np.array_equal(project_degree(f, 2).values, monomial(s, [0, 1]).values)


def test_remainder_examples():
    s = ProductSpace.cube(3)
    assert np.allclose(remainder(coordinate(s, 0)).values, 0.0)
    x01 = monomial(s, [0, 1])
    assert np.allclose(remainder(x01).values, x01.values)
    x012 = monomial(s, [0, 1, 2])
    f = 1.0 + coordinate(s, 0) + x01 + x012
    assert np.allclose(remainder(f).values, (x01 + x012).values, atol=1e-15)


def test_sparse_walsh_paths():
    f = generators.random_walsh(40, (1, 2, 3), np.random.default_rng(0))
    r = remainder(f)
    assert all(len(s) >= 2 for s in r.walsh)
    assert all(len(s) == 1 for s in first_order(f).walsh)


@settings(max_examples=40, deadline=None)
@given(functions())
def test_terms_match_inclusion_exclusion_oracle(f):
    dec = decompose(f, "generic")
    table = list(f.values)
    scale = max(1.0, f.sup_norm())
    for r in range(f.space.n + 1):
        for S in itertools.combinations(range(f.space.n), r):
            want = np.array(oracles.hoeffding_term(f.space, table, S))
            assert np.allclose(dec.term(S).values, want, atol=1e-11 * scale)


@settings(max_examples=40, deadline=None)
@given(functions(max_n=5))
def test_term_invariants(f):
    dec = decompose(f)
    scale = max(1.0, f.sup_norm())
    total = sum(t.values for t in dec.terms.values())
    assert np.allclose(total, f.values, rtol=1e-9, atol=1e-12 * scale)
    for s, h in dec.terms.items():
        t = h.tensor
        for j in s:
            assert np.max(np.abs(expect_tensor(t, f.space, [j]))) <= 1e-9 * scale
        for j in set(range(f.space.n)) - s:
            assert np.ptp(t, axis=j).max(initial=0.0) <= 1e-12 * scale


@settings(max_examples=30, deadline=None)
@given(functions(max_n=5))
def test_degrees_orthogonal(f):
    dec = decompose(f)
    norm = expectation(f * f)
    parts = [dec.degree(d) for d in range(f.space.n + 1)]
    for a, b in itertools.combinations(parts, 2):
        assert abs(expectation(a * b)) <= 1e-9 * max(1.0, norm)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
def test_cube_fast_path_equals_generic(n, seed):
    f = generators.random_function(ProductSpace.cube(n), np.random.default_rng(seed))
    fast, slow = decompose(f, "walsh"), decompose(f, "generic")
    assert set(fast.subsets) == set(slow.subsets)
    for s in fast.subsets:
        assert np.allclose(fast.term(s).values, slow.term(s).values, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
def test_parseval(n, seed):
    f = generators.random_function(ProductSpace.cube(n), np.random.default_rng(seed))
    alpha = to_walsh(f, 0.0).walsh.values()
    assert sum(a * a for a in alpha) == pytest.approx(expectation(f * f), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
def test_uniqueness(n, seed):
    rng = np.random.default_rng(seed)
    space = generators.random_space(rng, n, "mixed")
    parts = {d: generators.random_pure_degree(space, d, rng, terms=2) for d in range(n + 1)}
    f = sum((p for p in parts.values()), GridFunction.constant(space, 0.0))
    dec = decompose(f)
    for d, p in parts.items():
        assert np.allclose(dec.degree(d).values, p.values, rtol=1e-9, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(functions(max_n=5))
def test_first_order_and_remainder(f):
    dec = decompose(f)
    assert np.allclose(first_order(f).values, dec.degree(1).values, atol=1e-11 * max(1.0, f.sup_norm()))
    assert has_vanishing_low_order(remainder(f))


def test_lowest_degree_and_json():
    s = ProductSpace.cube(3)
    dec = decompose(monomial(s, [0, 2]) + 0.5 * monomial(s, [0, 1, 2]))
    assert dec.lowest_degree() == 2
    rows = dec.to_json()
    assert [r["subset"] for r in rows] == [[0, 2], [0, 1, 2]]
    assert rows[0]["norm2"] == pytest.approx(1.0)


def test_generic_json_tabulates_over_subset():
    s = ProductSpace((BIASED, Factor((0.0, 1.0, 2.0), (0.2, 0.3, 0.5))))
    rng = np.random.default_rng(0)
    f = generators.random_function(s, rng)
    for row in decompose(f, "generic").to_json():
        size = int(np.prod([s.sizes[i] for i in row["subset"]]))
        assert len(row["values"]) == size


def test_walsh_method_rejects_biased_space():
    with pytest.raises(SpaceError):
        decompose(coordinate(ProductSpace((BIASED,)), 0), "walsh")
