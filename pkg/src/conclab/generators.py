"""Random spaces and random functions with controlled Hoeffding structure."""
from __future__ import annotations

import itertools

import numpy as np

from .product_space import Factor, GridFunction, ProductSpace


def random_factor(rng: np.random.Generator, size: int | None = None, min_prob: float = 0.05) -> Factor:
    """A factor with ``size`` distinct atoms and probabilities bounded below."""
    k = int(rng.integers(2, 5)) if size is None else size
    raw = rng.dirichlet(np.ones(k))
    probs = min_prob + (1.0 - k * min_prob) * raw
    probs = probs / probs.sum()
    atoms = np.sort(rng.choice(np.arange(-20, 21), size=k, replace=False) / 4.0)
    return Factor(tuple(atoms.tolist()), tuple(probs.tolist()))


def random_space(rng: np.random.Generator, n: int, kind: str = "mixed") -> ProductSpace:
    """``kind``: ``cube`` (uniform signs), ``two_point`` (biased, arbitrary atoms)
    or ``mixed`` (2 to 4 atoms per factor)."""
    if kind == "cube":
        return ProductSpace.cube(n)
    if kind == "two_point":
        return ProductSpace(tuple(random_factor(rng, 2) for _ in range(n)))
    if kind == "mixed":
        return ProductSpace(tuple(random_factor(rng) for _ in range(n)))
    raise ValueError(f"unknown space kind {kind!r}")


def random_function(space: ProductSpace, rng: np.random.Generator, scale: float = 1.0) -> GridFunction:
    return GridFunction(space, scale * rng.standard_normal(space.total_states))


def _centred_coordinate_function(space: ProductSpace, i: int, rng: np.random.Generator) -> np.ndarray:
    """Random g(x_i) with E g = 0 and E g^2 = 1, broadcast along axis i."""
    fac = space.factors[i]
    p = np.asarray(fac.probs)
    g = rng.standard_normal(fac.size)
    g = g - np.dot(p, g)
    norm = np.sqrt(np.dot(p, g * g))
    if norm < 1e-8:
        # two atoms can draw equal values; fall back to the standardized coordinate
        g = (np.asarray(fac.atoms) - fac.mean) / fac.std
    else:
        g = g / norm
    shape = [1] * space.n
    shape[i] = fac.size
    return g.reshape(shape)


def random_pure_degree(
    space: ProductSpace,
    degree: int,
    rng: np.random.Generator,
    terms: int | None = None,
    standardized: bool = False,
) -> GridFunction:
    """A random function whose Hoeffding decomposition lives in ``degree`` only.

    Each term is a random coefficient times a product over a random subset S
    (|S| = degree) of centred one-coordinate functions.  With ``standardized``
    those are (x_i - m_i) / s_i, which gives chaos polynomials.
    """
    if degree == 0:
        return GridFunction.constant(space, float(rng.standard_normal()))
    subsets = list(itertools.combinations(range(space.n), degree))
    if not subsets:
        raise ValueError(f"degree {degree} exceeds n = {space.n}")
    count = len(subsets) if terms is None else min(terms, len(subsets))
    chosen = rng.choice(len(subsets), size=count, replace=False)
    acc = np.zeros(space.sizes)
    for idx in sorted(chosen):
        term = np.ones([1] * space.n)
        for i in subsets[idx]:
            if standardized:
                fac = space.factors[i]
                shape = [1] * space.n
                shape[i] = fac.size
                g = ((np.asarray(fac.atoms) - fac.mean) / fac.std).reshape(shape)
            else:
                g = _centred_coordinate_function(space, i, rng)
            term = term * g
        acc = acc + rng.standard_normal() * term
    return GridFunction.from_tensor(space, acc)


def random_chaos(
    space: ProductSpace,
    degrees,
    rng: np.random.Generator,
    terms: int | None = None,
    standardized: bool = True,
) -> GridFunction:
    """Sum of independent pure-degree parts, one per entry of ``degrees``."""
    acc = GridFunction.constant(space, 0.0)
    for d in degrees:
        acc = acc + random_pure_degree(space, d, rng, terms, standardized)
    return acc


def random_walsh(n: int, degrees, rng: np.random.Generator, terms: int = 8) -> GridFunction:
    """Sparse Walsh form on the uniform n-cube (works above the dense cap)."""
    space = ProductSpace.cube(n)
    coefs = {}
    for d in degrees:
        for _ in range(terms):
            s = frozenset(int(i) for i in rng.choice(n, size=d, replace=False))
            coefs[s] = coefs.get(s, 0.0) + float(rng.standard_normal())
    return GridFunction(space, walsh=coefs)
