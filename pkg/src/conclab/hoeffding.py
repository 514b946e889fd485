"""Hoeffding decomposition f = sum_S h_S on a finite product space.

The generic path expands the identity Id = prod_i (E_i + D_i) one coordinate
at a time.  Every term is kept as a compact tensor that has size 1 along the
coordinates outside its subset, so the total storage is prod_i (1 + k_i)
rather than 2^n full tables.  On the uniform cube the terms are read off the
Walsh coefficients instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .product_space import (
    GridFunction,
    ProductSpace,
    SpaceError,
    expect_tensor,
    expectation,
    walsh_coefficients,
    _mask_to_set,
)

TERM_DROP = 1e-12
LOW_ORDER_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HoeffdingDecomposition:
    """Terms h_S of a function, keyed by frozenset of coordinates.

    ``parts`` holds compact broadcastable tensors (generic path);
    ``coefficients`` holds Walsh coefficients (cube path).  One of them is set.
    """

    space: ProductSpace
    parts: dict | None = None
    coefficients: dict | None = None

    @property
    def subsets(self) -> list[frozenset]:
        keys = self.parts if self.parts is not None else self.coefficients
        return sorted(keys, key=lambda s: (len(s), sorted(s)))

    def term(self, subset) -> GridFunction:
        s = frozenset(subset)
        if self.coefficients is not None:
            g = GridFunction(self.space, walsh={s: self.coefficients.get(s, 0.0)})
            return g.dense() if self.space.is_dense_ok else g
        if s in self.parts:
            return GridFunction.from_tensor(self.space, self.parts[s])
        return GridFunction.constant(self.space, 0.0)

    @cached_property
    def terms(self) -> dict:
        return {s: self.term(s) for s in self.subsets}

    def norm2(self, subset) -> float:
        """E h_S^2."""
        s = frozenset(subset)
        if self.coefficients is not None:
            return self.coefficients.get(s, 0.0) ** 2
        if s not in self.parts:
            return 0.0
        t = self.parts[s]
        return float(expect_tensor(t * t, self.space, range(self.space.n)).ravel()[0])

    def degree(self, d: int) -> GridFunction:
        """The degree-d aggregate f_d = sum over |S| = d of h_S."""
        if not 0 <= d <= self.space.n:
            raise SpaceError(f"degree {d} out of range 0..{self.space.n}")
        if self.coefficients is not None:
            g = GridFunction(self.space, walsh={s: a for s, a in self.coefficients.items() if len(s) == d})
            return g.dense() if self.space.is_dense_ok else g
        out = np.zeros(self.space.sizes)
        for s, t in self.parts.items():
            if len(s) == d:
                out = out + t
        return GridFunction.from_tensor(self.space, out)

    def degree_norms2(self) -> dict[int, float]:
        """E f_d^2 for every degree d (orthogonality makes this a sum over terms)."""
        out = {d: 0.0 for d in range(self.space.n + 1)}
        for s in self.subsets:
            out[len(s)] += self.norm2(s)
        return out

    def lowest_degree(self, tol: float = 0.0) -> int | None:
        norms = self.degree_norms2()
        for d in range(self.space.n + 1):
            if norms[d] > tol:
                return d
        return None

    def to_json(self) -> list[dict]:
        """Export; ``values`` is h_S tabulated over the coordinates in S only
        (mixed radix over the sorted subset, first coordinate least significant)."""
        out = []
        for s in self.subsets:
            row = {"subset": sorted(s)}
            if self.coefficients is not None:
                row["coef"] = self.coefficients[s]
            else:
                row["values"] = np.ravel(np.squeeze(self.parts[s], axis=tuple(i for i in range(self.space.n) if i not in s)), order="F").tolist()
            row["norm2"] = self.norm2(s)
            out.append(row)
        return out


def decompose(f: GridFunction, method: str = "auto") -> HoeffdingDecomposition:
    """Hoeffding decomposition of ``f``.

    ``method`` is ``"walsh"`` (uniform cube only), ``"generic"`` (dense tables,
    any space) or ``"auto"``.
    """
    space = f.space
    if method == "auto":
        method = "walsh" if space.is_uniform_cube else "generic"
    if method == "walsh":
        if not space.is_uniform_cube:
            raise SpaceError("Walsh decomposition requires the uniform cube")
        if not f.is_dense:
            coefs = {s: a for s, a in f.walsh.items() if abs(a) > TERM_DROP}
            return HoeffdingDecomposition(space, coefficients=coefs)
        alpha = walsh_coefficients(f)
        scale = max(1.0, float(np.max(np.abs(f.values))))
        idx = np.flatnonzero(np.abs(alpha) > TERM_DROP * scale)
        return HoeffdingDecomposition(space, coefficients={_mask_to_set(int(m)): float(alpha[m]) for m in idx})
    if method != "generic":
        raise ValueError(f"unknown method {method!r}")
    if not f.is_dense:
        f = f.dense()
    scale = max(1.0, f.sup_norm())
    keep = TERM_DROP * scale
    # intermediate pruning is finer so that dropped mass stays below the final threshold
    prune = keep * 2.0 ** -space.n
    parts = {frozenset(): f.tensor}
    for i in range(space.n):
        if space.factors[i].size == 1:
            continue
        nxt = {}
        for s, t in parts.items():
            e = expect_tensor(t, space, [i])
            d = t - e
            if np.max(np.abs(e)) > prune:
                nxt[s] = e
            if np.max(np.abs(d)) > prune:
                nxt[s | {i}] = d
        parts = nxt
    parts = {s: t for s, t in parts.items() if np.max(np.abs(t)) > keep}
    return HoeffdingDecomposition(space, parts=parts)


def project_degree(f: GridFunction, d: int) -> GridFunction:
    """The degree-d Hoeffding term f_d."""
    if not 0 <= d <= f.space.n:
        raise SpaceError(f"degree {d} out of range 0..{f.space.n}")
    if not f.is_dense:
        return GridFunction(f.space, walsh={s: a for s, a in f.walsh.items() if len(s) == d})
    if d == 0:
        return GridFunction.constant(f.space, expectation(f))
    return decompose(f).degree(d)


def first_order(f: GridFunction) -> GridFunction:
    """f_1 = sum_i (E_{all but i} f - E f), computed without the full decomposition."""
    if not f.is_dense:
        return GridFunction(f.space, walsh={s: a for s, a in f.walsh.items() if len(s) == 1})
    space = f.space
    t = f.tensor
    mean = expect_tensor(t, space, range(space.n))
    out = np.zeros(space.sizes)
    for i in range(space.n):
        marginal = expect_tensor(t, space, [j for j in range(space.n) if j != i])
        out = out + (marginal - mean)
    return GridFunction.from_tensor(space, out)


def remainder(f: GridFunction) -> GridFunction:
    """Rf = f - f_0 - f_1, the part of f of Hoeffding degree >= 2."""
    if not f.is_dense:
        return GridFunction(f.space, walsh={s: a for s, a in f.walsh.items() if len(s) >= 2})
    return f - expectation(f) - first_order(f)


def low_order_sizes(f: GridFunction) -> tuple[float, float]:
    """(|f_0|, sup |f_1|)."""
    return abs(expectation(f)), first_order(f).sup_norm()


def has_vanishing_low_order(f: GridFunction, tol: float = LOW_ORDER_TOL) -> bool:
    """True when |f_0| and sup |f_1| are below tol * max(1, sup |f|)."""
    f0, f1 = low_order_sizes(f)
    bound = tol * max(1.0, f.sup_norm())
    return f0 <= bound and f1 <= bound
