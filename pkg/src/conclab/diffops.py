"""First- and second-order difference operators on product spaces.

D_i f  = f - E_i f
d_i f  = (1/2 E_i'(f - T_i f)^2)^{1/2}     (T_i resamples coordinate i)
d+_i f = (1/2 E_i'(f - T_i f)_+^2)^{1/2}
D_ij f = D_i D_j f
d_ij f = (1/4 E_ij'(f - T_i f - T_j f + T_ij f)^2)^{1/2}

All operators act on dense tables.  Coordinates are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .product_space import GridFunction, ProductSpace, SpaceError, expect_tensor

RADICAND_FLOOR = -1e-15


def _sqrt(r: np.ndarray) -> np.ndarray:
    lo = float(np.min(r)) if r.size else 0.0
    if lo < RADICAND_FLOOR:
        raise ArithmeticError(f"negative radicand {lo!r} in difference operator")
    return np.sqrt(np.maximum(r, 0.0))


# tensor kernels ------------------------------------------------------------

def _D(t: np.ndarray, space: ProductSpace, i: int) -> np.ndarray:
    return t - expect_tensor(t, space, [i])


def _d2(t: np.ndarray, space: ProductSpace, i: int) -> np.ndarray:
    """(d_i f)^2 via 1/2 ((D_i f)^2 + E_i (D_i f)^2)."""
    dt = _D(t, space, i)
    sq = dt * dt
    return 0.5 * (sq + expect_tensor(sq, space, [i]))


def _dplus2(t: np.ndarray, space: ProductSpace, i: int) -> np.ndarray:
    """(d+_i f)^2 by summing over the k_i replacement atoms."""
    tm = np.moveaxis(np.broadcast_to(t, space.sizes), i, -1)
    diff = tm[..., :, None] - tm[..., None, :]
    pos = np.maximum(diff, 0.0)
    out = 0.5 * np.sum(pos * pos * np.asarray(space.factors[i].probs), axis=-1)
    return np.moveaxis(out, -1, i)


def _grad_norm2(t: np.ndarray, space: ProductSpace, kind: str) -> np.ndarray:
    kernel = {"d": _d2, "dplus": _dplus2}[kind]
    out = np.zeros(space.sizes)
    for i in range(space.n):
        out = out + kernel(t, space, i)
    return out


def _dij2(t: np.ndarray, space: ProductSpace, i: int, j: int) -> np.ndarray:
    dd = _D(_D(t, space, j), space, i)
    sq = dd * dd
    ei = expect_tensor(sq, space, [i])
    ej = expect_tensor(sq, space, [j])
    eij = expect_tensor(ei, space, [j])
    return 0.25 * (sq + ei + ej + eij)


# domain types ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GradientField:
    components: tuple[GridFunction, ...]
    kind: str

    def norm(self) -> GridFunction:
        """Pointwise Euclidean norm."""
        space = self.components[0].space
        acc = np.zeros(space.total_states)
        for c in self.components:
            acc = acc + c.values * c.values
        return GridFunction(space, _sqrt(acc))


@dataclass(frozen=True, eq=False)
class HessianField:
    """Entries for i < j; the diagonal is zero and the field is symmetric."""

    space: ProductSpace
    upper: dict
    kind: str

    def entry(self, i: int, j: int) -> GridFunction:
        if i == j:
            return GridFunction.constant(self.space, 0.0)
        return self.upper[(min(i, j), max(i, j))]

    def hs_norm(self) -> GridFunction:
        """Pointwise Hilbert-Schmidt norm (both off-diagonal halves)."""
        acc = np.zeros(self.space.total_states)
        for g in self.upper.values():
            acc = acc + 2.0 * g.values * g.values
        return GridFunction(self.space, _sqrt(acc))


# operators ------------------------------------------------------------------

def _dense(f: GridFunction) -> GridFunction:
    return f if f.is_dense else f.dense()


def D_i(f: GridFunction, i: int) -> GridFunction:
    f = _dense(f)
    f.space.check_coordinate(i)
    return GridFunction.from_tensor(f.space, _D(f.tensor, f.space, i))


def d_i(f: GridFunction, i: int) -> GridFunction:
    f = _dense(f)
    f.space.check_coordinate(i)
    return GridFunction.from_tensor(f.space, _sqrt(_d2(f.tensor, f.space, i)))


def dplus_i(f: GridFunction, i: int) -> GridFunction:
    f = _dense(f)
    f.space.check_coordinate(i)
    return GridFunction.from_tensor(f.space, _sqrt(_dplus2(f.tensor, f.space, i)))


def gradient(f: GridFunction, kind: str = "d") -> GradientField:
    """The gradient field D f, d f or d+ f."""
    op = {"D": D_i, "d": d_i, "dplus": dplus_i}.get(kind)
    if op is None:
        raise ValueError(f"unknown gradient kind {kind!r}")
    f = _dense(f)
    return GradientField(tuple(op(f, i) for i in range(f.space.n)), kind)


def grad_norm(f: GridFunction, kind: str = "d") -> GridFunction:
    """|d f| or |d+ f| pointwise."""
    f = _dense(f)
    return GridFunction.from_tensor(f.space, _sqrt(_grad_norm2(f.tensor, f.space, kind)))


def D_ij(f: GridFunction, i: int, j: int) -> GridFunction:
    f = _dense(f)
    f.space.check_coordinate(i)
    f.space.check_coordinate(j)
    return GridFunction.from_tensor(f.space, _D(_D(f.tensor, f.space, j), f.space, i))


def d_ij(f: GridFunction, i: int, j: int) -> GridFunction:
    f = _dense(f)
    f.space.check_coordinate(i)
    f.space.check_coordinate(j)
    if i == j:
        raise SpaceError("d_ij needs i != j")
    return GridFunction.from_tensor(f.space, _sqrt(_dij2(f.tensor, f.space, i, j)))


def hessD(f: GridFunction) -> HessianField:
    """The de-diagonalized Hessian (D_ij f)_{i != j}."""
    f = _dense(f)
    space, t = f.space, f.tensor
    first = [_D(t, space, j) for j in range(space.n)]
    upper = {}
    for i in range(space.n):
        for j in range(i + 1, space.n):
            upper[(i, j)] = GridFunction.from_tensor(space, _D(first[j], space, i))
    return HessianField(space, upper, "D2")


def hessd(f: GridFunction) -> HessianField:
    """The Hessian of second-order L2 differences (d_ij f)_{i != j}."""
    f = _dense(f)
    space, t = f.space, f.tensor
    upper = {}
    for i in range(space.n):
        for j in range(i + 1, space.n):
            upper[(i, j)] = GridFunction.from_tensor(space, _sqrt(_dij2(t, space, i, j)))
    return HessianField(space, upper, "d2")


def hess_hs2(f: GridFunction, kind: str = "D2") -> GridFunction:
    """Pointwise squared Hilbert-Schmidt norm of the D2 or d2 Hessian."""
    f = _dense(f)
    space, t = f.space, f.tensor
    acc = np.zeros(space.sizes)
    if kind == "D2":
        first = [_D(t, space, j) for j in range(space.n)]
        for i in range(space.n):
            for j in range(i + 1, space.n):
                dd = _D(first[j], space, i)
                acc = acc + 2.0 * dd * dd
    elif kind == "d2":
        for i in range(space.n):
            for j in range(i + 1, space.n):
                acc = acc + 2.0 * _dij2(t, space, i, j)
    else:
        raise ValueError(f"unknown Hessian kind {kind!r}")
    return GridFunction.from_tensor(space, np.broadcast_to(acc, space.sizes))


def _iterated(f: GridFunction, kind: str) -> GridFunction:
    f = _dense(f)
    space = f.space
    g = _sqrt(_grad_norm2(f.tensor, space, kind))
    return GridFunction.from_tensor(space, _sqrt(_grad_norm2(g, space, kind)))


def iterated_d(f: GridFunction) -> GridFunction:
    """x -> |d |d f|| (x): the gradient norm applied to the scalar field |d f|."""
    return _iterated(f, "d")


def iterated_dplus(f: GridFunction) -> GridFunction:
    """x -> |d+ |d+ f|| (x)."""
    return _iterated(f, "dplus")
