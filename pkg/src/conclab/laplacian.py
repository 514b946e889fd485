"""The discrete Laplacian L = sum_{i != j} D_ij and its relatives.

L1 = sum_i D_i multiplies the degree-d Hoeffding term by d, so
L_k = L1^k acts as d^k and L*_k (sum over pairwise distinct k-tuples of
D_{i_1} ... D_{i_k}) acts as the falling factorial (d)_k.  L = L*_2.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .diffops import _D
from .hoeffding import decompose
from .product_space import GridFunction, SpaceError, expectation


def _dense(f: GridFunction) -> GridFunction:
    return f if f.is_dense else f.dense()


def laplace(f: GridFunction) -> GridFunction:
    """L f = sum over ordered pairs i != j of D_i D_j f."""
    f = _dense(f)
    space, t = f.space, f.tensor
    acc = np.zeros(space.sizes)
    for j in range(space.n):
        dj = _D(t, space, j)
        for i in range(space.n):
            if i != j:
                acc = acc + _D(dj, space, i)
    return GridFunction.from_tensor(space, acc)


def L1(f: GridFunction) -> GridFunction:
    f = _dense(f)
    space, t = f.space, f.tensor
    acc = np.zeros(space.sizes)
    for i in range(space.n):
        acc = acc + _D(t, space, i)
    return GridFunction.from_tensor(space, acc)


def L1_power(f: GridFunction, k: int) -> GridFunction:
    """L_k f = L1^k f."""
    if k < 1:
        raise SpaceError("power k must be >= 1")
    for _ in range(k):
        f = L1(f)
    return f


def Lstar(f: GridFunction, k: int, method: str = "polynomial") -> GridFunction:
    """L*_k f over pairwise distinct index tuples.

    ``polynomial`` evaluates L1 (L1 - 1) ... (L1 - k + 1) f; ``direct`` sums
    the k! orderings of every k-subset explicitly (validation only, O(n^k)).
    """
    f = _dense(f)
    n = f.space.n
    if not 1 <= k <= n:
        raise SpaceError(f"k must lie in 1..{n}")
    if method == "polynomial":
        g = f
        for m in range(k):
            g = L1(g) - m * g
        return g
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    space = f.space
    acc = np.zeros(space.sizes)
    for tup in itertools.permutations(range(n), k):
        t = f.tensor
        for i in reversed(tup):
            t = _D(t, space, i)
        acc = acc + t
    return GridFunction.from_tensor(space, acc)


@dataclass
class SpectralReport:
    """Per-degree Rayleigh quotients and eigen-residuals of L."""

    rows: list = field(default_factory=list)
    tol: float = 1e-9

    @property
    def ok(self) -> bool:
        return all(r["ok"] for r in self.rows)

    def to_json(self) -> dict:
        return {"ok": self.ok, "tol": self.tol, "degrees": self.rows}


def spectrum(f: GridFunction, tol: float = 1e-9) -> SpectralReport:
    """Check L f_d = d(d - 1) f_d for every Hoeffding degree present in f."""
    f = _dense(f)
    dec = decompose(f)
    norms = dec.degree_norms2()
    report = SpectralReport(tol=tol)
    for d in range(f.space.n + 1):
        if norms[d] == 0.0:
            continue
        fd = dec.degree(d)
        lfd = laplace(fd)
        resid = float(np.max(np.abs(lfd.values - d * (d - 1) * fd.values)))
        ef2 = expectation(fd * fd)
        scale = max(1.0, fd.sup_norm())
        report.rows.append({
            "degree": d,
            "norm2": ef2,
            "eigenvalue": d * (d - 1),
            "rayleigh": expectation(fd * lfd) / ef2 if ef2 > 0 else 0.0,
            "residual": resid,
            "ok": resid <= tol * scale,
        })
    return report


def permute(f: GridFunction, perm) -> GridFunction:
    """(f o pi)(x) = f(x_{pi^-1(1)}, ..., x_{pi^-1(n)}); needs identical factors."""
    f = _dense(f)
    space = f.space
    perm = list(perm)
    if sorted(perm) != list(range(space.n)):
        raise SpaceError(f"{perm} is not a permutation of 0..{space.n - 1}")
    if not space.is_iid:
        raise SpaceError("permutation invariance needs identical factors")
    # output axis j carries x_j, which feeds input slot pi(j)
    return GridFunction.from_tensor(space, np.transpose(f.tensor, axes=perm))


def permutation_invariance_check(f: GridFunction, perm) -> float:
    """sup |L(f o pi) - (L f) o pi|."""
    lhs = laplace(permute(f, perm))
    rhs = permute(laplace(f), perm)
    return float(np.max(np.abs(lhs.values - rhs.values)))


def falling_factorial(d: int, k: int) -> int:
    return math.perm(d, k) if d >= k else 0
