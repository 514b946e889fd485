"""Finite product probability spaces and functions tabulated on them.

States are indexed in mixed radix with coordinate 0 as the least significant
digit.  Internally a dense table of length ``total_states`` is viewed as a
tensor of shape ``(k_0, ..., k_{n-1})`` in Fortran order, so axis ``i`` is
coordinate ``i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

DENSE_CAP = 2 ** 24
WALSH_DROP = 1e-12
_CHUNK = 1 << 16


class SpaceError(ValueError):
    """Invalid space, function or representation."""


@dataclass(frozen=True)
class Factor:
    """A finite probability measure on distinct real atoms."""

    atoms: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        if len(atoms) < 1 or len(atoms) != len(probs):
            raise SpaceError("factor needs matching, nonempty atoms and probs")
        if len(set(atoms)) != len(atoms):
            raise SpaceError(f"atoms must be pairwise distinct: {atoms}")
        if not all(math.isfinite(a) for a in atoms):
            raise SpaceError("atoms must be finite")
        if not all(p > 0 and math.isfinite(p) for p in probs):
            raise SpaceError(f"probabilities must be positive: {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise SpaceError(f"probabilities must sum to 1, got {math.fsum(probs)!r}")

    @classmethod
    def symmetric_bernoulli(cls) -> Factor:
        return cls((1.0, -1.0), (0.5, 0.5))

    @classmethod
    def bernoulli(cls, p: float, a: float = 1.0, b: float = -1.0) -> Factor:
        """``p * delta_a + (1 - p) * delta_b``."""
        return cls((a, b), (p, 1.0 - p))

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def is_symmetric_bernoulli(self) -> bool:
        return (
            self.size == 2
            and set(self.atoms) == {1.0, -1.0}
            and all(abs(p - 0.5) <= 1e-12 for p in self.probs)
        )

    @property
    def mean(self) -> float:
        return math.fsum(a * p for a, p in zip(self.atoms, self.probs))

    @property
    def std(self) -> float:
        m = self.mean
        return math.sqrt(math.fsum(p * (a - m) ** 2 for a, p in zip(self.atoms, self.probs)))


@dataclass(frozen=True)
class ProductSpace:
    """The product measure of a list of factors."""

    factors: tuple[Factor, ...]
    dense_cap: int = DENSE_CAP

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise SpaceError("a product space needs at least one factor")

    @classmethod
    def cube(cls, n: int, dense_cap: int = DENSE_CAP) -> ProductSpace:
        """The uniform discrete cube {+1, -1}^n."""
        return cls(tuple(Factor.symmetric_bernoulli() for _ in range(n)), dense_cap)

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    @property
    def total_states(self) -> int:
        return math.prod(self.sizes)

    @property
    def is_dense_ok(self) -> bool:
        return self.total_states <= self.dense_cap

    @property
    def is_uniform_cube(self) -> bool:
        return all(f.is_symmetric_bernoulli for f in self.factors)

    @property
    def is_two_point(self) -> bool:
        return all(f.size == 2 for f in self.factors)

    @property
    def is_iid(self) -> bool:
        return all(f == self.factors[0] for f in self.factors)

    def require_dense(self):
        if not self.is_dense_ok:
            raise SpaceError(
                f"{self.total_states} states exceed the dense cap {self.dense_cap}; "
                "use the sparse Walsh / Monte Carlo path"
            )

    def prob_tensor(self, i: int) -> np.ndarray:
        """Probabilities of factor ``i`` shaped to broadcast along axis ``i``."""
        shape = [1] * self.n
        shape[i] = self.factors[i].size
        return np.asarray(self.factors[i].probs).reshape(shape)

    @cached_property
    def weights(self) -> np.ndarray:
        """Flat table of state probabilities."""
        self.require_dense()
        w = np.ones(self.sizes)
        for i in range(self.n):
            w = w * self.prob_tensor(i)
        w = np.ravel(w, order="F")
        w.flags.writeable = False
        return w

    def coordinate_values(self, i: int) -> np.ndarray:
        """Flat table of the atom value of coordinate ``i`` at every state."""
        self.require_dense()
        shape = [1] * self.n
        shape[i] = self.factors[i].size
        t = np.broadcast_to(np.asarray(self.factors[i].atoms).reshape(shape), self.sizes)
        return np.ravel(t, order="F")

    def check_coordinate(self, i: int):
        if not (isinstance(i, (int, np.integer)) and 0 <= i < self.n):
            raise SpaceError(f"coordinate {i!r} out of range 0..{self.n - 1}")


@dataclass(frozen=True)
class PointIndex:
    """A state of a product space as a single mixed-radix integer."""

    state: int
    sizes: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.state < math.prod(self.sizes):
            raise SpaceError(f"state {self.state} out of range")

    @classmethod
    def encode(cls, digits: Iterable[int], sizes: tuple[int, ...]) -> PointIndex:
        state, radix = 0, 1
        digits = list(digits)
        if len(digits) != len(sizes):
            raise SpaceError("digit vector length does not match space")
        for d, k in zip(digits, sizes):
            if not 0 <= d < k:
                raise SpaceError(f"digit {d} out of range for factor of size {k}")
            state += int(d) * radix
            radix *= k
        return cls(state, tuple(sizes))

    def decode(self) -> tuple[int, ...]:
        out, s = [], self.state
        for k in self.sizes:
            s, d = divmod(s, k)
            out.append(d)
        return tuple(out)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A real function on a product space.

    Exactly one of ``values`` (dense flat table) or ``walsh`` (map from
    coordinate subsets to Walsh coefficients; uniform cube only) is set.
    """

    space: ProductSpace
    values: np.ndarray | None = None
    walsh: Mapping[frozenset, float] | None = field(default=None)

    def __post_init__(self):
        if (self.values is None) == (self.walsh is None):
            raise SpaceError("give exactly one of dense values or Walsh coefficients")
        if self.values is not None:
            self.space.require_dense()
            v = np.array(self.values, dtype=float).ravel()
            if v.size != self.space.total_states:
                raise SpaceError(f"dense table has {v.size} entries, space has {self.space.total_states}")
            if not np.all(np.isfinite(v)):
                raise SpaceError("function values must be finite")
            v.flags.writeable = False
            object.__setattr__(self, "values", v)
        else:
            if not self.space.is_uniform_cube:
                raise SpaceError("Walsh representation requires the uniform cube")
            coefs = {}
            for s, a in dict(self.walsh).items():
                s = frozenset(int(i) for i in s)
                if any(not 0 <= i < self.space.n for i in s):
                    raise SpaceError(f"subset {sorted(s)} outside 0..{self.space.n - 1}")
                if not math.isfinite(a):
                    raise SpaceError("Walsh coefficients must be finite")
                coefs[s] = coefs.get(s, 0.0) + float(a)
            object.__setattr__(self, "walsh", coefs)

    @classmethod
    def from_tensor(cls, space: ProductSpace, tensor: np.ndarray) -> GridFunction:
        t = np.broadcast_to(tensor, space.sizes)
        return cls(space, np.ravel(t, order="F"))

    @classmethod
    def constant(cls, space: ProductSpace, c: float) -> GridFunction:
        if space.is_dense_ok:
            return cls(space, np.full(space.total_states, float(c)))
        return cls(space, walsh={frozenset(): float(c)})

    @classmethod
    def from_callable(cls, space: ProductSpace, func) -> GridFunction:
        """Tabulate ``func(x)`` where ``x`` is an array of atom values, shape (states, n)."""
        x = np.stack([space.coordinate_values(i) for i in range(space.n)], axis=1)
        return cls(space, np.asarray(func(x), dtype=float))

    @property
    def is_dense(self) -> bool:
        return self.values is not None

    @property
    def tensor(self) -> np.ndarray:
        return self.dense().values.reshape(self.space.sizes, order="F")

    def dense(self) -> GridFunction:
        if self.is_dense:
            return self
        return from_walsh(self)

    def sup_norm(self) -> float:
        if self.is_dense:
            return float(np.max(np.abs(self.values)))
        if self.space.is_dense_ok:
            return self.dense().sup_norm()
        raise SpaceError("sup norm of a sparse function above the dense cap")

    def map(self, func) -> GridFunction:
        return GridFunction(self.space, func(self.dense().values))

    def __abs__(self):
        return self.map(np.abs)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            _same_space(self, other)
            return GridFunction(self.space, self.dense().values * other.dense().values)
        if not self.is_dense:
            return GridFunction(self.space, walsh={s: a * other for s, a in self.walsh.items()})
        return GridFunction(self.space, self.values * float(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            _same_space(self, other)
            if not self.is_dense and not other.is_dense:
                out = dict(self.walsh)
                for s, a in other.walsh.items():
                    out[s] = out.get(s, 0.0) + a
                return GridFunction(self.space, walsh=out)
            return GridFunction(self.space, self.dense().values + other.dense().values)
        if not self.is_dense:
            out = dict(self.walsh)
            out[frozenset()] = out.get(frozenset(), 0.0) + float(other)
            return GridFunction(self.space, walsh=out)
        return GridFunction(self.space, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def allclose(self, other: GridFunction, rtol: float = 1e-9, atol: float = 0.0) -> bool:
        _same_space(self, other)
        a, b = self.dense().values, other.dense().values
        scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
        return bool(np.max(np.abs(a - b)) <= rtol * scale + atol)


def _same_space(f: GridFunction, g: GridFunction):
    if f.space != g.space:
        raise SpaceError("functions live on different spaces")


def coordinate(space: ProductSpace, i: int) -> GridFunction:
    """The coordinate projection x -> x_i."""
    space.check_coordinate(i)
    if not space.is_dense_ok:
        if space.is_uniform_cube:
            return GridFunction(space, walsh={frozenset([i]): 1.0})
        space.require_dense()
    return GridFunction(space, space.coordinate_values(i))


def monomial(space: ProductSpace, subset: Iterable[int], centered: bool = False) -> GridFunction:
    """Product of coordinates in ``subset``; with ``centered`` each factor is
    replaced by its standardized version (x_i - m_i) / s_i."""
    subset = sorted(set(subset))
    for i in subset:
        space.check_coordinate(i)
    if not space.is_dense_ok and space.is_uniform_cube:
        return GridFunction(space, walsh={frozenset(subset): 1.0})
    space.require_dense()
    out = np.ones(space.total_states)
    for i in subset:
        x = space.coordinate_values(i)
        if centered:
            fac = space.factors[i]
            if fac.std == 0:
                raise SpaceError(f"coordinate {i} is deterministic and cannot be standardized")
            x = (x - fac.mean) / fac.std
        out = out * x
    return GridFunction(space, out)


def _dense_values(f: GridFunction) -> np.ndarray:
    if f.is_dense:
        return f.values
    f.space.require_dense()
    return from_walsh(f).values


def expectation(f: GridFunction) -> float:
    """Exact integral of ``f`` against the product measure."""
    if not f.is_dense:
        return float(f.walsh.get(frozenset(), 0.0))
    return float(np.sum(f.values * f.space.weights))


def expect_tensor(t: np.ndarray, space: ProductSpace, axes: Iterable[int]) -> np.ndarray:
    """Integrate a (broadcastable) tensor over the given coordinates, keeping dims."""
    for i in axes:
        if t.shape[i] == 1:
            continue
        t = np.sum(t * space.prob_tensor(i), axis=i, keepdims=True)
    return t


def partial_expectation(f: GridFunction, i: int) -> GridFunction:
    """E_i f: integrate out coordinate ``i``, result constant along that axis."""
    f.space.check_coordinate(i)
    t = f.dense().tensor
    return GridFunction.from_tensor(f.space, expect_tensor(t, f.space, [i]))


def entropy(g: GridFunction) -> float:
    """Ent(g) = E g log g - E g log E g, with 0 log 0 = 0."""
    v = _dense_values(g)
    if np.any(v < 0):
        raise SpaceError("entropy needs a nonnegative function")
    w = g.space.weights
    with np.errstate(divide="ignore", invalid="ignore"):
        glogg = np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)
    m = float(np.sum(v * w))
    ent = float(np.sum(glogg * w)) - (m * math.log(m) if m > 0 else 0.0)
    if ent < 0:
        if ent < -1e-12 * max(1.0, abs(m)):
            raise ArithmeticError(f"entropy came out negative: {ent!r}")
        ent = 0.0
    return ent


def sample_digits(space: ProductSpace, seed: int, count: int) -> np.ndarray:
    """i.i.d. draws from the product measure as a (count, n) array of digits.

    Draws are generated in fixed chunks, coordinate by coordinate, from one
    PCG64 stream, so the output depends only on ``(space, seed, count)``.
    """
    if count < 0:
        raise SpaceError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    dtype = np.int8 if max(space.sizes) < 128 else np.int64
    out = np.empty((count, space.n), dtype=dtype)
    cums = [np.cumsum(f.probs)[:-1] for f in space.factors]
    for start in range(0, count, _CHUNK):
        stop = min(count, start + _CHUNK)
        u = rng.random((space.n, stop - start))
        for i, c in enumerate(cums):
            out[start:stop, i] = np.searchsorted(c, u[i], side="right")
    return out


def sample(space: ProductSpace, seed: int, count: int) -> np.ndarray:
    """i.i.d. draws as mixed-radix state indices (see :class:`PointIndex`)."""
    digits = sample_digits(space, seed, count)
    if space.total_states >= 2 ** 63:
        raise SpaceError("state index does not fit in 64 bits; use sample_digits")
    radix = np.cumprod((1,) + space.sizes[:-1]).astype(np.int64)
    return digits.astype(np.int64) @ radix


def digits_to_values(space: ProductSpace, digits: np.ndarray) -> np.ndarray:
    """Atom values for an array of digit vectors."""
    out = np.empty(digits.shape, dtype=float)
    for i, fac in enumerate(space.factors):
        out[:, i] = np.asarray(fac.atoms)[digits[:, i]]
    return out


def evaluate_at(f: GridFunction, digits: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` at sampled digit vectors."""
    if f.is_dense:
        radix = np.cumprod((1,) + f.space.sizes[:-1]).astype(np.int64)
        return f.values[digits.astype(np.int64) @ radix]
    x = digits_to_values(f.space, digits)
    out = np.zeros(len(digits))
    for s, a in sorted(f.walsh.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
        term = np.full(len(digits), a)
        for i in s:
            term *= x[:, i]
        out += term
    return out


# ---------------------------------------------------------------------------
# Walsh-Hadamard transform on the uniform cube
# ---------------------------------------------------------------------------

def fwht(v: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform, bit i of the index = coordinate i."""
    v = np.array(v, dtype=float)
    m = v.size
    n = m.bit_length() - 1
    if 1 << n != m:
        raise SpaceError("length must be a power of two")
    for i in range(n):
        t = v.reshape(-1, 2, 1 << i)
        a, b = t[:, 0, :].copy(), t[:, 1, :]
        t[:, 0, :] += b
        t[:, 1, :] = a - b
    return v


def _flip_parity(space: ProductSpace) -> np.ndarray:
    """(-1)^{|S & F|} over all subsets S, F = coordinates whose first atom is -1."""
    flip = sum(1 << i for i, f in enumerate(space.factors) if f.atoms[0] == -1.0)
    masks = np.arange(space.total_states, dtype=np.uint64)
    return 1.0 - 2.0 * (np.bitwise_count(masks & np.uint64(flip)) & 1)


def walsh_coefficients(f: GridFunction) -> np.ndarray:
    """All 2^n Walsh coefficients alpha_S = E[f chi_S], indexed by subset bitmask."""
    space = f.space
    if not space.is_uniform_cube:
        raise SpaceError("Walsh expansion requires the uniform cube")
    if not f.is_dense:
        space.require_dense()
        out = np.zeros(space.total_states)
        for s, a in f.walsh.items():
            out[sum(1 << i for i in s)] = a
        return out
    return fwht(f.values) / space.total_states * _flip_parity(space)


def to_walsh(f: GridFunction, drop: float = WALSH_DROP) -> GridFunction:
    """Sparse Walsh form; coefficients with magnitude <= ``drop`` are dropped."""
    if not f.space.is_uniform_cube:
        raise SpaceError("Walsh expansion requires the uniform cube")
    if not f.is_dense:
        return GridFunction(f.space, walsh={s: a for s, a in f.walsh.items() if abs(a) > drop})
    alpha = walsh_coefficients(f)
    idx = np.flatnonzero(np.abs(alpha) > drop)
    coefs = {_mask_to_set(int(m)): float(alpha[m]) for m in idx}
    return GridFunction(f.space, walsh=coefs)


def from_walsh(f: GridFunction) -> GridFunction:
    """Dense table of a Walsh-form function."""
    if f.is_dense:
        return f
    space = f.space
    space.require_dense()
    alpha = np.zeros(space.total_states)
    for s, a in f.walsh.items():
        alpha[sum(1 << i for i in s)] += a
    return GridFunction(space, fwht(alpha * _flip_parity(space)))


def _mask_to_set(m: int) -> frozenset:
    return frozenset(i for i in range(m.bit_length()) if m >> i & 1)
