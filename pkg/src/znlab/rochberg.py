"""The twisted-sum scale Z_n: tuples, quasinorm, duality and witnesses.

A :class:`RochbergVector` of order n is a tuple (x_{n-1}, ..., x_1, x_0) of
coordinate vectors, leftmost entry carrying the highest derivative order.
Everything in the package fixes this convention once; the duality form,
whose classical description labels tuples (x_1, ..., x_n) from the top, is
translated here and nowhere else.

The quasinorm is the iterated twisted-sum norm

    ||(x_{n-1}, ..., x_0)|| = ||(x_{n-1}, ..., x_1) - KP_{1,n-1}(x_0)||
                              + ||x_0||_2

with ||.||_{l_2} at order one.  Under it graph vectors
(KP_{1,n-1} u, u) have quasinorm exactly ||u||_2, the left paddings
iota_{k,n} are isometric, and the right projections pi_{n,k} are
norm-decreasing.

The signed duality form is

    D_n(x)(y) = sum_{i+j=n+1} (-1)^i <x_i, y_j>     (top labels)

whose order-(n m) matrix realisation on coordinates 1..m is the block
matrix J with blocks J[i][j] = (-1)^i delta_{i+j,n+1} I_m.  J is a signed
block permutation: J^T = (-1)^{n+1} J and J^2 = (-1)^{n+1} I, so its
inverse is sign bookkeeping, not numerical linear algebra.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass

import numpy as np

from . import seqcore
from .errors import EmptyWitnessSet, OrderMismatch
from .kp import kp_map
from .seqcore import CoordVector, l2_norm, pair


@dataclass(frozen=True, slots=True)
class RochbergVector:
    """An element of Z_n: n coordinate vectors, highest derivative first."""

    coords: tuple[CoordVector, ...]

    def __post_init__(self):
        if not self.coords:
            raise ValueError("a tuple vector needs at least one coordinate")
        if not all(isinstance(c, CoordVector) for c in self.coords):
            raise TypeError("coords must be CoordVector instances")

    @property
    def order(self) -> int:
        return len(self.coords)

    @property
    def bottom(self) -> CoordVector:
        """The derivative-order-0 coordinate (rightmost)."""
        return self.coords[-1]

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.coords)

    @classmethod
    def zero(cls, n: int) -> "RochbergVector":
        if n < 1:
            raise ValueError("order must be positive")
        return cls((CoordVector.zero(),) * n)

    @classmethod
    def single(cls, u: CoordVector) -> "RochbergVector":
        return cls((u,))

    def scale(self, lam: float) -> "RochbergVector":
        return RochbergVector(tuple(seqcore.scale(lam, c) for c in self.coords))

    def add(self, other: "RochbergVector", entry_budget=None) -> "RochbergVector":
        if self.order != other.order:
            raise OrderMismatch(f"orders {self.order} and {other.order} differ")
        return RochbergVector(
            tuple(
                seqcore.add(a, b, entry_budget)
                for a, b in zip(self.coords, other.coords)
            )
        )

    def sub(self, other: "RochbergVector", entry_budget=None) -> "RochbergVector":
        if self.order != other.order:
            raise OrderMismatch(f"orders {self.order} and {other.order} differ")
        return RochbergVector(
            tuple(
                seqcore.sub(a, b, entry_budget)
                for a, b in zip(self.coords, other.coords)
            )
        )

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.sub(other)

    def __rmul__(self, lam):
        return self.scale(lam)


def quasinorm(v: RochbergVector, entry_budget=None) -> float:
    """The recursive twisted-sum quasinorm of v; O(order^2) vector operations."""
    coords = v.coords
    total = 0.0
    while len(coords) > 1:
        bottom = coords[-1]
        total += l2_norm(bottom)
        if bottom.is_zero:
            coords = coords[:-1]
            continue
        comps = kp_map(len(coords) - 1, bottom)
        coords = tuple(
            seqcore.sub(c, k, entry_budget) for c, k in zip(coords[:-1], comps)
        )
    return total + l2_norm(coords[0])


def graph_vector(n: int, u: CoordVector) -> RochbergVector:
    """(KP_{1,n-1} u, u); its quasinorm is exactly ||u||_2."""
    if n < 1:
        raise ValueError("order must be positive")
    if n == 1:
        return RochbergVector((u,))
    return RochbergVector(kp_map(n - 1, u) + (u,))


def embed(v: RochbergVector, n: int) -> RochbergVector:
    """iota_{k,n}: pad with n - k zero vectors on the right (low-order) side."""
    k = v.order
    if k > n:
        raise OrderMismatch(f"cannot embed order {k} into order {n}")
    if k == n:
        return v
    return RochbergVector(v.coords + (CoordVector.zero(),) * (n - k))


def project(v: RochbergVector, k: int) -> RochbergVector:
    """pi_{n,k}: keep the k rightmost (lowest-order) coordinates."""
    if k < 1 or k > v.order:
        raise OrderMismatch(f"cannot project order {v.order} onto order {k}")
    if k == v.order:
        return v
    return RochbergVector(v.coords[-k:])


def duality_pairing(x: RochbergVector, y: RochbergVector) -> float:
    """D_n(x)(y) = sum_{i+j=n+1} (-1)^i <x_i, y_j> in top labels.

    Top label i corresponds to coords[i-1], so the i-th term pairs
    x.coords[i-1] with y.coords[n-i].  D_1(x)(y) = -<x, y>; the printed
    sign is kept as is.
    """
    n = x.order
    if n != y.order:
        raise OrderMismatch(f"orders {n} and {y.order} differ")
    total = 0.0
    for i in range(1, n + 1):
        term = pair(x.coords[i - 1], y.coords[n - i])
        total += -term if i % 2 else term
    return total


def _support_indices(x: RochbergVector, entry_budget=None):
    """Sorted union of the coordinate supports."""
    pieces = []
    for c in x.coords:
        if c.is_zero:
            continue
        idx, _ = c.dense_arrays(entry_budget)
        pieces.append(idx)
    if not pieces:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(pieces))


def default_witnesses(x: RochbergVector, entry_budget=None):
    """Graph vectors on +-e_i for every i in the support of x."""
    n = x.order
    out = []
    for i in _support_indices(x, entry_budget):
        e = CoordVector.unit(int(i))
        out.append(graph_vector(n, e))
        out.append(graph_vector(n, seqcore.scale(-1.0, e)))
    return out


def omega_lower_bound(
    x: RochbergVector,
    witnesses=None,
    include_default: bool = True,
    entry_budget=None,
) -> float:
    """A certified lower bound for the dual norm sup_{||w|| <= 1} |D_n(x)(w)|.

    Maximises |D_n(x)(w)| / quasinorm(w) over the witness set; witnesses of
    order different from x raise OrderMismatch, zero witnesses are skipped.
    """
    pool = list(witnesses) if witnesses is not None else []
    for w in pool:
        if w.order != x.order:
            raise OrderMismatch("witness order differs from the argument order")
    if include_default:
        pool.extend(default_witnesses(x, entry_budget))
    best = None
    for w in pool:
        qn = quasinorm(w, entry_budget)
        if qn == 0.0:
            continue
        cand = abs(duality_pairing(x, w)) / qn
        if best is None or cand > best:
            best = cand
    if best is None:
        if x.is_zero:
            return 0.0
        raise EmptyWitnessSet("no usable witness supplied")
    return best


# -- finite matrix realisation of the duality form ----------------------


@dataclass(frozen=True)
class PairingGram:
    """The (n m) x (n m) signed block-permutation matrix of D_n on 1..m."""

    n: int
    m: int
    matrix: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.inverse.setflags(write=False)


@functools.lru_cache(maxsize=None)
def pairing_gram(n: int, m: int) -> PairingGram:
    """Build (and cache) the Gram matrix J and its exact inverse (-1)^{n+1} J."""
    if n < 1 or m < 1:
        raise ValueError("pairing_gram needs n, m >= 1")
    size = n * m
    J = np.zeros((size, size))
    eye = np.eye(m)
    for i in range(1, n + 1):
        j = n + 1 - i
        sign = -1.0 if i % 2 else 1.0
        J[(i - 1) * m : i * m, (j - 1) * m : j * m] = sign * eye
    inv = float((-1.0) ** (n + 1)) * J
    return PairingGram(n, m, J, inv)


def gram_apply(g: PairingGram, vec: np.ndarray) -> np.ndarray:
    return g.matrix @ vec


def gram_solve(g: PairingGram, vec: np.ndarray) -> np.ndarray:
    """J^{-1} vec, exact because J is a signed block permutation."""
    return g.inverse @ vec


def flatten(v: RochbergVector, m: int) -> np.ndarray:
    """Stack the coordinates (highest order first) as m-dimensional blocks."""
    n = v.order
    out = np.zeros(n * m)
    for r, c in enumerate(v.coords):
        if c.is_zero:
            continue
        idx, val = c.dense_arrays()
        if int(idx[-1]) > m:
            raise ValueError(f"coordinate support exceeds truncation {m}")
        out[r * m + idx - 1] = val
    return out


def unflatten(arr: np.ndarray, n: int, m: int) -> RochbergVector:
    if arr.shape != (n * m,):
        raise ValueError(f"expected shape ({n * m},), got {arr.shape}")
    coords = []
    idx = np.arange(1, m + 1, dtype=np.int64)
    for r in range(n):
        block = arr[r * m : (r + 1) * m]
        coords.append(CoordVector._from_arrays(idx, block.copy()))
    return RochbergVector(tuple(coords))


# -- serialisation -------------------------------------------------------


def to_json_obj(v: RochbergVector):
    return {
        "order": v.order,
        "coords": [seqcore.to_json_obj(c) for c in v.coords],
    }


def from_json_obj(obj) -> RochbergVector:
    coords = tuple(seqcore.from_json_obj(c) for c in obj["coords"])
    if obj.get("order") not in (None, len(coords)):
        raise ValueError("declared order disagrees with the number of coordinates")
    return RochbergVector(coords)


def to_json(v: RochbergVector) -> str:
    return json.dumps(to_json_obj(v))


def from_json(text: str) -> RochbergVector:
    return from_json_obj(json.loads(text))
