"""Finitely supported coordinate vectors.

A :class:`CoordVector` is a real sequence indexed by the positive integers
with finitely many nonzero entries.  Two storage forms exist:

* dense: explicit (index, value) pairs, strictly index-sorted, no zeros;
* flat: ``value * sum(e_i for offset < i <= offset + length)``, a constant
  run of astronomical length stored in O(1).

Construction canonicalises: a zero flat collapses to the empty vector and a
dense vector whose support is contiguous with one common value collapses to
the flat form, so equal mathematical vectors compare and hash equal no
matter how they were built.  All values are immutable after construction and
every operation is a pure function, so vectors are safe to share across
threads.

Operations that would have to materialise a flat run longer than the entry
budget raise :class:`~znlab.errors.EntryBudgetExceeded` instead of consuming
unbounded memory.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Iterator

import numpy as np

from .errors import EntryBudgetExceeded

DEFAULT_ENTRY_BUDGET = 1 << 20
MAX_FLAT_LENGTH = 1 << 62

_EMPTY_IDX = np.empty(0, dtype=np.int64)
_EMPTY_VAL = np.empty(0, dtype=np.float64)
_EMPTY_IDX.setflags(write=False)
_EMPTY_VAL.setflags(write=False)


def _budget(entry_budget):
    return DEFAULT_ENTRY_BUDGET if entry_budget is None else int(entry_budget)


class CoordVector:
    """A finitely supported real sequence, dense or flat-compressed."""

    __slots__ = ("_idx", "_val", "_flat", "_norm", "_hash")

    def __init__(self):
        raise TypeError("use CoordVector.dense/flat/unit/zero/from_values")

    # -- construction -------------------------------------------------

    @classmethod
    def _make_dense(cls, idx, val):
        self = object.__new__(cls)
        self._idx = idx
        self._val = val
        self._flat = None
        self._norm = None
        self._hash = None
        return self

    @classmethod
    def _make_flat(cls, length, value, offset):
        self = object.__new__(cls)
        self._idx = None
        self._val = None
        self._flat = (int(length), float(value), int(offset))
        self._norm = None
        self._hash = None
        return self

    @classmethod
    def _from_arrays(cls, idx, val, needs_sort=False, check=True):
        """Canonicalise raw (index, value) arrays into a vector."""
        if needs_sort and idx.size > 1:
            order = np.argsort(idx, kind="stable")
            idx = idx[order]
            val = val[order]
        if check and val.size:
            if not np.isfinite(val).all():
                raise ValueError("non-finite value in coordinate vector")
        n = val.size
        if n:
            live = int(np.count_nonzero(val))
            if live != n:
                if live == 0:
                    return _ZERO
                keep = val != 0.0
                idx = idx[keep]
                val = val[keep]
                n = live
        if n == 0:
            return _ZERO
        first = val[0]
        # contiguous support with a single common value compresses to flat
        if first == val[n - 1] and int(idx[n - 1]) - int(idx[0]) + 1 == n:
            if n == 1 or bool((val == first).all()):
                return cls._make_flat(n, float(first), int(idx[0]) - 1)
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        val = np.ascontiguousarray(val, dtype=np.float64)
        idx.setflags(write=False)
        val.setflags(write=False)
        return cls._make_dense(idx, val)

    @classmethod
    def zero(cls) -> "CoordVector":
        return _ZERO

    @classmethod
    def dense(cls, entries: Iterable[tuple[int, float]]) -> "CoordVector":
        """Build from (index, value) pairs; indices must be distinct positive ints."""
        pairs = list(entries)
        if not pairs:
            return _ZERO
        idx = np.array([p[0] for p in pairs], dtype=np.int64)
        val = np.array([p[1] for p in pairs], dtype=np.float64)
        if idx.min() < 1:
            raise ValueError("indices must be positive")
        if np.unique(idx).size != idx.size:
            raise ValueError("duplicate index in dense entries")
        return cls._from_arrays(idx, val, needs_sort=True)

    @classmethod
    def flat(cls, length: int, value: float, offset: int = 0) -> "CoordVector":
        """The vector value * (e_{offset+1} + ... + e_{offset+length})."""
        length = int(length)
        offset = int(offset)
        if length < 1 or length > MAX_FLAT_LENGTH:
            raise ValueError(f"flat length must be in [1, 2^62], got {length}")
        if offset < 0:
            raise ValueError("flat offset must be non-negative")
        value = float(value)
        if not math.isfinite(value):
            raise ValueError("non-finite value in coordinate vector")
        if value == 0.0:
            return _ZERO
        return cls._make_flat(length, value, offset)

    @classmethod
    def unit(cls, i: int) -> "CoordVector":
        """The canonical basis vector e_i."""
        if i < 1:
            raise ValueError("indices must be positive")
        return cls._make_flat(1, 1.0, i - 1)

    @classmethod
    def from_values(cls, values, start: int = 1) -> "CoordVector":
        """Dense vector with the given values at consecutive indices."""
        val = np.asarray(values, dtype=np.float64)
        idx = np.arange(start, start + val.size, dtype=np.int64)
        return cls._from_arrays(idx, val)

    # -- inspection ---------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self._flat is None and self._idx.size == 0

    @property
    def is_flat(self) -> bool:
        return self._flat is not None

    @property
    def flat_parts(self):
        """(length, value, offset) for flat vectors, else None."""
        return self._flat

    @property
    def nnz(self) -> int:
        if self._flat is not None:
            return self._flat[0]
        return int(self._idx.size)

    def support_range(self):
        """(min index, max index) of the support, or None for the zero vector."""
        if self._flat is not None:
            length, _, offset = self._flat
            return (offset + 1, offset + length)
        if self._idx.size == 0:
            return None
        return (int(self._idx[0]), int(self._idx[-1]))

    def coefficient(self, i: int) -> float:
        """The i-th coordinate."""
        if self._flat is not None:
            length, value, offset = self._flat
            return value if offset < i <= offset + length else 0.0
        pos = int(np.searchsorted(self._idx, i))
        if pos < self._idx.size and int(self._idx[pos]) == i:
            return float(self._val[pos])
        return 0.0

    def dense_arrays(self, entry_budget=None):
        """(indices, values) arrays; materialises flats under the entry budget."""
        if self._flat is None:
            return self._idx, self._val
        length, value, offset = self._flat
        if length > _budget(entry_budget):
            raise EntryBudgetExceeded(
                f"flat vector of length {length} exceeds entry budget"
            )
        idx = np.arange(offset + 1, offset + length + 1, dtype=np.int64)
        val = np.full(length, value, dtype=np.float64)
        return idx, val

    def densified(self, entry_budget=None) -> "CoordVector":
        """An explicitly dense copy (for representation-agreement tests)."""
        if self._flat is None:
            return self
        idx, val = self.dense_arrays(entry_budget)
        out = CoordVector._make_dense(idx, val)
        return out

    def entries(self, entry_budget=None) -> Iterator[tuple[int, float]]:
        idx, val = self.dense_arrays(entry_budget)
        return ((int(i), float(v)) for i, v in zip(idx, val))

    # -- equality / hashing -------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, CoordVector):
            return NotImplemented
        if self._flat is not None or other._flat is not None:
            return self._flat == other._flat
        return np.array_equal(self._idx, other._idx) and np.array_equal(
            self._val, other._val
        )

    def __hash__(self):
        h = self._hash
        if h is None:
            if self._flat is not None:
                h = hash(("flat",) + self._flat)
            else:
                h = hash((tuple(self._idx.tolist()), tuple(self._val.tolist())))
            self._hash = h
        return h

    def __repr__(self):
        if self._flat is not None:
            length, value, offset = self._flat
            return f"CoordVector.flat({length}, {value!r}, {offset})"
        if self._idx.size == 0:
            return "CoordVector.zero()"
        pairs = ", ".join(f"({int(i)}, {float(v)!r})" for i, v in zip(self._idx, self._val))
        return f"CoordVector.dense([{pairs}])"

    # -- arithmetic sugar ----------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return scale(-1.0, self)

    def __rmul__(self, lam):
        return scale(lam, self)


_ZERO = CoordVector._make_dense(_EMPTY_IDX, _EMPTY_VAL)


# -- norms and pairings ------------------------------------------------


def l2_norm(x: CoordVector) -> float:
    """Euclidean norm; flat vectors cost O(1)."""
    n = x._norm
    if n is None:
        if x._flat is not None:
            length, value, _ = x._flat
            n = abs(value) * math.sqrt(length)
        elif x._idx.size == 0:
            n = 0.0
        else:
            n = float(np.sqrt(np.dot(x._val, x._val)))
        x._norm = n
    return n


def pair(x: CoordVector, y: CoordVector) -> float:
    """Bilinear pairing sum(x_i * y_i); aligned flats cost O(1)."""
    if x._flat is not None and y._flat is not None:
        l1, v1, o1 = x._flat
        l2, v2, o2 = y._flat
        overlap = min(o1 + l1, o2 + l2) - max(o1, o2)
        if overlap <= 0:
            return 0.0
        return float(overlap) * v1 * v2
    if x._flat is not None:
        x, y = y, x
    if x._idx.size == 0 or (y._flat is None and y._idx.size == 0):
        return 0.0
    if y._flat is not None:
        length, value, offset = y._flat
        inside = (x._idx > offset) & (x._idx <= offset + length)
        return value * float(x._val[inside].sum())
    if x._idx is y._idx or (
        x._idx.size == y._idx.size and np.array_equal(x._idx, y._idx)
    ):
        return float(np.dot(x._val, y._val))
    common, ia, ib = np.intersect1d(
        x._idx, y._idx, assume_unique=True, return_indices=True
    )
    if common.size == 0:
        return 0.0
    return float(np.dot(x._val[ia], y._val[ib]))


def supports_overlap(x: CoordVector, y: CoordVector) -> bool:
    """Whether the supports share at least one index (structural, no cancellation)."""
    rx, ry = x.support_range(), y.support_range()
    if rx is None or ry is None:
        return False
    if rx[1] < ry[0] or ry[1] < rx[0]:
        return False
    if x._flat is not None and y._flat is not None:
        return True
    if x._flat is not None:
        x, y = y, x
    if y._flat is not None:
        length, _, offset = y._flat
        return bool(((x._idx > offset) & (x._idx <= offset + length)).any())
    return np.intersect1d(x._idx, y._idx, assume_unique=True).size > 0


# -- linear operations -------------------------------------------------


def scale(lam: float, x: CoordVector) -> CoordVector:
    """lam * x; flat stays flat."""
    lam = float(lam)
    if not math.isfinite(lam):
        raise ValueError("scale factor must be finite")
    if lam == 0.0 or x.is_zero:
        return _ZERO
    if lam == 1.0:
        return x
    if x._flat is not None:
        length, value, offset = x._flat
        out = lam * value
        if not math.isfinite(out):
            raise ValueError("scale overflow")
        if out == 0.0:
            return _ZERO
        return CoordVector._make_flat(length, out, offset)
    return CoordVector._from_arrays(x._idx, lam * x._val)


def _merge_dense(i1, v1, i2, v2):
    if i1 is i2 or (i1.size == i2.size and np.array_equal(i1, i2)):
        return CoordVector._from_arrays(i1, v1 + v2, check=False)
    idx = np.concatenate([i1, i2])
    val = np.concatenate([v1, v2])
    order = np.argsort(idx, kind="stable")
    idx = idx[order]
    val = val[order]
    # inputs have unique indices, so duplicates come in adjacent pairs
    dup = np.nonzero(idx[1:] == idx[:-1])[0]
    if dup.size:
        val[dup] += val[dup + 1]
        keep = np.ones(idx.size, dtype=bool)
        keep[dup + 1] = False
        idx = idx[keep]
        val = val[keep]
    return CoordVector._from_arrays(idx, val, check=False)


def add(x: CoordVector, y: CoordVector, entry_budget=None) -> CoordVector:
    """x + y.  Flats with identical support stay flat; adjacent equal-value
    runs merge; any other flat combination densifies under the entry budget."""
    if x.is_zero:
        return y
    if y.is_zero:
        return x
    if x._flat is not None and y._flat is not None:
        l1, v1, o1 = x._flat
        l2, v2, o2 = y._flat
        if l1 == l2 and o1 == o2:
            return CoordVector.flat(l1, v1 + v2, o1)
        if v1 == v2:
            if o2 == o1 + l1:
                return CoordVector._make_flat(l1 + l2, v1, o1)
            if o1 == o2 + l2:
                return CoordVector._make_flat(l1 + l2, v1, o2)
    i1, v1 = x.dense_arrays(entry_budget)
    i2, v2 = y.dense_arrays(entry_budget)
    return _merge_dense(i1, v1, i2, v2)


def sub(x: CoordVector, y: CoordVector, entry_budget=None) -> CoordVector:
    """x - y."""
    if y.is_zero:
        return x
    if x.is_zero:
        return scale(-1.0, y)
    if x._flat is not None and y._flat is not None:
        l1, v1, o1 = x._flat
        l2, v2, o2 = y._flat
        if l1 == l2 and o1 == o2:
            return CoordVector.flat(l1, v1 - v2, o1)
    i1, v1 = x.dense_arrays(entry_budget)
    i2, v2 = y.dense_arrays(entry_budget)
    return _merge_dense(i1, v1, i2, -v2)


def hadamard(x: CoordVector, y: CoordVector, entry_budget=None) -> CoordVector:
    """Coordinatewise product; flat * flat stays flat on the overlap."""
    if x.is_zero or y.is_zero:
        return _ZERO
    if x._flat is not None and y._flat is not None:
        l1, v1, o1 = x._flat
        l2, v2, o2 = y._flat
        lo = max(o1, o2)
        hi = min(o1 + l1, o2 + l2)
        if hi <= lo:
            return _ZERO
        return CoordVector.flat(hi - lo, v1 * v2, lo)
    if x._flat is not None:
        x, y = y, x
    if y._flat is not None:
        length, value, offset = y._flat
        inside = (x._idx > offset) & (x._idx <= offset + length)
        return CoordVector._from_arrays(
            x._idx[inside], x._val[inside] * value, check=False
        )
    if x._idx is y._idx or np.array_equal(x._idx, y._idx):
        return CoordVector._from_arrays(x._idx, x._val * y._val, check=False)
    common, ia, ib = np.intersect1d(
        x._idx, y._idx, assume_unique=True, return_indices=True
    )
    return CoordVector._from_arrays(common, x._val[ia] * y._val[ib], check=False)


# -- text and JSON forms ------------------------------------------------

_FLAT_TEXT = re.compile(
    r"\s*flat:\{\s*len\s*:\s*(\d+)\s*,\s*val\s*:\s*([^,}]+)\s*,\s*off\s*:\s*(\d+)\s*\}\s*$"
)
_DENSE_TEXT = re.compile(r"\s*dense:\[(.*)\]\s*$", re.S)
_PAIR_TEXT = re.compile(r"\(\s*(\d+)\s*,\s*([^)]+)\)")


def to_text(x: CoordVector) -> str:
    """Render as ``dense:[(i,v),...]`` or ``flat:{len:N,val:V,off:O}``."""
    if x._flat is not None:
        length, value, offset = x._flat
        return f"flat:{{len:{length},val:{value!r},off:{offset}}}"
    pairs = ",".join(f"({int(i)},{float(v)!r})" for i, v in zip(x._idx, x._val))
    return f"dense:[{pairs}]"


def parse_text(text: str) -> CoordVector:
    m = _FLAT_TEXT.match(text)
    if m:
        return CoordVector.flat(int(m.group(1)), float(m.group(2)), int(m.group(3)))
    m = _DENSE_TEXT.match(text)
    if m:
        body = m.group(1).strip()
        if not body:
            return _ZERO
        pairs = [(int(i), float(v)) for i, v in _PAIR_TEXT.findall(body)]
        if not pairs:
            raise ValueError(f"malformed dense vector text: {text!r}")
        return CoordVector.dense(pairs)
    raise ValueError(f"unrecognised vector text: {text!r}")


def to_json_obj(x: CoordVector):
    if x._flat is not None:
        length, value, offset = x._flat
        return {"kind": "flat", "length": length, "value": value, "offset": offset}
    return {
        "kind": "dense",
        "entries": [[int(i), float(v)] for i, v in zip(x._idx, x._val)],
    }


def from_json_obj(obj) -> CoordVector:
    kind = obj.get("kind")
    if kind == "flat":
        return CoordVector.flat(obj["length"], obj["value"], obj.get("offset", 0))
    if kind == "dense":
        return CoordVector.dense([(int(i), float(v)) for i, v in obj["entries"]])
    raise ValueError(f"unknown vector kind: {kind!r}")
