"""Operator algebra on the twisted-sum scale.

Coordinate operators are built from a small set of atoms (multipliers,
basis permutations, block maps, scalings, sums, compositions).  An
:class:`OperatorMatrix` arranges atoms in a triangular array acting on
order-n tuples: storage row r is the output slot of derivative order
n-1-r, column c the input slot of order n-1-c, and a nonzero entry needs
the input order to be at most the output order, i.e. r <= c + (out - in).

``block_operator`` builds the triangular Toeplitz-by-order matrix T_U of a
disjointly supported normalised block family: the entry moving input order
j to output order i applies e_v -> KP^{i-j}(w_v).  Applied to a
bottom-coordinate vector it reproduces the graph vectors of the blocks.

``adjoint_plus`` realises the pairing adjoint T+ (defined by
<T+ x, y> = <x, T y> in the signed duality form) on finite truncations as
J^{-1} T^T J with the cached Gram matrix J; since J is a signed block
permutation this is exact up to floating arithmetic.

Strict singularity and compactness are not decidable numerically;
``singularity_profile`` returns quasinorm ratio sequences along witness
families, and callers judge decay or a positive floor.

A small text grammar builds operators for the command line:
``id``, ``zero``, ``mult[d1,d2,...]``, ``perm[p1,p2,...]``,
``block[len:L,count:C]``, ``iota(k,n)``, ``pi(n,k)``, ``shift(n)^k``,
products ``*``, sums ``+``, scalar multiples ``2.5*A`` or a middle dot.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import seqcore
from .errors import (
    BlockOverlap,
    OperatorParseError,
    OrderMismatch,
    ZeroVectorInFamily,
)
from .kp import kp_component
from .rochberg import (
    PairingGram,
    RochbergVector,
    duality_pairing,
    flatten,
    pairing_gram,
    quasinorm,
    unflatten,
)
from .seqcore import CoordVector


class OperatorAtom:
    """Base class for coordinate-space operator atoms."""

    __slots__ = ()


@dataclass(frozen=True)
class Zero(OperatorAtom):
    pass


@dataclass(frozen=True)
class Identity(OperatorAtom):
    pass


@dataclass(frozen=True)
class Scale(OperatorAtom):
    factor: float


@dataclass(frozen=True)
class Multiplier(OperatorAtom):
    """Diagonal operator x -> d .* x; indices outside supp(d) are annihilated."""

    diag: CoordVector


@dataclass(frozen=True)
class Permutation(OperatorAtom):
    """e_i -> e_{sigma(i)} for a finite permutation, identity elsewhere."""

    pairs: tuple[tuple[int, int], ...]

    @classmethod
    def from_mapping(cls, mapping) -> "Permutation":
        items = tuple(sorted((int(k), int(v)) for k, v in dict(mapping).items()))
        keys = {k for k, _ in items}
        vals = {v for _, v in items}
        if any(k < 1 or v < 1 for k, v in items):
            raise ValueError("permutation indices must be positive")
        if len(vals) != len(items) or keys != vals:
            raise ValueError("mapping must permute a finite index set")
        items = tuple((k, v) for k, v in items if k != v)
        return cls(items)

    def image(self, i: int) -> int:
        for k, v in self.pairs:
            if k == i:
                return v
        return i


@dataclass(frozen=True)
class BlockMap(OperatorAtom):
    """e_v -> blocks[v-1] for v up to len(blocks), 0 beyond; disjoint supports."""

    blocks: tuple[CoordVector, ...]

    def __post_init__(self):
        live = [b for b in self.blocks if not b.is_zero]
        for i in range(len(live)):
            for j in range(i + 1, len(live)):
                if seqcore.supports_overlap(live[i], live[j]):
                    raise BlockOverlap("block supports overlap")


@dataclass(frozen=True)
class Sum(OperatorAtom):
    terms: tuple[OperatorAtom, ...]


@dataclass(frozen=True)
class Compose(OperatorAtom):
    """factors[0] applied last: Compose(A, B) x = A(B(x))."""

    factors: tuple[OperatorAtom, ...]


def simplify_sum(terms) -> OperatorAtom:
    flat = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        elif not isinstance(t, Zero):
            flat.append(t)
    if not flat:
        return Zero()
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def simplify_compose(factors) -> OperatorAtom:
    flat = []
    for f in factors:
        if isinstance(f, Zero):
            return Zero()
        if isinstance(f, Compose):
            flat.extend(f.factors)
        elif isinstance(f, Scale):
            if f.factor == 0.0:
                return Zero()
            if f.factor != 1.0:
                flat.append(f)
        elif not isinstance(f, Identity):
            flat.append(f)
    if not flat:
        return Identity()
    if len(flat) == 1:
        return flat[0]
    return Compose(tuple(flat))


def scaled(lam: float, atom: OperatorAtom) -> OperatorAtom:
    return simplify_compose((Scale(float(lam)), atom))


def atom_apply(atom: OperatorAtom, x: CoordVector, entry_budget=None) -> CoordVector:
    if isinstance(atom, Zero):
        return CoordVector.zero()
    if isinstance(atom, Identity):
        return x
    if isinstance(atom, Scale):
        return seqcore.scale(atom.factor, x)
    if isinstance(atom, Multiplier):
        return seqcore.hadamard(atom.diag, x, entry_budget)
    if isinstance(atom, Permutation):
        if x.is_zero or not atom.pairs:
            return x
        lo = min(k for k, _ in atom.pairs)
        hi = max(max(k, v) for k, v in atom.pairs)
        rng = x.support_range()
        if rng[1] < lo or rng[0] > hi:
            return x
        idx, val = x.dense_arrays(entry_budget)
        moved = np.array([atom.image(int(i)) for i in idx], dtype=np.int64)
        return CoordVector._from_arrays(moved, val.copy(), needs_sort=True, check=False)
    if isinstance(atom, BlockMap):
        out = CoordVector.zero()
        for v, w in enumerate(atom.blocks, start=1):
            c = x.coefficient(v)
            if c != 0.0 and not w.is_zero:
                out = seqcore.add(out, seqcore.scale(c, w), entry_budget)
        return out
    if isinstance(atom, Sum):
        out = CoordVector.zero()
        for t in atom.terms:
            out = seqcore.add(out, atom_apply(t, x, entry_budget), entry_budget)
        return out
    if isinstance(atom, Compose):
        for f in reversed(atom.factors):
            x = atom_apply(f, x, entry_budget)
        return x
    raise TypeError(f"unknown atom {atom!r}")


def atom_matrix(atom: OperatorAtom, m: int) -> np.ndarray:
    """Dense m x m realisation on coordinates 1..m (support beyond m is clipped)."""
    if isinstance(atom, Zero):
        return np.zeros((m, m))
    if isinstance(atom, Identity):
        return np.eye(m)
    if isinstance(atom, Scale):
        return atom.factor * np.eye(m)
    if isinstance(atom, Multiplier):
        d = np.array([atom.diag.coefficient(i) for i in range(1, m + 1)])
        return np.diag(d)
    if isinstance(atom, Permutation):
        out = np.zeros((m, m))
        for i in range(1, m + 1):
            j = atom.image(i)
            if j <= m:
                out[j - 1, i - 1] = 1.0
        return out
    if isinstance(atom, BlockMap):
        out = np.zeros((m, m))
        for v, w in enumerate(atom.blocks[:m], start=1):
            if w.is_zero:
                continue
            idx, val = w.dense_arrays()
            keep = idx <= m
            out[idx[keep] - 1, v - 1] = val[keep]
        return out
    if isinstance(atom, Sum):
        out = np.zeros((m, m))
        for t in atom.terms:
            out += atom_matrix(t, m)
        return out
    if isinstance(atom, Compose):
        out = np.eye(m)
        for f in atom.factors:
            out = out @ atom_matrix(f, m)
        return out
    raise TypeError(f"unknown atom {atom!r}")


# -- triangular operator matrices ---------------------------------------


@dataclass(frozen=True)
class OperatorMatrix:
    """Atoms arranged by derivative order; row r feeds output slot r."""

    out_order: int
    in_order: int
    rows: tuple[tuple[OperatorAtom, ...], ...]

    def __post_init__(self):
        if self.out_order < 1 or self.in_order < 1:
            raise ValueError("orders must be positive")
        if len(self.rows) != self.out_order or any(
            len(r) != self.in_order for r in self.rows
        ):
            raise ValueError("entry grid does not match the declared orders")
        band = self.out_order - self.in_order
        for r, row in enumerate(self.rows):
            for c, atom in enumerate(row):
                if not isinstance(atom, Zero) and r > c + band:
                    raise ValueError(
                        "nonzero entry below the triangular band "
                        f"(row {r}, col {c})"
                    )

    @property
    def is_square(self) -> bool:
        return self.out_order == self.in_order

    def entry(self, r: int, c: int) -> OperatorAtom:
        return self.rows[r][c]


def matrix_from_rows(rows, out_order=None, in_order=None) -> OperatorMatrix:
    rows = tuple(tuple(r) for r in rows)
    return OperatorMatrix(
        out_order if out_order is not None else len(rows),
        in_order if in_order is not None else len(rows[0]),
        rows,
    )


def identity_matrix(n: int) -> OperatorMatrix:
    return OperatorMatrix(
        n, n, tuple(
            tuple(Identity() if r == c else Zero() for c in range(n)) for r in range(n)
        )
    )


def zero_matrix(n_out: int, n_in=None) -> OperatorMatrix:
    n_in = n_out if n_in is None else n_in
    return OperatorMatrix(
        n_out, n_in, tuple(tuple(Zero() for _ in range(n_in)) for _ in range(n_out))
    )


def diagonal_lift(atom: OperatorAtom, n: int) -> OperatorMatrix:
    """The same atom in every diagonal slot."""
    return OperatorMatrix(
        n, n, tuple(
            tuple(atom if r == c else Zero() for c in range(n)) for r in range(n)
        )
    )


def iota_matrix(k: int, n: int) -> OperatorMatrix:
    """iota_{k,n}: place the k coordinates at the top, zero-pad below."""
    if k > n:
        raise OrderMismatch(f"iota needs k <= n, got ({k}, {n})")
    return OperatorMatrix(
        n, k, tuple(
            tuple(Identity() if r == c else Zero() for c in range(k)) for r in range(n)
        )
    )


def pi_matrix(n: int, k: int) -> OperatorMatrix:
    """pi_{n,k}: keep the k lowest-order coordinates."""
    if k > n:
        raise OrderMismatch(f"pi needs k <= n, got ({n}, {k})")
    return OperatorMatrix(
        k, n, tuple(
            tuple(Identity() if c == r + n - k else Zero() for c in range(n))
            for r in range(k)
        )
    )


def apply(A: OperatorMatrix, v: RochbergVector, entry_budget=None) -> RochbergVector:
    if v.order != A.in_order:
        raise OrderMismatch(
            f"operator expects order {A.in_order}, vector has order {v.order}"
        )
    coords = []
    for r in range(A.out_order):
        acc = CoordVector.zero()
        for c in range(A.in_order):
            atom = A.rows[r][c]
            if isinstance(atom, Zero) or v.coords[c].is_zero:
                continue
            acc = seqcore.add(acc, atom_apply(atom, v.coords[c], entry_budget),
                              entry_budget)
        coords.append(acc)
    return RochbergVector(tuple(coords))


def matrix_compose(A: OperatorMatrix, B: OperatorMatrix) -> OperatorMatrix:
    if A.in_order != B.out_order:
        raise OrderMismatch(
            f"cannot compose orders {A.out_order}x{A.in_order} "
            f"and {B.out_order}x{B.in_order}"
        )
    rows = []
    for r in range(A.out_order):
        row = []
        for c in range(B.in_order):
            terms = []
            for mid in range(A.in_order):
                a, b = A.rows[r][mid], B.rows[mid][c]
                if isinstance(a, Zero) or isinstance(b, Zero):
                    continue
                terms.append(simplify_compose((a, b)))
            row.append(simplify_sum(terms))
        rows.append(tuple(row))
    return OperatorMatrix(A.out_order, B.in_order, tuple(rows))


def matrix_add(A: OperatorMatrix, B: OperatorMatrix) -> OperatorMatrix:
    if A.out_order != B.out_order or A.in_order != B.in_order:
        raise OrderMismatch("cannot add operators of different orders")
    rows = tuple(
        tuple(simplify_sum((A.rows[r][c], B.rows[r][c])) for c in range(A.in_order))
        for r in range(A.out_order)
    )
    return OperatorMatrix(A.out_order, A.in_order, rows)


def matrix_scale(lam: float, A: OperatorMatrix) -> OperatorMatrix:
    rows = tuple(
        tuple(
            Zero() if isinstance(a, Zero) else scaled(lam, a) for a in row
        )
        for row in A.rows
    )
    return OperatorMatrix(A.out_order, A.in_order, rows)


def matrix_power(A: OperatorMatrix, k: int) -> OperatorMatrix:
    if not A.is_square:
        raise OrderMismatch("powers need a square operator")
    if k < 0:
        raise ValueError("powers must be non-negative")
    out = identity_matrix(A.out_order)
    for _ in range(k):
        out = matrix_compose(out, A)
    return out


def shift_power(n: int, k: int) -> OperatorMatrix:
    """(iota_{n-1,n} pi_{n,n-1})^k: output slot r reads input slot r + k."""
    if k < 0 or k > n:
        raise ValueError(f"shift power must be in [0, {n}], got {k}")
    return OperatorMatrix(
        n, n, tuple(
            tuple(Identity() if c == r + k else Zero() for c in range(n))
            for r in range(n)
        )
    )


def block_operator(n: int, blocks) -> OperatorMatrix:
    """The triangular Toeplitz-by-order operator T_U of a normalised block family."""
    blocks = tuple(blocks)
    if not blocks:
        raise ValueError("need at least one block")
    for w in blocks:
        if abs(seqcore.l2_norm(w) - 1.0) > 1e-12:
            raise ValueError("blocks must be l2-normalised")
    live = list(blocks)
    for i in range(len(live)):
        for j in range(i + 1, len(live)):
            if seqcore.supports_overlap(live[i], live[j]):
                raise BlockOverlap("block supports overlap")
    diag_atoms = []
    for d in range(n):
        if d == 0:
            diag_atoms.append(BlockMap(blocks))
        else:
            diag_atoms.append(BlockMap(tuple(kp_component(d, w) for w in blocks)))
    rows = tuple(
        tuple(diag_atoms[c - r] if c >= r else Zero() for c in range(n))
        for r in range(n)
    )
    return OperatorMatrix(n, n, rows)


def corner_extract(R: OperatorMatrix, k: int):
    """Leading k x k corner (highest orders) and trailing (n-k) x (n-k) corner."""
    if not R.is_square:
        raise OrderMismatch("corner extraction needs a square operator")
    n = R.out_order
    if k < 1 or k >= n:
        raise OrderMismatch(f"corner index must satisfy 1 <= k < {n}, got {k}")
    top = tuple(tuple(R.rows[r][c] for c in range(k)) for r in range(k))
    bottom = tuple(
        tuple(R.rows[r][c] for c in range(k, n)) for r in range(k, n)
    )
    return (
        OperatorMatrix(k, k, top),
        OperatorMatrix(n - k, n - k, bottom),
    )


# -- finite truncations and the pairing adjoint --------------------------


@dataclass(frozen=True)
class FiniteOperator:
    """Dense realisation of a square operator on coordinates 1..m."""

    order: int
    m: int
    matrix: np.ndarray

    def __post_init__(self):
        size = self.order * self.m
        if self.matrix.shape != (size, size):
            raise ValueError(f"matrix must be {size} x {size}")
        self.matrix.setflags(write=False)

    @classmethod
    def from_operator_matrix(cls, A: OperatorMatrix, m: int) -> "FiniteOperator":
        if not A.is_square:
            raise OrderMismatch("finite truncation needs a square operator")
        n = A.out_order
        out = np.zeros((n * m, n * m))
        for r in range(n):
            for c in range(n):
                atom = A.rows[r][c]
                if isinstance(atom, Zero):
                    continue
                out[r * m : (r + 1) * m, c * m : (c + 1) * m] = atom_matrix(atom, m)
        return cls(n, m, out)

    def apply_array(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def apply(self, v: RochbergVector) -> RochbergVector:
        return unflatten(self.matrix @ flatten(v, self.m), self.order, self.m)

    def compose(self, other: "FiniteOperator") -> "FiniteOperator":
        if (self.order, self.m) != (other.order, other.m):
            raise OrderMismatch("finite operators live on different truncations")
        return FiniteOperator(self.order, self.m, self.matrix @ other.matrix)

    def gram(self) -> PairingGram:
        return pairing_gram(self.order, self.m)


def adjoint_plus(T: FiniteOperator) -> FiniteOperator:
    """The pairing adjoint J^{-1} T^T J on the truncation."""
    g = T.gram()
    return FiniteOperator(T.order, T.m, g.inverse @ T.matrix.T @ g.matrix)


def pairing_preservation_check(A: OperatorMatrix, samples) -> float:
    """max |D_n(Ax)(Ay) - D_n(x)(y)| over the sampled pairs."""
    worst = 0.0
    for x, y in samples:
        dev = abs(duality_pairing(apply(A, x), apply(A, y)) - duality_pairing(x, y))
        if dev > worst:
            worst = dev
    return worst


def singularity_profile(A: OperatorMatrix, family) -> list[float]:
    """Quasinorm ratios ||Av|| / ||v|| along a witness family."""
    out = []
    for v in family:
        qn = quasinorm(v)
        if qn == 0.0:
            raise ZeroVectorInFamily("family contains a zero vector")
        out.append(quasinorm(apply(A, v)) / qn)
    return out


# -- expression grammar ---------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]+)"
    r"|(?P<sym>[\[\](),:^*+·-]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise OperatorParseError(f"cannot tokenise {text[pos:]!r}")
            break
        pos = m.end()
        if m.group("num") is not None:
            out.append(("num", m.group("num")))
        elif m.group("name") is not None:
            out.append(("name", m.group("name")))
        else:
            sym = m.group("sym")
            out.append(("sym", "*" if sym == "·" else sym))
    return out


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None:
            raise OperatorParseError("unexpected end of expression")
        if kind is not None and tok[0] != kind:
            raise OperatorParseError(f"expected {kind}, found {tok[1]!r}")
        if value is not None and tok[1] != value:
            raise OperatorParseError(f"expected {value!r}, found {tok[1]!r}")
        self.pos += 1
        return tok

    def accept(self, kind, value=None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            return None
        self.pos += 1
        return tok

    # expr := term (("+" | "-") term)*
    def expr(self):
        left = self.term()
        while True:
            if self.accept("sym", "+"):
                left = _combine_add(left, self.term())
            elif self.accept("sym", "-"):
                left = _combine_add(left, _combine_scale(-1.0, self.term()))
            else:
                return left

    # term := factor ("*" factor)*
    def term(self):
        left = self.factor()
        while self.accept("sym", "*"):
            left = _combine_mul(left, self.factor())
        return left

    # factor := "-" factor | power
    def factor(self):
        if self.accept("sym", "-"):
            return _combine_scale(-1.0, self.factor())
        return self.power()

    # power := primary ("^" int)?
    def power(self):
        base = self.primary()
        if self.accept("sym", "^"):
            tok = self.take("num")
            if "." in tok[1] or "e" in tok[1] or "E" in tok[1]:
                raise OperatorParseError("powers must be integers")
            return _combine_pow(base, int(tok[1]))
        return base

    def primary(self):
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            return ("atom", Scale(float(tok[1])))
        if tok[0] == "sym" and tok[1] == "(":
            self.take()
            inner = self.expr()
            self.take("sym", ")")
            return inner
        if tok[0] != "name":
            raise OperatorParseError(f"unexpected token {tok[1]!r}")
        name = self.take()[1]
        if name == "id":
            return ("atom", Identity())
        if name == "zero":
            return ("atom", Zero())
        if name == "mult":
            return ("atom", Multiplier(CoordVector.from_values(self._num_list())))
        if name == "perm":
            images = [int(v) for v in self._num_list(int_only=True)]
            mapping = {i + 1: img for i, img in enumerate(images)}
            try:
                return ("atom", Permutation.from_mapping(mapping))
            except ValueError as exc:
                raise OperatorParseError(str(exc)) from None
        if name == "block":
            fields = self._field_list()
            try:
                L, C = int(fields["len"]), int(fields["count"])
            except KeyError as exc:
                raise OperatorParseError(f"block needs len and count, missing {exc}")
            blocks = tuple(
                CoordVector.flat(L, L**-0.5, v * L) for v in range(C)
            )
            return ("atom", BlockMap(blocks))
        if name == "iota":
            k, n = self._int_pair()
            return ("matrix", iota_matrix(k, n))
        if name == "pi":
            n, k = self._int_pair()
            return ("matrix", pi_matrix(n, k))
        if name == "shift":
            self.take("sym", "(")
            n = int(self.take("num")[1])
            self.take("sym", ")")
            if self.accept("sym", "^"):
                k = int(self.take("num")[1])
            else:
                k = 1
            if k > n:
                k = n
            return ("matrix", shift_power(n, k))
        raise OperatorParseError(f"unknown operator name {name!r}")

    def _num_list(self, int_only=False):
        self.take("sym", "[")
        vals = []
        while True:
            neg = self.accept("sym", "-") is not None
            tok = self.take("num")
            v = float(tok[1])
            vals.append(-v if neg else v)
            if self.accept("sym", ","):
                continue
            self.take("sym", "]")
            break
        if int_only and any(v != int(v) for v in vals):
            raise OperatorParseError("expected integers")
        return vals

    def _field_list(self):
        self.take("sym", "[")
        fields = {}
        while True:
            key = self.take("name")[1]
            self.take("sym", ":")
            fields[key] = self.take("num")[1]
            if self.accept("sym", ","):
                continue
            self.take("sym", "]")
            break
        return fields

    def _int_pair(self):
        self.take("sym", "(")
        a = int(self.take("num")[1])
        self.take("sym", ",")
        b = int(self.take("num")[1])
        self.take("sym", ")")
        return a, b


def _combine_add(a, b):
    if a[0] == "atom" and b[0] == "atom":
        return ("atom", simplify_sum((a[1], b[1])))
    A = _as_matrix(a, like=b)
    B = _as_matrix(b, like=a)
    return ("matrix", matrix_add(A, B))


def _combine_mul(a, b):
    if a[0] == "atom" and b[0] == "atom":
        return ("atom", simplify_compose((a[1], b[1])))
    if a[0] == "atom":
        if isinstance(a[1], Scale):
            return ("matrix", matrix_scale(a[1].factor, b[1]))
        return ("matrix", matrix_compose(diagonal_lift(a[1], b[1].out_order), b[1]))
    if b[0] == "atom":
        if isinstance(b[1], Scale):
            return ("matrix", matrix_scale(b[1].factor, a[1]))
        return ("matrix", matrix_compose(a[1], diagonal_lift(b[1], a[1].in_order)))
    return ("matrix", matrix_compose(a[1], b[1]))


def _combine_scale(lam, a):
    if a[0] == "atom":
        return ("atom", scaled(lam, a[1]))
    return ("matrix", matrix_scale(lam, a[1]))


def _combine_pow(a, k):
    if a[0] == "atom":
        if k == 0:
            return ("atom", Identity())
        return ("atom", simplify_compose((a[1],) * k))
    return ("matrix", matrix_power(a[1], k))


def _as_matrix(a, like=None):
    if a[0] == "matrix":
        return a[1]
    if like is not None and like[0] == "matrix":
        if not like[1].is_square:
            raise OperatorParseError("cannot lift an atom next to a rectangular map")
        return diagonal_lift(a[1], like[1].out_order)
    raise OperatorParseError("cannot determine the ambient order of an atom")


def _parse(text: str):
    tokens = _tokenize(text)
    if not tokens:
        raise OperatorParseError("empty operator expression")
    parser = _Parser(tokens)
    out = parser.expr()
    if parser.peek()[0] is not None:
        raise OperatorParseError(f"trailing input {parser.peek()[1]!r}")
    return out


def parse_atom(text: str) -> OperatorAtom:
    """Parse an expression that must stay at the coordinate-atom level."""
    kind, value = _parse(text)
    if kind != "atom":
        raise OperatorParseError("expression builds a tuple-space operator, not an atom")
    return value


def parse_operator(text: str, n: int) -> OperatorMatrix:
    """Parse an operator expression acting on order-n tuples; atoms lift diagonally."""
    kind, value = _parse(text)
    if kind == "atom":
        return diagonal_lift(value, n)
    if value.out_order != n or value.in_order != n:
        raise OrderMismatch(
            f"expression acts {value.out_order}x{value.in_order}, expected order {n}"
        )
    return value
