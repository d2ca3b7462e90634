"""Commutation of scale operators with the differential maps.

A scale operator is a coordinate operator bounded on l_1 and on l_infty
simultaneously (hence on every intermediate space): multipliers with a
finite sup bound, basis permutations, and normalised disjoint block maps
(declared admissible with bound 1 on l_2).  Lifted diagonally to order-n
tuples, such an operator commutes with the differential KP_{1,k} up to a
bounded defect; the defect is measured here, never asserted to equal a
universal constant.

Permutations and unimodular multipliers commute exactly: they preserve
|x| pointwise up to rearrangement and preserve the norm, so the log ratio
is equivariant and the defect vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroVectorInFamily
from .kp import kp_map
from .operators import (
    BlockMap,
    Multiplier,
    OperatorAtom,
    OperatorMatrix,
    Permutation,
    atom_apply,
    diagonal_lift,
)
from .orlicz import domain_norm
from .rochberg import RochbergVector, quasinorm
from .seqcore import CoordVector, l2_norm

_SCALE_KINDS = (Multiplier, Permutation, BlockMap)


@dataclass(frozen=True)
class ScaleOperator:
    """A coordinate operator bounded on both endpoints of the scale."""

    atom: OperatorAtom
    bound: float

    def __post_init__(self):
        if not isinstance(self.atom, _SCALE_KINDS):
            raise TypeError(
                "scale operators are multipliers, permutations or block maps"
            )
        if self.bound <= 0:
            raise ValueError("scale bound must be positive")

    @classmethod
    def from_atom(cls, atom: OperatorAtom, bound=None) -> "ScaleOperator":
        if bound is None:
            bound = natural_bound(atom)
        return cls(atom, float(bound))


def natural_bound(atom: OperatorAtom) -> float:
    """Sup bound of a multiplier, 1 for permutations and normalised block maps."""
    if isinstance(atom, Multiplier):
        if atom.diag.is_zero:
            return 0.0
        if atom.diag.is_flat:
            return abs(atom.diag.flat_parts[1])
        _, val = atom.diag.dense_arrays()
        return float(np.abs(val).max())
    if isinstance(atom, (Permutation, BlockMap)):
        return 1.0
    raise TypeError("not a scale operator atom")


def lift(tau, n: int) -> OperatorMatrix:
    """tau in every diagonal slot of an order-n operator matrix."""
    atom = tau.atom if isinstance(tau, ScaleOperator) else tau
    return diagonal_lift(atom, n)


def _atom_of(tau) -> OperatorAtom:
    return tau.atom if isinstance(tau, ScaleOperator) else tau


def commutator_defect(tau, k: int, x: CoordVector, entry_budget=None) -> float:
    """|| lift(tau)(KP_{1,k} x) - KP_{1,k}(tau x) ||_{Z_k} / ||x||_2."""
    if k < 1:
        raise ValueError("commutator_defect needs k >= 1")
    nx = l2_norm(x)
    if nx == 0.0:
        return 0.0
    atom = _atom_of(tau)
    left = tuple(atom_apply(atom, c, entry_budget) for c in kp_map(k, x))
    right = kp_map(k, atom_apply(atom, x, entry_budget))
    diff = RochbergVector(left).sub(RochbergVector(right), entry_budget)
    return quasinorm(diff, entry_budget) / nx


def domain_invariance_check(tau, n: int, samples, entry_budget=None) -> float:
    """max over samples of domain_norm(n, tau x) / domain_norm(n, x)."""
    atom = _atom_of(tau)
    worst = None
    for x in samples:
        base = domain_norm(n, x, entry_budget)
        if base == 0.0:
            raise ZeroVectorInFamily("samples must be nonzero")
        moved = domain_norm(n, atom_apply(atom, x, entry_budget), entry_budget)
        ratio = moved / base
        if worst is None or ratio > worst:
            worst = ratio
    if worst is None:
        raise ZeroVectorInFamily("no samples supplied")
    return worst
