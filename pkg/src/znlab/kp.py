"""Kalton-Peck differential maps.

The k-th component acts coordinatewise as

    KP^k x = (2^k / k!) * x * log^k(|x| / ||x||_2)

with natural logarithm, the convention 0 * log^k(0) = 0 off the support, and
KP^k 0 = 0 (the maps are 1-homogeneous, so the zero vector must go to zero).
``kp_map(m, x)`` stacks components (KP^m x, ..., KP^1 x), highest order
first, matching the tuple convention of :mod:`znlab.rochberg`.

Flat vectors are closed under every component: for x = a * 1_{(off, off+N]}
the log ratio is the constant -log(N)/2, so KP^k x is flat with value
(2^k / k!) * a * (-log(N)/2)^k, independent of how large N is.
"""

from __future__ import annotations

import math

import numpy as np

from .seqcore import CoordVector, l2_norm, pair

_COEF_CACHE: dict[int, float] = {}


def _coef(k: int) -> float:
    c = _COEF_CACHE.get(k)
    if c is None:
        c = 2.0**k / math.factorial(k)
        _COEF_CACHE[k] = c
    return c


def kp_component(k: int, x: CoordVector) -> CoordVector:
    """The k-th component KP^k x; k = 0 is the identity."""
    if k < 0:
        raise ValueError("component order must be non-negative")
    if k == 0:
        return x
    if x.is_zero:
        return CoordVector.zero()
    if x.is_flat:
        length, value, offset = x.flat_parts
        r = -0.5 * math.log(length)
        out = _coef(k) * value * r**k
        if out == 0.0:
            return CoordVector.zero()
        return CoordVector.flat(length, out, offset)
    idx, val = x.dense_arrays()
    r = np.log(np.abs(val)) - math.log(l2_norm(x))
    return CoordVector._from_arrays(idx, _coef(k) * val * r**k, check=False)


def kp_map(m: int, x: CoordVector) -> tuple[CoordVector, ...]:
    """(KP^m x, ..., KP^1 x), highest component first."""
    if m < 1:
        raise ValueError("kp_map needs m >= 1")
    if x.is_zero:
        z = CoordVector.zero()
        return (z,) * m
    if x.is_flat:
        length, value, offset = x.flat_parts
        r = -0.5 * math.log(length)
        out = []
        for k in range(m, 0, -1):
            v = _coef(k) * value * r**k
            out.append(
                CoordVector.flat(length, v, offset) if v != 0.0 else CoordVector.zero()
            )
        return tuple(out)
    idx, val = x.dense_arrays()
    r = np.log(np.abs(val)) - math.log(l2_norm(x))
    comps = []
    rk = np.ones_like(val)
    for k in range(1, m + 1):
        rk = rk * r
        comps.append(
            CoordVector._from_arrays(idx, _coef(k) * val * rk, check=False)
        )
    comps.reverse()
    return tuple(comps)


def lemma4_sum(n: int, x: CoordVector, xp: CoordVector) -> tuple[float, float]:
    """The alternating pairing sum of KP components and its bound.

    value = | sum_{k=0}^{n-1} (-1)^k <KP^{n-1-k} x, KP^k x'> |
    bound = 2^{n-1} * ||x||_2 * ||x'||_2
    """
    if n < 1:
        raise ValueError("lemma4_sum needs n >= 1")
    nx = l2_norm(x)
    nxp = l2_norm(xp)
    bound = 2.0 ** (n - 1) * nx * nxp
    if nx == 0.0 or nxp == 0.0:
        return 0.0, bound
    if not (x.is_flat or xp.is_flat):
        ix, vx = x.dense_arrays()
        ip, vp = xp.dense_arrays()
        if ix.size == ip.size and np.array_equal(ix, ip):
            a, b = vx, vp
        else:
            _, ia, ib = np.intersect1d(ix, ip, assume_unique=True, return_indices=True)
            if ia.size == 0:
                return 0.0, bound
            a, b = vx[ia], vp[ib]
        r = np.log(np.abs(a)) - math.log(nx)
        s = np.log(np.abs(b)) - math.log(nxp)
        rpow = [np.ones_like(a)]
        spow = [np.ones_like(b)]
        for _ in range(n - 1):
            rpow.append(rpow[-1] * r)
            spow.append(spow[-1] * s)
        weight = np.zeros_like(a)
        for k in range(n):
            c = _coef(n - 1 - k) * _coef(k)
            sign = -1.0 if k % 2 else 1.0
            weight = weight + sign * c * rpow[n - 1 - k] * spow[k]
        total = float(np.dot(a * b, weight))
        return abs(total), bound
    total = 0.0
    for k in range(n):
        term = pair(kp_component(n - 1 - k, x), kp_component(k, xp))
        total += -term if k % 2 else term
    return abs(total), bound


def quasilinearity_defect(
    m: int, x: CoordVector, y: CoordVector, entry_budget=None
) -> tuple[float, float]:
    """Size of KP_{1,m}(x+y) - KP_{1,m}(x) - KP_{1,m}(y) and its natural scale.

    Returns (defect, budget) with defect measured in the order-m quasinorm
    and budget = ||x||_2 + ||y||_2, so callers can form the ratio.
    """
    from . import rochberg
    from .seqcore import add, sub

    if m < 1:
        raise ValueError("quasilinearity_defect needs m >= 1")
    budget = l2_norm(x) + l2_norm(y)
    s = add(x, y, entry_budget)
    ts = kp_map(m, s)
    tx = kp_map(m, x)
    ty = kp_map(m, y)
    diff = tuple(
        sub(sub(a, b, entry_budget), c, entry_budget) for a, b, c in zip(ts, tx, ty)
    )
    defect = rochberg.quasinorm(
        rochberg.RochbergVector(diff), entry_budget=entry_budget
    )
    return defect, budget
