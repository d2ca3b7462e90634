"""Orlicz sequence-space numerics.

The family of normalised Orlicz functions used here is, for j >= 0,

    F_j(t) = t^2 * log^{2j}(1/t) / j^{2j}   for 0 <= t <= e^{-j},
    F_j(t) = t^2                            for t > e^{-j},

continuous, non-decreasing, F_j(0) = 0 and F_j(1) = 1; only the germ at 0
matters for the sequence space, and F_0 is exactly t^2 (the l2 case).  The
raw germ t^2 log^{2j} t is degenerate at 1, hence the quadratic splice.

``luxemburg_norm`` solves sum_i F(|x_i| / rho) = 1 by bisection on the
strictly decreasing modular.  The bracket [max|x_i|, sum|x_i|] is valid
because F(1) = 1 forces the modular above 1 at the left end, while
F_j(t) <= t on [0, 1] (the maximum of t log^{2j}(1/t) on (0, e^{-j}] is
(4/e^2)^{2j} j^{2j} < j^{2j}) forces it at or below 1 at the right end.

``telescope_coefficients`` runs the coefficient cascade that reduces the
quasinorm of a bottom-coordinate vector (0, ..., 0, x) to a single
log-power term, in exact rational arithmetic: the cascade's step
coefficients alternate in sign, and whether the final coefficient is
nonzero is precisely what makes the log^{n-1} scale the right one, so
floating point is not trusted here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ToleranceNotReached
from .kp import kp_map
from .rochberg import RochbergVector, quasinorm
from .seqcore import CoordVector, l2_norm


@dataclass(frozen=True)
class OrliczFunction:
    """The normalised Orlicz function F_j; j = 0 gives t^2."""

    j: int

    def __post_init__(self):
        if self.j < 0:
            raise ValueError("orlicz index must be non-negative")

    @property
    def switch_point(self) -> float:
        """Where the log germ hands over to the quadratic splice."""
        return math.exp(-self.j)

    def value(self, t: float) -> float:
        if t < 0:
            raise ValueError("orlicz functions take non-negative arguments")
        if t == 0.0:
            return 0.0
        if self.j == 0 or t > self.switch_point:
            return t * t
        base = -math.log(t) / self.j
        return (t * base**self.j) ** 2

    __call__ = value

    def value_array(self, t: np.ndarray) -> np.ndarray:
        out = np.zeros_like(t)
        if self.j == 0:
            np.multiply(t, t, out=out)
            return out
        big = t > self.switch_point
        if big.any():
            tb = t[big]
            out[big] = tb * tb
        small = (~big) & (t > 0)
        if small.any():
            ts = t[small]
            base = -np.log(ts) / self.j
            out[small] = (ts * base**self.j) ** 2

        return out


def orlicz_value(f: OrliczFunction, t: float) -> float:
    return f.value(t)


def modular(f: OrliczFunction, x: CoordVector, rho: float) -> float:
    """sum_i F(|x_i| / rho); O(1) for flat vectors."""
    if rho <= 0:
        raise ValueError("modular needs rho > 0")
    if x.is_zero:
        return 0.0
    if x.is_flat:
        length, value, _ = x.flat_parts
        return float(length) * f.value(abs(value) / rho)
    _, val = x.dense_arrays()
    return float(f.value_array(np.abs(val) / rho).sum())


def luxemburg_norm(
    f: OrliczFunction, x: CoordVector, tol: float = 1e-12, max_iter: int = 200
) -> float:
    """The unique rho > 0 with modular(f, x, rho) = 1, located by bisection.

    The returned rho satisfies |modular - 1| <= tol; hitting the iteration
    cap first raises ToleranceNotReached.  The zero vector has norm 0.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if x.is_zero:
        return 0.0
    if x.is_flat:
        length, value, _ = x.flat_parts
        lo = abs(value)
        hi = abs(value) * float(length)
    else:
        _, val = x.dense_arrays()
        lo = float(np.abs(val).max())
        hi = float(np.abs(val).sum())
    # safety expansion; the analytic bracket should already hold
    guard = 0
    while modular(f, x, hi) > 1.0:
        hi *= 2.0
        guard += 1
        if guard > 200:
            raise ToleranceNotReached("cannot bracket the Luxemburg norm above")
    guard = 0
    while modular(f, x, lo) < 1.0:
        lo *= 0.5
        guard += 1
        if guard > 200:
            raise ToleranceNotReached("cannot bracket the Luxemburg norm below")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        res = modular(f, x, mid) - 1.0
        if abs(res) <= tol:
            return mid
        if res > 0.0:
            lo = mid
        else:
            hi = mid
    raise ToleranceNotReached(
        f"bisection cap {max_iter} hit; last residual {res:.3e} exceeds tol {tol:.3e}"
    )


@dataclass(frozen=True)
class TelescopeCoefficients:
    """Step coefficients of the cascade and the surviving leading one."""

    n: int
    alphas: tuple[Fraction, ...]
    final: Fraction


def telescope_coefficients(n: int) -> TelescopeCoefficients:
    """Run the cascade for order n >= 2 in exact rationals.

    State s holds coefficients c[j] (j = 1..n-s) of x * c[j] log^{j+s-1}|x|.
    Step s peels alpha_s = c[1] and replaces c[j] <- c[j+1] - alpha_s 2^j/j!.
    After n-1 steps one coefficient remains; it is reported as ``final``.
    """
    if n < 2:
        raise ValueError("telescope_coefficients needs n >= 2")
    coef = {j: Fraction(2**j, math.factorial(j)) for j in range(1, n)}
    alphas = []
    for s in range(1, n):
        alpha = coef[1]
        alphas.append(alpha)
        coef = {
            j: coef[j + 1] - alpha * Fraction(2**j, math.factorial(j))
            for j in range(1, n - s)
        }
    return TelescopeCoefficients(n, tuple(alphas), alphas[-1])


class GrowthRow(NamedTuple):
    n: int
    N: int
    quasinorm: float
    logpow: float
    ratio: float


def growth_profile(n: int, Ns: Iterable[int]) -> list[GrowthRow]:
    """Quasinorm of bottom-coordinate unit flats against the log^{n-1} scale.

    Each row holds (n, N, ||(0,...,0, N^{-1/2} 1_N)||, log^{n-1} N, ratio);
    flat closure keeps the cost O(n^2) per row no matter how large N is.
    """
    if n < 2:
        raise ValueError("growth_profile needs n >= 2")
    rows = []
    zero = CoordVector.zero()
    for N in Ns:
        N = int(N)
        if N < 2:
            raise ValueError("growth lengths must be >= 2")
        x = CoordVector.flat(N, float(N) ** -0.5)
        v = RochbergVector((zero,) * (n - 1) + (x,))
        q = quasinorm(v)
        logpow = math.log(N) ** (n - 1)
        rows.append(GrowthRow(n, N, q, logpow, q / logpow))
    return rows


def growth_profile_csv(rows: Iterable[GrowthRow]) -> str:
    lines = ["n,N,quasinorm,logpow,ratio"]
    for r in rows:
        lines.append(f"{r.n},{r.N},{r.quasinorm!r},{r.logpow!r},{r.ratio!r}")
    return "\n".join(lines) + "\n"


def domain_norm(n: int, x: CoordVector, entry_budget=None) -> float:
    """||KP_{1,n-1} x||_{Z_{n-1}} + ||x||_2, the graph norm of the order-(n-1) map."""
    if n < 2:
        raise ValueError("domain_norm needs n >= 2")
    if x.is_zero:
        return 0.0
    tup = RochbergVector(kp_map(n - 1, x))
    return quasinorm(tup, entry_budget) + l2_norm(x)
