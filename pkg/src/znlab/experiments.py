"""Deterministic experiment runner behind the ``zn-lab`` command.

Sampling is counter-based: the sample stream is split into fixed chunks of
:data:`CHUNK` samples, and the generator of chunk c for part p at order n
is seeded from ``(seed, p, n, c)`` alone.  Chunks are the unit of
parallelism, so serial and threaded runs produce bit-identical results and
any single sample can be regenerated from the (seed, offset) pair recorded
in its report row.

Every gate carries its budget source: "paper constant" for bounds the
theory pins down, "exact identity" for float-level identities, and
"configured budget" for measured equivalence constants that are only
gated, never asserted.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rochberg, seqcore
from .commutator import ScaleOperator, commutator_defect, domain_invariance_check
from .errors import ConfigInvalid, RowNotFound
from .kp import lemma4_sum, quasilinearity_defect
from .operators import (
    FiniteOperator,
    Multiplier,
    OperatorMatrix,
    Permutation,
    Scale,
    Zero,
    adjoint_plus,
    apply,
    block_operator,
    corner_extract,
    matrix_compose,
    parse_atom,
    shift_power,
    singularity_profile,
    zero_matrix,
)
from .orlicz import (
    OrliczFunction,
    domain_norm,
    growth_profile,
    luxemburg_norm,
    telescope_coefficients,
)
from .rochberg import (
    RochbergVector,
    duality_pairing,
    embed,
    graph_vector,
    omega_lower_bound,
    quasinorm,
)
from .seqcore import CoordVector, l2_norm

__version__ = "0.1.0"

CHUNK = 1024

EXPERIMENTS = (
    "norm",
    "pairing",
    "lemma4",
    "quasilinearity",
    "growth",
    "witness",
    "commutator",
    "telescope",
    "adjoint-check",
    "corners",
    "report-all",
)

DEFAULT_BUDGETS = {
    "quasi_triangle": 4.0,  # gate base**n
    "duality": 4.0,  # gate base**n
    "quasilinearity": 4.0,  # gate base**m
    "commutator": 8.0,  # gate base*k
    "domain": 10.0,
    "band": 10.0,
    "growth": 0.05,
}

_DEFAULT_NS = {
    "norm": (1, 2, 3, 4, 5, 6),
    "pairing": (2, 3, 4, 5),
    "lemma4": (1, 2, 3, 4, 5),
    "quasilinearity": (1, 2, 3, 4),
    "growth": (2, 3, 4),
    "witness": (2, 3, 4, 5),
    "commutator": (1, 2, 3, 4, 5),
    "telescope": (8,),
    "adjoint-check": (2, 3, 4),
    "corners": (2, 3, 4, 5),
}

_DEFAULT_NS_GROWTH = tuple(2**p for p in range(10, 61, 2))

# part identifiers used in sample offsets (stable across releases)
P_GRAPH = 10
P_IOTA = 11
P_TRIANGLE = 12
P_DUALITY = 20
P_ANTISYM = 21
P_LEMMA4 = 30
P_QUASILIN = 40
P_BAND = 51
P_CHAIN = 52
P_WITNESS = 60
P_COMM_PERM = 70
P_COMM_UNIMOD = 71
P_COMM_MULT = 72
P_COMM_DOMAIN = 73
P_PAIR_PRESERVE = 90
P_CORNER = 100


def thread_count() -> int:
    raw = os.environ.get("ZN_LAB_THREADS", "1")
    try:
        t = int(raw)
    except ValueError:
        raise ConfigInvalid(f"ZN_LAB_THREADS must be an integer, got {raw!r}")
    return max(1, t)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    ns: tuple[int, ...] = ()
    dim: int = 64
    samples: int = 2000
    seed: int = 7
    tol: float = 1e-10
    budgets: dict = field(default_factory=dict)
    Ns: tuple[int, ...] = ()
    op: str | None = None
    out: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigInvalid(f"unknown experiment {self.experiment!r}")
        if self.samples < 1:
            raise ConfigInvalid("samples must be >= 1")
        if self.tol <= 0:
            raise ConfigInvalid("tol must be positive")
        if self.dim < 1:
            raise ConfigInvalid("dim must be >= 1")
        if self.fmt not in ("csv", "json"):
            raise ConfigInvalid(f"format must be csv or json, got {self.fmt!r}")
        for key in self.budgets:
            if key not in DEFAULT_BUDGETS:
                raise ConfigInvalid(f"unknown budget {key!r}")

    def budget(self, name: str) -> float:
        return float(self.budgets.get(name, DEFAULT_BUDGETS[name]))

    def orders(self, experiment=None) -> tuple[int, ...]:
        if self.ns:
            return self.ns
        return _DEFAULT_NS[experiment or self.experiment]

    def lengths(self) -> tuple[int, ...]:
        return self.Ns if self.Ns else _DEFAULT_NS_GROWTH

    def canonical(self) -> str:
        budgets = ",".join(f"{k}={self.budgets[k]!r}" for k in sorted(self.budgets))
        parts = [
            f"experiment={self.experiment}",
            f"ns={','.join(map(str, self.ns))}",
            f"dim={self.dim}",
            f"samples={self.samples}",
            f"seed={self.seed}",
            f"tol={self.tol!r}",
            f"budgets={budgets}",
            f"Ns={','.join(map(str, self.Ns))}",
            f"op={self.op or ''}",
        ]
        return "\n".join(parts)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Row:
    experiment: str
    n: int
    param: str
    value: float
    bound: float | None
    ratio: float | None
    passed: bool


@dataclass(frozen=True)
class Gate:
    name: str
    measured: float
    budget: float
    source: str
    passed: bool


@dataclass
class ExperimentReport:
    meta: dict
    rows: list[Row]
    gates: list[Gate]

    @property
    def all_pass(self) -> bool:
        return all(g.passed for g in self.gates)

    def to_csv(self) -> str:
        lines = ["experiment,n,param,value,bound,ratio,pass"]
        for r in self.rows:
            bound = "" if r.bound is None else repr(float(r.bound))
            ratio = "" if r.ratio is None else repr(float(r.ratio))
            lines.append(
                f"{r.experiment},{r.n},{r.param},{float(r.value)!r},"
                f"{bound},{ratio},{'true' if r.passed else 'false'}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        obj = {
            "meta": self.meta,
            "rows": [vars(r) for r in self.rows],
            "gates": [vars(g) for g in self.gates],
        }
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        obj = json.loads(text)
        rows = [Row(**r) for r in obj["rows"]]
        gates = [Gate(**g) for g in obj["gates"]]
        return cls(obj["meta"], rows, gates)


# -- deterministic sampling ----------------------------------------------


def _chunk_rng(seed: int, part: int, n: int, chunk: int):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(part, n, chunk))
    return np.random.default_rng(ss)


def encode_offset(part: int, n: int, i: int) -> int:
    return (part << 44) | (n << 36) | i


def decode_offset(offset: int):
    return offset >> 44, (offset >> 36) & 0xFF, offset & 0xFFFFFFFFF


def sample_vector(rng, dim: int) -> CoordVector:
    """Random sparse vector: support size uniform in 1..dim, normal values."""
    nnz = int(rng.integers(1, dim + 1))
    idx = np.sort(rng.choice(np.arange(1, dim + 1, dtype=np.int64), nnz, replace=False))
    val = rng.standard_normal(nnz)
    return CoordVector._from_arrays(idx, val, check=False)


def sample_full_vector(rng, dim: int) -> CoordVector:
    idx = np.arange(1, dim + 1, dtype=np.int64)
    return CoordVector._from_arrays(idx, rng.standard_normal(dim), check=False)


def sample_tuple(rng, n: int, dim: int) -> RochbergVector:
    return RochbergVector(tuple(sample_vector(rng, dim) for _ in range(n)))


def _run_part(cfg, part: int, n: int, drawer, evaluator, count=None):
    """Evaluate ``count`` samples of one part; returns the value array.

    Chunks are independent and deterministic, so the thread pool cannot
    change any value, only the wall time.
    """
    count = cfg.samples if count is None else count
    chunks = (count + CHUNK - 1) // CHUNK
    out = np.empty(count)

    def work(c):
        rng = _chunk_rng(cfg.seed, part, n, c)
        lo = c * CHUNK
        hi = min(count, lo + CHUNK)
        vals = np.empty(hi - lo)
        for pos in range(hi - lo):
            vals[pos] = evaluator(cfg, n, drawer(rng, cfg, n))
        return c, lo, vals

    threads = thread_count()
    if threads > 1 and chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for c, lo, vals in pool.map(work, range(chunks)):
                out[lo : lo + vals.size] = vals
    else:
        for c in range(chunks):
            _, lo, vals = work(c)
            out[lo : lo + vals.size] = vals
    return out


def regenerate_sample(cfg, part: int, n: int, i: int):
    """Re-draw the i-th sample of a part by replaying its chunk."""
    drawer, _ = _PART_FUNCS[part]
    chunk, pos = divmod(i, CHUNK)
    rng = _chunk_rng(cfg.seed, part, n, chunk)
    sample = None
    for _ in range(pos + 1):
        sample = drawer(rng, cfg, n)
    return sample


def _worst_row(cfg, experiment, part, n, values, bound, better="max"):
    """Build the extremal-sample row for a sampled part."""
    i = int(np.argmax(values) if better == "max" else np.argmin(values))
    value = float(values[i])
    ratio = value / bound if bound else None
    passed = value <= bound if better == "max" else value >= bound
    return Row(
        experiment,
        n,
        str(encode_offset(part, n, i)),
        value,
        bound,
        ratio,
        bool(passed),
    )


# -- samplers and evaluators ----------------------------------------------


def _draw_vec(rng, cfg, n):
    return sample_vector(rng, cfg.dim)


def _draw_full_pair(rng, cfg, n):
    return sample_full_vector(rng, cfg.dim), sample_full_vector(rng, cfg.dim)


def _draw_tuple_pair(rng, cfg, n):
    return sample_tuple(rng, n, cfg.dim), sample_tuple(rng, n, cfg.dim)


def _draw_tuple(rng, cfg, n):
    return sample_tuple(rng, n, cfg.dim)


def _draw_lower_tuple(rng, cfg, n):
    k = int(rng.integers(1, n + 1))
    return sample_tuple(rng, k, cfg.dim)


def _draw_vec_pair(rng, cfg, n):
    return sample_vector(rng, cfg.dim), sample_vector(rng, cfg.dim)


def _draw_perm_and_vec(rng, cfg, n):
    images = rng.permutation(np.arange(1, cfg.dim + 1))
    mapping = {i + 1: int(images[i]) for i in range(cfg.dim)}
    return Permutation.from_mapping(mapping), sample_vector(rng, cfg.dim)


def _draw_signs_and_vec(rng, cfg, n):
    signs = np.where(rng.random(cfg.dim) < 0.5, -1.0, 1.0)
    idx = np.arange(1, cfg.dim + 1, dtype=np.int64)
    diag = CoordVector._from_arrays(idx, signs, check=False)
    return Multiplier(diag), sample_vector(rng, cfg.dim)


def _draw_contractive_and_vec(rng, cfg, n):
    idx = np.arange(1, cfg.dim + 1, dtype=np.int64)
    diag = CoordVector._from_arrays(idx, rng.uniform(1e-6, 1.0, cfg.dim), check=False)
    return Multiplier(diag), sample_vector(rng, cfg.dim)


def _draw_block_tuple_pair(rng, cfg, n):
    C = _adjoint_blocks(n)["C"]
    return (
        RochbergVector(tuple(sample_vector(rng, C) for _ in range(n))),
        RochbergVector(tuple(sample_vector(rng, C) for _ in range(n))),
    )


def _eval_graph(cfg, n, u):
    nu = l2_norm(u)
    return abs(quasinorm(graph_vector(n, u)) - nu) / nu


def _eval_iota(cfg, n, v):
    q = quasinorm(v)
    return abs(quasinorm(embed(v, n)) - q) / q if q else 0.0


def _eval_triangle(cfg, n, pair_):
    v, w = pair_
    return quasinorm(v.add(w)) / (quasinorm(v) + quasinorm(w))


def _eval_duality(cfg, n, pair_):
    v, w = pair_
    return abs(duality_pairing(v, w)) / (quasinorm(v) * quasinorm(w))


def _eval_antisym(cfg, n, v):
    if n % 2 == 0:
        scale_ = sum(
            abs(seqcore.pair(v.coords[i - 1], v.coords[n - i]))
            for i in range(1, n + 1)
        )
        return abs(duality_pairing(v, v)) / (1.0 + scale_)
    mid = (n + 1) // 2
    x_mid = v.coords[mid - 1]
    lone = RochbergVector(
        tuple(
            x_mid if p == mid - 1 else CoordVector.zero() for p in range(n)
        )
    )
    expected = (-1.0) ** mid * seqcore.pair(x_mid, x_mid)
    got = duality_pairing(lone, lone)
    return abs(got - expected) / (1.0 + abs(expected))


def _eval_lemma4(cfg, n, pair_):
    x, y = pair_
    value, bound = lemma4_sum(n, x, y)
    return value / bound if bound else 0.0


def _eval_quasilin(cfg, m, pair_):
    x, y = pair_
    defect, budget = quasilinearity_defect(m, x, y)
    return defect / budget if budget else 0.0


def _eval_band(cfg, n, x):
    f = OrliczFunction(n - 1)
    r = domain_norm(n, x) / luxemburg_norm(f, x, tol=min(cfg.tol, 1e-10))
    return max(r, 1.0 / r)


def _eval_chain(cfg, j, x):
    hi = luxemburg_norm(OrliczFunction(j), x, tol=min(cfg.tol, 1e-10))
    lo = luxemburg_norm(OrliczFunction(j - 1), x, tol=min(cfg.tol, 1e-10))
    return lo / hi


def _eval_witness(cfg, n, u):
    x = RochbergVector((u,) + (CoordVector.zero(),) * (n - 1))
    sup = float(np.abs(u.dense_arrays()[1]).max())
    lb_default = omega_lower_bound(x)
    unit = seqcore.scale(1.0 / l2_norm(u), u)
    lb_full = omega_lower_bound(x, witnesses=[graph_vector(n, unit)])
    # minimum of the two recovery ratios; both must reach their targets
    return min(lb_default / sup, lb_full / l2_norm(u))


def _eval_comm(cfg, k, sample):
    atom, x = sample
    tau = ScaleOperator.from_atom(atom)
    return commutator_defect(tau, k, x)


def _eval_pair_preserve(cfg, n, pair_):
    v, w = pair_
    T = _adjoint_blocks(n)["tu"]
    return abs(duality_pairing(apply(T, v), apply(T, w)) - duality_pairing(v, w))


_PART_FUNCS = {
    P_GRAPH: (_draw_vec, _eval_graph),
    P_IOTA: (_draw_lower_tuple, _eval_iota),
    P_TRIANGLE: (_draw_tuple_pair, _eval_triangle),
    P_DUALITY: (_draw_tuple_pair, _eval_duality),
    P_ANTISYM: (_draw_tuple, _eval_antisym),
    P_LEMMA4: (_draw_full_pair, _eval_lemma4),
    P_QUASILIN: (_draw_vec_pair, _eval_quasilin),
    P_BAND: (_draw_vec, _eval_band),
    P_CHAIN: (_draw_vec, _eval_chain),
    P_WITNESS: (_draw_vec, _eval_witness),
    P_COMM_PERM: (_draw_perm_and_vec, _eval_comm),
    P_COMM_UNIMOD: (_draw_signs_and_vec, _eval_comm),
    P_COMM_MULT: (_draw_contractive_and_vec, _eval_comm),
    P_COMM_DOMAIN: (_draw_vec, None),
    P_PAIR_PRESERVE: (_draw_block_tuple_pair, _eval_pair_preserve),
    P_CORNER: (_draw_tuple, None),
}


# -- experiments -----------------------------------------------------------


def _exp_norm(cfg, rows, gates):
    for n in cfg.orders("norm"):
        vals = _run_part(cfg, P_GRAPH, n, *_PART_FUNCS[P_GRAPH])
        rows.append(_worst_row(cfg, "norm", P_GRAPH, n, vals, 1e-9))
        gates.append(
            Gate(f"graph_isometry(n={n})", float(vals.max()), 1e-9,
                 "exact identity", bool(vals.max() <= 1e-9))
        )
        vals = _run_part(cfg, P_IOTA, n, *_PART_FUNCS[P_IOTA])
        rows.append(_worst_row(cfg, "norm", P_IOTA, n, vals, 1e-12))
        gates.append(
            Gate(f"iota_isometry(n={n})", float(vals.max()), 1e-12,
                 "exact identity", bool(vals.max() <= 1e-12))
        )
        budget = cfg.budget("quasi_triangle") ** n
        vals = _run_part(cfg, P_TRIANGLE, n, *_PART_FUNCS[P_TRIANGLE])
        rows.append(_worst_row(cfg, "norm", P_TRIANGLE, n, vals, budget))
        gates.append(
            Gate(f"quasi_triangle(n={n})", float(vals.max()), budget,
                 "configured budget", bool(vals.max() <= budget))
        )


def _exp_pairing(cfg, rows, gates):
    for n in cfg.orders("pairing"):
        budget = cfg.budget("duality") ** n
        vals = _run_part(cfg, P_DUALITY, n, *_PART_FUNCS[P_DUALITY])
        rows.append(_worst_row(cfg, "pairing", P_DUALITY, n, vals, budget))
        gates.append(
            Gate(f"duality_bound(n={n})", float(vals.max()), budget,
                 "configured budget", bool(vals.max() <= budget))
        )
        vals = _run_part(cfg, P_ANTISYM, n, *_PART_FUNCS[P_ANTISYM])
        rows.append(_worst_row(cfg, "pairing", P_ANTISYM, n, vals, 1e-12))
        gates.append(
            Gate(f"pairing_antisymmetry(n={n})", float(vals.max()), 1e-12,
                 "exact identity", bool(vals.max() <= 1e-12))
        )


def _exp_lemma4(cfg, rows, gates):
    for n in cfg.orders("lemma4"):
        bound = 1.0 + 1e-9
        vals = _run_part(cfg, P_LEMMA4, n, *_PART_FUNCS[P_LEMMA4])
        rows.append(_worst_row(cfg, "lemma4", P_LEMMA4, n, vals, bound))
        gates.append(
            Gate(f"lemma4_bound(n={n})", float(vals.max()), bound,
                 "paper constant", bool(vals.max() <= bound))
        )


def _exp_quasilinearity(cfg, rows, gates):
    for m in cfg.orders("quasilinearity"):
        budget = cfg.budget("quasilinearity") ** m
        vals = _run_part(cfg, P_QUASILIN, m, *_PART_FUNCS[P_QUASILIN])
        rows.append(_worst_row(cfg, "quasilinearity", P_QUASILIN, m, vals, budget))
        gates.append(
            Gate(f"quasilinearity(m={m})", float(vals.max()), budget,
                 "configured budget", bool(vals.max() <= budget))
        )


def _exp_growth(cfg, rows, gates):
    lengths = cfg.lengths()
    stab_budget = cfg.budget("growth")
    for n in cfg.orders("growth"):
        profile = {r.N: r for r in growth_profile(n, lengths)}
        for N in (2**30, 2**60):
            if N not in profile:
                profile[N] = growth_profile(n, [N])[0]
        if n == 2:
            worst = max(
                abs(r.quasinorm - (math.log(r.N) + 1.0)) / (math.log(r.N) + 1.0)
                for r in profile.values()
            )
            gates.append(
                Gate("growth_exact(n=2)", float(worst), 1e-9,
                     "exact identity", bool(worst <= 1e-9))
            )
            ok = worst <= 1e-9
        else:
            r30, r60 = profile[2**30].ratio, profile[2**60].ratio
            change = abs(r30 - r60) / r30
            gates.append(
                Gate(f"growth_stabilization(n={n})", float(change), stab_budget,
                     "configured budget", bool(change <= stab_budget))
            )
            ok = change <= stab_budget
        for N in sorted(profile):
            r = profile[N]
            rows.append(
                Row("growth", n, str(N), r.quasinorm, r.logpow, r.ratio, bool(ok))
            )
        if n >= 2:
            band_budget = cfg.budget("band")
            flat_band = 0.0
            f = OrliczFunction(n - 1)
            for p in range(2, 61, 2):
                x = CoordVector.flat(2**p, 2.0 ** (-p / 2))
                ratio = domain_norm(n, x) / luxemburg_norm(f, x, tol=1e-10)
                flat_band = max(flat_band, ratio, 1.0 / ratio)
            vals = _run_part(cfg, P_BAND, n, *_PART_FUNCS[P_BAND])
            band = max(flat_band, float(vals.max()))
            rows.append(_worst_row(cfg, "growth", P_BAND, n, vals, band_budget))
            rows.append(
                Row("growth", n, "flat_band", flat_band, band_budget,
                    flat_band / band_budget, bool(flat_band <= band_budget))
            )
            gates.append(
                Gate(f"domain_band(n={n})", band, band_budget,
                     "configured budget", bool(band <= band_budget))
            )
    max_j = max(cfg.orders("growth")) - 1
    for j in range(1, max_j + 1):
        vals = _run_part(cfg, P_CHAIN, j, *_PART_FUNCS[P_CHAIN])
        rows.append(
            Row("growth", j, f"chain_C_{j}", float(vals.max()), None, None, True)
        )


def _exp_witness(cfg, rows, gates):
    for n in cfg.orders("witness"):
        vals = _run_part(cfg, P_WITNESS, n, *_PART_FUNCS[P_WITNESS])
        bound = 1.0 - 1e-9
        rows.append(_worst_row(cfg, "witness", P_WITNESS, n, vals, bound, "min"))
        gates.append(
            Gate(f"witness_recovery(n={n})", float(vals.min()), bound,
                 "exact identity", bool(vals.min() >= bound))
        )


def _exp_commutator(cfg, rows, gates):
    for k in cfg.orders("commutator"):
        vals = _run_part(cfg, P_COMM_PERM, k, *_PART_FUNCS[P_COMM_PERM])
        rows.append(_worst_row(cfg, "commutator", P_COMM_PERM, k, vals, 1e-12))
        gates.append(
            Gate(f"permutation_defect(k={k})", float(vals.max()), 1e-12,
                 "exact identity", bool(vals.max() <= 1e-12))
        )
        vals = _run_part(cfg, P_COMM_UNIMOD, k, *_PART_FUNCS[P_COMM_UNIMOD])
        rows.append(_worst_row(cfg, "commutator", P_COMM_UNIMOD, k, vals, 1e-12))
        gates.append(
            Gate(f"unimodular_defect(k={k})", float(vals.max()), 1e-12,
                 "exact identity", bool(vals.max() <= 1e-12))
        )
        if k <= 4:
            budget = cfg.budget("commutator") * k
            vals = _run_part(cfg, P_COMM_MULT, k, *_PART_FUNCS[P_COMM_MULT])
            rows.append(_worst_row(cfg, "commutator", P_COMM_MULT, k, vals, budget))
            gates.append(
                Gate(f"contractive_defect(k={k})", float(vals.max()), budget,
                     "configured budget", bool(vals.max() <= budget))
            )
    n = max(2, min(4, max(cfg.orders("commutator"))))
    _commutator_domain(cfg, n, rows, gates)


def _commutator_domain(cfg, n, rows, gates):
    budget = cfg.budget("domain")
    count = min(cfg.samples, 400)
    rng = _chunk_rng(cfg.seed, P_COMM_DOMAIN, n, 0)
    samples = [sample_vector(rng, cfg.dim) for _ in range(count)]
    if cfg.op is not None:
        atom = parse_atom(cfg.op)
        tau = ScaleOperator.from_atom(atom)
    else:
        idx = np.arange(1, cfg.dim + 1, dtype=np.int64)
        geom = CoordVector._from_arrays(idx, 0.5 ** np.arange(cfg.dim), check=False)
        tau = ScaleOperator.from_atom(Multiplier(geom))
    worst = domain_invariance_check(tau, n, samples)
    rows.append(
        Row("commutator", n, "domain_invariance", worst, budget,
            worst / budget, bool(worst <= budget))
    )
    gates.append(
        Gate(f"domain_invariance(n={n})", worst, budget,
             "configured budget", bool(worst <= budget))
    )
    # negative control: the unbounded multiplier e_v -> v e_v truncated at M
    prev = None
    increasing = True
    for M in (4, 8, 16, 32):
        idx = np.arange(1, M + 1, dtype=np.int64)
        ramp = Multiplier(
            CoordVector._from_arrays(idx, np.arange(1, M + 1, dtype=float), check=False)
        )
        fam = [CoordVector.unit(M)] + [sample_vector(rng, M) for _ in range(32)]
        worst = domain_invariance_check(ramp, n, fam)
        rows.append(
            Row("commutator", n, f"negative_control_M={M}", worst, None, None, True)
        )
        if prev is not None and worst <= prev:
            increasing = False
        prev = worst
    gates.append(
        Gate("negative_control_growth", float(prev), float(32),
             "exact identity", bool(increasing and prev >= 32 * (1 - 1e-12)))
    )


def _exp_telescope(cfg, rows, gates):
    n_max = max(cfg.orders("telescope"))
    all_nonzero = True
    for n in range(2, n_max + 1):
        t = telescope_coefficients(n)
        for s, alpha in enumerate(t.alphas, start=1):
            rows.append(
                Row("telescope", n, f"alpha_{s}={alpha}", float(alpha),
                    None, None, True)
            )
        nonzero = t.final != 0
        all_nonzero = all_nonzero and nonzero
        rows.append(
            Row("telescope", n, f"final={t.final}", float(t.final),
                None, None, bool(nonzero))
        )
    t2 = telescope_coefficients(2)
    t3 = telescope_coefficients(3)
    gates.append(
        Gate("telescope_alpha1", float(t2.alphas[0]), 2.0, "paper constant",
             t2.alphas[0] == 2)
    )
    gates.append(
        Gate("telescope_alpha2", float(t3.alphas[1]), -2.0, "paper constant",
             t3.alphas[1] == -2)
    )
    gates.append(
        Gate(f"telescope_final_nonzero(n<={n_max})", 1.0 if all_nonzero else 0.0,
             1.0, "exact identity", all_nonzero)
    )


@functools.lru_cache(maxsize=None)
def _adjoint_blocks(n):
    """Deterministic block family and derived operators for order n."""
    L, C = 8, 16
    blocks = tuple(CoordVector.flat(L, L**-0.5, v * L) for v in range(C))
    tu = block_operator(n, blocks)
    m = L * C
    fin = FiniteOperator.from_operator_matrix(tu, m)
    return {"L": L, "C": C, "blocks": blocks, "tu": tu, "m": m, "fin": fin}


def _random_triangular(rng, n, dim):
    """Random upper-triangular operator matrix with multiplier/scale atoms."""
    idx = np.arange(1, dim + 1, dtype=np.int64)
    rows = []
    for r in range(n):
        row = []
        for c in range(n):
            if c < r:
                row.append(Zero())
            elif rng.random() < 0.3:
                row.append(Zero())
            elif rng.random() < 0.5:
                row.append(Scale(float(rng.standard_normal())))
            else:
                diag = CoordVector._from_arrays(
                    idx, rng.standard_normal(dim), check=False
                )
                row.append(Multiplier(diag))
        rows.append(tuple(row))
    return OperatorMatrix(n, n, tuple(rows))


def _exp_adjoint(cfg, rows, gates):
    for n in cfg.orders("adjoint-check"):
        ctx = _adjoint_blocks(n)
        tu, fin, m, C, blocks = ctx["tu"], ctx["fin"], ctx["m"], ctx["C"], ctx["blocks"]
        rng = _chunk_rng(cfg.seed, P_PAIR_PRESERVE + 1, n, 0)

        # block application identity against independently assembled graphs
        worst = 0.0
        for _ in range(min(cfg.samples, 200)):
            x = sample_vector(rng, C)
            v = RochbergVector((CoordVector.zero(),) * (n - 1) + (x,))
            lhs = apply(tu, v)
            ref = RochbergVector.zero(n)
            for pos, coeff in x.entries():
                ref = ref.add(graph_vector(n, blocks[pos - 1]).scale(coeff))
            dev = quasinorm(lhs.sub(ref)) / quasinorm(ref)
            worst = max(worst, dev)
        rows.append(Row("adjoint-check", n, "block_identity", worst, 1e-12,
                        worst / 1e-12, bool(worst <= 1e-12)))
        gates.append(Gate(f"block_identity(n={n})", worst, 1e-12,
                          "exact identity", bool(worst <= 1e-12)))

        plus = adjoint_plus(fin)
        prod = plus.compose(fin).matrix
        eye = np.eye(n * m)
        # faithful input columns: block coordinates v <= C in every slot
        cols = np.concatenate([r * m + np.arange(C) for r in range(n)])
        dev_tt = float(np.abs(prod[:, cols] - eye[:, cols]).max())
        gates.append(Gate(f"adjoint_section(n={n})", dev_tt, 1e-9,
                          "paper constant", bool(dev_tt <= 1e-9)))
        rows.append(Row("adjoint-check", n, "tplus_tu_identity", dev_tt, 1e-9,
                        dev_tt / 1e-9, bool(dev_tt <= 1e-9)))

        P = fin.compose(plus).matrix
        dev_p = float(np.abs(P @ P - P).max())
        dev_pt = float(np.abs(P @ fin.matrix - fin.matrix).max())
        dev_proj = max(dev_p, dev_pt)
        gates.append(Gate(f"range_projector(n={n})", dev_proj, 1e-9,
                          "exact identity", bool(dev_proj <= 1e-9)))
        rows.append(Row("adjoint-check", n, "projector", dev_proj, 1e-9,
                        dev_proj / 1e-9, bool(dev_proj <= 1e-9)))

        A = FiniteOperator.from_operator_matrix(_random_triangular(rng, n, m), m)
        B = FiniteOperator.from_operator_matrix(_random_triangular(rng, n, m), m)
        dev_inv = float(np.abs(adjoint_plus(adjoint_plus(A)).matrix - A.matrix).max())
        dev_anti = float(
            np.abs(
                adjoint_plus(A.compose(B)).matrix
                - adjoint_plus(B).compose(adjoint_plus(A)).matrix
            ).max()
        )
        dev_alg = max(dev_inv, dev_anti)
        gates.append(Gate(f"adjoint_algebra(n={n})", dev_alg, 1e-9,
                          "exact identity", bool(dev_alg <= 1e-9)))
        rows.append(Row("adjoint-check", n, "adjoint_algebra", dev_alg, 1e-9,
                        dev_alg / 1e-9, bool(dev_alg <= 1e-9)))

        vals = _run_part(cfg, P_PAIR_PRESERVE, n, *_PART_FUNCS[P_PAIR_PRESERVE],
                         count=min(cfg.samples, 1000))
        rows.append(_worst_row(cfg, "adjoint-check", P_PAIR_PRESERVE, n, vals, 1e-9))
        gates.append(Gate(f"pairing_preservation(n={n})", float(vals.max()), 1e-9,
                          "paper constant", bool(vals.max() <= 1e-9)))


def _exp_corners(cfg, rows, gates):
    for n in cfg.orders("corners"):
        # shift nilpotency and composition law
        nil = shift_power(n, n) == zero_matrix(n)
        law = all(
            matrix_compose(shift_power(n, k), shift_power(n, l))
            == shift_power(n, min(k + l, n))
            for k in range(n + 1)
            for l in range(n + 1)
        )
        gates.append(Gate(f"shift_nilpotent(n={n})", 1.0 if nil else 0.0, 1.0,
                          "exact identity", nil))
        gates.append(Gate(f"shift_composition(n={n})", 1.0 if law else 0.0, 1.0,
                          "exact identity", law))
        rows.append(Row("corners", n, "shift_nilpotent", 1.0 if nil else 0.0,
                        None, None, nil))

        # noncompactness witness for shift^{n-1} on unit-block graph vectors
        fam = [graph_vector(n, CoordVector.unit(v)) for v in range(1, 33)]
        ratios = singularity_profile(shift_power(n, n - 1), fam)
        dev = max(abs(r - 1.0) for r in ratios)
        gates.append(Gate(f"shift_witness(n={n})", dev, 1e-9,
                          "exact identity", bool(dev <= 1e-9)))
        rows.append(Row("corners", n, "shift_witness_dev", dev, 1e-9,
                        dev / 1e-9, bool(dev <= 1e-9)))

        # commuting corners of random triangular operators
        rng = _chunk_rng(cfg.seed, P_CORNER, n, 0)
        worst = 0.0
        for _ in range(min(cfg.samples, 100)):
            R = _random_triangular(rng, n, cfg.dim)
            v = sample_tuple(rng, n, cfg.dim)
            for k in range(1, n):
                Rk, Rhi = corner_extract(R, k)
                lo = rochberg.project(apply(R, v), n - k)
                hi = apply(Rhi, rochberg.project(v, n - k))
                dq = quasinorm(lo.sub(hi))
                scale_ = quasinorm(lo) + quasinorm(hi)
                worst = max(worst, dq / scale_ if scale_ else dq)
                vk = RochbergVector(v.coords[:k])
                left = apply(R, embed(vk, n))
                right = embed(apply(Rk, vk), n)
                dq = quasinorm(left.sub(right))
                scale_ = quasinorm(left) + quasinorm(right)
                worst = max(worst, dq / scale_ if scale_ else dq)
        gates.append(Gate(f"corner_commute(n={n})", worst, 1e-12,
                          "exact identity", bool(worst <= 1e-12)))
        rows.append(Row("corners", n, "corner_commute", worst, 1e-12,
                        worst / 1e-12, bool(worst <= 1e-12)))


_EXPERIMENT_FUNCS = {
    "norm": _exp_norm,
    "pairing": _exp_pairing,
    "lemma4": _exp_lemma4,
    "quasilinearity": _exp_quasilinearity,
    "growth": _exp_growth,
    "witness": _exp_witness,
    "commutator": _exp_commutator,
    "telescope": _exp_telescope,
    "adjoint-check": _exp_adjoint,
    "corners": _exp_corners,
}


def run(cfg: ExperimentConfig) -> ExperimentReport:
    """Run one experiment (or all of them) and assemble the report."""
    rows: list[Row] = []
    gates: list[Gate] = []
    if cfg.experiment == "report-all":
        for name in EXPERIMENTS[:-1]:
            sub = replace(cfg, experiment=name, ns=())
            _EXPERIMENT_FUNCS[name](sub, rows, gates)
    else:
        _EXPERIMENT_FUNCS[cfg.experiment](cfg, rows, gates)
    meta = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "version": __version__,
    }
    report = ExperimentReport(meta, rows, gates)
    if cfg.out:
        payload = report.to_csv() if cfg.fmt == "csv" else report.to_json()
        with open(cfg.out, "w") as fh:
            fh.write(payload)
    return report


# -- replay ----------------------------------------------------------------


@dataclass
class ReplayResult:
    offset: int
    part: int
    n: int
    index: int
    value: float
    row_value: float

    @property
    def matches(self) -> bool:
        return self.value == self.row_value


def replay(report: ExperimentReport, row_index: int, cfg: ExperimentConfig):
    """Regenerate the extremal sample behind a report row and recompute it."""
    if row_index < 0 or row_index >= len(report.rows):
        raise RowNotFound(f"report has no row {row_index}")
    row = report.rows[row_index]
    try:
        offset = int(row.param)
    except ValueError:
        raise RowNotFound(
            f"row {row_index} ({row.param!r}) is not backed by a replayable sample"
        )
    part, n, i = decode_offset(offset)
    if part not in _PART_FUNCS or _PART_FUNCS[part][1] is None:
        raise RowNotFound(f"part {part} is not replayable")
    sample = regenerate_sample(cfg, part, n, i)
    value = _PART_FUNCS[part][1](cfg, n, sample)
    return ReplayResult(offset, part, n, i, float(value), float(row.value))
