"""Ball sets, coset partitions, load histograms and the exact load oracle."""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .gf2core import (
    BitVector,
    DimensionError,
    EchelonBasis,
    apply_int,
    basis_insert,
    insert_reduced,
    lowest_bit,
    random_bits,
    rank_ints,
    sample_outside_int,
)
from .linhash import LinearHash

FAMILIES = ("unit-cube-prefix", "random-distinct", "subspace-slice", "hamming-ball")

# dense bincount is used below this many bins, np.unique above it
_DENSE_BINS = 1 << 22


@dataclass(frozen=True)
class BallSet:
    u: int
    balls: tuple[BitVector, ...] = ()

    def __post_init__(self):
        seen = set()
        for b in self.balls:
            if b.dim != self.u:
                raise DimensionError(f"ball of dim {b.dim} in a set over F2^{self.u}")
            if b.bits in seen:
                raise ValueError(f"duplicate ball {b}")
            seen.add(b.bits)

    @classmethod
    def from_ints(cls, u: int, ints: Iterable[int]) -> "BallSet":
        return cls(u, tuple(BitVector(u, int(x)) for x in ints))

    @classmethod
    def from_strs(cls, strs: Sequence[str]) -> "BallSet":
        vecs = tuple(BitVector.from_str(s) for s in strs)
        return cls(vecs[0].dim if vecs else 1, vecs)

    @property
    def m(self) -> int:
        return len(self.balls)

    def __len__(self) -> int:
        return len(self.balls)

    @property
    def ints(self) -> list[int]:
        return [b.bits for b in self.balls]

    def as_array(self) -> np.ndarray:
        """Balls as a uint64 array; only for u <= 64."""
        if self.u > 64:
            raise ValueError("uint64 view needs u <= 64")
        return np.array(self.ints, dtype=np.uint64)

    def to_dict(self) -> dict:
        return {"u": self.u, "balls": [b.to_hex() for b in self.balls]}

    @classmethod
    def from_dict(cls, d: dict) -> "BallSet":
        u = int(d["u"])
        return cls(u, tuple(BitVector.from_hex(u, s) for s in d["balls"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "BallSet":
        return cls.from_dict(json.loads(s))


# -- ball set families --------------------------------------------------------


def _random_distinct(rng: np.random.Generator, u: int, m: int, exclude: set[int]) -> list[int]:
    out: list[int] = []
    if u <= 24 and 2 * (m + len(exclude)) > (1 << u):
        pool = np.setdiff1d(np.arange(1 << u, dtype=np.int64), np.fromiter(exclude, np.int64))
        return [int(x) for x in rng.choice(pool, size=m, replace=False)]
    seen = set(exclude)
    while len(out) < m:
        x = random_bits(rng, u)
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def _hamming_ball(u: int, m: int) -> list[int]:
    out: list[int] = []
    for w in range(u + 1):
        for combo in itertools.combinations(range(u), w):
            if len(out) == m:
                return out
            out.append(sum(1 << i for i in combo))
    return out


def make_ball_set(family: str, u: int, m: int, rng: np.random.Generator) -> BallSet:
    """Generate ``m`` distinct balls in F2^u from one of :data:`FAMILIES`.

    * ``unit-cube-prefix``: the integers 0..m-1 (a subspace when m is a power of 2)
    * ``random-distinct``: uniform distinct vectors
    * ``subspace-slice``: a coset of a random floor(log2 m)-dim subspace,
      padded with random distinct vectors
    * ``hamming-ball``: all vectors of weight <= w around 0, truncated to m
    """
    if m < 0 or m > (1 << u):
        raise ValueError(f"cannot place {m} distinct balls in F2^{u}")
    if family == "unit-cube-prefix":
        ints = list(range(m))
    elif family == "random-distinct":
        ints = _random_distinct(rng, u, m, set())
    elif family == "subspace-slice":
        if m == 0:
            ints = []
        else:
            d = m.bit_length() - 1
            basis = EchelonBasis(u)
            for _ in range(d):
                basis, _ = basis_insert(basis, sample_outside_int(rng, basis))
            shift = random_bits(rng, u)
            ints = [shift ^ v for v in basis.span()]
            ints += _random_distinct(rng, u, m - len(ints), set(ints))
    elif family == "hamming-ball":
        ints = _hamming_ball(u, m)
    else:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    return BallSet.from_ints(u, ints)


# -- coset partitions ---------------------------------------------------------


@dataclass(frozen=True)
class CosetPartition:
    """Occupied cosets of ``V_i = span(basis)`` with their ball counts.

    ``counts`` maps a canonical representative (int) to the number of balls
    in that coset; :attr:`loads` exposes the same map keyed by BitVector.
    """

    basis: EchelonBasis
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def step(self) -> int:
        return self.basis.dim

    @property
    def u(self) -> int:
        return self.basis.ambient_dim

    @property
    def m(self) -> int:
        return sum(self.counts.values())

    @property
    def loads(self) -> dict[BitVector, int]:
        u = self.u
        return {BitVector(u, r): c for r, c in self.counts.items()}

    def load_multiset(self) -> list[int]:
        return sorted(self.counts.values())

    def __len__(self) -> int:
        return len(self.counts)


def partition_init(S: BallSet) -> CosetPartition:
    """V_0 = {0}: every ball is its own coset."""
    counts: dict[int, int] = {}
    for b in S.balls:
        if b.bits in counts:
            raise ValueError(f"duplicate ball {b}")
        counts[b.bits] = 1
    return CosetPartition(EchelonBasis(S.u), counts)


def merge_counts(counts: dict[int, int], r: int) -> dict[int, int]:
    """Coset counts after adjoining ``r`` (nonzero, reduced against the basis).

    The new pivot p is the lowest bit of r; a representative with bit p set
    moves to rep XOR r, which keeps it zero on all old pivots.
    """
    p = lowest_bit(r)
    out: dict[int, int] = {}
    for rep, c in counts.items():
        if (rep >> p) & 1:
            rep ^= r
        out[rep] = out.get(rep, 0) + c
    return out


def partition_merge(P: CosetPartition, v: BitVector | int) -> CosetPartition:
    """Adjoin ``v`` to V_i; cosets x + V_i and x + v + V_i fuse and their counts add."""
    bits = v.bits if isinstance(v, BitVector) else v
    if isinstance(v, BitVector) and v.dim != P.u:
        raise DimensionError(f"vector of dim {v.dim}, partition over F2^{P.u}")
    r = P.basis.reduce(bits)
    if r == 0:
        raise ValueError("cannot merge a vector that already lies in V_i")
    return CosetPartition(insert_reduced(P.basis, r), merge_counts(P.counts, r))


def replay_chain(S: BallSet, chain: Iterable[BitVector | int]) -> list[CosetPartition]:
    """Partitions P_0, ..., P_k along a kernel chain."""
    P = partition_init(S)
    out = [P]
    for v in chain:
        P = partition_merge(P, v)
        out.append(P)
    return out


# -- loads --------------------------------------------------------------------


@dataclass(frozen=True)
class LoadHistogram:
    n_bins: int
    bins_occupied: int
    max_load: int
    min_load: int
    counts: dict[int, int]

    @property
    def m(self) -> int:
        return sum(load * c for load, c in self.counts.items())

    @property
    def has_empty_bin(self) -> bool:
        return self.bins_occupied < self.n_bins

    def occupied_loads(self) -> list[int]:
        return sorted(itertools.chain.from_iterable([k] * c for k, c in self.counts.items()))


def _parity64(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x) & np.uint8(1)


def bucket_ids(balls: np.ndarray, row_ints: Sequence[int]) -> np.ndarray:
    """h(x) for every ball, as int64 bucket indices (u <= 64, l <= 62)."""
    out = np.zeros(balls.shape, dtype=np.int64)
    for j, r in enumerate(row_ints):
        out |= _parity64(balls & np.uint64(r)).astype(np.int64) << j
    return out


def _histogram_from_buckets(ids: np.ndarray, n_bins: int) -> LoadHistogram:
    if ids.size == 0:
        return LoadHistogram(n_bins, 0, 0, 0, {})
    if n_bins <= _DENSE_BINS:
        occ = np.bincount(ids, minlength=n_bins)
        occ = occ[occ > 0]
    else:
        _, occ = np.unique(ids, return_counts=True)
    loads, mult = np.unique(occ, return_counts=True)
    counts = {int(a): int(b) for a, b in zip(loads, mult)}
    occupied = int(occ.size)
    min_load = int(occ.min()) if occupied == n_bins else 0
    return LoadHistogram(n_bins, occupied, int(occ.max()), min_load, counts)


def load_histogram(S: BallSet, h: LinearHash, balls: np.ndarray | None = None) -> LoadHistogram:
    """Bin loads of S under h.  ``balls`` may pass a cached uint64 view of S."""
    if S.u != h.u:
        raise DimensionError(f"ball set over F2^{S.u}, hash over F2^{h.u}")
    n = h.n_bins
    if S.u <= 64 and h.l <= 62:
        arr = S.as_array() if balls is None else balls
        return _histogram_from_buckets(bucket_ids(arr, h.row_ints), n)
    c = Counter(apply_int(h.row_ints, b) for b in S.ints)
    occ = list(c.values())
    if not occ:
        return LoadHistogram(n, 0, 0, 0, {})
    min_load = min(occ) if len(occ) == n else 0
    return LoadHistogram(n, len(occ), max(occ), min_load, dict(Counter(occ)))


def max_load(S: BallSet, h: LinearHash) -> int:
    return load_histogram(S, h).max_load


def random_function_loads(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """Bin occupancy of m balls thrown independently and uniformly into n bins."""
    return np.bincount(rng.integers(0, n, size=m), minlength=n)


def _uniform_rows(rng: np.random.Generator, u: int, shape) -> np.ndarray:
    if u == 64:
        return rng.integers(0, np.iinfo(np.uint64).max, size=shape, dtype=np.uint64, endpoint=True)
    return rng.integers(0, 1 << u, size=shape, dtype=np.uint64)


def sample_max_loads(
    S: BallSet, l: int, rng: np.random.Generator, trials: int, chunk: int = 4096
) -> np.ndarray:
    """Max loads of S under ``trials`` independent uniform linear hashes (vectorized)."""
    if S.u > 64 or l > 20:
        raise ValueError("vectorized sampler needs u <= 64 and l <= 20")
    n = 1 << l
    balls = S.as_array()
    out = np.empty(trials, dtype=np.int64)
    step = max(1, min(chunk, (1 << 24) // max(1, S.m * l)))
    for start in range(0, trials, step):
        t = min(step, trials - start)
        rows = _uniform_rows(rng, S.u, (t, l))
        ids = np.zeros((t, S.m), dtype=np.int64)
        for j in range(l):
            ids |= _parity64(balls[None, :] & rows[:, j : j + 1]).astype(np.int64) << j
        ids += (np.arange(t, dtype=np.int64) * n)[:, None]
        occ = np.bincount(ids.ravel(), minlength=t * n).reshape(t, n)
        out[start : start + t] = occ.max(axis=1)
    return out


# -- opt ----------------------------------------------------------------------


def opt(m: int, n: int) -> float:
    """Max load of a fully random function, up to constants (logs base 2).

    ``log n / log(n log n / m)`` when ``m <= n log n / 2``, else ``m / n``;
    never below 1.
    """
    if n < 2 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 2, got {n}")
    if m < 1:
        raise ValueError("m must be >= 1")
    logn = math.log2(n)
    if m <= 0.5 * n * logn:
        val = logn / math.log2(n * logn / m)
    else:
        val = m / n
    return max(1.0, val)


# -- exact oracle -------------------------------------------------------------

EXACT_BUDGET = 24


def _canon(labels: Sequence[int]) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def _max_from_labels(labels: tuple[int, ...]) -> int:
    return max(Counter(labels).values()) if labels else 0


def exact_load_distribution(
    S: BallSet, l: int, surjective: bool = False
) -> dict[int, Fraction]:
    """Exact distribution of M(S, h) over all 2^(u l) linear maps h.

    With ``surjective=True`` the distribution is conditioned on rank(h) = l.
    The unconditioned case uses the fact that a uniform row restricted to
    S is uniform on the image subspace W = {(r.x)_{x in S}}, so only
    |W| <= 2^u patterns are enumerated per row.
    """
    u, m = S.u, S.m
    if u * l > EXACT_BUDGET:
        raise ValueError(f"u*l = {u * l} exceeds the enumeration budget {EXACT_BUDGET}")
    if not 1 <= l <= u:
        raise ValueError("need 1 <= l <= u")
    if m == 0:
        return {0: Fraction(1)}
    balls = S.ints
    if not surjective:
        # pattern of unit row e_c: bit j set iff ball j has coordinate c
        gens = [sum(((b >> c) & 1) << j for j, b in enumerate(balls)) for c in range(u)]
        W = EchelonBasis(max(m, 1))
        for g in gens:
            if g:
                W, _ = basis_insert(W, g)
        patterns = list(W.span())
        states: dict[tuple[int, ...], int] = {(0,) * m: 1}
        for _ in range(l):
            nxt: dict[tuple[int, ...], int] = {}
            for lab, w in states.items():
                for pat in patterns:
                    key = _canon([2 * a + ((pat >> j) & 1) for j, a in enumerate(lab)])
                    nxt[key] = nxt.get(key, 0) + w
            states = nxt
        total = len(patterns) ** l
    else:
        # (labels, row-space echelon rows) -> weight; rows must stay independent
        space = range(1 << u)
        states2: dict[tuple, int] = {((0,) * m, ()): 1}
        for _ in range(l):
            nxt2: dict[tuple, int] = {}
            for (lab, rows), w in states2.items():
                basis = EchelonBasis(u, rows, tuple(lowest_bit(r) for r in rows))
                for r in space:
                    red = basis.reduce(r)
                    if red == 0:
                        continue
                    nb = insert_reduced(basis, red)
                    key = (
                        _canon([2 * a + (bin(r & b).count("1") & 1) for a, b in zip(lab, balls)]),
                        nb.row_ints,
                    )
                    nxt2[key] = nxt2.get(key, 0) + w
            states2 = nxt2
        states = {}
        for (lab, _), w in states2.items():
            states[lab] = states.get(lab, 0) + w
        total = sum(states.values())
    dist: dict[int, int] = {}
    for lab, w in states.items():
        k = _max_from_labels(lab)
        dist[k] = dist.get(k, 0) + w
    return {k: Fraction(w, total) for k, w in sorted(dist.items())}


def distribution_mean(dist: dict[int, Fraction]) -> Fraction:
    return sum((k * p for k, p in dist.items()), Fraction(0))


def exact_rank_census(u: int, l: int) -> dict[int, int]:
    """Number of l x u matrices of each rank, by brute force (u*l <= EXACT_BUDGET)."""
    if u * l > EXACT_BUDGET:
        raise ValueError("census exceeds the enumeration budget")
    out: Counter[int] = Counter()
    for rows in itertools.product(range(1 << u), repeat=l):
        out[rank_ints(rows)] += 1
    return dict(sorted(out.items()))
