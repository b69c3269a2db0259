"""Linear hash functions F2^u -> F2^l.

A :class:`LinearHash` is an ``l x u`` matrix.  Surjective hashes sampled
through :func:`sample_surjective_chain` (or built by the greedy
constructor) keep the ordered list of kernel vectors they were built from,
so the coset-merging view of the hash can be replayed one kernel vector at
a time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .gf2core import (
    BitMatrix,
    BitVector,
    DimensionError,
    EchelonBasis,
    apply_int,
    basis_insert,
    lowest_bit,
    null_space,
    popcount,
    rank,
    sample_invertible,
    sample_outside_int,
)


@dataclass(frozen=True)
class LinearHash:
    u: int
    l: int
    matrix: BitMatrix
    kernel_chain: tuple[BitVector, ...] | None = None

    def __post_init__(self):
        if not 1 <= self.l <= self.u:
            raise ValueError(f"need 1 <= l <= u, got l={self.l}, u={self.u}")
        if self.matrix.rows != self.l or self.matrix.cols != self.u:
            raise DimensionError(
                f"matrix is {self.matrix.rows}x{self.matrix.cols}, expected {self.l}x{self.u}"
            )
        if self.kernel_chain is not None:
            _check_chain(self)

    @property
    def n_bins(self) -> int:
        return 1 << self.l

    @property
    def row_ints(self) -> tuple[int, ...]:
        return self.matrix.row_ints

    @cached_property
    def columns(self) -> list[int]:
        return self.matrix.column_ints()

    @cached_property
    def rank(self) -> int:
        return rank(self.matrix)

    @property
    def is_surjective(self) -> bool:
        return self.rank == self.l

    def chain(self) -> list[BitVector]:
        """The recorded kernel chain, or an echelon kernel basis for plain matrices.

        Any ordering of an independent spanning set of the kernel is a valid
        chain.
        """
        if self.kernel_chain is not None:
            return list(self.kernel_chain)
        return null_space(self.matrix).rows

    def __call__(self, x: BitVector) -> BitVector:
        return evaluate(self, x)

    def to_dict(self) -> dict:
        return {
            "u": self.u,
            "l": self.l,
            "rows": [v.to_hex() for v in self.matrix.data],
            "kernel_chain": None
            if self.kernel_chain is None
            else [v.to_hex() for v in self.kernel_chain],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearHash":
        u, l = int(d["u"]), int(d["l"])
        rows = tuple(BitVector.from_hex(u, s).bits for s in d["rows"])
        chain = d.get("kernel_chain")
        return cls(
            u,
            l,
            BitMatrix(l, u, rows),
            None if chain is None else tuple(BitVector.from_hex(u, s) for s in chain),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "LinearHash":
        return cls.from_dict(json.loads(s))


def _check_chain(h: LinearHash) -> None:
    chain = h.kernel_chain
    if len(chain) != h.u - h.l:
        raise ValueError(f"kernel chain has {len(chain)} vectors, expected {h.u - h.l}")
    basis = EchelonBasis(h.u)
    for v in chain:
        if v.dim != h.u:
            raise DimensionError("kernel vector has wrong dimension")
        if apply_int(h.row_ints, v.bits):
            raise ValueError("kernel chain vector is not in the kernel")
        basis, grew = basis_insert(basis, v)
        if not grew:
            raise ValueError("kernel chain vectors are linearly dependent")
    if rank(h.matrix) != h.l:
        raise ValueError("matrix with a kernel chain must be surjective")


def _check_shape(u: int, l: int) -> None:
    if not 1 <= l <= u:
        raise ValueError(f"need 1 <= l <= u, got l={l}, u={u}")


def sample_uniform(rng: np.random.Generator, u: int, l: int) -> LinearHash:
    """Uniform over all l x u matrices (every entry a fair coin)."""
    _check_shape(u, l)
    return LinearHash(u, l, BitMatrix.random(rng, l, u))


def hash_from_kernel(rng: np.random.Generator, kernel: EchelonBasis, l: int) -> LinearHash:
    """Uniform surjective hash whose kernel is exactly ``span(kernel)``.

    Kernel rows map to zero and the complement unit vectors (non-pivot
    coordinates, ascending) map to the columns of a uniform invertible
    ``l x l`` matrix.
    """
    u = kernel.ambient_dim
    _check_shape(u, l)
    if kernel.dim != u - l:
        raise ValueError(f"kernel has dimension {kernel.dim}, expected u - l = {u - l}")
    A = sample_invertible(rng, l)
    a_cols = A.column_ints()
    cols = [0] * u
    free = kernel.free_positions()
    for j, q in enumerate(free):
        cols[q] = a_cols[j]
    # row r = e_p + (non-pivot bits) lies in the kernel, so h(e_p) = sum of h over those bits
    for r, p in zip(kernel.row_ints, kernel.pivots):
        acc = 0
        rest = r ^ (1 << p)
        while rest:
            c = lowest_bit(rest)
            acc ^= cols[c]
            rest &= rest - 1
        cols[p] = acc
    rows = [0] * l
    for c, col in enumerate(cols):
        while col:
            j = lowest_bit(col)
            rows[j] |= 1 << c
            col &= col - 1
    return LinearHash(u, l, BitMatrix(l, u, tuple(rows)))


def sample_surjective_chain(rng: np.random.Generator, u: int, l: int) -> LinearHash:
    """Uniform surjective hash, drawing the kernel one vector at a time.

    ``v_{i+1}`` is uniform on ``F2^u \\ V_i``; the resulting kernel is a
    uniform ``(u - l)``-dimensional subspace.
    """
    _check_shape(u, l)
    basis = EchelonBasis(u)
    chain = []
    for _ in range(u - l):
        v = sample_outside_int(rng, basis)
        chain.append(BitVector(u, v))
        basis, _ = basis_insert(basis, v)
    h = hash_from_kernel(rng, basis, l)
    return LinearHash(u, l, h.matrix, tuple(chain))


def evaluate(h: LinearHash, x: BitVector) -> BitVector:
    if x.dim != h.u:
        raise DimensionError(f"hash expects dim {h.u}, got {x.dim}")
    return BitVector(h.l, apply_int(h.row_ints, x.bits))


def _sum_columns(columns: Sequence[int], x: int) -> tuple[int, int]:
    acc = 0
    n = 0
    while x:
        acc ^= columns[lowest_bit(x)]
        n += 1
        x &= x - 1
    return acc, n


def evaluate_incremental_counted(
    h: LinearHash, base: BitVector, neighbors: Sequence[BitVector]
) -> tuple[list[BitVector], int]:
    """Like :func:`evaluate_incremental`, also returning the number of column XORs."""
    if base.dim != h.u or any(x.dim != h.u for x in neighbors):
        raise DimensionError(f"all keys must have dim {h.u}")
    cols = h.columns
    hb, ops = _sum_columns(cols, base.bits)
    out = []
    for x in neighbors:
        hd, n = _sum_columns(cols, base.bits ^ x.bits)
        ops += n + 1
        out.append(BitVector(h.l, hb ^ hd))
    return out, ops


def evaluate_incremental(
    h: LinearHash, base: BitVector, neighbors: Sequence[BitVector]
) -> list[BitVector]:
    """Hash keys clustered around ``base`` using h(x) = h(base) + h(base + x).

    The delta ``base + x`` has low weight for nearby keys, so each hash
    costs about as many column XORs as bits changed.
    """
    return evaluate_incremental_counted(h, base, neighbors)[0]


def direct_xor_count(h: LinearHash, keys: Sequence[BitVector]) -> int:
    """Column XORs needed to hash ``keys`` one at a time."""
    return sum(popcount(x.bits) for x in keys)
