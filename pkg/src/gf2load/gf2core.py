"""Bit-packed linear algebra over GF(2).

Vectors are stored as Python integers: bit ``i`` of the integer is
coordinate ``i`` of the vector.  Python ints are arbitrary precision and
internally word-packed, so XOR, AND and popcount run a machine word at a
time.  The string notation used throughout (``"1010"``) lists coordinates
from position 0 on the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_DIM = 4096


class DimensionError(ValueError):
    """Raised when operands live in different ambient spaces."""


def _check_dim(dim: int) -> None:
    if not 1 <= dim <= MAX_DIM:
        raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {dim}")


def _mask(dim: int) -> int:
    return (1 << dim) - 1


def popcount(x: int) -> int:
    return bin(x).count("1")


def parity(x: int) -> int:
    return bin(x).count("1") & 1


def lowest_bit(x: int) -> int:
    """Index of the lowest set bit of a nonzero integer."""
    return (x & -x).bit_length() - 1


def random_bits(rng: np.random.Generator, dim: int) -> int:
    """A uniform element of F2^dim as an int (each bit an independent fair coin)."""
    nbytes = (dim + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "little") & _mask(dim)


@dataclass(frozen=True)
class BitVector:
    """An element of F2^dim."""

    dim: int
    bits: int = 0

    def __post_init__(self):
        _check_dim(self.dim)
        if self.bits < 0 or self.bits >> self.dim:
            raise ValueError("bits set at positions >= dim")

    @classmethod
    def zeros(cls, dim: int) -> "BitVector":
        return cls(dim, 0)

    @classmethod
    def unit(cls, dim: int, i: int) -> "BitVector":
        if not 0 <= i < dim:
            raise IndexError(i)
        return cls(dim, 1 << i)

    @classmethod
    def from_str(cls, s: str) -> "BitVector":
        """Parse ``"1010"``; the leftmost character is coordinate 0."""
        s = s.replace(" ", "")
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {s!r}")
        return cls(len(s), int(s[::-1], 2))

    @classmethod
    def from_bits(cls, seq: Iterable[int]) -> "BitVector":
        seq = list(seq)
        bits = 0
        for i, b in enumerate(seq):
            if b:
                bits |= 1 << i
        return cls(len(seq), bits)

    @classmethod
    def random(cls, rng: np.random.Generator, dim: int) -> "BitVector":
        return cls(dim, random_bits(rng, dim))

    @classmethod
    def from_hex(cls, dim: int, s: str) -> "BitVector":
        """Inverse of :meth:`to_hex`."""
        raw = bytes.fromhex(s)
        if len(raw) != (dim + 7) // 8:
            raise ValueError(f"hex string has {len(raw)} bytes, expected {(dim + 7) // 8}")
        return cls(dim, int.from_bytes(raw, "little"))

    def to_hex(self) -> str:
        """Little-endian bytes: coordinate i is bit (i % 8) of byte (i // 8)."""
        return self.bits.to_bytes((self.dim + 7) // 8, "little").hex()

    def __str__(self) -> str:
        return format(self.bits, f"0{self.dim}b")[::-1]

    def __repr__(self) -> str:
        return f"BitVector({str(self)!r})"

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __len__(self) -> int:
        return self.dim

    def __iter__(self) -> Iterator[int]:
        return (((self.bits >> i) & 1) for i in range(self.dim))

    def __xor__(self, other: "BitVector") -> "BitVector":
        return vec_add(self, other)

    __add__ = __xor__

    def __and__(self, other: "BitVector") -> "BitVector":
        if self.dim != other.dim:
            raise DimensionError(f"{self.dim} != {other.dim}")
        return BitVector(self.dim, self.bits & other.bits)

    def __bool__(self) -> bool:
        return self.bits != 0

    @property
    def weight(self) -> int:
        return popcount(self.bits)

    def dot(self, other: "BitVector") -> int:
        if self.dim != other.dim:
            raise DimensionError(f"{self.dim} != {other.dim}")
        return parity(self.bits & other.bits)


def vec_add(a: BitVector, b: BitVector) -> BitVector:
    if a.dim != b.dim:
        raise DimensionError(f"cannot add vectors of dims {a.dim} and {b.dim}")
    return BitVector(a.dim, a.bits ^ b.bits)


@dataclass(frozen=True)
class EchelonBasis:
    """Reduced row-echelon basis of a subspace of F2^ambient_dim.

    The pivot of a row is its lowest set bit; every row is zero at every
    other row's pivot.  Rows are kept sorted by pivot.
    """

    ambient_dim: int
    _rows: tuple[int, ...] = ()
    _pivots: tuple[int, ...] = ()

    def __post_init__(self):
        _check_dim(self.ambient_dim)

    @classmethod
    def empty(cls, ambient_dim: int) -> "EchelonBasis":
        return cls(ambient_dim)

    @classmethod
    def from_vectors(cls, ambient_dim: int, vectors: Iterable[BitVector | int]) -> "EchelonBasis":
        basis = cls(ambient_dim)
        for v in vectors:
            basis, _ = basis_insert(basis, v)
        return basis

    @property
    def rows(self) -> list[BitVector]:
        return [BitVector(self.ambient_dim, r) for r in self._rows]

    @property
    def pivots(self) -> list[int]:
        return list(self._pivots)

    @property
    def row_ints(self) -> tuple[int, ...]:
        return self._rows

    @property
    def dim(self) -> int:
        return len(self._rows)

    def __len__(self) -> int:
        return len(self._rows)

    def reduce(self, x: int) -> int:
        """Clear every pivot coordinate of ``x`` by adding basis rows."""
        for r, p in zip(self._rows, self._pivots):
            if (x >> p) & 1:
                x ^= r
        return x

    def contains(self, v: BitVector | int) -> bool:
        return self.reduce(_as_int(v, self.ambient_dim)) == 0

    __contains__ = contains

    def free_positions(self) -> list[int]:
        piv = set(self._pivots)
        return [i for i in range(self.ambient_dim) if i not in piv]

    def span(self) -> Iterator[int]:
        """Every element of the span (2^dim of them), Gray-code order."""
        x = 0
        yield x
        for g in range(1, 1 << len(self._rows)):
            x ^= self._rows[lowest_bit(g)]
            yield x

    def coset_representatives(self) -> Iterator[int]:
        """Canonical representatives of all 2^(u - dim) cosets, ascending."""
        free = self.free_positions()
        for j in range(1 << len(free)):
            x = 0
            jj = j
            while jj:
                b = lowest_bit(jj)
                x |= 1 << free[b]
                jj &= jj - 1
            yield x


def _as_int(v: BitVector | int, dim: int) -> int:
    if isinstance(v, BitVector):
        if v.dim != dim:
            raise DimensionError(f"vector of dim {v.dim} in ambient space of dim {dim}")
        return v.bits
    if v < 0 or v >> dim:
        raise DimensionError(f"integer {v} does not fit in {dim} bits")
    return v


def insert_reduced(basis: EchelonBasis, r: int) -> EchelonBasis:
    """Insert ``r`` which is already reduced against ``basis`` and nonzero."""
    p = lowest_bit(r)
    rows = [row ^ r if (row >> p) & 1 else row for row in basis._rows]
    pivots = list(basis._pivots)
    k = 0
    while k < len(pivots) and pivots[k] < p:
        k += 1
    rows.insert(k, r)
    pivots.insert(k, p)
    return EchelonBasis(basis.ambient_dim, tuple(rows), tuple(pivots))


def basis_insert(basis: EchelonBasis, v: BitVector | int) -> tuple[EchelonBasis, bool]:
    """Add ``v`` to the basis; returns the (possibly unchanged) basis and whether it grew."""
    r = basis.reduce(_as_int(v, basis.ambient_dim))
    if r == 0:
        return basis, False
    return insert_reduced(basis, r), True


def canonical_rep(basis: EchelonBasis, x: BitVector) -> BitVector:
    """The representative of ``x + span(basis)`` with every pivot coordinate zero."""
    return BitVector(basis.ambient_dim, basis.reduce(_as_int(x, basis.ambient_dim)))


def sample_outside_int(rng: np.random.Generator, basis: EchelonBasis) -> int:
    if basis.dim >= basis.ambient_dim:
        raise ValueError("basis spans the whole space; nothing lies outside it")
    while True:
        x = random_bits(rng, basis.ambient_dim)
        if basis.reduce(x):
            return x


def sample_outside(rng: np.random.Generator, basis: EchelonBasis) -> BitVector:
    """Uniform vector of F2^u outside span(basis), by rejection."""
    return BitVector(basis.ambient_dim, sample_outside_int(rng, basis))


def complete_basis(basis: EchelonBasis) -> list[BitVector]:
    """Unit vectors at the non-pivot coordinates; together with the rows they span F2^u."""
    return [BitVector.unit(basis.ambient_dim, i) for i in basis.free_positions()]


@dataclass(frozen=True)
class BitMatrix:
    """An ``rows x cols`` matrix over F2, stored as one int per row."""

    rows: int
    cols: int
    row_ints: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.rows < 1:
            raise ValueError("matrix needs at least one row")
        _check_dim(self.cols)
        if len(self.row_ints) != self.rows:
            raise ValueError(f"expected {self.rows} rows, got {len(self.row_ints)}")
        for r in self.row_ints:
            if r < 0 or r >> self.cols:
                raise ValueError("row has bits set at positions >= cols")

    @classmethod
    def from_rows(cls, rows: Sequence[BitVector | str]) -> "BitMatrix":
        vecs = [BitVector.from_str(r) if isinstance(r, str) else r for r in rows]
        cols = vecs[0].dim
        if any(v.dim != cols for v in vecs):
            raise DimensionError("rows have different lengths")
        return cls(len(vecs), cols, tuple(v.bits for v in vecs))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def random(cls, rng: np.random.Generator, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, tuple(random_bits(rng, cols) for _ in range(rows)))

    @property
    def data(self) -> list[BitVector]:
        return [BitVector(self.cols, r) for r in self.row_ints]

    def column_ints(self) -> list[int]:
        """Column ``c`` as an int of ``rows`` bits (bit j = entry (j, c))."""
        cols = [0] * self.cols
        for j, r in enumerate(self.row_ints):
            while r:
                c = lowest_bit(r)
                cols[c] |= 1 << j
                r &= r - 1
        return cols

    def __str__(self) -> str:
        return "\n".join(str(v) for v in self.data)


def apply_int(row_ints: Sequence[int], x: int) -> int:
    out = 0
    for j, r in enumerate(row_ints):
        out |= parity(r & x) << j
    return out


def matrix_apply(M: BitMatrix, x: BitVector) -> BitVector:
    """Matrix-vector product over F2: output bit j is parity(row_j AND x)."""
    if x.dim != M.cols:
        raise DimensionError(f"matrix has {M.cols} columns, vector has dim {x.dim}")
    return BitVector(M.rows, apply_int(M.row_ints, x.bits))


def rank_ints(rows: Iterable[int]) -> int:
    """Rank of a list of row ints (pivot = lowest set bit elimination)."""
    pivots: dict[int, int] = {}
    rank = 0
    for r in rows:
        while r:
            p = lowest_bit(r)
            if p in pivots:
                r ^= pivots[p]
            else:
                pivots[p] = r
                rank += 1
                break
    return rank


def rank(M: BitMatrix) -> int:
    return rank_ints(M.row_ints)


def sample_invertible(rng: np.random.Generator, l: int) -> BitMatrix:
    """Uniform element of GL(l, 2), by rejection from uniform l x l matrices."""
    if l < 1:
        raise ValueError("l must be >= 1")
    while True:
        M = BitMatrix.random(rng, l, l)
        if rank(M) == l:
            return M


def null_space(M: BitMatrix) -> EchelonBasis:
    """Echelon basis of {x : Mx = 0}."""
    rowspace = EchelonBasis.from_vectors(M.cols, M.row_ints)
    kernel = EchelonBasis(M.cols)
    for f in rowspace.free_positions():
        x = 1 << f
        for r, p in zip(rowspace.row_ints, rowspace.pivots):
            if (r >> f) & 1:
                x |= 1 << p
        kernel, _ = basis_insert(kernel, x)
    return kernel


def gl_order(l: int) -> int:
    """|GL(l, 2)|."""
    out = 1
    for i in range(l):
        out *= (1 << l) - (1 << i)
    return out


def gaussian_binomial(n: int, k: int) -> int:
    """Number of k-dimensional subspaces of F2^n."""
    if not 0 <= k <= n:
        return 0
    num = den = 1
    for i in range(k):
        num *= (1 << (n - i)) - 1
        den *= (1 << (i + 1)) - 1
    return num // den
