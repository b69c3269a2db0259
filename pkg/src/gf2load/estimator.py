"""scikit-learn style wrapper around the linear hash family.

``GF2LinearHasher`` learns (or samples) a linear map F2^u -> F2^l from a
training set of keys.  ``transform`` returns the l output bits of every
key, ``predict`` returns integer bucket ids, so the hasher slots into
pipelines like any other transformer.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .gf2core import MAX_DIM, BitVector, apply_int
from .linhash import LinearHash, sample_surjective_chain, sample_uniform
from .loadmodel import BallSet, load_histogram
from .potential import DEFAULT_CANDIDATES, DEFAULT_EXHAUSTIVE_THRESHOLD, greedy_construct

STRATEGIES = ("uniform", "surjective", "greedy")


def check_bit_array(X, n_features: int | None = None) -> np.ndarray:
    """Validate a 2D array of 0/1 entries, shape (n_keys, u)."""
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D array of bits, got shape {arr.shape}")
    if arr.shape[1] < 1 or arr.shape[1] > MAX_DIM:
        raise ValueError(f"key dimension must be in [1, {MAX_DIM}], got {arr.shape[1]}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("entries must be 0 or 1")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"X has {arr.shape[1]} features, but the hasher was fitted with {n_features}")
    return arr.astype(np.uint8, copy=False)


def bits_to_ints(X: np.ndarray) -> list[int]:
    """Row i of a 0/1 array becomes the int with bit j = X[i, j]."""
    packed = np.packbits(X, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def ints_to_bits(values, width: int) -> np.ndarray:
    out = np.zeros((len(values), width), dtype=np.uint8)
    for i, v in enumerate(values):
        for j in range(width):
            out[i, j] = (v >> j) & 1
    return out


def check_ball_set(X, n_features: int | None = None) -> BallSet:
    """Accept a BallSet or a 0/1 array of distinct keys."""
    if isinstance(X, BallSet):
        if n_features is not None and X.u != n_features:
            raise ValueError(f"ball set over F2^{X.u}, hasher fitted on F2^{n_features}")
        return X
    arr = check_bit_array(X, n_features)
    return BallSet(arr.shape[1], tuple(BitVector(arr.shape[1], v) for v in bits_to_ints(arr)))


class GF2LinearHasher(TransformerMixin, BaseEstimator):
    """Hash binary keys into 2^n_bits buckets with a linear map over GF(2).

    Parameters
    ----------
    n_bits : int
        Output dimension l; keys land in n = 2^l buckets.
    strategy : {"uniform", "surjective", "greedy"}
        ``uniform`` samples every matrix entry as a fair coin, ``surjective``
        samples a uniform full-rank map, ``greedy`` derandomizes the kernel
        against the training keys using the exponential potential.
    base : float, optional
        Potential base for ``greedy``; defaults to ln n.
    n_candidates, exhaustive_threshold : int
        Search budget of the greedy kernel-vector selection.
    random_state : int or numpy Generator, optional

    Attributes
    ----------
    hash_ : LinearHash
    n_features_in_ : int
    certificate_ : Certificate or None
        Potential trajectory of the greedy construction.
    max_load_ : int
        Largest bucket occupancy on the training keys.
    """

    def __init__(
        self,
        n_bits: int = 8,
        strategy: str = "uniform",
        base: float | None = None,
        n_candidates: int = DEFAULT_CANDIDATES,
        exhaustive_threshold: int = DEFAULT_EXHAUSTIVE_THRESHOLD,
        random_state=None,
    ):
        self.n_bits = n_bits
        self.strategy = strategy
        self.base = base
        self.n_candidates = n_candidates
        self.exhaustive_threshold = exhaustive_threshold
        self.random_state = random_state

    def _rng(self) -> np.random.Generator:
        if isinstance(self.random_state, np.random.Generator):
            return self.random_state
        return np.random.default_rng(self.random_state)

    def fit(self, X, y=None):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        S = check_ball_set(X)
        u = S.u
        if not 1 <= self.n_bits <= u:
            raise ValueError(f"n_bits must be in [1, {u}], got {self.n_bits}")
        rng = self._rng()
        self.certificate_ = None
        if self.strategy == "uniform":
            self.hash_ = sample_uniform(rng, u, self.n_bits)
        elif self.strategy == "surjective":
            self.hash_ = sample_surjective_chain(rng, u, self.n_bits)
        else:
            self.hash_, self.certificate_ = greedy_construct(
                S, self.n_bits, self.base, rng, self.n_candidates, self.exhaustive_threshold
            )
        self.n_features_in_ = u
        self.max_load_ = load_histogram(S, self.hash_).max_load if S.m else 0
        return self

    def _keys(self, X) -> list[int]:
        check_is_fitted(self, "hash_")
        if isinstance(X, BallSet):
            if X.u != self.n_features_in_:
                raise ValueError("ball set dimension does not match the fitted hasher")
            return X.ints
        return bits_to_ints(check_bit_array(X, self.n_features_in_))

    def predict(self, X) -> np.ndarray:
        """Bucket index of every key (bit j of the index is output bit j)."""
        keys = self._keys(X)
        rows = self.hash_.row_ints
        return np.array([apply_int(rows, k) for k in keys], dtype=np.int64)

    def transform(self, X) -> np.ndarray:
        """Output bits h(x), shape (n_keys, n_bits)."""
        return ints_to_bits(self.predict(X).tolist(), self.n_bits)

    def bucket_loads(self, X) -> np.ndarray:
        """Occupancy of each of the 2^n_bits buckets."""
        return np.bincount(self.predict(X), minlength=1 << self.n_bits)

    def score(self, X, y=None) -> float:
        """Negative max load, so larger is better."""
        return -float(self.bucket_loads(X).max())

    @classmethod
    def from_hash(cls, h: LinearHash) -> "GF2LinearHasher":
        est = cls(n_bits=h.l)
        est.hash_ = h
        est.n_features_in_ = h.u
        est.certificate_ = None
        est.max_load_ = 0
        return est
