"""Exponential coset potentials and the greedy derandomized hash constructor.

For a base ``b`` and the coset partition of ``S`` by ``V_i`` the potential
is ``Phi_i = E_x[b^{S_i(x)}]`` with ``x`` uniform on F2^u.  Empty cosets
contribute exactly 1, so the stored quantity

    psi = Phi_i - 1 = 2^{-(u-i)} * sum over occupied cosets of (b^count - 1)

only needs the occupied cosets.  Near the start of a chain ``Phi - 1`` is
tiny and would be lost to rounding if ``Phi`` were stored directly.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .gf2core import BitVector, EchelonBasis, insert_reduced, sample_outside_int
from .linhash import LinearHash, hash_from_kernel
from .loadmodel import BallSet, CosetPartition, merge_counts, partition_init

LOG_HUGE = math.log(1e300)
LOG_FLOAT_MAX = math.log(np.finfo(float).max)
# relative slack for float comparisons of potentials
REL_TOL = 1e-12

DEFAULT_CANDIDATES = 32
DEFAULT_EXHAUSTIVE_THRESHOLD = 1 << 20
EXACT_BUDGET = 1 << 20


class CertificateWeakenedWarning(UserWarning):
    """No candidate met Phi_{i+1} <= Phi_i^2 and the universe was too large to scan."""


@dataclass(frozen=True)
class PotentialState:
    b: float
    u: int
    partition: CosetPartition
    psi: float
    overflow: bool = False

    @property
    def step(self) -> int:
        return self.partition.step

    @property
    def phi(self) -> float:
        return 1.0 + self.psi

    @property
    def log_phi(self) -> float:
        return math.log1p(self.psi)


def _scaled_psi(counts: Iterable[int], b: float, scale_exp: int) -> tuple[float, bool]:
    """2^-scale_exp * sum(b^c - 1); returns (psi, overflow)."""
    if b < 0:
        raise ValueError("base must be >= 0")
    if b == 1.0:
        return 0.0, False
    if b == 0.0:
        # 0^c = 0 for c >= 1
        n = sum(1 for c in counts if c > 0)
        return -math.ldexp(float(n), -scale_exp), False
    lb = math.log(b)
    small: list[float] = []
    big: list[float] = []
    for c in counts:
        a = c * lb
        if a > LOG_HUGE:
            big.append(a)
        else:
            small.append(math.expm1(a))
    s = math.fsum(small)
    if not big:
        return math.ldexp(s, -scale_exp), False
    # b > 1 here, so every term is positive; b^c - 1 == b^c to double precision
    logs = big + ([math.log(s)] if s > 0 else [])
    top = max(logs)
    log_total = top + math.log(math.fsum(math.exp(x - top) for x in logs))
    log_psi = log_total - scale_exp * math.log(2.0)
    if log_psi >= LOG_FLOAT_MAX:
        return math.inf, True
    return math.exp(log_psi), False


def potential_of_partition(P: CosetPartition, b: float, u: int | None = None) -> PotentialState:
    u = P.u if u is None else u
    psi, overflow = _scaled_psi(P.counts.values(), b, u - P.step)
    return PotentialState(b, u, P, psi, overflow)


def square_bound_psi(psi: float) -> float:
    """Phi^2 - 1 expressed through psi = Phi - 1."""
    return psi * (2.0 + psi)


def satisfies_square_bound(psi_next: float, psi: float) -> bool:
    bound = square_bound_psi(psi)
    return psi_next <= bound + REL_TOL * abs(bound)


def merge_state(state: PotentialState, v: BitVector | int) -> PotentialState:
    P = state.partition
    bits = v.bits if isinstance(v, BitVector) else v
    r = P.basis.reduce(bits)
    if r == 0:
        raise ValueError("cannot merge a vector that already lies in V_i")
    newP = CosetPartition(insert_reduced(P.basis, r), merge_counts(P.counts, r))
    return potential_of_partition(newP, state.b, state.u)


def check_monotonicity(prev: PotentialState, nxt: PotentialState) -> tuple[bool, bool]:
    """(psi_next >= 2 psi, and for b <= 1: phi_next <= phi) up to REL_TOL."""
    if prev.overflow or nxt.overflow:
        doubling = nxt.overflow or not prev.overflow
    else:
        doubling = nxt.psi >= 2.0 * prev.psi - REL_TOL * abs(2.0 * prev.psi)
    decreasing = True
    if prev.b <= 1.0:
        decreasing = nxt.psi <= prev.psi + REL_TOL * abs(prev.psi)
    return doubling, decreasing


@dataclass
class MonotonicityTally:
    """Running count of strong-monotonicity checks across merges."""

    merges: int = 0
    doubling_violations: int = 0
    decreasing_violations: int = 0

    def record(self, prev: PotentialState, nxt: PotentialState) -> None:
        d, dec = check_monotonicity(prev, nxt)
        self.merges += 1
        self.doubling_violations += not d
        self.decreasing_violations += not dec

    def record_trajectory(self, states: Sequence[PotentialState]) -> None:
        for a, c in zip(states, states[1:]):
            self.record(a, c)

    @property
    def ok(self) -> bool:
        return self.doubling_violations == 0 and self.decreasing_violations == 0


def potential_trajectory(
    S: BallSet, chain: Iterable[BitVector | int], b: float
) -> list[PotentialState]:
    """Potential states Phi_0..Phi_k along a kernel chain."""
    state = potential_of_partition(partition_init(S), b)
    out = [state]
    for v in chain:
        state = merge_state(state, v)
        out.append(state)
    return out


def _nonzero_coset_reps(basis: EchelonBasis):
    it = basis.coset_representatives()
    next(it)  # the zero coset is V_i itself
    return it


def expected_next_potential_exact(P: CosetPartition, b: float, u: int | None = None) -> float:
    """Exact mean of Phi_{i+1} over every v in F2^u outside V_i.

    Phi_{i+1} depends only on the coset v + V_i, and each nonzero coset holds
    the same number of candidates, so the average runs over the
    2^(u-i) - 1 nonzero coset representatives.
    """
    u = P.u if u is None else u
    if (1 << u) > EXACT_BUDGET:
        raise ValueError(f"2^{u} exceeds the exact enumeration budget")
    if P.step >= u:
        raise ValueError("V_i is the whole space")
    scale = u - P.step - 1
    vals = [
        _scaled_psi(merge_counts(P.counts, r).values(), b, scale)[0]
        for r in _nonzero_coset_reps(P.basis)
    ]
    return 1.0 + math.fsum(vals) / len(vals)


def certified_bound(state: PotentialState) -> int:
    """Load bound implied by the potential of the final partition.

    For b > 1 a coset of load t forces ``Phi >= b^t / 2^(u-i)``, so
    ``floor(log_b(Phi * 2^(u-i)))`` bounds every load from above.  For
    b < 1 a coset of load at most t forces the same inequality, so
    ``ceil(log_b(Phi * 2^(u-i)))`` bounds every load from below (empty
    cosets count as load 0).
    """
    b = state.b
    if b == 1.0:
        raise ValueError("base 1 carries no load information")
    if state.overflow:
        raise ValueError("potential overflowed; bound unavailable")
    if b <= 0:
        raise ValueError("base must be positive for a certified bound")
    x = (state.log_phi + (state.u - state.step) * math.log(2.0)) / math.log(b)
    # nudge toward the sound side so exact ties survive rounding
    if b > 1:
        return math.floor(x + 1e-9)
    return math.ceil(x - 1e-9)


def certified_bounds(state: PotentialState, b: float, u: int, k: int) -> int:
    if state.b != b or state.u != u or state.step != k:
        raise ValueError("state does not match (b, u, k)")
    return certified_bound(state)


# -- greedy constructor -------------------------------------------------------


@dataclass(frozen=True)
class Selection:
    vector: int
    state: PotentialState
    satisfied: bool
    candidates_tried: int
    exhaustive: bool


def _select(
    state: PotentialState,
    rng: np.random.Generator,
    n_candidates: int,
    exhaustive_threshold: int,
) -> Selection:
    P = state.partition
    u = state.u
    if P.step >= u:
        raise ValueError("V_i is the whole space; no vector outside it")
    scale = u - P.step - 1
    best = None
    tried = 0

    def evaluate(x: int):
        r = P.basis.reduce(x)
        counts = merge_counts(P.counts, r)
        psi, ovf = _scaled_psi(counts.values(), state.b, scale)
        return r, counts, psi, ovf

    for _ in range(n_candidates):
        x = sample_outside_int(rng, P.basis)
        tried += 1
        r, counts, psi, ovf = evaluate(x)
        if best is None or psi < best[3]:
            best = (x, r, counts, psi, ovf)
        if not ovf and satisfies_square_bound(psi, state.psi):
            return _finish(state, x, r, counts, psi, ovf, True, tried, False)
    exhaustive = (1 << u) <= exhaustive_threshold
    if exhaustive:
        for x in _nonzero_coset_reps(P.basis):
            tried += 1
            r, counts, psi, ovf = evaluate(x)
            if best is None or psi < best[3]:
                best = (x, r, counts, psi, ovf)
            if not ovf and satisfies_square_bound(psi, state.psi):
                return _finish(state, x, r, counts, psi, ovf, True, tried, True)
    x, r, counts, psi, ovf = best
    warnings.warn(
        f"step {P.step}: no candidate met the square bound "
        f"(best psi {psi:.6g} vs bound {square_bound_psi(state.psi):.6g})",
        CertificateWeakenedWarning,
        stacklevel=3,
    )
    return _finish(state, x, r, counts, psi, ovf, False, tried, exhaustive)


def _finish(state, x, r, counts, psi, ovf, ok, tried, exhaustive) -> Selection:
    P = state.partition
    newP = CosetPartition(insert_reduced(P.basis, r), counts)
    new_state = PotentialState(state.b, state.u, newP, psi, ovf)
    return Selection(x, new_state, ok, tried, exhaustive)


def greedy_select_vector(
    P: CosetPartition,
    b: float,
    u: int,
    rng: np.random.Generator,
    K: int = DEFAULT_CANDIDATES,
    exhaustive_threshold: int = DEFAULT_EXHAUSTIVE_THRESHOLD,
) -> BitVector:
    """A vector outside V_i whose merge keeps Phi_{i+1} <= Phi_i^2.

    Tries ``K`` random candidates, then (if 2^u <= exhaustive_threshold)
    every nonzero coset of V_i; an averaging argument guarantees one
    qualifies.  Otherwise returns the best candidate seen and warns with
    :class:`CertificateWeakenedWarning`.
    """
    state = potential_of_partition(P, b, u)
    return BitVector(u, _select(state, rng, K, exhaustive_threshold).vector)


@dataclass(frozen=True)
class CertificateStep:
    step: int
    phi_minus_1: float
    accepted_vector_hex: str | None
    satisfied_square_bound: bool

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "phi_minus_1": self.phi_minus_1,
            "accepted_vector_hex": self.accepted_vector_hex,
            "satisfied_square_bound": self.satisfied_square_bound,
        }


@dataclass(frozen=True)
class Certificate:
    b: float
    u: int
    l: int
    steps: tuple[CertificateStep, ...]
    final_state: PotentialState

    @property
    def phis(self) -> list[float]:
        return [1.0 + s.phi_minus_1 for s in self.steps]

    @property
    def psis(self) -> list[float]:
        return [s.phi_minus_1 for s in self.steps]

    @property
    def weakened(self) -> bool:
        return not all(s.satisfied_square_bound for s in self.steps)

    @property
    def final_phi(self) -> float:
        return self.final_state.phi

    def load_bound(self) -> int:
        """Certified upper bound on the max load (b > 1)."""
        return certified_bound(self.final_state)

    def chain_valid(self) -> bool:
        """Every accepted step satisfies Phi_{i+1} <= Phi_i^2 and Psi_{i+1} >= 2 Psi_i."""
        psis = self.psis
        for a, c in zip(psis, psis[1:]):
            if not satisfies_square_bound(c, a):
                return False
            if c < 2 * a - REL_TOL * abs(2 * a):
                return False
        return True

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.steps]

    def to_json(self) -> str:
        return json.dumps(self.to_list())


def default_base(l: int) -> float:
    """ln n for n = 2^l."""
    return l * math.log(2.0)


def greedy_construct(
    S: BallSet,
    l: int,
    b: float | None = None,
    rng: np.random.Generator | None = None,
    K: int = DEFAULT_CANDIDATES,
    exhaustive_threshold: int = DEFAULT_EXHAUSTIVE_THRESHOLD,
    tally: MonotonicityTally | None = None,
) -> tuple[LinearHash, Certificate]:
    """Pick u - l kernel vectors greedily so the potential at most squares each step.

    With |S| = n = 2^l and b = ln n, a certificate whose every step
    satisfied the square bound proves M(S, h) < 2 ln n / ln ln n.
    """
    u = S.u
    if not 1 <= l <= u:
        raise ValueError("need 1 <= l <= u")
    if rng is None:
        rng = np.random.default_rng()
    b = default_base(l) if b is None else b
    state = potential_of_partition(partition_init(S), b, u)
    steps = [CertificateStep(0, state.psi, None, True)]
    chain = []
    for i in range(u - l):
        sel = _select(state, rng, K, exhaustive_threshold)
        if tally is not None:
            tally.record(state, sel.state)
        state = sel.state
        chain.append(BitVector(u, sel.vector))
        steps.append(
            CertificateStep(i + 1, state.psi, chain[-1].to_hex(), sel.satisfied)
        )
    h = hash_from_kernel(rng, state.partition.basis, l)
    h = replace(h, kernel_chain=tuple(chain))
    return h, Certificate(b, u, l, tuple(steps), state)
