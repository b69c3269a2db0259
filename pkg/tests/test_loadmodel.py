import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gf2load.gf2core import BitMatrix, BitVector, EchelonBasis, rank_ints
from gf2load.linhash import LinearHash, hash_from_kernel, sample_surjective_chain, sample_uniform
from gf2load.loadmodel import (
    FAMILIES,
    BallSet,
    distribution_mean,
    exact_load_distribution,
    exact_rank_census,
    load_histogram,
    make_ball_set,
    opt,
    partition_init,
    partition_merge,
    replay_chain,
    sample_max_loads,
)

V = BitVector.from_str


def brute_force_distribution(S: BallSet, l: int) -> dict[int, Fraction]:
    """Enumerate every l x u matrix; independent of the pattern-space shortcut."""
    counts = Counter()
    for rows in itertools.product(range(1 << S.u), repeat=l):
        counts[load_histogram(S, LinearHash(S.u, l, BitMatrix(l, S.u, rows))).max_load] += 1
    total = sum(counts.values())
    return {k: Fraction(c, total) for k, c in sorted(counts.items())}


# -- BallSet --------------------------------------------------------------------


def test_ballset_rejects_duplicates_and_mismatch():
    with pytest.raises(ValueError):
        BallSet.from_strs(["01", "01"])
    with pytest.raises(ValueError):
        BallSet(3, (V("01"),))


def test_ballset_json_round_trip():
    S = BallSet.from_strs(["0011", "0101", "1111"])
    assert BallSet.from_json(S.to_json()) == S
    assert S.to_dict() == {"u": 4, "balls": ["0c", "0a", "0f"]}


@pytest.mark.parametrize("family", FAMILIES)
def test_families_produce_distinct_sets(family):
    rng = np.random.default_rng(0)
    for u, m in [(10, 1), (10, 100), (24, 1024), (6, 64)]:
        S = make_ball_set(family, u, m, rng)
        assert S.m == m and len(set(S.ints)) == m and all(x < 1 << u for x in S.ints)


def test_family_shapes():
    rng = np.random.default_rng(1)
    assert make_ball_set("unit-cube-prefix", 8, 5, rng).ints == [0, 1, 2, 3, 4]
    hb = make_ball_set("hamming-ball", 8, 9, rng)
    assert max(bin(x).count("1") for x in hb.ints) == 1
    sub = make_ball_set("subspace-slice", 12, 64, rng)
    diffs = EchelonBasis.from_vectors(12, [x ^ sub.ints[0] for x in sub.ints])
    assert diffs.dim == 6


def test_unknown_family():
    with pytest.raises(ValueError):
        make_ball_set("nope", 4, 2, np.random.default_rng(0))


# -- partitions -----------------------------------------------------------------


def test_partition_init_examples():
    assert partition_init(BallSet(4, ())).counts == {}
    P = partition_init(BallSet.from_strs(["0011", "0101"]))
    assert P.loads == {V("0011"): 1, V("0101"): 1}
    assert P.step == 0 and P.m == 2


def test_partition_merge_examples():
    a, b = V("0011"), V("0101")
    P = partition_merge(partition_init(BallSet.from_strs(["0011", "0101"])), a ^ b)
    assert P.load_multiset() == [2]
    P1 = partition_init(BallSet.from_strs(["1000", "0100", "0010"]))
    P1 = partition_merge(partition_merge(P1, V("1100")), V("0110"))
    assert P1.load_multiset() == [3]
    P2 = partition_merge(P1, V("0001"))
    assert P2.load_multiset() == [3]


def test_partition_merge_rejects_dependent_vector():
    P = partition_merge(partition_init(BallSet.from_strs(["0011", "0101"])), V("0110"))
    with pytest.raises(ValueError):
        partition_merge(P, V("0110"))
    with pytest.raises(ValueError):
        partition_merge(P, BitVector.zeros(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_merge_preserves_mass_and_never_splits(seed):
    rng = np.random.default_rng(seed)
    u = 10
    S = make_ball_set("random-distinct", u, int(rng.integers(1, 60)), rng)
    h = sample_surjective_chain(rng, u, int(rng.integers(1, u + 1)))
    parts = replay_chain(S, h.kernel_chain)
    for a, b in zip(parts, parts[1:]):
        assert b.m == a.m == S.m
        assert len(b.counts) <= len(a.counts) <= min(S.m, 1 << (u - a.step))
        for rep in b.counts:
            assert b.basis.reduce(rep) == rep


def test_full_chain_matches_bucket_counts():
    rng = np.random.default_rng(2)
    u, l = 10, 4
    for _ in range(50):
        S = make_ball_set("random-distinct", u, 50, rng)
        h = sample_surjective_chain(rng, u, l)
        final = replay_chain(S, h.kernel_chain)[-1]
        hist = load_histogram(S, h)
        assert final.load_multiset() == hist.occupied_loads()
        # another surjective hash with the same kernel buckets identically
        h2 = hash_from_kernel(rng, final.basis, l)
        assert load_histogram(S, h2).occupied_loads() == final.load_multiset()


# -- load_histogram -------------------------------------------------------------


def test_load_histogram_examples():
    h = LinearHash(3, 1, BitMatrix.from_rows(["110"]))
    empty = load_histogram(BallSet(3, ()), h)
    assert empty.max_load == 0 and empty.min_load == 0
    S = BallSet.from_strs(["001", "010", "100"])
    zero = load_histogram(S, LinearHash(3, 1, BitMatrix.zeros(1, 3)))
    assert zero.max_load == 3 and zero.min_load == 0
    hist = load_histogram(S, h)
    # 001 -> 0, 010 -> 1, 100 -> 1
    assert (hist.max_load, hist.min_load, hist.bins_occupied) == (2, 1, 2)
    assert hist.counts == {1: 1, 2: 1}


def test_min_load_for_huge_bin_count_stays_cheap():
    rng = np.random.default_rng(3)
    S = make_ball_set("random-distinct", 100, 50, rng)
    hist = load_histogram(S, sample_uniform(rng, 100, 40))
    assert hist.min_load == 0 and hist.m == 50


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_numpy_and_python_paths_agree(seed):
    rng = np.random.default_rng(seed)
    u = int(rng.integers(1, 64))
    l = int(rng.integers(1, min(u, 12) + 1))
    S = make_ball_set("random-distinct", u, int(rng.integers(1, min(200, 1 << u) + 1)), rng)
    h = sample_uniform(rng, u, l)
    direct = Counter(h(x).bits for x in S.balls)
    hist = load_histogram(S, h)
    assert hist.max_load == max(direct.values())
    assert hist.bins_occupied == len(direct)
    assert hist.max_load >= math.ceil(S.m / (1 << h.rank))


def test_sample_max_loads_matches_scalar_path():
    rng = np.random.default_rng(4)
    S = make_ball_set("random-distinct", 20, 300, rng)
    v = sample_max_loads(S, 6, np.random.default_rng(9), 4000)
    w = [load_histogram(S, sample_uniform(rng, 20, 6)).max_load for _ in range(4000)]
    assert abs(v.mean() - np.mean(w)) < 4 * math.sqrt(v.var() / 4000 + np.var(w) / 4000)


# -- opt ------------------------------------------------------------------------


def test_opt_examples():
    n = 1024
    assert opt(n, n) == pytest.approx(10 / math.log2(10))
    assert opt(n * 10, n) == pytest.approx(10.0)
    assert opt(1, n) == 1.0
    with pytest.raises(ValueError):
        opt(10, 6)
    with pytest.raises(ValueError):
        opt(0, 8)


@given(st.integers(1, 16), st.integers(1, 10**6))
def test_opt_monotone_in_m_within_each_regime(l, m):
    n = 1 << l
    split = 0.5 * n * l
    if m <= split < m + 1:
        return
    assert opt(m + 1, n) >= opt(m, n) - 1e-12


def test_opt_drops_at_the_case_split():
    """The piecewise definition is not continuous: log n on the left, (1/2) log n on the right."""
    n, l = 1024, 10
    split = n * l // 2
    assert opt(split, n) == pytest.approx(l)
    assert opt(split + 1, n) == pytest.approx((split + 1) / n)
    assert opt(split + 1, n) < opt(split, n)


# -- exact oracle ---------------------------------------------------------------


def test_exact_distribution_three_units():
    S = BallSet.from_strs(["001", "010", "100"])
    dist = exact_load_distribution(S, 1)
    assert dist == {2: Fraction(3, 4), 3: Fraction(1, 4)}
    assert distribution_mean(dist) == Fraction(9, 4)
    assert exact_load_distribution(BallSet.from_strs(["0110"]), 2) == {1: Fraction(1)}


@pytest.mark.parametrize("seed", range(6))
def test_exact_distribution_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    u = int(rng.integers(2, 5))
    l = int(rng.integers(1, min(u, 3) + 1))
    if u * l > 12:
        l = 12 // u
    S = make_ball_set(FAMILIES[seed % 4], u, int(rng.integers(1, (1 << u) + 1)), rng)
    dist = exact_load_distribution(S, l)
    assert dist == brute_force_distribution(S, l)
    assert sum(dist.values()) == 1
    assert all(p.denominator & (p.denominator - 1) == 0 for p in dist.values())


def test_exact_surjective_against_brute_force():
    S = BallSet.from_strs(["1000", "0100", "0010", "1110", "0111"])
    counts = Counter()
    for rows in itertools.product(range(16), repeat=2):
        if rank_ints(rows) == 2:
            counts[load_histogram(S, LinearHash(4, 2, BitMatrix(2, 4, rows))).max_load] += 1
    total = sum(counts.values())
    assert exact_load_distribution(S, 2, surjective=True) == {k: Fraction(c, total) for k, c in sorted(counts.items())}


def test_exact_surjective_matches_sampler():
    rng = np.random.default_rng(5)
    S = BallSet.from_strs(["1000", "0100", "0010", "1110", "0111"])
    dist = exact_load_distribution(S, 2, surjective=True)
    trials = 100_000
    emp = Counter(load_histogram(S, sample_surjective_chain(rng, 4, 2)).max_load for _ in range(trials))
    for k, p in dist.items():
        p = float(p)
        assert abs(emp[k] / trials - p) <= 3 * math.sqrt(p * (1 - p) / trials) + 1e-12


def test_exact_budget():
    with pytest.raises(ValueError):
        exact_load_distribution(make_ball_set("random-distinct", 10, 4, np.random.default_rng(0)), 3)


def test_rank_census_l3_square():
    census = exact_rank_census(3, 3)
    assert sum(census.values()) == 512
    assert census[3] == 168
