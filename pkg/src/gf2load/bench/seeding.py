"""Per-trial seed derivation.

Seeds come from a SplitMix64 stream: ``mix(master + (index + 1) * GAMMA)``.
For a fixed master the map index -> seed is a bijection on 64-bit
integers, so distinct trial indices never share a seed.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1

# stream tags keep auxiliary draws (ball sets, baselines) off the trial streams
STREAM_TRIALS = 0
STREAM_BALLS = 1
STREAM_BASELINE = 2


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_trial_seed(master_seed: int, trial_index: int, stream: int = STREAM_TRIALS) -> int:
    base = _mix64((master_seed + stream * 0xD1B54A32D192ED03) & MASK64)
    return _mix64((base + (trial_index + 1) * GAMMA) & MASK64)


def derive_trial_seeds(master_seed: int, n: int, stream: int = STREAM_TRIALS) -> np.ndarray:
    """Vectorized :func:`derive_trial_seed` for indices 0..n-1."""
    base = np.uint64(_mix64((master_seed + stream * 0xD1B54A32D192ED03) & MASK64))
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = base + idx * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def trial_rng(master_seed: int, trial_index: int, stream: int = STREAM_TRIALS) -> np.random.Generator:
    return np.random.default_rng(derive_trial_seed(master_seed, trial_index, stream))
