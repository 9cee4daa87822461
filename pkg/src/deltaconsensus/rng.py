"""Counter-based switch draws built on the SplitMix64 finaliser.

Every draw is a pure function of ``(key, counter)``, so a run can be replayed
or split across workers without carrying generator state::

    mix64(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
               z ^= z >> 27; z *= 0x94D049BB133111EB
               z ^= z >> 31                              (all mod 2**64)

    unit(key, k)     = (mix64(key + GOLDEN * (k + 1)) >> 11) * 2**-53
    run_key(seed, r) = mix64(mix64(seed) + GOLDEN * (r + 1))

with ``GOLDEN = 0x9E3779B97F4A7C15``.  A draw selects the first graph index
``i`` with ``unit < cum[i]`` where ``cum`` is the cumulative probability
vector with its last entry forced to exactly 1.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def unit(key: int, counter: int) -> float:
    return (mix64(key + GOLDEN * (counter + 1)) >> 11) * 2.0**-53


def run_key(seed: int, run: int) -> int:
    """Key of run ``run`` under master ``seed``."""
    return mix64(mix64(seed) + GOLDEN * (run + 1))


def run_keys(seed: int, n_runs: int) -> np.ndarray:
    return np.array([run_key(seed, r) for r in range(n_runs)], dtype=np.uint64)


def cumulative(probs) -> np.ndarray:
    cum = np.cumsum(np.asarray(probs, dtype=float))
    cum[-1] = 1.0
    return cum


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def units_array(keys: np.ndarray, counter: int) -> np.ndarray:
    """:func:`unit` for many keys at one counter value."""
    offset = np.uint64((GOLDEN * (counter + 1)) & MASK64)
    with np.errstate(over="ignore"):
        z = mix64_array(np.asarray(keys, dtype=np.uint64) + offset)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def draw_indices(key: int, n_draws: int, cum: np.ndarray) -> list[int]:
    return [int(np.searchsorted(cum, unit(key, k), side="right")) for k in range(n_draws)]
