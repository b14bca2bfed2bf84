"""Counter-based deterministic randomness.

Stochastic drop draws are pure functions of (seed, event index, slot), so a
log replays bit-exactly and parallel runs never contend over generator state.
"""
from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def counter_hash(*counters: int) -> int:
    """Mix an arbitrary tuple of integers into one 64-bit word."""
    acc = 0x243F6A8885A308D3
    for c in counters:
        acc = splitmix64(acc ^ (c & _MASK))
    return acc


def uniform(*counters: int) -> float:
    """Deterministic draw in [0, 1) keyed by the counter tuple."""
    return counter_hash(*counters) / float(1 << 64)


class SeededShuffler:
    """Fisher-Yates shuffle driven by the counter hash; used for gear splits."""

    def __init__(self, seed: int):
        self.seed = seed

    def shuffle(self, items: list) -> list:
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = counter_hash(self.seed, i) % (i + 1)
            out[i], out[j] = out[j], out[i]
        return out
